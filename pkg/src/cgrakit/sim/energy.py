"""Activity-based energy estimate from simulator statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from cgrakit.sim.simulator import SimStats


@dataclass(frozen=True)
class EnergyModel:
    """Relative cost per event (arbitrary units)."""

    cm_read: float = 4.0
    alu_op: float = 2.0
    link_hop: float = 1.0
    reg_rw: float = 1.0
    mu_access: float = 3.0
    leak_per_gated_cycle: float = 0.2

    @classmethod
    def from_dict(cls, d: dict) -> EnergyModel:
        unknown = set(d) - set(asdict(cls()))
        if unknown:
            raise ValueError(f"unknown energy cost(s) {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


CATEGORIES = ("cm", "alu", "routing", "registers", "memory", "gated_leakage")


@dataclass
class EnergyReport:
    total: float
    breakdown: dict[str, float]

    @property
    def percent(self) -> dict[str, float]:
        if self.total == 0:
            return {k: 0.0 for k in self.breakdown}
        return {k: 100.0 * v / self.total for k, v in self.breakdown.items()}

    @property
    def largest(self) -> str:
        return max(self.breakdown, key=self.breakdown.__getitem__)

    def to_dict(self) -> dict:
        return {"total": self.total, "breakdown": dict(self.breakdown),
                "percent": {k: round(v, 4) for k, v in self.percent.items()}}


def estimate_energy(stats: SimStats, model: EnergyModel | None = None) -> EnergyReport:
    m = model or EnergyModel()
    parts = {
        "cm": stats.cm_reads * m.cm_read,
        "alu": stats.alu_ops * m.alu_op,
        "routing": stats.link_traversals * m.link_hop,
        "registers": (stats.reg_writes + stats.reg_reads) * m.reg_rw,
        "memory": stats.mu_accesses * m.mu_access,
        "gated_leakage": stats.gated_cycles * m.leak_per_gated_cycle,
    }
    return EnergyReport(sum(parts.values()), parts)
