"""Iterative modulo scheduling: try II = MII, MII+1, ... until placement
and routing converge without oversubscription."""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field

from cgrakit.arch.adl import ArchSpec
from cgrakit.arch.elaborate import RoutingGraph, elaborate
from cgrakit.dfg.model import Dfg, compute_asap_alap
from cgrakit.errors import MappingFailed, UnsupportedLatency
from cgrakit.mapper.mii import MiiReport, compute_mii
from cgrakit.mapper.order import order_nodes
from cgrakit.mapper.resolve import resolve_adaptive, resolve_sa
from cgrakit.mapper.router import DEFAULT_COSTS, CostModel
from cgrakit.mapper.state import MapState, edge_key

DEFAULT_MAX_II = 32


@dataclass
class MapperConfig:
    max_ii: int | None = None
    strategy: str = "adaptive"
    seed: int = 0
    hop_limit: int | None = None
    base_costs: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    overuse_penalty: float = 8.0
    escalation: float = 1.5
    max_rounds: int = 40
    slack: int | None = None
    # extra randomized placement passes per II before giving up on it
    restarts: int = 12
    jitter: float = 3.0
    sa_t0: float = 10.0
    sa_cooling: float = 0.95
    sa_moves: int = 100
    sa_t_min: float = 0.01

    def __post_init__(self):
        if self.strategy not in ("adaptive", "sa"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 0 < self.sa_cooling < 1:
            raise ValueError("cooling factor must lie in (0, 1)")
        if self.escalation <= 1:
            raise ValueError("escalation factor must exceed 1")


@dataclass
class Mapping:
    arch: str
    dfg_name: str
    ii: int
    mii: MiiReport
    hop_limit: int
    # node -> (FU slot resource id, start time)
    placement: dict[str, tuple[str, int]]
    latency: dict[str, int]
    # edge key -> [(resource id, time)] from producer result to consumer port
    routes: dict[str, list[tuple[str, int]]]
    cost: float
    oversubscribed: set[tuple[str, int]] = field(default_factory=set)
    attempts: list[dict] = field(default_factory=list)
    dfg: Dfg | None = field(default=None, repr=False, compare=False)

    @property
    def final(self) -> bool:
        return not self.oversubscribed

    @property
    def schedule_length(self) -> int:
        return max((t + max(self.latency[v], 1) for v, (_, t) in self.placement.items()), default=0)

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "dfg": self.dfg_name,
            "ii": self.ii,
            "mii": {"res": self.mii.res_mii, "rec": self.mii.rec_mii},
            "hop_limit": self.hop_limit,
            "schedule_length": self.schedule_length,
            "placement": {v: {"fu": fu, "t": t, "lat": self.latency[v]}
                          for v, (fu, t) in sorted(self.placement.items())},
            "routes": {k: [[r, t] for r, t in p] for k, p in sorted(self.routes.items())},
            "cost": round(self.cost, 6),
            "oversubscribed": sorted([r, t] for r, t in self.oversubscribed),
            "attempts": self.attempts,
        }

    def report_json(self, wall_time: float | None = None) -> str:
        doc = self.to_dict()
        doc["wall_time"] = None if wall_time is None else round(wall_time, 3)
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def _to_mapping(state: MapState, mii: MiiReport, attempts: list[dict]) -> Mapping:
    rg = state.rg
    shift = -min((t for _, t in state.place.values()), default=0)
    placement = {v: (rg.resources[rg.fus[fi].slot].id, t + shift)
                 for v, (fi, t) in state.place.items()}
    routes = {}
    for i, path in state.routes.items():
        routes[edge_key(state.edges[i])] = [(rg.resources[r].id, t + shift) for r, t, _ in path]
    over = {(rg.resources[r].id, t) for r, t in state.mrrg.oversubscribed()}
    # keep modulo slots of conflicts consistent with the shifted times
    over = {(r, (t + shift) % state.ii) for r, t in over}
    return Mapping(rg.name, state.dfg.name, state.ii, mii, state.mrrg.hop_limit, placement,
                   dict(state.lat), routes, state.total_cost(), over, list(attempts), state.dfg)


def _check_latencies(dfg: Dfg, rg: RoutingGraph) -> None:
    used = {n.opcode for n in dfg.nodes}
    for f in rg.fus:
        for op, lat in f.opcodes.items():
            if op in used and lat < 1:
                raise UnsupportedLatency(
                    f"{rg.resources[f.slot].id}: {op} has latency {lat}; chained zero-latency FUs are not modelled")


def _attempt(dfg: Dfg, rg: RoutingGraph, ii: int, order: list[str], cfg: MapperConfig,
             attempt: int) -> tuple[MapState, int, bool]:
    costs = CostModel(dict(cfg.base_costs), cfg.overuse_penalty)
    state = MapState(dfg, rg, ii, cfg.hop_limit, costs, cfg.slack)
    if attempt:
        state.rng = random.Random(f"{cfg.seed}:{ii}:{attempt}")
        state.jitter = cfg.jitter
    placed = 0
    for v in order:
        if not state.place_node(v):
            return state, placed, False
        placed += 1
    if cfg.strategy == "adaptive":
        ok = resolve_adaptive(state, cfg.escalation, cfg.max_rounds)
    else:
        ok = resolve_sa(state, cfg.seed + attempt, cfg.sa_t0, cfg.sa_cooling, cfg.sa_moves, cfg.sa_t_min)
    return state, placed, ok


def map_dfg(dfg: Dfg, arch: ArchSpec | RoutingGraph, cfg: MapperConfig | None = None) -> Mapping:
    """Map ``dfg`` at the smallest II the heuristic reaches.

    Raises MappingFailed with the least-conflicted attempt attached when no
    II up to the cap converges.
    """
    cfg = cfg or MapperConfig()
    if isinstance(arch, ArchSpec):
        rg = elaborate(arch)
        cap = arch.max_ii
    else:
        rg, cap = arch, None
    _check_latencies(dfg, rg)
    if any(n.asap is None for n in dfg.nodes):
        dfg = compute_asap_alap(dfg)
    mii = compute_mii(dfg, rg)
    max_ii = cfg.max_ii if cfg.max_ii is not None else DEFAULT_MAX_II
    if cap is not None:
        # configuration memory holds at most `cap` instructions per PE
        max_ii = min(max_ii, cap)
    order = order_nodes(dfg)
    attempts: list[dict] = []
    best: Mapping | None = None
    best_over = 0
    for ii in range(mii.mii, max_ii + 1):
        for attempt in range(cfg.restarts + 1):
            state, placed, ok = _attempt(dfg, rg, ii, order, cfg, attempt)
            status = "ok" if ok else ("unresolved" if placed == len(order) else "unplaceable")
            attempts.append({"ii": ii, "pass": attempt, "placed": placed,
                             "overuse": state.overuse_total(), "status": status})
            if placed == len(order):
                m = _to_mapping(state, mii, attempts)
                if ok:
                    return m
                if best is None or state.overuse_total() < best_over:
                    best, best_over = m, state.overuse_total()
    raise MappingFailed(f"{dfg.name}: no mapping on {rg.name} for II {mii.mii}..{max_ii}", best, attempts)
