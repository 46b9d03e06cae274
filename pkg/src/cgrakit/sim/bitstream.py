"""Per-PE, per-cycle configuration extracted from a final mapping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from cgrakit.arch.adl import ArchSpec
from cgrakit.arch.elaborate import FU_SLOT, REG, RoutingGraph, elaborate
from cgrakit.dfg.model import LEFT, PRED, RECURRENCE, RIGHT
from cgrakit.errors import ConfigOverflow, SchemaError, XbarConflict

SLOTS = (LEFT, RIGHT, PRED)


@dataclass
class AluOp:
    opcode: str
    node: str | None = None          # None for a route-through move
    const: int = 0
    wired: tuple[str, ...] = ()      # operand slots fed from the fabric
    stage: int = 0
    lat: int = 1
    bank: int | None = None
    offset: int = 0
    stride: int = 0
    # slot -> (distance, init) for loop-carried operands
    rec: dict[str, tuple[int, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"opcode": self.opcode, "node": self.node, "const": self.const,
             "wired": list(self.wired), "stage": self.stage, "lat": self.lat}
        if self.bank is not None:
            d.update(bank=self.bank, offset=self.offset, stride=self.stride)
        if self.rec:
            d["rec"] = {k: list(v) for k, v in sorted(self.rec.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> AluOp:
        return cls(d["opcode"], d.get("node"), d.get("const", 0), tuple(d.get("wired", ())),
                   d.get("stage", 0), d.get("lat", 1), d.get("bank"), d.get("offset", 0),
                   d.get("stride", 0), {k: tuple(v) for k, v in d.get("rec", {}).items()})


@dataclass
class Instruction:
    ops: dict[str, AluOp] = field(default_factory=dict)     # FU id -> op
    sel: dict[str, str] = field(default_factory=dict)       # resource -> driving resource
    wen: dict[str, str] = field(default_factory=dict)       # register -> source written

    @property
    def empty(self) -> bool:
        return not (self.ops or self.sel or self.wen)

    def to_dict(self) -> dict:
        return {"ops": {k: v.to_dict() for k, v in sorted(self.ops.items())},
                "sel": dict(sorted(self.sel.items())), "wen": dict(sorted(self.wen.items()))}

    @classmethod
    def from_dict(cls, d: dict) -> Instruction:
        return cls({k: AluOp.from_dict(v) for k, v in d.get("ops", {}).items()},
                   dict(d.get("sel", {})), dict(d.get("wen", {})))


@dataclass
class PeConfig:
    slots: list[Instruction]
    # inclusive [start, end] slot ranges with no activity; end None = forever
    idle_ranges: list[tuple[int, int | None]] = field(default_factory=list)

    def idle_at(self, slot: int) -> bool:
        for a, b in self.idle_ranges:
            if a <= slot and (b is None or slot <= b):
                return True
        return False


@dataclass
class Bitstream:
    arch: str
    ii: int
    word_width: int
    schedule_length: int
    pes: dict[str, PeConfig]

    def to_dict(self) -> dict:
        return {
            "arch": self.arch, "ii": self.ii, "word_width": self.word_width,
            "schedule_length": self.schedule_length,
            "pes": {pe: {"idle_ranges": [[a, b] for a, b in cfg.idle_ranges],
                         "slots": [ins.to_dict() for ins in cfg.slots]}
                    for pe, cfg in sorted(self.pes.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> Bitstream:
        try:
            pes = {pe: PeConfig([Instruction.from_dict(s) for s in c["slots"]],
                                [(a, b) for a, b in c.get("idle_ranges", [])])
                   for pe, c in d["pes"].items()}
            bs = cls(d["arch"], d["ii"], d["word_width"], d["schedule_length"], pes)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed bitstream: {exc}") from exc
        for pe, cfg in bs.pes.items():
            if len(cfg.slots) != bs.ii:
                raise SchemaError(f"{pe}: {len(cfg.slots)} instructions for II {bs.ii}")
        return bs

    @classmethod
    def from_json(cls, text: str) -> Bitstream:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc

    def copy(self) -> Bitstream:
        return Bitstream.from_dict(json.loads(json.dumps(self.to_dict())))


def idle_ranges(slots: list[Instruction]) -> list[tuple[int, int | None]]:
    if all(s.empty for s in slots):
        return [(0, None)]
    out = []
    start = None
    for i, s in enumerate(slots):
        if s.empty and start is None:
            start = i
        elif not s.empty and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(slots) - 1))
    return out


def _set(table: dict, key: str, src: str, where: str) -> None:
    old = table.get(key)
    if old is not None and old != src:
        raise XbarConflict(f"{where}: {key} driven by both {old} and {src}")
    table[key] = src


def extract_bitstream(mapping, arch: ArchSpec | RoutingGraph, gating: bool = True) -> Bitstream:
    """Translate placement and routes into configuration words.

    With ``gating`` false no idle ranges are emitted (every PE reads its
    configuration memory every cycle).
    """
    if isinstance(arch, ArchSpec):
        if arch.max_ii is not None and mapping.ii > arch.max_ii:
            raise ConfigOverflow(
                f"II {mapping.ii} needs {mapping.ii * arch.instr_bytes} bytes of configuration "
                f"memory per PE; {arch.cm_bytes} available")
        rg = elaborate(arch)
    else:
        rg = arch
    dfg = mapping.dfg
    ii = mapping.ii
    res = rg.resources
    idx = rg.index
    pes = {pe: PeConfig([Instruction() for _ in range(ii)]) for pe in _all_pes(rg)}

    for n in dfg.nodes:
        fu_id, t = mapping.placement[n.id]
        if t < 0:
            raise ValueError(f"node {n.id} scheduled at negative time {t}")
        ins = dfg.in_edges(n.id)
        op = AluOp(n.opcode, n.id, n.constant or 0, tuple(e.slot for e in ins),
                   t // ii, mapping.latency[n.id])
        if n.is_memory:
            if n.bank is None:
                raise ValueError(f"memory node {n.id} has no bank; embed a layout first")
            op.bank, op.offset, op.stride = n.bank, n.offset, n.stride
        for e in ins:
            if e.kind == RECURRENCE:
                op.rec[e.slot] = (e.distance, e.init)
        slot = pes[res[idx[fu_id]].pe].slots[t % ii]
        if fu_id in slot.ops:
            raise XbarConflict(f"{fu_id} slot {t % ii} holds two operations")
        slot.ops[fu_id] = op

    for key, path in sorted(mapping.routes.items()):
        rpath = [(idx[r], t) for r, t in path]
        for (a, ta), (b, tb) in zip(rpath, rpath[1:]):
            if a == b:
                continue    # hold: registers keep their value by default
            kb = res[b].kind
            if kb == REG:
                ins = pes[res[b].pe].slots[ta % ii]
                _set(ins.wen, res[b].id, res[a].id, f"{res[b].pe}@{ta % ii}")
            elif kb == FU_SLOT:
                ins = pes[res[b].pe].slots[tb % ii]
                other = ins.ops.get(res[b].id)
                if other is not None and other.node is not None:
                    raise XbarConflict(f"{res[b].id} slot {tb % ii} is busy")
                ins.ops[res[b].id] = AluOp("NOP", None, 0, (LEFT,), 0, 1)
            elif res[a].kind == FU_SLOT:
                continue    # the FU writes its own result register
            else:
                ins = pes[res[b].pe].slots[tb % ii]
                _set(ins.sel, res[b].id, res[a].id, f"{res[b].pe}@{tb % ii}")

    _check_acyclic(pes, ii)
    for cfg in pes.values():
        cfg.idle_ranges = idle_ranges(cfg.slots) if gating else []
    return Bitstream(rg.name, ii, rg.word_width, mapping.schedule_length, pes)


def _all_pes(rg: RoutingGraph) -> list[str]:
    seen: dict[str, None] = {}
    for f in rg.fus:
        seen.setdefault(f.pe, None)
    return list(seen)


def _check_acyclic(pes: dict[str, PeConfig], ii: int) -> None:
    """Reject select chains that loop back within one cycle."""
    for s in range(ii):
        drive: dict[str, str] = {}
        for cfg in pes.values():
            drive.update(cfg.slots[s].sel)
        done: set[str] = set()
        for start in drive:
            path = []
            r = start
            while r in drive and r not in done:
                if r in path:
                    raise XbarConflict(f"slot {s}: same-cycle select loop through {r}")
                path.append(r)
                r = drive[r]
            done.update(path)
