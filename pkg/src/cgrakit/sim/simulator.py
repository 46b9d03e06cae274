"""Cycle-accurate execution of a configuration bitstream.

Every cycle each PE fetches the instruction for slot ``cycle % II`` (unless
its clock is gated for that slot).  Crossbar selects are evaluated
combinationally on demand.  FU results become visible ``lat`` cycles after
issue, register writes and stores take effect at the end of the cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cgrakit.arch.adl import ArchSpec
from cgrakit.arch.elaborate import LINK, REG, RoutingGraph, elaborate
from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import ALU_OPS, LEFT, PRED, RIGHT
from cgrakit.errors import SchemaError, XbarConflict
from cgrakit.sim.alu import execute
from cgrakit.sim.bitstream import Bitstream

Value = tuple[int, bool]
_SLOT_POS = {LEFT: 0, RIGHT: 1, PRED: 2}


@dataclass
class SimStats:
    cycles: int = 0
    pe_active: dict[str, int] = field(default_factory=dict)
    gated_cycles: int = 0
    cm_reads: int = 0
    alu_ops: int = 0
    link_traversals: int = 0
    reg_writes: int = 0
    reg_reads: int = 0
    mu_accesses: int = 0

    @property
    def total_pe_cycles(self) -> int:
        return self.cycles * len(self.pe_active)

    @property
    def active_cycles(self) -> int:
        return sum(self.pe_active.values())

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles, "pe_active": dict(sorted(self.pe_active.items())),
            "active_cycles": self.active_cycles, "gated_cycles": self.gated_cycles,
            "cm_reads": self.cm_reads, "alu_ops": self.alu_ops,
            "link_traversals": self.link_traversals, "reg_writes": self.reg_writes,
            "reg_reads": self.reg_reads, "mu_accesses": self.mu_accesses,
        }


def total_cycles(bitstream: Bitstream, iterations: int) -> int:
    """Fill latency (one iteration's schedule length) plus II per iteration.
    The last iteration's final operation issues within the first
    ``schedule_length + (iterations - 1) * II`` cycles; the remaining II
    cycles drain the pipeline."""
    return bitstream.schedule_length + max(iterations, 0) * bitstream.ii


class Concrete:
    """Plain machine words."""

    def __init__(self, width: int, mem: MemoryImage):
        self.width = width
        self.mask = (1 << width) - 1
        self.mem = mem
        self.undriven: Value = (0, False)

    def const(self, k: int):
        return k & self.mask

    def alu(self, opcode: str, a, b):
        return execute(opcode, a, b, self.width)

    def truth(self, w) -> bool:
        return w != 0

    def load(self, bank: int, addr: int):
        return self.mem.read(bank, addr)

    def store(self, bank: int, addr: int, w) -> None:
        self.mem.write(bank, addr, w)

    def show(self, w) -> str:
        return str(w)

    def decide(self, key, a_valid: bool, b_valid: bool, pred, taken) -> None:
        """Hook called once per executed operation with its control inputs."""


class _Machine:
    def __init__(self, rg: RoutingGraph, bs: Bitstream, dom: Concrete, gating: bool,
                 trace: list[str] | None):
        self.rg = rg
        self.bs = bs
        self.dom = dom
        self.gating = gating
        self.trace = trace
        self.state: dict[str, Value] = {}        # registers and FU result ports
        self.pending: dict[int, list[tuple[str, Value]]] = {}
        self.fus = {rg.resources[f.slot].id: f for f in rg.fus}
        self.pe_of = {r.id: r.pe for r in rg.resources}
        self.kind = {r.id: r.kind for r in rg.resources}
        self.stateful = {r.id for i, r in enumerate(rg.resources) if rg.holds(i)}
        self.stats = SimStats(pe_active={pe: 0 for pe in bs.pes})

    def value(self, res: str, ins_of, cache: dict, visiting: set) -> Value:
        if res in self.stateful:
            if self.kind[res] == REG:
                self.stats.reg_reads += 1
            return self.state.get(res, self.dom.undriven)
        if res in cache:
            return cache[res]
        if res in visiting:
            raise XbarConflict(f"combinational loop through {res}")
        ins = ins_of(self.pe_of.get(res))
        src = ins.sel.get(res) if ins is not None else None
        if src is None:
            v = self.dom.undriven
        else:
            if src not in self.kind:
                raise XbarConflict(f"{res} selects unknown source {src}")
            visiting.add(res)
            v = self.value(src, ins_of, cache, visiting)
            visiting.discard(res)
            if self.kind[res] == LINK:
                self.stats.link_traversals += 1
        cache[res] = v
        return v

    def cycle(self, c: int, iterations: int) -> None:
        ii = self.bs.ii
        slot = c % ii
        for res, v in self.pending.pop(c, ()):
            self.state[res] = v
        live = {}
        for pe, cfg in self.bs.pes.items():
            if self.gating and cfg.idle_at(slot):
                self.stats.gated_cycles += 1
                continue
            self.stats.cm_reads += 1
            self.stats.pe_active[pe] += 1
            live[pe] = cfg.slots[slot]
        cache: dict[str, Value] = {}
        visiting: set[str] = set()

        def read(res):
            return self.value(res, live.get, cache, visiting)

        stores = []
        reg_writes = []
        for pe, ins in live.items():
            for fu_id, op in sorted(ins.ops.items()):
                fu = self.fus.get(fu_id)
                if fu is None:
                    raise XbarConflict(f"{pe}: no functional unit {fu_id}")
                if op.node is None:
                    self._emit(c + 1, fu, self._forward(fu, op, read))
                    self.stats.alu_ops += 1
                    continue
                it = c // ii - op.stage
                if not 0 <= it < iterations:
                    continue
                if op.opcode not in fu.opcodes:
                    raise SchemaError(f"{fu_id} cannot execute {op.opcode}")
                out = self._issue(it, fu, op, read, stores)
                self.stats.alu_ops += 1
                if op.opcode != "STORE":
                    self._emit(c + op.lat, fu, out)
                if self.trace is not None:
                    self.trace.append(f"{c} {pe} {op.node} {op.opcode} it={it} "
                                      f"out={self.dom.show(out[0])}{'' if out[1] else '!'}")
            for reg, src in sorted(ins.wen.items()):
                if src not in self.kind:
                    raise XbarConflict(f"{reg} written from unknown source {src}")
                reg_writes.append((reg, read(src)))
        for reg, v in reg_writes:
            self.state[reg] = v
            self.stats.reg_writes += 1
        for bank, addr, word in stores:
            self.dom.store(bank, addr, word)
            if self.trace is not None:
                self.trace.append(f"{c} store bank={bank} addr={addr} value={self.dom.show(word)}")

    def _emit(self, when: int, fu, v: Value) -> None:
        if fu.out is None:
            return
        self.pending.setdefault(when, []).append((self.rg.resources[fu.out].id, v))

    def _forward(self, fu, op, read) -> Value:
        """Route-through: operand a combined with the slot constant."""
        if op.opcode not in ALU_OPS:
            raise SchemaError(f"route-through slot of {self.rg.resources[fu.slot].id} "
                              f"cannot run {op.opcode}")
        if fu.operands[0] is None:
            raise XbarConflict(f"{self.rg.resources[fu.slot].id} has no first operand")
        a = read(self.rg.resources[fu.operands[0]].id)
        return (self.dom.alu(op.opcode, a[0], self.dom.const(op.const)), a[1])

    def _issue(self, it, fu, op, read, stores) -> Value:
        dom = self.dom
        operands: dict[str, Value | None] = {}
        for s in (LEFT, RIGHT, PRED):
            if s in op.wired:
                rec = op.rec.get(s)
                if rec is not None and it < rec[0]:
                    operands[s] = (dom.const(rec[1]), True)
                else:
                    port = fu.operands[_SLOT_POS[s]]
                    if port is None:
                        raise XbarConflict(f"{op.node}: FU has no {s} operand port")
                    operands[s] = read(self.rg.resources[port].id)
            else:
                operands[s] = None if s == PRED else (dom.const(op.const), True)
        a, b, p = operands[LEFT], operands[RIGHT], operands[PRED]
        taken = None if p is None or not p[1] else dom.truth(p[0])
        dom.decide((op.node, it), a[1], b[1], p, taken)
        if op.opcode == "SELECT":
            if taken is None:
                return dom.undriven
            pick = (a, b) if taken else (b, a)
            return pick[0] if pick[0][1] else pick[1]
        if p is not None and not taken:
            return dom.undriven
        if op.opcode == "LOAD":
            if op.bank is None:
                raise SchemaError(f"{op.node}: LOAD without a bank")
            self.stats.mu_accesses += 1
            return (dom.load(op.bank, op.const + op.offset + op.stride * it), True)
        if not (a[1] and b[1]):
            return dom.undriven
        if op.opcode == "STORE":
            if op.bank is None:
                raise SchemaError(f"{op.node}: STORE without a bank")
            self.stats.mu_accesses += 1
            stores.append((op.bank, op.const + op.offset + op.stride * it, a[0]))
            return a
        return (dom.alu(op.opcode, a[0], b[0]), True)


def simulate(arch: ArchSpec | RoutingGraph, bitstream: Bitstream, layout, mem_in: MemoryImage,
             iterations: int, gating: bool = True,
             trace: list[str] | None = None,
             domain=None) -> tuple[MemoryImage, SimStats]:
    """Run ``iterations`` loop iterations; returns the final memory and stats.

    ``trace``, when given, receives one line per executed operation and per
    committed store.  ``layout`` is checked against the memory image shape.
    ``domain`` optionally builds an alternative value domain from the
    working memory copy (see ``Concrete``).
    """
    rg = elaborate(arch) if isinstance(arch, ArchSpec) else arch
    if layout is not None:
        layout.check([len(b) for b in mem_in.banks])
    mem = mem_in.copy()
    dom = domain(mem) if domain is not None else Concrete(bitstream.word_width, mem)
    m = _Machine(rg, bitstream, dom, gating, trace)
    n = total_cycles(bitstream, iterations)
    for c in range(n):
        m.cycle(c, iterations)
    m.stats.cycles = n
    return mem, m.stats
