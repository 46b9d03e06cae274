"""Flatten an ArchSpec into a routing-resource graph.

Every primitive and composite port becomes a resource; connections become
arcs.  Resources whose port has two or more drivers are inferred
multiplexers and receive a select field in the configuration.  Composite
output ports are the inter-PE ``Link`` resources: a chain of them inside
one clock cycle is a multi-hop traversal.

Canonical internal wiring of primitives (the document only describes the
external ports):

* FU: every operand input port feeds the FU slot; the slot drives the
  result port one latency later.  The result port is a register that keeps
  its value until the FU writes it again.  The optional memory port has no
  data driver; it only expresses which memory banks the FU can reach.
* RF: every write port feeds every register (latched at the clock edge);
  every register feeds every read port combinationally.
* MU: each bank is one ``MuPort`` resource whose capacity is the number of
  ports per bank; a connection to any MU port reaches every bank.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from cgrakit.arch.adl import ArchSpec, ModuleDecl
from cgrakit.errors import UnreachableMemory

FU_SLOT = "FuSlot"
IN_PORT = "InPort"
OUT_PORT = "OutPort"
LINK = "Link"
REG = "Reg"
MU_PORT = "MuPort"

MEMORY_OPS = ("LOAD", "STORE")


@dataclass(frozen=True)
class Resource:
    id: str
    kind: str
    pe: str
    capacity: int = 1


@dataclass
class FuInfo:
    slot: int
    pe: str
    opcodes: dict[str, int]
    operands: list[int | None]
    out: int | None
    mem: int | None
    banks: tuple[int, ...] = ()

    def supports(self, opcode: str) -> bool:
        return opcode in self.opcodes


@dataclass
class RoutingGraph:
    name: str
    hop_limit: int
    word_width: int
    resources: list[Resource]
    succ: list[list[int]]
    pred: list[list[int]]
    fus: list[FuInfo]
    bank_depth: list[int]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {r.id: i for i, r in enumerate(self.resources)}

    def kind(self, i: int) -> str:
        return self.resources[i].kind

    def holds(self, i: int) -> bool:
        """True if the resource keeps its value across a clock edge."""
        r = self.resources[i]
        return r.kind == REG or (r.kind == OUT_PORT and i in self._fu_outs)

    @property
    def _fu_outs(self) -> set[int]:
        cache = self.__dict__.get("_fu_out_cache")
        if cache is None:
            cache = {f.out for f in self.fus if f.out is not None}
            self.__dict__["_fu_out_cache"] = cache
        return cache

    def crosses_cycle(self, a: int, b: int) -> bool:
        """Arc a->b latches at the clock edge (time advances by one)."""
        kb = self.resources[b].kind
        return kb == REG or self.resources[a].kind == FU_SLOT

    @property
    def muxes(self) -> list[int]:
        return [i for i, r in enumerate(self.resources)
                if r.kind not in (FU_SLOT, MU_PORT) and len(self.pred[i]) >= 2]

    @property
    def pes(self) -> list[str]:
        seen: dict[str, None] = {}
        for f in self.fus:
            seen.setdefault(f.pe, None)
        return list(seen)

    def fu_by_slot(self) -> dict[int, FuInfo]:
        return {f.slot: f for f in self.fus}

    @property
    def banks(self) -> list[int]:
        return [i for i, r in enumerate(self.resources) if r.kind == MU_PORT]

    def fu_variable_sets(self, layout) -> dict[str, set[str]]:
        """Map FU slot id -> variables whose bank the FU can reach."""
        bank_res = self.banks
        out = {}
        for f in self.fus:
            reach = {bank_res.index(b) for b in f.banks}
            out[self.resources[f.slot].id] = {e.var for e in layout.entries if e.bank in reach}
        return out

    def to_dot(self) -> str:
        lines = [f'digraph "{self.name}" {{']
        for i, r in enumerate(self.resources):
            lines.append(f'  n{i} [label="{r.id}\\n{r.kind}"];')
        for a, outs in enumerate(self.succ):
            for b in outs:
                lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


class _Builder:
    def __init__(self, spec: ArchSpec):
        self.spec = spec
        self.res: list[Resource] = []
        self.idx: dict[str, int] = {}
        self.arcs: set[tuple[int, int]] = set()
        self.arc_order: list[tuple[int, int]] = []
        # port path -> list of resource indices it stands for
        self.port_map: dict[str, list[int]] = {}
        self.fu_raw: list[tuple[str, str, ModuleDecl]] = []
        self.bank_depth: dict[int, int] = {}

    def add(self, rid: str, kind: str, pe: str, cap: int = 1) -> int:
        i = len(self.res)
        self.res.append(Resource(rid, kind, pe, cap))
        self.idx[rid] = i
        return i

    def arc(self, a: int, b: int) -> None:
        if (a, b) not in self.arcs:
            self.arcs.add((a, b))
            self.arc_order.append((a, b))

    def instantiate(self, path: str, mod: ModuleDecl, pe: str) -> None:
        if mod.kind == "FU":
            slot = self.add(path, FU_SLOT, pe)
            for p in mod.ports:
                i = self.add(f"{path}.{p.name}", IN_PORT if p.dir == "in" else OUT_PORT, pe)
                self.port_map[f"{path}.{p.name}"] = [i]
            for pn in mod.operand_ports:
                self.arc(self.idx[f"{path}.{pn}"], slot)
            rp = mod.result_port
            if rp is not None:
                self.arc(slot, self.idx[f"{path}.{rp}"])
            self.fu_raw.append((path, pe, mod))
        elif mod.kind == "RF":
            writes = [self.add(f"{path}.{p.name}", IN_PORT, pe) for p in mod.inputs]
            regs = [self.add(f"{path}.reg{k}", REG, pe) for k in range(mod.regs)]
            reads = [self.add(f"{path}.{p.name}", OUT_PORT, pe) for p in mod.outputs]
            for p, i in zip(mod.inputs + mod.outputs, writes + reads):
                self.port_map[f"{path}.{p.name}"] = [i]
            for w in writes:
                for r in regs:
                    self.arc(w, r)
            for r in regs:
                for rd in reads:
                    self.arc(r, rd)
        elif mod.kind == "MU":
            banks = [self.add(f"{path}.bank{k}", MU_PORT, pe, mod.ports_per_bank)
                     for k in range(mod.banks)]
            for b in banks:
                self.bank_depth[b] = mod.depth
            for p in mod.ports:
                self.port_map[f"{path}.{p.name}"] = list(banks)
        else:
            for p in mod.ports:
                i = self.add(f"{path}.{p.name}", IN_PORT if p.dir == "in" else LINK, pe)
                self.port_map[f"{path}.{p.name}"] = [i]
            for inst in mod.instances:
                self.instantiate(f"{path}.{inst.name}", self.spec.module(inst.module), pe)
            for c in mod.connections:
                self.connect(path, c.src, c.dst)

    def connect(self, scope: str, src: str, dst: str) -> None:
        s = self.port_map[f"{scope}.{src}" if scope else src]
        d = self.port_map[f"{scope}.{dst}" if scope else dst]
        for a in s:
            for b in d:
                self.arc(a, b)

    def build(self) -> RoutingGraph:
        for inst in self.spec.instances:
            self.instantiate(inst.name, self.spec.module(inst.module), inst.name)
        for c in self.spec.top_connections:
            self.connect("", c.src, c.dst)
        return self.finish()

    def finish(self) -> RoutingGraph:
        n = len(self.res)
        succ = [[] for _ in range(n)]
        pred = [[] for _ in range(n)]
        for a, b in self.arc_order:
            succ[a].append(b)
            pred[b].append(a)
        keep_always = set()
        for path, _pe, mod in self.fu_raw:
            keep_always.add(self.idx[path])
            if mod.result_port:
                keep_always.add(self.idx[f"{path}.{mod.result_port}"])
            if mod.mem_port:
                keep_always.add(self.idx[f"{path}.{mod.mem_port}"])
        keep_always.update(i for i, r in enumerate(self.res) if r.kind == MU_PORT)
        alive = [True] * n
        changed = True
        while changed:
            changed = False
            for i in range(n):
                if not alive[i] or i in keep_always:
                    continue
                indeg = sum(1 for p in pred[i] if alive[p])
                outdeg = sum(1 for s in succ[i] if alive[s])
                if indeg == 0 or outdeg == 0:
                    alive[i] = False
                    changed = True
        remap = {}
        resources = []
        for i in range(n):
            if alive[i]:
                remap[i] = len(resources)
                resources.append(self.res[i])
        m = len(resources)
        nsucc = [[] for _ in range(m)]
        npred = [[] for _ in range(m)]
        for a, b in self.arc_order:
            if alive[a] and alive[b]:
                nsucc[remap[a]].append(remap[b])
                npred[remap[b]].append(remap[a])
        index = {r.id: i for i, r in enumerate(resources)}
        fus = []
        for path, pe, mod in self.fu_raw:
            ops = []
            for pn in mod.operand_ports:
                ops.append(index.get(f"{path}.{pn}"))
            out = index.get(f"{path}.{mod.result_port}") if mod.result_port else None
            mem = index.get(f"{path}.{mod.mem_port}") if mod.mem_port else None
            fus.append(FuInfo(index[path], pe, dict(mod.opcodes), ops, out, mem))
        bank_depth = [self.bank_depth[i] for i in range(n) if alive[i] and i in self.bank_depth]
        rg = RoutingGraph(self.spec.name, self.spec.hop_limit, self.spec.word_width,
                          resources, nsucc, npred, fus, bank_depth, index)
        for f in fus:
            if f.mem is not None:
                f.banks = tuple(_reach_kind(rg, f.mem, MU_PORT))
        return rg


def _reach_kind(rg: RoutingGraph, start: int, kind: str) -> list[int]:
    seen = {start}
    q = deque([start])
    found = []
    while q:
        a = q.popleft()
        if rg.resources[a].kind == kind:
            found.append(a)
        for b in rg.succ[a]:
            if b not in seen:
                seen.add(b)
                q.append(b)
    return sorted(found)


def elaborate(spec: ArchSpec) -> RoutingGraph:
    """Build the flat routing graph; raise UnreachableMemory when an FU
    declares LOAD/STORE but cannot reach any bank."""
    rg = _Builder(spec).build()
    for f in rg.fus:
        if any(op in f.opcodes for op in MEMORY_OPS) and not f.banks:
            raise UnreachableMemory(
                f"{rg.resources[f.slot].id} supports memory ops but reaches no MU bank")
    return rg
