"""Dataflow graphs of single innermost loop bodies."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import networkx as nx

from cgrakit.errors import BadDistance, CycleError, SchemaError

ALU_OPS = ("ADD", "SUB", "MUL", "AND", "OR", "XOR", "SHL", "SHR", "CMP", "NOP")
OPCODES = ALU_OPS + ("SELECT", "LOAD", "STORE")
DATA, PREDICATE, RECURRENCE = "data", "predicate", "recurrence"
EDGE_KINDS = (DATA, PREDICATE, RECURRENCE)
LEFT, RIGHT, PRED = "left", "right", "predicate"
SLOTS = (LEFT, RIGHT, PRED)


@dataclass(frozen=True)
class DfgNode:
    id: str
    opcode: str
    constant: int | None = None
    variable: str | None = None
    # affine address: base(variable) + offset + stride * iteration
    offset: int = 0
    stride: int = 1
    bank: int | None = None
    asap: int | None = None
    alap: int | None = None

    @property
    def is_memory(self) -> bool:
        return self.opcode in ("LOAD", "STORE")


@dataclass(frozen=True)
class DfgEdge:
    src: str
    dst: str
    kind: str = DATA
    slot: str = LEFT
    distance: int = 0
    # value seen by the first `distance` iterations of a recurrence
    init: int = 0


@dataclass
class Dfg:
    name: str
    nodes: list[DfgNode]
    edges: list[DfgEdge]
    live_in: list[str] = field(default_factory=list)
    live_out: list[str] = field(default_factory=list)
    arrays: list[str] = field(default_factory=list)
    iteration_count_hint: int | None = None

    def __post_init__(self):
        self._by_id = {n.id: n for n in self.nodes}

    def node(self, nid: str) -> DfgNode:
        return self._by_id[nid]

    def in_edges(self, nid: str) -> list[DfgEdge]:
        return [e for e in self.edges if e.dst == nid]

    def out_edges(self, nid: str) -> list[DfgEdge]:
        return [e for e in self.edges if e.src == nid]

    def operand(self, nid: str, slot: str) -> DfgEdge | None:
        for e in self.edges:
            if e.dst == nid and e.slot == slot:
                return e
        return None

    @property
    def variables(self) -> list[str]:
        """Variables in order of first appearance in the node list."""
        seen: dict[str, None] = {}
        for n in self.nodes:
            if n.variable is not None:
                seen.setdefault(n.variable, None)
        return list(seen)

    def forward_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(n.id for n in self.nodes)
        g.add_edges_from((e.src, e.dst) for e in self.edges if e.kind != RECURRENCE)
        return g

    def topo_order(self) -> list[str]:
        """Topological order over non-recurrence edges; ties by file order."""
        pos = {n.id: i for i, n in enumerate(self.nodes)}
        return list(nx.lexicographical_topological_sort(self.forward_graph(), key=pos.__getitem__))

    def replace_nodes(self, nodes: list[DfgNode]) -> Dfg:
        return Dfg(self.name, nodes, list(self.edges), list(self.live_in), list(self.live_out),
                   list(self.arrays), self.iteration_count_hint)


def validate_dfg(dfg: Dfg) -> None:
    ids = [n.id for n in dfg.nodes]
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate node ids")
    known_vars = set(dfg.live_in) | set(dfg.live_out) | set(dfg.arrays)
    for n in dfg.nodes:
        if n.opcode not in OPCODES:
            raise SchemaError(f"node {n.id}: unknown opcode {n.opcode!r}")
        if n.is_memory:
            if n.variable is None:
                raise SchemaError(f"node {n.id}: {n.opcode} needs a variable")
            if n.variable not in known_vars:
                raise SchemaError(f"node {n.id}: variable {n.variable!r} not declared")
    seen_slots = set()
    for e in dfg.edges:
        if e.src not in dfg._by_id or e.dst not in dfg._by_id:
            raise SchemaError(f"edge {e.src}->{e.dst}: unknown node")
        if e.kind not in EDGE_KINDS:
            raise SchemaError(f"edge {e.src}->{e.dst}: unknown kind {e.kind!r}")
        if e.slot not in SLOTS:
            raise SchemaError(f"edge {e.src}->{e.dst}: unknown slot {e.slot!r}")
        if e.kind == RECURRENCE and e.distance < 1:
            raise BadDistance(f"recurrence {e.src}->{e.dst} has distance {e.distance}")
        if e.kind != RECURRENCE and e.distance != 0:
            raise BadDistance(f"{e.kind} edge {e.src}->{e.dst} must have distance 0")
        if e.kind == PREDICATE and e.slot != PRED:
            raise SchemaError(f"predicate edge {e.src}->{e.dst} must use the predicate slot")
        if e.kind == DATA and e.slot == PRED:
            raise SchemaError(f"data edge {e.src}->{e.dst} cannot use the predicate slot")
        if (e.dst, e.slot) in seen_slots:
            raise SchemaError(f"node {e.dst}: slot {e.slot} driven twice")
        seen_slots.add((e.dst, e.slot))
        if dfg.node(e.src).opcode == "STORE":
            raise SchemaError(f"STORE {e.src} produces no value")
    for n in dfg.nodes:
        slots = {e.slot for e in dfg.in_edges(n.id)}
        if n.opcode == "SELECT" and slots != {LEFT, RIGHT, PRED}:
            raise SchemaError(f"SELECT {n.id} needs left, right and predicate parents")
        if n.opcode == "STORE" and LEFT not in slots:
            raise SchemaError(f"STORE {n.id} needs a left (data) operand")
        if n.opcode == "LOAD" and slots & {LEFT, RIGHT}:
            raise SchemaError(f"LOAD {n.id} takes no data operands")
    if not nx.is_directed_acyclic_graph(dfg.forward_graph()):
        raise CycleError(f"{dfg.name}: non-recurrence edges form a cycle")


_NODE_KEYS = {"id", "opcode", "constant", "variable", "offset", "stride", "bank", "asap", "alap"}
_EDGE_KEYS = {"src", "dst", "kind", "slot", "distance", "init"}
_TOP_KEYS = {"name", "nodes", "edges", "live_in", "live_out", "arrays", "iterations"}


def dfg_from_dict(doc: dict) -> Dfg:
    if not isinstance(doc, dict):
        raise SchemaError("DFG document must be an object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError(f"unknown DFG field(s) {sorted(extra)}")
    nodes, edges = [], []
    for raw in doc.get("nodes", []):
        if not isinstance(raw, dict) or set(raw) - _NODE_KEYS or "id" not in raw or "opcode" not in raw:
            raise SchemaError(f"bad node entry {raw!r}")
        nodes.append(DfgNode(**{k: raw[k] for k in raw}))
    for raw in doc.get("edges", []):
        if not isinstance(raw, dict) or set(raw) - _EDGE_KEYS or "src" not in raw or "dst" not in raw:
            raise SchemaError(f"bad edge entry {raw!r}")
        kind = raw.get("kind", DATA)
        slot = raw.get("slot", PRED if kind == PREDICATE else LEFT)
        edges.append(DfgEdge(raw["src"], raw["dst"], kind, slot,
                             raw.get("distance", 0), raw.get("init", 0)))
    dfg = Dfg(doc.get("name", "dfg"), nodes, edges, list(doc.get("live_in", [])),
              list(doc.get("live_out", [])), list(doc.get("arrays", [])), doc.get("iterations"))
    validate_dfg(dfg)
    return dfg


def parse_dfg(text: str) -> Dfg:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return dfg_from_dict(doc)


def dfg_to_dict(dfg: Dfg) -> dict:
    nodes = []
    for n in dfg.nodes:
        d = {"id": n.id, "opcode": n.opcode}
        for key, default in (("constant", None), ("variable", None), ("offset", 0),
                             ("stride", 1), ("bank", None), ("asap", None), ("alap", None)):
            val = getattr(n, key)
            if val != default:
                d[key] = val
        nodes.append(d)
    edges = []
    for e in dfg.edges:
        d = {"src": e.src, "dst": e.dst, "kind": e.kind, "slot": e.slot}
        if e.distance:
            d["distance"] = e.distance
        if e.init:
            d["init"] = e.init
        edges.append(d)
    doc = {"name": dfg.name, "nodes": nodes, "edges": edges,
           "live_in": list(dfg.live_in), "live_out": list(dfg.live_out)}
    if dfg.arrays:
        doc["arrays"] = list(dfg.arrays)
    if dfg.iteration_count_hint is not None:
        doc["iterations"] = dfg.iteration_count_hint
    return doc


def serialize_dfg(dfg: Dfg) -> str:
    return json.dumps(dfg_to_dict(dfg), indent=1) + "\n"


def compute_asap_alap(dfg: Dfg) -> Dfg:
    """Annotate unit-latency ASAP/ALAP over the non-recurrence edges."""
    g = dfg.forward_graph()
    order = dfg.topo_order()
    asap = {}
    for v in order:
        asap[v] = max((asap[u] + 1 for u in g.predecessors(v)), default=0)
    to_sink = {}
    for v in reversed(order):
        to_sink[v] = max((to_sink[w] + 1 for w in g.successors(v)), default=0)
    critical = max((asap[v] + to_sink[v] for v in order), default=0)
    nodes = [replace(n, asap=asap[n.id], alap=critical - to_sink[n.id]) for n in dfg.nodes]
    return dfg.replace_nodes(nodes)
