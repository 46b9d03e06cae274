"""Lower bounds on the initiation interval."""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx

from cgrakit.arch.elaborate import RoutingGraph
from cgrakit.dfg.model import Dfg
from cgrakit.errors import MappingFailed


@dataclass(frozen=True)
class MiiReport:
    res_mii: int
    rec_mii: int

    @property
    def mii(self) -> int:
        return max(self.res_mii, self.rec_mii, 1)

    def to_dict(self) -> dict:
        return {"res": self.res_mii, "rec": self.rec_mii, "mii": self.mii}


def op_latency(rg: RoutingGraph, opcode: str) -> int:
    """Smallest latency any FU offers for ``opcode``."""
    lats = [f.opcodes[opcode] for f in rg.fus if opcode in f.opcodes]
    if not lats:
        raise MappingFailed(f"no FU supports {opcode}")
    return min(lats)


def recurrence_cycles(dfg: Dfg) -> list[tuple[list[str], int]]:
    """Elementary cycles of the full edge graph with their total distance.

    Parallel edges collapse to the smallest distance, which is the binding
    one for the recurrence bound.  Every cycle carries at least one
    recurrence edge because the forward graph is acyclic.
    """
    g = nx.DiGraph()
    g.add_nodes_from(n.id for n in dfg.nodes)
    for e in dfg.edges:
        if g.has_edge(e.src, e.dst):
            g[e.src][e.dst]["distance"] = min(g[e.src][e.dst]["distance"], e.distance)
        else:
            g.add_edge(e.src, e.dst, distance=e.distance)
    out = []
    for cyc in nx.simple_cycles(g):
        dist = sum(g[cyc[i]][cyc[(i + 1) % len(cyc)]]["distance"] for i in range(len(cyc)))
        out.append((cyc, dist))
    return out


def compute_mii(dfg: Dfg, rg: RoutingGraph) -> MiiReport:
    # opcode classes: opcodes served by exactly the same set of FUs
    classes: dict[frozenset, int] = {}
    for n in dfg.nodes:
        fus = frozenset(f.slot for f in rg.fus if n.opcode in f.opcodes)
        if not fus:
            raise MappingFailed(f"no FU supports {n.opcode} (node {n.id})")
        classes[fus] = classes.get(fus, 0) + 1
    res = max((math.ceil(cnt / len(fus)) for fus, cnt in classes.items()), default=1)
    rec = 0
    for cyc, dist in recurrence_cycles(dfg):
        lat = sum(op_latency(rg, dfg.node(v).opcode) for v in cyc)
        rec = max(rec, math.ceil(lat / dist))
    return MiiReport(res, rec)
