"""Placement order for modulo scheduling."""

from __future__ import annotations

from cgrakit.dfg.model import RECURRENCE, Dfg, compute_asap_alap
from cgrakit.mapper.mii import recurrence_cycles


def order_nodes(dfg: Dfg) -> list[str]:
    """Topological order over forward edges.  Among ready nodes, members of
    longer recurrence cycles go first, then smaller ASAP, then node id."""
    if any(n.asap is None for n in dfg.nodes):
        dfg = compute_asap_alap(dfg)
    cyc_len = {n.id: 0 for n in dfg.nodes}
    for cyc, _ in recurrence_cycles(dfg):
        for v in cyc:
            cyc_len[v] = max(cyc_len[v], len(cyc))
    indeg = {n.id: 0 for n in dfg.nodes}
    succ: dict[str, list[str]] = {n.id: [] for n in dfg.nodes}
    for e in dfg.edges:
        if e.kind != RECURRENCE:
            indeg[e.dst] += 1
            succ[e.src].append(e.dst)
    asap = {n.id: n.asap for n in dfg.nodes}
    ready = [v for v, d in indeg.items() if d == 0]
    order = []
    while ready:
        ready.sort(key=lambda v: (-cyc_len[v], asap[v], v))
        v = ready.pop(0)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return order
