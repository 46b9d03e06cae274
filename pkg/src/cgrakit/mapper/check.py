"""Legality checker for mappings, written against the flat routing graph
only (it shares no code with the placer or the MRRG)."""

from __future__ import annotations

from collections import defaultdict

from cgrakit.arch.elaborate import FU_SLOT, LINK, REG, RoutingGraph
from cgrakit.dfg.model import Dfg

_SLOT_POS = {"left": 0, "right": 1, "predicate": 2}


def check_mapping(mapping, dfg: Dfg, rg: RoutingGraph) -> list[str]:
    """Return a list of human-readable violations (empty when legal)."""
    bad: list[str] = []
    ii = mapping.ii
    hops = mapping.hop_limit
    idx = rg.index
    fu_of_slot = {f.slot: f for f in rg.fus}
    fu_outs = {f.out for f in rg.fus if f.out is not None}
    banks = rg.banks
    claims: dict[tuple[int, int], set] = defaultdict(set)

    where = {}
    for n in dfg.nodes:
        if n.id not in mapping.placement:
            bad.append(f"node {n.id} is not placed")
            continue
        fu_id, t = mapping.placement[n.id]
        f = fu_of_slot.get(idx.get(fu_id, -1))
        if f is None:
            bad.append(f"node {n.id} placed on unknown FU {fu_id}")
            continue
        if n.opcode not in f.opcodes:
            bad.append(f"node {n.id}: {fu_id} does not support {n.opcode}")
            continue
        lat = f.opcodes[n.opcode]
        if mapping.latency.get(n.id) != lat:
            bad.append(f"node {n.id}: latency {mapping.latency.get(n.id)} != {lat}")
        where[n.id] = (f, t, lat)
        claims[(f.slot, t % ii)].add(("op", n.id))
        if n.opcode != "STORE":
            claims[(f.out, (t + lat) % ii)].add((n.id, t + lat))
        if n.is_memory and n.bank is not None:
            if n.bank >= len(banks) or banks[n.bank] not in f.banks:
                bad.append(f"node {n.id}: {fu_id} cannot reach bank {n.bank}")
            else:
                claims[(banks[n.bank], t % ii)].add(("mem", n.id))

    parents: dict[str, dict[tuple[int, int], int | None]] = defaultdict(dict)
    for e in dfg.edges:
        key = f"{e.src}->{e.dst}:{e.slot}"
        path = mapping.routes.get(key)
        if e.src not in where or e.dst not in where:
            continue
        fu_u, tu, lat_u = where[e.src]
        fu_v, tv, _ = where[e.dst]
        want_t = tv + e.distance * ii
        if want_t < tu + lat_u:
            bad.append(f"edge {key}: consumer time {want_t} precedes producer result {tu + lat_u}")
        if not path:
            bad.append(f"edge {key} has no route")
            continue
        try:
            rpath = [(idx[r], t) for r, t in path]
        except KeyError as exc:
            bad.append(f"edge {key}: unknown resource {exc}")
            continue
        pos = _SLOT_POS[e.slot]
        port = fu_v.operands[pos] if pos < len(fu_v.operands) else None
        if rpath[0] != (fu_u.out, tu + lat_u):
            bad.append(f"edge {key}: route does not start at the producer result")
        if rpath[-1] != (port, want_t):
            bad.append(f"edge {key}: route does not end at the consumer {e.slot} port at t={want_t}")
        links = 0
        for (a, ta), (b, tb) in zip(rpath, rpath[1:]):
            if a == b:
                if not (rg.kind(a) == REG or a in fu_outs) or tb != ta + 1:
                    bad.append(f"edge {key}: illegal hold on {rg.resources[a].id}@{ta}")
                links = 0
                continue
            if b not in rg.succ[a]:
                bad.append(f"edge {key}: no wire {rg.resources[a].id} -> {rg.resources[b].id}")
                continue
            latch = rg.kind(b) == REG or rg.kind(a) == FU_SLOT
            if tb != ta + (1 if latch else 0):
                bad.append(f"edge {key}: bad timing {rg.resources[a].id}@{ta} -> {rg.resources[b].id}@{tb}")
            if latch:
                links = 0
            elif rg.kind(b) == LINK:
                links += 1
                if links > hops:
                    bad.append(f"edge {key}: more than {hops} links in cycle {tb}")
            if rg.kind(b) == FU_SLOT:
                f = fu_of_slot[b]
                if "NOP" not in f.opcodes or not f.operands or f.operands[0] != a:
                    bad.append(f"edge {key}: route-through {rg.resources[b].id} not fed by its first operand")
        seen = set()
        prev = None
        for rn in rpath:
            if rn in seen:
                bad.append(f"edge {key}: route revisits {rg.resources[rn[0]].id}@{rn[1]}")
            seen.add(rn)
            tree = parents[e.src]
            if rn in tree and tree[rn] != prev:
                bad.append(f"value {e.src}: {rg.resources[rn[0]].id}@{rn[1]} has two drivers")
            tree.setdefault(rn, prev)
            claims[(rn[0], rn[1] % ii)].add((e.src, rn[1]))
            prev = rn

    for (r, tm), keys in sorted(claims.items()):
        cap = rg.resources[r].capacity
        if len(keys) > cap:
            bad.append(f"{rg.resources[r].id}@{tm}: {len(keys)} occupants exceed capacity {cap}")
    return bad
