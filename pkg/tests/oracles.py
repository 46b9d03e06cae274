"""Independent oracles used by the test-suite.

Nothing here imports the mapper, the MRRG or the simulator; they only see
the flat routing graph produced by elaboration and the DFG model.
"""

from __future__ import annotations

import math
from cgrakit.arch.elaborate import FU_SLOT, LINK, OUT_PORT, REG, RoutingGraph

SLOT_POS = {"left": 0, "right": 1, "predicate": 2}


# --------------------------------------------------------------------------
# MII by enumeration
# --------------------------------------------------------------------------
def brute_cycles(dfg) -> list[tuple[tuple[str, ...], int]]:
    """All elementary cycles (as node tuples) with the minimal total distance,
    by depth-first enumeration from every start node."""
    ids = [n.id for n in dfg.nodes]
    rank = {v: i for i, v in enumerate(ids)}
    adj: dict[str, dict[str, int]] = {v: {} for v in ids}
    for e in dfg.edges:
        d = adj[e.src].get(e.dst)
        adj[e.src][e.dst] = e.distance if d is None else min(d, e.distance)
    found = []

    def walk(start, v, path, dist):
        for w, d in adj[v].items():
            if w == start:
                found.append((tuple(path), dist + d))
            elif rank[w] > rank[start] and w not in path:
                walk(start, w, path + [w], dist + d)

    for s in ids:
        walk(s, s, [s], 0)
    return found


def brute_mii(dfg, rg: RoutingGraph) -> tuple[int, int]:
    lat = {}
    for n in dfg.nodes:
        lat[n.id] = min(f.opcodes[n.opcode] for f in rg.fus if n.opcode in f.opcodes)
    groups: dict[tuple, int] = {}
    for n in dfg.nodes:
        key = tuple(sorted(i for i, f in enumerate(rg.fus) if n.opcode in f.opcodes))
        groups[key] = groups.get(key, 0) + 1
    res = max(math.ceil(c / len(k)) for k, c in groups.items())
    rec = 0
    for cyc, dist in brute_cycles(dfg):
        rec = max(rec, math.ceil(sum(lat[v] for v in cyc) / dist))
    return res, rec


# --------------------------------------------------------------------------
# exhaustive mapper for tiny instances
# --------------------------------------------------------------------------
class ExhaustiveMapper:
    """Depth-first search over every placement (FU, start time) and every
    route, on a time-expanded copy of the routing graph.

    Start times are bounded: the first node sits in [0, ii) and every other
    node starts at most ``slack`` cycles after its earliest legal time.
    """

    def __init__(self, dfg, rg: RoutingGraph, ii: int, hop_limit: int | None = None,
                 slack: int | None = None, node_limit: int = 8):
        if len(dfg.nodes) > node_limit:
            raise ValueError("instance too large for exhaustive search")
        self.dfg, self.rg, self.ii = dfg, rg, ii
        self.hops = rg.hop_limit if hop_limit is None else hop_limit
        self.slack = 2 * ii if slack is None else slack
        self.res = rg.resources
        self.fu_outs = {f.out for f in rg.fus if f.out is not None}
        self.mov = {f.slot: f.operands[0] for f in rg.fus
                    if "NOP" in f.opcodes and f.operands and f.operands[0] is not None}
        self.order = dfg.topo_order()
        self.occ: dict[tuple[int, int], dict] = {}
        self.parent: dict[str, dict] = {}
        self.place: dict[str, tuple[int, int]] = {}
        self.lat: dict[str, int] = {}
        self.paths: dict[tuple, list] = {}
        self.explored = 0

    # occupancy ---------------------------------------------------------
    def _free(self, r, t, key) -> bool:
        occ = self.occ.get((r, t % self.ii), {})
        if key in occ:
            return True
        if self.res[r].kind == FU_SLOT:
            return not occ
        return len(occ) < self.res[r].capacity

    def _take(self, r, t, key):
        occ = self.occ.setdefault((r, t % self.ii), {})
        occ[key] = occ.get(key, 0) + 1

    def _drop(self, r, t, key):
        occ = self.occ[(r, t % self.ii)]
        occ[key] -= 1
        if not occ[key]:
            del occ[key]

    # routing -----------------------------------------------------------
    def _succ(self, r, t, depth):
        for b in self.rg.succ[r]:
            kb, ka = self.res[b].kind, self.res[r].kind
            if kb == REG or ka == FU_SLOT:
                yield b, t + 1, 0
            else:
                if ka != FU_SLOT and kb == FU_SLOT and self.mov.get(b) != r:
                    continue
                d = depth + (kb == LINK)
                if d <= self.hops:
                    yield b, t, d
        if self.res[r].kind == REG or r in self.fu_outs:
            yield r, t + 1, 0

    def _paths(self, value, src, dst):
        """Every simple time-expanded path src -> dst (both (res, t))."""
        out = []

        def dfs(r, t, d, path, seen):
            if (r, t) == dst:
                out.append(list(path))
                return
            for b, t2, d2 in self._succ(r, t, d):
                if t2 > dst[1] or (b, t2) in seen:
                    continue
                if self.res[b].kind == FU_SLOT and b not in self.mov:
                    continue
                if not self._free(b, t2, (value, t2)):
                    continue
                seen.add((b, t2))
                path.append((b, t2))
                dfs(b, t2, d2, path, seen)
                path.pop()
                seen.discard((b, t2))

        dfs(src[0], src[1], 0, [src], {src})
        return out

    def _commit(self, value, path) -> bool:
        par = self.parent.setdefault(value, {})
        prev = None
        for rn in path:
            if rn in par and par[rn][0] != prev:
                return False
            prev = rn
        prev = None
        for rn in path:
            if rn in par:
                par[rn][1] += 1
            else:
                par[rn] = [prev, 1]
                self._take(rn[0], rn[1], (value, rn[1]))
            prev = rn
        return True

    def _uncommit(self, value, path):
        par = self.parent[value]
        for rn in path:
            par[rn][1] -= 1
            if not par[rn][1]:
                del par[rn]
                self._drop(rn[0], rn[1], (value, rn[1]))

    def _route_all(self, edges, k, done) -> bool:
        if k == len(edges):
            return done()
        e = edges[k]
        fu_u, tu = self.place[e.src]
        fu_v, tv = self.place[e.dst]
        src = (self.rg.fus[fu_u].out, tu + self.lat[e.src])
        port = self.rg.fus[fu_v].operands[SLOT_POS[e.slot]]
        dst = (port, tv + e.distance * self.ii)
        for path in self._paths(e.src, src, dst):
            self.explored += 1
            if not self._commit(e.src, path):
                continue
            self.paths[(e.src, e.dst, e.slot)] = path
            if self._route_all(edges, k + 1, done):
                return True
            del self.paths[(e.src, e.dst, e.slot)]
            self._uncommit(e.src, path)
        return False

    # placement ---------------------------------------------------------
    def _candidates(self, v, idx):
        node = self.dfg.node(v)
        if idx == 0:
            times = range(self.ii)
        else:
            lo = 0
            for e in self.dfg.in_edges(v):
                if e.src in self.place:
                    lo = max(lo, self.place[e.src][1] + self.lat[e.src] - e.distance * self.ii)
            times = range(lo, lo + self.slack + 1)
        slots = {e.slot for e in self.dfg.in_edges(v)}
        for t in times:
            for fi, f in enumerate(self.rg.fus):
                if node.opcode not in f.opcodes:
                    continue
                if any(SLOT_POS[s] >= len(f.operands) or f.operands[SLOT_POS[s]] is None for s in slots):
                    continue
                yield fi, t

    def _slots_suffice(self, idx) -> bool:
        """Every group of remaining nodes still has enough free FU slots."""
        rest = self.order[idx:]
        if not rest:
            return True
        free = {}
        for fi, f in enumerate(self.rg.fus):
            free[fi] = sum(1 for t in range(self.ii) if not self.occ.get((f.slot, t)))
        groups = {}
        for v in rest:
            op = self.dfg.node(v).opcode
            key = frozenset(fi for fi, f in enumerate(self.rg.fus) if op in f.opcodes)
            groups[key] = groups.get(key, 0) + 1
        for key in groups:
            need = sum(c for k, c in groups.items() if k <= key)
            if need > sum(free[fi] for fi in key):
                return False
        return True

    def _place(self, idx) -> bool:
        if idx == len(self.order):
            return True
        if not self._slots_suffice(idx):
            return False
        v = self.order[idx]
        node = self.dfg.node(v)
        for fi, t in self._candidates(v, idx):
            f = self.rg.fus[fi]
            lat = f.opcodes[node.opcode]
            if not self._free(f.slot, t, ("op", v)):
                continue
            bank = None
            if node.is_memory and node.bank is not None:
                if node.bank >= len(self.rg.banks) or self.rg.banks[node.bank] not in f.banks:
                    continue
                bank = self.rg.banks[node.bank]
                if not self._free(bank, t, ("mem", v)):
                    continue
            out_key = (v, t + lat)
            if node.opcode != "STORE" and not self._free(f.out, t + lat, out_key):
                continue
            self.place[v] = (fi, t)
            self.lat[v] = lat
            self._take(f.slot, t, ("op", v))
            if bank is not None:
                self._take(bank, t, ("mem", v))
            if node.opcode != "STORE":
                self._take(f.out, t + lat, out_key)
                self.parent[v] = {(f.out, t + lat): [None, 1]}
            edges = [e for e in self.dfg.edges
                     if e.src in self.place and e.dst in self.place and (e.src == v or e.dst == v)]
            if self._route_all(edges, 0, lambda: self._place(idx + 1)):
                return True
            if node.opcode != "STORE":
                self._drop(f.out, t + lat, out_key)
                del self.parent[v]
            if bank is not None:
                self._drop(bank, t, ("mem", v))
            self._drop(f.slot, t, ("op", v))
            del self.place[v]
            del self.lat[v]
        return False

    def solve(self) -> dict | None:
        if self._place(0):
            return {"placement": dict(self.place), "routes": dict(self.paths)}
        return None


def exhaustive_feasible(dfg, rg: RoutingGraph, ii: int, **kw) -> bool:
    return ExhaustiveMapper(dfg, rg, ii, **kw).solve() is not None
