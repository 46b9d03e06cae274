"""Mutable place-and-route state for one II attempt."""

from __future__ import annotations

from cgrakit.arch.elaborate import FuInfo, RoutingGraph
from cgrakit.dfg.model import LEFT, PRED, RIGHT, Dfg, DfgEdge
from cgrakit.errors import NoPath
from cgrakit.mapper.router import CostModel, RNode, Router, RouteTree
from cgrakit.mrrg import Mrrg

SLOT_INDEX = {LEFT: 0, RIGHT: 1, PRED: 2}


def edge_key(e: DfgEdge) -> str:
    return f"{e.src}->{e.dst}:{e.slot}"


def operand_port(f: FuInfo, slot: str) -> int | None:
    i = SLOT_INDEX[slot]
    return f.operands[i] if i < len(f.operands) else None


class MapState:
    def __init__(self, dfg: Dfg, rg: RoutingGraph, ii: int, hop_limit: int | None,
                 costs: CostModel, slack: int | None = None):
        self.dfg = dfg
        self.rg = rg
        self.ii = ii
        self.mrrg = Mrrg(rg, ii, hop_limit)
        self.costs = costs
        self.slack = ii if slack is None else slack
        mov = {}
        for f in rg.fus:
            if "NOP" in f.opcodes and f.operands and f.operands[0] is not None and f.out is not None:
                mov[f.slot] = f.operands[0]
        self.router = Router(self.mrrg, costs, mov)
        self.bank_res = rg.banks
        self.edges = list(dfg.edges)
        self.in_idx = {n.id: [] for n in dfg.nodes}
        self.out_idx = {n.id: [] for n in dfg.nodes}
        for i, e in enumerate(self.edges):
            self.in_idx[e.dst].append(i)
            self.out_idx[e.src].append(i)
        self.asap = {n.id: n.asap or 0 for n in dfg.nodes}
        # optional jitter on candidate costs for randomized restarts
        self.rng = None
        self.jitter = 0.0
        self.place: dict[str, tuple[int, int]] = {}
        self.lat: dict[str, int] = {}
        self.trees: dict[str, RouteTree] = {}
        # edge index -> [(res, t, depth)]
        self.routes: dict[int, list[tuple[int, int, int]]] = {}

    # -- node compatibility ---------------------------------------------
    def bank_of(self, v: str) -> int | None:
        node = self.dfg.node(v)
        if not node.is_memory or node.bank is None:
            return None
        return self.bank_res[node.bank]

    def compatible(self, v: str) -> list[int]:
        node = self.dfg.node(v)
        slots = {self.edges[i].slot for i in self.in_idx[v]}
        bank = self.bank_of(v)
        out = []
        for fi, f in enumerate(self.rg.fus):
            if node.opcode not in f.opcodes:
                continue
            if any(operand_port(f, s) is None for s in slots):
                continue
            if node.opcode != "STORE" and f.out is None:
                continue
            if node.is_memory and bank is not None and bank not in f.banks:
                continue
            out.append(fi)
        return out

    def slot_free(self, v: str, fi: int, t: int) -> bool:
        f = self.rg.fus[fi]
        if self.mrrg.occupants(f.slot, t % self.ii):
            return False
        bank = self.bank_of(v)
        if bank is not None and len(self.mrrg.occupants(bank, t % self.ii)) >= self.mrrg.capacity(bank):
            return False
        return True

    # -- claims ----------------------------------------------------------
    def claim_node(self, v: str, fi: int, t: int) -> None:
        node = self.dfg.node(v)
        f = self.rg.fus[fi]
        lat = f.opcodes[node.opcode]
        self.place[v] = (fi, t)
        self.lat[v] = lat
        self.mrrg.claim(f.slot, t, ("op", v))
        bank = self.bank_of(v)
        if bank is not None:
            self.mrrg.claim(bank, t, ("mem", v))
        if node.opcode != "STORE":
            root = (f.out, t + lat)
            self.trees[v] = RouteTree(root)
            self.mrrg.claim(f.out, t + lat, (v, t + lat))

    def release_node(self, v: str) -> None:
        fi, t = self.place.pop(v)
        lat = self.lat.pop(v)
        f = self.rg.fus[fi]
        self.mrrg.release(f.slot, t, ("op", v))
        bank = self.bank_of(v)
        if bank is not None:
            self.mrrg.release(bank, t, ("mem", v))
        if v in self.trees:
            self.mrrg.release(f.out, t + lat, (v, t + lat))
            del self.trees[v]

    def add_path(self, ei: int, path: list[tuple[int, int, int]]) -> None:
        v = self.edges[ei].src
        tree = self.trees[v]
        prev = None
        for r, t, d in path:
            rn = (r, t)
            info = tree.nodes.get(rn)
            if info is None:
                info = [prev, d, 0]
                tree.nodes[rn] = info
            info[2] += 1
            if info[2] == 1:
                self.mrrg.claim(r, t, (v, t))
            prev = rn
        self.routes[ei] = path

    def remove_path(self, ei: int) -> list[tuple[int, int, int]]:
        path = self.routes.pop(ei)
        v = self.edges[ei].src
        tree = self.trees[v]
        for r, t, _ in path:
            rn = (r, t)
            info = tree.nodes[rn]
            info[2] -= 1
            if info[2] == 0:
                self.mrrg.release(r, t, (v, t))
                if rn != tree.root:
                    del tree.nodes[rn]
        return path

    # -- routing ---------------------------------------------------------
    def target(self, ei: int) -> RNode:
        e = self.edges[ei]
        fi, t = self.place[e.dst]
        return (operand_port(self.rg.fus[fi], e.slot), t + e.distance * self.ii)

    def route(self, ei: int, strict: bool = False) -> float:
        e = self.edges[ei]
        tree = self.trees[e.src]
        self.guard()
        path, cost = self.router.route(e.src, tree, self.target(ei), strict=strict)
        depths = self.router.last_depths
        triples = []
        for rn in path:
            info = tree.nodes.get(rn)
            d = info[1] if info is not None else depths.get(rn, 0)
            triples.append((rn[0], rn[1], d))
        self.add_path(ei, triples)
        return cost

    def incident(self, v: str) -> list[int]:
        seen = []
        for i in self.in_idx[v] + self.out_idx[v]:
            if i not in seen:
                seen.append(i)
        return seen

    def routable(self, v: str) -> list[int]:
        return [i for i in self.incident(v)
                if self.edges[i].src in self.place and self.edges[i].dst in self.place]

    def unplace(self, v: str) -> dict[int, list]:
        saved = {}
        for i in self.incident(v):
            if i in self.routes:
                saved[i] = self.remove_path(i)
        self.release_node(v)
        return saved

    def route_incident(self, v: str) -> bool:
        for i in self.routable(v):
            if i in self.routes:
                continue
            try:
                self.route(i)
            except NoPath:
                return False
        return True

    # -- placement -------------------------------------------------------
    def window(self, v: str, fi: int) -> tuple[int, int | None]:
        """[earliest, latest] start times given placed neighbours."""
        lat = self.rg.fus[fi].opcodes[self.dfg.node(v).opcode]
        lo = None
        hi = None
        for i in self.in_idx[v]:
            e = self.edges[i]
            if e.src in self.place and e.src != v:
                b = self.place[e.src][1] + self.lat[e.src] - e.distance * self.ii
                lo = b if lo is None else max(lo, b)
        for i in self.out_idx[v]:
            e = self.edges[i]
            if e.dst in self.place and e.dst != v:
                b = self.place[e.dst][1] + e.distance * self.ii - lat
                hi = b if hi is None else min(hi, b)
        if lo is None:
            lo = self.asap[v] if hi is None else min(self.asap[v], hi)
        for i in self.out_idx[v]:
            e = self.edges[i]
            if e.dst == v and lat > e.distance * self.ii:
                return lo, lo - 1
        return lo, hi

    def evaluate(self, v: str, span: int | None = None) -> list[tuple[float, int, int]]:
        """Feasible (cost, time, fu index) candidates, cheapest first."""
        node = self.dfg.node(v)
        span = self.ii + self.slack if span is None else span
        fus = self.compatible(v)
        wins = {fi: self.window(v, fi) for fi in fus}
        if not wins:
            return []
        t_top = max(lo + span - 1 for lo, _ in wins.values())
        ins = [i for i in self.in_idx[v] if self.edges[i].src in self.place and self.edges[i].src != v]
        outs = [i for i in self.out_idx[v] if self.edges[i].dst in self.place or self.edges[i].dst == v]
        maps: dict[str, dict[RNode, float]] = {}
        self.guard()
        for i in ins:
            u = self.edges[i].src
            if u in maps:
                continue
            tree = self.trees[u]
            t_max = t_top + max(self.edges[j].distance for j in ins) * self.ii
            dist, _, _ = self.router.search(
                u, [(rn, info[1]) for rn, info in tree.nodes.items()], t_max, blocked=set(tree.nodes))
            best: dict[RNode, float] = {rn: 0.0 for rn in tree.nodes}
            for (r, t, _), c in dist.items():
                if c < best.get((r, t), float("inf")):
                    best[(r, t)] = c
            maps[u] = best
        reserved = self.reserved_fus(v, fus)
        # values still awaiting consumers; overwriting the register that
        # holds one of them forces a detour later
        live = [u for u, tree in self.trees.items()
                if any(self.edges[i].dst not in self.place and self.edges[i].dst != v
                       for i in self.out_idx[u])]
        cands = []
        for fi in fus:
            if fi in reserved:
                continue
            f = self.rg.fus[fi]
            lat = f.opcodes[node.opcode]
            lo, hi = wins[fi]
            top = lo + span - 1 if hi is None else min(hi, lo + span - 1)
            for t in range(lo, top + 1):
                if not self.slot_free(v, fi, t):
                    continue
                cost = 0.0
                ok = True
                if node.opcode != "STORE":
                    cost += self.costs.clobber * sum(
                        1 for u in live if (f.out, t + lat - 1) in self.trees[u].nodes)
                    occ = self.mrrg.occupants(f.out, (t + lat) % self.ii)
                    if occ:
                        cap = self.mrrg.capacity(f.out)
                        h = self.costs.hist.get((f.out, (t + lat) % self.ii), 1.0)
                        cost += self.costs.overuse * h * (len(occ) - cap + 1)
                for i in ins:
                    e = self.edges[i]
                    rn = (operand_port(f, e.slot), t + e.distance * self.ii)
                    c = maps[e.src].get(rn)
                    if c is None:
                        ok = False
                        break
                    cost += c
                if ok and outs:
                    for i in outs:
                        e = self.edges[i]
                        if e.dst == v:
                            tf, tt = f, t
                        else:
                            dfi, tt = self.place[e.dst]
                            tf = self.rg.fus[dfi]
                        goal = (operand_port(tf, e.slot), tt + e.distance * self.ii)
                        d2, _, done = self.router.search(v, [((f.out, t + lat), 0)], goal[1], goal=goal)
                        if done is None:
                            ok = False
                            break
                        cost += d2[done]
                if ok:
                    if self.rng is not None:
                        cost += self.rng.random() * self.jitter
                    cands.append((cost, t, fi))
        cands.sort(key=lambda c: (c[0], c[1], c[2]))
        return cands

    def reserved_fus(self, v: str | None, fus: list[int] | None = None) -> set[int]:
        """FUs whose free slots are all needed by unplaced nodes that cannot
        go elsewhere (a Hall-style count per compatibility class)."""
        pending = [u.id for u in self.dfg.nodes if u.id not in self.place and u.id != v]
        if not pending:
            return set()
        compat = {u: frozenset(self.compatible(u)) for u in pending}
        free = {fi: sum(1 for t in range(self.ii) if not self.mrrg.occupants(f.slot, t))
                for fi, f in enumerate(self.rg.fus)}
        out = set()
        for cls in set(compat.values()):
            demand = sum(1 for c in compat.values() if c <= cls)
            if demand >= sum(free[fi] for fi in cls):
                out.update(fi for fi in cls if free[fi] > 0)
        return out

    def guard(self) -> None:
        self.router.protected = {self.rg.fus[fi].slot for fi in self.reserved_fus(None)}

    def place_node(self, v: str, tries: int = 4) -> bool:
        for span in (None, 3 * self.ii + self.slack):
            cands = self.evaluate(v, span)
            for _cost, t, fi in cands[:tries]:
                self.claim_node(v, fi, t)
                if self.route_incident(v):
                    return True
                self.unplace(v)
        return False

    # -- metrics ---------------------------------------------------------
    def overuse_total(self) -> int:
        return sum(len(occ) - self.mrrg.capacity(rn[0])
                   for rn, occ in self.mrrg.occupancy.items() if len(occ) > self.mrrg.capacity(rn[0]))

    def route_length(self) -> float:
        base = self.costs.base
        total = 0.0
        for tree in self.trees.values():
            for (r, _t) in tree.nodes:
                total += base[self.rg.resources[r].kind]
        return total

    def total_cost(self) -> float:
        return self.overuse_total() * self.costs.overuse + self.route_length()
