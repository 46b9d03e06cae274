"""Time-expanded Dijkstra over the MRRG and per-value multicast route trees."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from cgrakit.arch.elaborate import FU_SLOT, IN_PORT, LINK, MU_PORT, OUT_PORT, REG
from cgrakit.errors import NoPath
from cgrakit.mrrg import Mrrg

DEFAULT_COSTS = {FU_SLOT: 2.0, LINK: 1.0, REG: 1.0, IN_PORT: 0.0, OUT_PORT: 0.0, MU_PORT: 0.0}

RNode = tuple[int, int]  # (resource, absolute time)


@dataclass
class RouteTree:
    """All rnodes carrying one value, with the arc used to enter each."""

    root: RNode
    # rnode -> [parent rnode or None, link depth on arrival, path refcount]
    nodes: dict[RNode, list] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.setdefault(self.root, [None, 0, 0])

    def path_to(self, rn: RNode) -> list[RNode]:
        out = []
        while rn is not None:
            out.append(rn)
            rn = self.nodes[rn][0]
        out.reverse()
        return out


@dataclass
class CostModel:
    base: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    overuse: float = 8.0
    # placing an op over a register that still feeds unplaced consumers
    clobber: float = 2.0
    # per-(resource, t mod ii) escalation multipliers
    hist: dict[RNode, float] = field(default_factory=dict)


class Router:
    """Routes values on one MRRG.  ``mov_port[fu_slot]`` names the operand
    port from which an idle FU may forward a value (route-through)."""

    def __init__(self, mrrg: Mrrg, costs: CostModel, mov_port: dict[int, int]):
        self.mrrg = mrrg
        self.costs = costs
        self.mov_port = mov_port
        self.kinds = [r.kind for r in mrrg.rg.resources]
        # FU slots that route-through must leave alone
        self.protected: set[int] = set()

    def enter_cost(self, value, b: int, t: int, prev: int, strict: bool) -> float | None:
        m = self.mrrg
        kind = self.kinds[b]
        tm = t % m.ii
        occ = m.occupants(b, tm)
        if kind == FU_SLOT:
            if occ or self.mov_port.get(b) != prev or b in self.protected:
                return None
        elif kind == MU_PORT:
            return None
        key = (value, t)
        others = len(occ) - (key in occ)
        h = self.costs.hist.get((b, tm), 1.0)
        c = self.costs.base[kind] * h
        cap = m.capacity(b)
        if others >= cap:
            if strict:
                return None
            c += self.costs.overuse * h * (others - cap + 1)
        return c

    def search(self, value, sources: list[tuple[RNode, int]], t_max: int,
               goal: RNode | None = None, blocked: set[RNode] | frozenset = frozenset(),
               strict: bool = False):
        """Dijkstra from ``sources`` [((res, t), depth)].  Returns (dist, parent)
        keyed by (res, t, depth); stops early once ``goal`` is settled."""
        m = self.mrrg
        dist: dict[tuple, float] = {}
        parent: dict[tuple, tuple | None] = {}
        best_depth: dict[RNode, int] = {}
        heap = []
        tick = 0
        for (r, t), d in sources:
            if t <= t_max:
                s = (r, t, d)
                dist[s] = 0.0
                parent[s] = None
                heap.append((0.0, tick, s))
                tick += 1
        heapq.heapify(heap)
        done = None
        while heap:
            c, _, s = heapq.heappop(heap)
            if c > dist.get(s, float("inf")):
                continue
            r, t, d = s
            if best_depth.get((r, t), 1 << 30) <= d:
                continue
            best_depth[(r, t)] = d
            if goal is not None and (r, t) == goal:
                done = s
                break
            for b, t2, d2 in m.step(r, t, d):
                if t2 > t_max or (b, t2) in blocked:
                    continue
                ec = self.enter_cost(value, b, t2, r, strict)
                if ec is None:
                    continue
                ns = (b, t2, d2)
                nc = c + ec
                if nc < dist.get(ns, float("inf")):
                    dist[ns] = nc
                    parent[ns] = s
                    heapq.heappush(heap, (nc, tick, ns))
                    tick += 1
        return dist, parent, done

    def route(self, value, tree: RouteTree, target: RNode, strict: bool = False,
              extra_blocked: set[RNode] | None = None) -> tuple[list[RNode], float]:
        """Cheapest extension of ``tree`` to ``target``.  Returns the full
        root-to-target rnode path (existing prefix included) and its new cost."""
        self.last_depths = {}
        if target in tree.nodes:
            return tree.path_to(target), 0.0
        sources = [(rn, info[1]) for rn, info in tree.nodes.items()]
        blocked = set(tree.nodes)
        if extra_blocked:
            blocked |= extra_blocked
        dist, parent, done = self.search(value, sources, target[1], goal=target,
                                         blocked=blocked, strict=strict)
        if done is None:
            raise NoPath(f"no route for {value} to {self.mrrg.rg.resources[target[0]].id}@{target[1]}")
        branch = []
        s = done
        while s is not None:
            branch.append(s)
            s = parent[s]
        branch.reverse()
        start = (branch[0][0], branch[0][1])
        path = tree.path_to(start)
        for r, t, d in branch[1:]:
            path.append((r, t))
        # depths for tree bookkeeping travel alongside in a side table
        self.last_depths = {(r, t): d for r, t, d in branch}
        return path, dist[done]


def route_edge(mrrg: Mrrg, src: RNode, to_set: list[RNode], costs: CostModel | None = None,
               mov_port: dict[int, int] | None = None, value="v") -> list[list[RNode]]:
    """Multicast route from ``src`` to every target, growing one tree."""
    router = Router(mrrg, costs or CostModel(), mov_port or {})
    tree = RouteTree(src)
    paths = []
    for tgt in to_set:
        path, _ = router.route(value, tree, tgt)
        depths = router.last_depths
        for i, rn in enumerate(path):
            if rn not in tree.nodes:
                tree.nodes[rn] = [path[i - 1], depths.get(rn, 0), 0]
            tree.nodes[rn][2] += 1
        paths.append(path)
    return paths
