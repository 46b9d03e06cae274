"""Modulo routing resource graph.

Every resource of the routing graph is replicated for each time step
``t in [0, ii)``.  Arcs that latch at a clock edge (register writes and
holds, FU slot to result register) go from ``t`` to ``(t + 1) % ii``;
all other arcs stay inside ``t``.  Within one time step a value may cross
at most ``hop_limit`` Link resources; the search state therefore carries
the number of links already crossed in the current cycle.
"""

from __future__ import annotations

from collections import defaultdict, deque
from collections.abc import Iterator

from cgrakit.arch.elaborate import FU_SLOT, IN_PORT, LINK, MU_PORT, OUT_PORT, REG, RoutingGraph

INF = 1 << 30


def _entry_depths(rg: RoutingGraph) -> list[int]:
    """Fewest same-cycle links needed to arrive at each resource."""
    n = len(rg.resources)
    depth = [INF] * n
    q = deque()
    for i, r in enumerate(rg.resources):
        if r.kind in (FU_SLOT, OUT_PORT, REG, MU_PORT):
            depth[i] = 0
            q.append(i)
    while q:
        a = q.popleft()
        for b in rg.succ[a]:
            if rg.crosses_cycle(a, b):
                continue
            d = depth[a] + (rg.resources[b].kind == LINK)
            if d < depth[b]:
                depth[b] = d
                q.append(b)
    return depth


class Mrrg:
    def __init__(self, rg: RoutingGraph, ii: int, hop_limit: int | None = None):
        if ii < 1:
            raise ValueError("ii must be >= 1")
        self.rg = rg
        self.ii = ii
        self.hop_limit = rg.hop_limit if hop_limit is None else hop_limit
        self.entry_depth = _entry_depths(rg)
        self.is_link = [r.kind == LINK for r in rg.resources]
        self.layered = [r.kind in (LINK, IN_PORT) for r in rg.resources]
        self._holds = [rg.holds(i) for i in range(len(rg.resources))]
        # per resource: [(succ, crosses_cycle)] restricted to usable arcs
        self.adj: list[list[tuple[int, bool]]] = []
        for a in range(len(rg.resources)):
            row = []
            for b in rg.succ[a]:
                cross = rg.crosses_cycle(a, b)
                if cross or self.entry_depth[a] + self.is_link[b] <= self.hop_limit:
                    row.append((b, cross))
            if self._holds[a]:
                row.append((a, True))
            self.adj.append(row)
        # (res, t) -> {claim key: count}
        self.occupancy: dict[tuple[int, int], dict] = defaultdict(dict)

    # -- structure -------------------------------------------------------
    @property
    def num_rnodes(self) -> int:
        return len(self.rg.resources) * self.ii

    def rnodes(self) -> Iterator[tuple[int, int]]:
        for t in range(self.ii):
            for r in range(len(self.rg.resources)):
                yield (r, t)

    def arcs(self) -> Iterator[tuple[tuple[int, int], tuple[int, int]]]:
        for t in range(self.ii):
            for a, row in enumerate(self.adj):
                for b, cross in row:
                    yield (a, t), (b, (t + 1) % self.ii if cross else t)

    def capacity(self, res: int) -> int:
        return self.rg.resources[res].capacity

    def step(self, res: int, t: int, depth: int) -> Iterator[tuple[int, int, int]]:
        """Successor search states of (res, absolute time, links this cycle)."""
        for b, cross in self.adj[res]:
            if cross:
                yield b, t + 1, 0
            else:
                d = depth + self.is_link[b]
                if d <= self.hop_limit:
                    yield b, t, d

    # -- occupancy -------------------------------------------------------
    def claim(self, res: int, t_abs: int, key) -> None:
        slot = self.occupancy[(res, t_abs % self.ii)]
        slot[key] = slot.get(key, 0) + 1

    def release(self, res: int, t_abs: int, key) -> None:
        slot = self.occupancy[(res, t_abs % self.ii)]
        slot[key] -= 1
        if slot[key] == 0:
            del slot[key]

    def occupants(self, res: int, t_mod: int) -> dict:
        return self.occupancy.get((res, t_mod), {})

    def overuse(self, res: int, t_mod: int) -> int:
        return max(0, len(self.occupants(res, t_mod)) - self.capacity(res))

    def oversubscribed(self) -> set[tuple[int, int]]:
        return {k for k, occ in self.occupancy.items() if len(occ) > self.capacity(k[0])}

    def to_dot(self) -> str:
        names = self.rg.resources
        lines = [f'digraph "mrrg_{self.rg.name}_ii{self.ii}" {{']
        for r, t in self.rnodes():
            lines.append(f'  "{names[r].id}@{t}";')
        for (a, ta), (b, tb) in self.arcs():
            lines.append(f'  "{names[a].id}@{ta}" -> "{names[b].id}@{tb}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_mrrg(rg: RoutingGraph, ii: int, hop_limit: int | None = None) -> Mrrg:
    return Mrrg(rg, ii, hop_limit)


def reachable(mrrg: Mrrg, src: tuple[int, int], dst: tuple[int, int],
              max_cycles: int | None = None) -> bool:
    """Can a value at rnode ``src`` reach rnode ``dst``?

    With ``max_cycles`` the search is bounded to that many clock edges
    (``0`` means within the same time step); otherwise time wraps modulo II.
    """
    r0, t0 = src
    start = (r0, 0, 0)
    seen = {start}
    q = deque([start])
    while q:
        r, el, d = q.popleft()
        if r == dst[0] and (t0 + el) % mrrg.ii == dst[1] % mrrg.ii:
            return True
        for b, t2, d2 in mrrg.step(r, el, d):
            if max_cycles is not None:
                if t2 > max_cycles:
                    continue
                state = (b, t2, d2)
            else:
                state = (b, t2 % mrrg.ii, d2)
            if state not in seen:
                seen.add(state)
                q.append(state)
    return False
