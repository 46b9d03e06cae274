"""Conflict resolution for oversubscribed placements."""

from __future__ import annotations

import math
import random

from cgrakit.errors import NoPath, Unresolved
from cgrakit.mapper.state import MapState


def resolve_adaptive(state: MapState, escalation: float = 1.5, max_rounds: int = 40,
                     stall: int = 5, strict: bool = False) -> bool:
    """Escalate the cost of overused rnodes, rip up and reroute the edges
    crossing them; re-place a consumer whose edge finds no route.  Returns
    True once the state is conflict-free; otherwise False, or raises
    Unresolved when ``strict``."""
    ok = _adaptive(state, escalation, max_rounds, stall)
    if not ok and strict:
        raise Unresolved(f"{state.overuse_total()} conflicts left after {max_rounds} rounds")
    return ok


def _adaptive(state: MapState, escalation: float, max_rounds: int, stall: int) -> bool:
    hist = state.costs.hist
    ii = state.ii
    best = None
    since = 0
    for rnd in range(max_rounds):
        over = state.mrrg.oversubscribed()
        if not over:
            return True
        total = state.overuse_total()
        if best is None or total < best:
            best, since = total, 0
        else:
            since += 1
        for rn in sorted(over):
            hist[rn] = hist.get(rn, 1.0) * escalation
        victims = sorted(i for i, path in state.routes.items()
                         if any((r, t % ii) in over for r, t, _ in path))
        if since >= stall and victims:
            # routing alone is stuck: move the first node whose relocation helps
            since = 0
            movable = sorted({state.edges[i].dst for i in victims} | {state.edges[i].src for i in victims})
            k = rnd % len(movable)
            order = movable[k:] + movable[:k]
            if not any(relocate(state, v) for v in order):
                relocate(state, order[0], allow_equal=True)
            continue
        for i in victims:
            if i in state.routes:
                state.remove_path(i)
        for i in victims:
            if i in state.routes:
                continue
            try:
                state.route(i)
            except NoPath:
                v = state.edges[i].dst
                state.unplace(v)
                if not state.place_node(v):
                    return False
    return not state.mrrg.oversubscribed()


def _restore(state: MapState, v: str, old: tuple[int, int], saved: dict) -> None:
    state.claim_node(v, *old)
    for i in sorted(saved):
        state.add_path(i, saved[i])


def relocate(state: MapState, v: str, tries: int = 6, allow_equal: bool = False) -> bool:
    """Move ``v`` to the cheapest other slot that lowers total overuse
    (or keeps it level, with ``allow_equal``)."""
    before = state.overuse_total()
    old = state.place[v]
    saved = state.unplace(v)
    for _cost, t, fi in state.evaluate(v, 3 * state.ii + state.slack)[: tries + 1]:
        if (fi, t) == old:
            continue
        state.claim_node(v, fi, t)
        if state.route_incident(v) and (state.overuse_total() < before
                                         or allow_equal and state.overuse_total() == before):
            return True
        state.unplace(v)
    _restore(state, v, old, saved)
    return False


def _moves(state: MapState, v: str, rng: random.Random) -> tuple[int, int] | None:
    opts = []
    for fi in state.compatible(v):
        lo, hi = state.window(v, fi)
        top = lo + state.ii + state.slack - 1 if hi is None else min(hi, lo + state.ii + state.slack - 1)
        for t in range(lo, top + 1):
            if state.slot_free(v, fi, t):
                opts.append((fi, t))
    return rng.choice(opts) if opts else None


def resolve_sa(state: MapState, seed: int = 0, t0: float = 10.0, cooling: float = 0.95,
               moves: int = 100, t_min: float = 0.01, strict: bool = False) -> bool:
    """Simulated annealing over node relocations; deterministic per seed.
    Stops when the temperature falls below ``t_min``."""
    ok = _anneal(state, seed, t0, cooling, moves, t_min)
    if not ok and strict:
        raise Unresolved(f"{state.overuse_total()} conflicts left at temperature {t_min}")
    return ok


def _anneal(state: MapState, seed: int, t0: float, cooling: float, moves: int,
            t_min: float) -> bool:
    rng = random.Random(seed)
    nodes = sorted(state.place)
    temp = t0
    cost = state.total_cost()
    while temp > t_min:
        for _ in range(moves):
            if not state.mrrg.oversubscribed():
                return True
            v = rng.choice(nodes)
            old = state.place[v]
            saved = state.unplace(v)
            mv = _moves(state, v, rng)
            accepted = False
            if mv is not None:
                state.claim_node(v, *mv)
                if state.route_incident(v):
                    new = state.total_cost()
                    delta = new - cost
                    if delta <= 0 or rng.random() < math.exp(-delta / temp):
                        cost = new
                        accepted = True
                if not accepted:
                    state.unplace(v)
            if not accepted:
                _restore(state, v, old, saved)
        temp *= cooling
    return not state.mrrg.oversubscribed()
