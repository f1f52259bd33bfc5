"""Turning a spanning 2-matching into a tour."""

from __future__ import annotations

from fractions import Fraction

from .instance import Instance, Tour, tour_cost
from .lp_core import LPSolution


def _open_cycle(cyc: tuple[int, ...], inst: Instance, ones: set, other_unit, directed: bool):
    """Delete one cycle edge, preferring a non-1-edge and a useful new end."""
    m = len(cyc)
    best = None
    for i in range(m):
        a, b = cyc[i], cyc[(i + 1) % m]
        key = (a, b) if directed else (min(a, b), max(a, b))
        is_one = key in ones
        cheap = inst.cost(a, b) == 1
        useful = other_unit(a) or other_unit(b)
        # dropping a cost-2 edge is always best; otherwise keep 1-edges
        rank = (cheap, is_one, not useful, i)
        if best is None or rank < best[0]:
            best = (rank, i)
    i = best[1]
    return list(cyc[i + 1:] + cyc[:i + 1])


def complete_to_tour(M, inst: Instance, x: LPSolution | None = None) -> Tour:
    """Open cycles, then join path ends greedily with cost-1 pairs first."""
    directed = M.directed
    if directed == inst.symmetric or M.n != inst.n:
        raise ValueError("matching does not fit the instance")
    comps = M.components()
    if sum(c.size for c in comps) != inst.n:
        raise ValueError("matching does not span the vertex set")
    c = len(comps)
    if c == 1 and comps[0].is_cycle:
        tour = Tour(comps[0].vertices)
        _check_bound(inst, M, tour, c)
        return tour

    ones = x.one_edges() if x is not None else set()
    comp_of = {}
    for ci, comp in enumerate(comps):
        for v in comp.vertices:
            comp_of[v] = ci
    unit = inst.unit_neighbors()

    def other_unit(v):
        return any(comp_of[w] != comp_of[v] for w in unit[v])

    pieces = []
    for comp in comps:
        if comp.is_cycle:
            pieces.append(_open_cycle(comp.vertices, inst, ones, other_unit, directed))
        else:
            pieces.append(list(comp.vertices))

    while len(pieces) > 1:
        pieces = _join_once(pieces, inst, directed)
    tour = Tour(tuple(pieces[0]))
    _check_bound(inst, M, tour, c)
    return tour


def _join_once(pieces: list[list[int]], inst: Instance, directed: bool) -> list[list[int]]:
    best = None
    for i, p in enumerate(pieces):
        for j, q in enumerate(pieces):
            if i == j:
                continue
            if directed:
                options = [(p[-1], q[0], False, False)]
            else:
                options = [(p[-1], q[0], False, False), (p[-1], q[-1], False, True),
                           (p[0], q[0], True, False), (p[0], q[-1], True, True)]
            for a, b, rev_p, rev_q in options:
                if inst.cost(a, b) == 1:
                    key = (min(a, b), max(a, b), i, j) if not directed else (a, b, i, j)
                    if best is None or key < best[0]:
                        best = (key, i, j, rev_p, rev_q)
    if best is None:
        i, j, rev_p, rev_q = 0, 1, False, False
    else:
        _, i, j, rev_p, rev_q = best
    p = pieces[i][::-1] if rev_p else pieces[i]
    q = pieces[j][::-1] if rev_q else pieces[j]
    rest = [r for k, r in enumerate(pieces) if k not in (i, j)]
    return [p + q] + rest


def _check_bound(inst: Instance, M, tour: Tour, c: int) -> None:
    expensive = sum(inst.cost(u, v) == 2 for u, v in M.edges)
    cost = tour_cost(inst, tour)
    if c == 1 and M.components()[0].is_cycle:
        limit = inst.n + expensive
    elif c == 1:
        limit = inst.n + 1 + expensive
    else:
        limit = inst.n + c + expensive
    if cost > limit:
        raise AssertionError(f"completed tour costs {cost}, above the bound {limit}")


def approx_ratio(tour: Tour, x: LPSolution, inst: Instance) -> Fraction:
    if tour.n != x.n or inst.n != x.n or inst.kind != x.kind:
        raise ValueError("tour, solution and instance do not match")
    return Fraction(tour_cost(inst, tour)) / x.objective
