"""Gap-preserving constructions: subdivision, doubling, and the bound formula."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .instance import ASYM, SYM, Instance
from .lp_core import LPSolution, solution_from_values, vertex_check
from .verify import _subset_dp

PATH_PAIR_LIMIT = 12


class PreconditionError(ValueError):
    """The input does not satisfy what a construction needs."""


def _support_costs_only(inst: Instance, x: LPSolution) -> set:
    """Unit pairs that survive resetting every non-support pair to cost 2."""
    supp = set(x.support)
    return {e for e in inst.unit_edges if e in supp}


def subdivide(inst: Instance, x: LPSolution, edge=None) -> tuple[Instance, LPSolution]:
    """Replace a unit-cost 1-edge {u, w} by a new vertex on a path u - v - w."""
    if not inst.symmetric:
        raise PreconditionError("subdivision is defined for symmetric instances")
    ones = sorted(e for e in x.one_edges() if inst.cost(*e) == 1)
    if edge is not None:
        edge = inst.key(*edge)
        if edge not in ones:
            raise PreconditionError(f"{edge} is not a unit-cost 1-edge")
    elif not ones:
        raise PreconditionError("x has no unit-cost 1-edge; it is not a vertex solution")
    else:
        edge = ones[0]
    u, w = edge
    n = inst.n
    v = n
    unit = _support_costs_only(inst, x) - {edge}
    unit |= {(u, v), (w, v)}
    new = Instance(SYM, n + 1, frozenset(unit))
    values = {e: val for e, val in x.values.items() if e != edge}
    values[(u, v)] = Fraction(1)
    values[(w, v)] = Fraction(1)
    cuts = [frozenset(S | {v}) if u in S else S for S in x.cuts]
    sol = solution_from_values(new, values, cuts)
    sol = _with_vertex_flag(new, sol, vertex_check(new, sol))
    return new, sol


def _with_vertex_flag(inst: Instance, sol: LPSolution, is_vertex: bool) -> LPSolution:
    out = LPSolution(sol.kind, sol.n, sol.values, sol.objective, sol.cuts, is_vertex,
                     dict(sol.flags))
    return out


def _two_neighbors(x: LPSolution, v: int, s: int | None) -> tuple[int, int]:
    nb = x.neighbors()[v]
    if len(nb) != 2:
        raise PreconditionError(f"vertex {v} has {len(nb)} support neighbours, need exactly 2")
    if s is None:
        s = nb[0]
    if s not in nb:
        raise PreconditionError(f"{s} is not a support neighbour of {v}")
    t = nb[1] if nb[0] == s else nb[0]
    return s, t


def double_sym(inst: Instance, x: LPSolution, v: int, s: int | None = None
               ) -> tuple[Instance, LPSolution]:
    """Two copies of the instance cross-wired at the degree-two vertex v."""
    if not inst.symmetric:
        raise PreconditionError("double_sym needs a symmetric instance")
    s, t = _two_neighbors(x, v, s)
    n = inst.n
    unit = _support_costs_only(inst, x) | {inst.key(v, s), inst.key(v, t)}
    new_unit = set()
    for a, b in unit:
        for off in (0, n):
            new_unit.add((a + off, b + off))
    v1, v2, s1, s2 = v, v + n, s, s + n
    new_unit -= {(min(v1, s1), max(v1, s1)), (min(v2, s2), max(v2, s2))}
    new_unit |= {(min(v1, s2), max(v1, s2)), (min(v2, s1), max(v2, s1))}
    new = Instance(SYM, 2 * n, frozenset(new_unit))

    values = {}
    for (a, b), val in x.values.items():
        for off in (0, n):
            values[(a + off, b + off)] = val
    for key in ((min(v1, s1), max(v1, s1)), (min(v2, s2), max(v2, s2))):
        values.pop(key, None)
    values[(min(v1, s2), max(v1, s2))] = Fraction(1)
    values[(min(v2, s1), max(v2, s1))] = Fraction(1)
    return new, solution_from_values(new, values)


def path_pair_minimum(inst: Instance, v: int) -> int:
    """Cheapest pair of paths sharing only v, covering V, both starting or both ending at v."""
    n = inst.n
    if n > PATH_PAIR_LIMIT:
        raise PreconditionError(f"path-pair search supports n <= {PATH_PAIR_LIMIT}")
    C = np.array(inst.cost_matrix(), dtype=np.int32)
    rest = [u for u in range(n) if u != v]
    best = None
    for mat in (C, C.T):
        sub = mat[np.ix_(rest, rest)]
        dp = _subset_dp(sub, mat[v, rest])
        f = dp.min(axis=1).astype(np.int64)
        f[0] = 0
        full = (1 << (n - 1)) - 1
        masks = np.arange(1 << (n - 1))
        val = int((f[masks] + f[full ^ masks]).min())
        best = val if best is None else min(best, val)
    return best


def double_asym(inst: Instance, x: LPSolution, v: int, s: int | None = None,
                opt: int | None = None, trust: bool = False) -> tuple[Instance, LPSolution]:
    """Directed doubling at a vertex v with exactly two support neighbours.

    ``opt`` is the optimum of ``inst``; it is computed when omitted and the
    instance is small.  Above the path-pair search limit the construction
    runs only with ``trust=True``.
    """
    if inst.symmetric:
        raise PreconditionError("double_asym needs an asymmetric instance")
    s, t = _two_neighbors(x, v, s)
    n = inst.n
    if n <= PATH_PAIR_LIMIT:
        if opt is None:
            from .verify import exact_opt
            opt = exact_opt(inst)
        if path_pair_minimum(inst, v) < opt - 2:
            raise PreconditionError("path-pair condition fails at v")
    elif not trust:
        raise PreconditionError("path-pair condition unchecked above the size limit; pass trust")

    supp = _support_costs_only(inst, x)
    new_unit = set()
    for a, b in supp:
        for off in (0, n):
            new_unit.add((a + off, b + off))
    v1, v2, s1, s2 = v, v + n, s, s + n
    cost_vs, cost_sv = inst.cost(v, s), inst.cost(s, v)
    for arc in ((v1, s1), (s1, v1), (v2, s2), (s2, v2)):
        new_unit.discard(arc)
    if cost_vs == 1 and x.x(v, s) > 0:
        new_unit |= {(v1, s2), (v2, s1)}
    if cost_sv == 1 and x.x(s, v) > 0:
        new_unit |= {(s1, v2), (s2, v1)}
    new = Instance(ASYM, 2 * n, frozenset(new_unit))

    a = x.x(v, s)
    values = {}
    for (p, q), val in x.values.items():
        for off in (0, n):
            values[(p + off, q + off)] = val
    for arc in ((v1, s1), (s1, v1), (v2, s2), (s2, v2)):
        values.pop(arc, None)
    values[(v1, s2)] = values[(v2, s1)] = a
    values[(s1, v2)] = values[(s2, v1)] = 1 - a
    values = {e: val for e, val in values.items() if val}
    return new, solution_from_values(new, values)


def convergence_bound(alpha_prime, c: int, gamma) -> Fraction:
    """beta = alpha' + (alpha' - 1) / (c + gamma), exactly."""
    alpha_prime, gamma = Fraction(alpha_prime), Fraction(gamma)
    if alpha_prime < 1 or c < 1 or gamma < 0:
        raise ValueError("need alpha' >= 1, c >= 1 and gamma >= 0")
    return alpha_prime + (alpha_prime - 1) / (c + gamma)


def subdivided_gap_floor(alpha: Fraction, opt_ser: Fraction) -> Fraction:
    """Lower bound on the gap after one subdivision step."""
    return alpha - (alpha - 1) / (opt_ser + 1)


def iterate(inst: Instance, x: LPSolution, k: int) -> tuple[Instance, LPSolution]:
    """Subdivide once, then double k times at the new degree-two vertex."""
    inst, x = subdivide(inst, x)
    v = inst.n - 1
    for _ in range(k):
        inst, x = double_sym(inst, x, v)
    return inst, x

