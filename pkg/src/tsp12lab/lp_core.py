"""Subtour elimination relaxation (SER) and its rounded-up variant SER+.

Solved exactly with the rational simplex in :mod:`tsp12lab.simplex` and
lazy generation of subtour cuts.  Separation is exact: cut weights are
scaled to integers by the common denominator of the LP values.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Mapping

import numpy as np

from .instance import ASYM, SYM, Edge, Instance
from .simplex import OPTIMAL, ExactLP, SolverError

HALF = Fraction(1, 2)
EXHAUSTIVE_LIMIT = 18


@dataclass(frozen=True)
class LPSolution:
    kind: str
    n: int
    values: dict[Edge, Fraction]
    objective: Fraction
    cuts: tuple[frozenset[int], ...] = ()
    is_vertex: bool = True
    flags: dict[str, bool] = field(default_factory=dict)
    plus_bound: int | None = None
    _lp: object = field(default=None, compare=False, repr=False)

    def x(self, u: int, v: int) -> Fraction:
        if self.kind == SYM and u > v:
            u, v = v, u
        return self.values.get((u, v), Fraction(0))

    @property
    def support(self) -> list[Edge]:
        return sorted(e for e, val in self.values.items() if val > 0)

    def one_edges(self) -> set[Edge]:
        return {e for e, val in self.values.items() if val == 1}

    def neighbors(self) -> list[list[int]]:
        """Support neighbours of each vertex, ignoring orientation."""
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.support:
            adj[u].add(v)
            adj[v].add(u)
        return [sorted(a) for a in adj]

    def out_neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.support:
            adj[u].append(v)
            if self.kind == SYM:
                adj[v].append(u)
        return [sorted(a) for a in adj]


# --------------------------------------------------------------------------
# separation


def _scaled(values: Mapping[Edge, Fraction]) -> tuple[dict[Edge, int], int]:
    den = reduce(math.lcm, (Fraction(v).denominator for v in values.values()), 1)
    return {e: int(Fraction(v) * den) for e, v in values.items() if v}, den


def check_degrees(kind: str, values: Mapping[Edge, Fraction], n: int) -> None:
    if kind == SYM:
        deg = [Fraction(0)] * n
        for (u, v), val in values.items():
            deg[u] += val
            deg[v] += val
        bad = [v for v in range(n) if deg[v] != 2]
    else:
        dout = [Fraction(0)] * n
        din = [Fraction(0)] * n
        for (u, v), val in values.items():
            dout[u] += val
            din[v] += val
        bad = [v for v in range(n) if dout[v] != 1 or din[v] != 1]
    if bad:
        raise ValueError(f"degree equalities violated at vertices {bad}")


@lru_cache(maxsize=4)
def _membership(n: int) -> np.ndarray:
    masks = np.arange(1, 1 << (n - 1), dtype=np.int64)
    return np.stack([(masks >> k) & 1 for k in range(n - 1)]).astype(np.int8)


def sym_min_cut_exhaustive(n: int, weights: Mapping[Edge, int]) -> tuple[int, frozenset[int]]:
    """Minimum x(delta(S)) over all S not containing vertex 0, by enumeration."""
    bits = _membership(n)
    total = np.zeros(bits.shape[1], dtype=np.int64)
    zero = np.zeros(bits.shape[1], dtype=np.int8)
    for (u, v), w in weights.items():
        bu = bits[u - 1] if u else zero
        bv = bits[v - 1] if v else zero
        total += w * (bu ^ bv)
    k = int(np.argmin(total))
    mask = k + 1
    return int(total[k]), frozenset(v for v in range(1, n) if mask >> (v - 1) & 1)


def stoer_wagner(n: int, weights: Mapping[Edge, int]) -> tuple[int, frozenset[int]]:
    """Global minimum cut of an undirected graph with integer weights."""
    w = [[0] * n for _ in range(n)]
    for (u, v), c in weights.items():
        w[u][v] += c
        w[v][u] += c
    groups = {v: [v] for v in range(n)}
    active = list(range(n))
    best: tuple[int, frozenset[int]] | None = None
    while len(active) > 1:
        start = active[0]
        conn = {v: w[start][v] for v in active if v != start}
        prev, last, last_val = start, start, 0
        while conn:
            z = max(conn, key=lambda v: (conn[v], -v))
            last_val = conn.pop(z)
            prev, last = last, z
            for v in conn:
                conn[v] += w[z][v]
        side = frozenset(groups[last])
        if best is None or last_val < best[0]:
            best = (last_val, side)
        for v in active:
            w[prev][v] += w[last][v]
            w[v][prev] = w[prev][v]
        w[prev][prev] = 0
        groups[prev] += groups.pop(last)
        active.remove(last)
    assert best is not None
    return best


def _max_flow(n: int, cap: list[dict[int, int]], s: int, t: int) -> tuple[int, set[int]]:
    """Edmonds-Karp; returns the flow value and the source side of a min cut."""
    res = [dict(c) for c in cap]
    for u in range(n):
        for v in list(cap[u]):
            res[v].setdefault(u, 0)
    flow = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v, c in res[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return flow, set(parent)
        path, v = [], t
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        aug = min(res[u][v] for u, v in path)
        for u, v in path:
            res[u][v] -= aug
            res[v][u] += aug
        flow += aug


def asym_min_cut(n: int, weights: Mapping[Edge, int], root: int = 0) -> tuple[int, frozenset[int]]:
    """Minimum of x(delta^-(S)) over proper nonempty S via 2(n-1) max-flows."""
    cap: list[dict[int, int]] = [dict() for _ in range(n)]
    for (u, v), c in weights.items():
        cap[u][v] = cap[u].get(v, 0) + c
    best: tuple[int, frozenset[int]] | None = None
    everything = frozenset(range(n))
    for t in range(n):
        if t == root:
            continue
        val, src = _max_flow(n, cap, root, t)
        if best is None or val < best[0]:
            best = (val, everything - src)
        val, src = _max_flow(n, cap, t, root)
        if best is None or val < best[0]:
            best = (val, everything - frozenset(src))
    assert best is not None
    return best


def cut_value(kind: str, values: Mapping[Edge, Fraction], S) -> Fraction:
    """x(delta(S)) for symmetric, x(delta^-(S)) for asymmetric solutions."""
    S = set(S)
    if kind == SYM:
        return sum((val for (u, v), val in values.items() if (u in S) != (v in S)), Fraction(0))
    return sum((val for (u, v), val in values.items() if u not in S and v in S), Fraction(0))


def separate(kind: str, values: Mapping[Edge, Fraction], n: int) -> frozenset[int] | None:
    """A vertex set whose subtour constraint is violated, or None."""
    check_degrees(kind, values, n)
    weights, den = _scaled(values)
    if kind == SYM:
        if n <= EXHAUSTIVE_LIMIT:
            val, S = sym_min_cut_exhaustive(n, weights)
        else:
            val, S = stoer_wagner(n, weights)
        return S if val < 2 * den else None
    val, S = asym_min_cut(n, weights)
    return S if val < den else None


# --------------------------------------------------------------------------
# the relaxation


class _SER:
    """Working LP: degree rows, accumulated cuts, optional cost bound."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.pairs = inst.all_pairs()
        self.index = {e: j for j, e in enumerate(self.pairs)}
        self.lp = ExactLP([inst.cost(u, v) for u, v in self.pairs])
        self.cuts: list[frozenset[int]] = []
        n = inst.n
        if inst.symmetric:
            for v in range(n):
                self.lp.add_row({j: 1 for j, (a, b) in enumerate(self.pairs) if v in (a, b)}, "=", 2)
        else:
            for v in range(n):
                self.lp.add_row({j: 1 for j, (a, b) in enumerate(self.pairs) if a == v}, "=", 1)
                self.lp.add_row({j: 1 for j, (a, b) in enumerate(self.pairs) if b == v}, "=", 1)

    def copy(self) -> "_SER":
        other = object.__new__(_SER)
        other.inst, other.pairs, other.index = self.inst, self.pairs, self.index
        other.lp = self.lp.copy()
        other.cuts = list(self.cuts)
        return other

    def add_cut(self, S: frozenset[int]) -> None:
        if self.inst.symmetric:
            row = {j: 1 for j, (a, b) in enumerate(self.pairs) if (a in S) != (b in S)}
            self.lp.add_row(row, ">=", 2)
        else:
            row = {j: 1 for j, (a, b) in enumerate(self.pairs) if a not in S and b in S}
            self.lp.add_row(row, ">=", 1)
        self.cuts.append(S)

    def add_cost_bound(self, bound: int) -> None:
        self.lp.add_row({j: self.inst.cost(*e) for j, e in enumerate(self.pairs)}, ">=", bound)

    def values(self) -> dict[Edge, Fraction]:
        return {self.pairs[j]: v for j, v in self.lp.values().items()}

    def run(self, max_rounds: int | None = None) -> None:
        status = self.lp.reoptimize()
        if status != OPTIMAL:
            raise SolverError(f"relaxation reported {status}")
        max_rounds = max_rounds or 50 * self.inst.n ** 2
        for _ in range(max_rounds):
            S = separate(self.inst.kind, self.values(), self.inst.n)
            if S is None:
                return
            self.add_cut(S)
            status = self.lp.reoptimize()
            if status != OPTIMAL:
                raise SolverError(f"relaxation reported {status} after a cut")
        raise SolverError("cut round cap exceeded")


def _solution(inst: Instance, ser: _SER, plus_bound: int | None = None) -> LPSolution:
    values = ser.values()
    objective = ser.lp.objective
    assert objective == sum(inst.cost(*e) * v for e, v in values.items())
    sol = LPSolution(inst.kind, inst.n, values, objective, tuple(ser.cuts), True,
                     {}, plus_bound, ser)
    sol.flags.update(classify(sol, inst))
    return sol


def solve_ser(inst: Instance) -> LPSolution:
    """Optimal vertex of SER(inst), with every subtour constraint satisfied."""
    ser = _SER(inst)
    ser.run()
    return _solution(inst, ser)


def solve_ser_plus(inst: Instance, base: LPSolution | None = None) -> LPSolution:
    """Optimum of SER with the extra row cost.x >= ceil(Opt_SER)."""
    if base is None:
        base = solve_ser(inst)
    bound = math.ceil(base.objective)
    if isinstance(base._lp, _SER):
        ser = base._lp.copy()
    else:
        ser = _SER(inst)
        for S in base.cuts:
            ser.add_cut(S)
    ser.add_cost_bound(bound)
    ser.run()
    return _solution(inst, ser, bound)


def solution_from_values(inst: Instance, values: Mapping[Edge, object],
                         cuts=(), is_vertex: bool = False) -> LPSolution:
    """Wrap a given vector (e.g. read from a file) without solving anything."""
    vals = {inst.key(*e): Fraction(v) for e, v in values.items() if Fraction(v) != 0}
    obj = sum((inst.cost(*e) * v for e, v in vals.items()), Fraction(0))
    sol = LPSolution(inst.kind, inst.n, vals, obj, tuple(frozenset(c) for c in cuts), is_vertex)
    sol.flags.update(classify(sol, inst))
    return sol


def is_feasible(inst: Instance, x: LPSolution) -> bool:
    """Degree equalities, bounds and every subtour constraint, exactly."""
    try:
        check_degrees(inst.kind, x.values, inst.n)
    except ValueError:
        return False
    if any(v < 0 or v > 1 for v in x.values.values()):
        return False
    return separate(inst.kind, x.values, inst.n) is None


def classify(x: LPSolution, inst: Instance) -> dict[str, bool]:
    vals = [v for v in x.values.values() if v]
    deg = [0] * inst.n
    for u, v in x.support:
        deg[u] += 1
        deg[v] += 1
    if inst.kind == ASYM:
        # degree in the underlying undirected support graph
        nb = x.neighbors()
        deg = [len(a) for a in nb]
    return {
        "half_integral": all(v in (HALF, 1) for v in vals),
        "subcubic_support": max(deg, default=0) <= 3,
        "unit_support_cost": x.objective == inst.n,
    }


def normalize_unit_cost(inst: Instance, x: LPSolution) -> tuple[Instance, LPSolution]:
    """Move the LP mass on cost-2 pairs onto k new vertices of unit cost.

    Each new vertex gets cost-1 pairs to every vertex touching a cost-2
    support pair.  Mass x_e on a cost-2 pair e = {u, w} is re-routed as
    u - a - w through new vertices a, filling each new vertex to degree 2.
    """
    heavy = sorted(e for e in x.support if inst.cost(*e) == 2)
    k_frac = sum((x.values[e] for e in heavy), Fraction(0))
    if k_frac.denominator != 1:
        raise ValueError(f"cost-2 mass {k_frac} is not integral; x is not SER+ optimal")
    k = int(k_frac)
    if k == 0:
        return inst, x
    n = inst.n
    touched = sorted({v for e in heavy for v in e})
    aux = list(range(n, n + k))
    unit = set(inst.unit_edges)
    for a in aux:
        for v in touched:
            unit.add((v, a))
            if inst.kind == ASYM:
                unit.add((a, v))
    new = Instance(inst.kind, n + k, frozenset(unit))

    values = dict(x.values)
    slot, room = 0, Fraction(1)
    for e in heavy:
        mass = x.values[e]
        u, w = e
        while mass > 0:
            take = min(mass, room)
            a = aux[slot]
            values[e] -= take
            # u -> a -> w keeps the orientation of an arc
            for pair in ((u, a), (a, w)):
                key = new.key(*pair)
                values[key] = values.get(key, Fraction(0)) + take
            mass -= take
            room -= take
            if room == 0:
                slot, room = slot + 1, Fraction(1)
    values = {e: v for e, v in values.items() if v}
    sol = solution_from_values(new, values, is_vertex=False)
    assert sol.objective == new.n
    return new, sol


def _rank(rows: list[dict[int, Fraction]]) -> int:
    """Rank of sparse rational rows by exact Gaussian elimination."""
    pivots: dict[int, dict[int, Fraction]] = {}
    rank = 0
    for row in rows:
        row = dict(row)
        while row:
            col = min(row)
            if col not in pivots:
                pivots[col] = {k: v / row[col] for k, v in row.items()}
                rank += 1
                break
            f = row[col]
            for k, v in pivots[col].items():
                nv = row.get(k, Fraction(0)) - f * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return rank


def vertex_check(inst: Instance, x: LPSolution, cuts=None, with_bounds: bool = True) -> bool:
    """Whether x is a vertex of the polytope cut out by the degree rows,
    the given subtour cuts and (optionally) the bounds x_e <= 1.

    x is a vertex iff the tight constraints restricted to the support
    columns have full column rank.
    """
    cuts = x.cuts if cuts is None else cuts
    support = x.support
    col = {e: j for j, e in enumerate(support)}
    rows: list[dict[int, Fraction]] = []
    n = inst.n
    if inst.symmetric:
        for v in range(n):
            rows.append({col[e]: Fraction(1) for e in support if v in e})
    else:
        for v in range(n):
            rows.append({col[e]: Fraction(1) for e in support if e[0] == v})
            rows.append({col[e]: Fraction(1) for e in support if e[1] == v})
    rhs = 2 if inst.symmetric else 1
    for S in cuts:
        S = set(S)
        if cut_value(inst.kind, x.values, S) != rhs:
            continue
        if inst.symmetric:
            rows.append({col[e]: Fraction(1) for e in support if (e[0] in S) != (e[1] in S)})
        else:
            rows.append({col[e]: Fraction(1) for e in support if e[0] not in S and e[1] in S})
    if with_bounds:
        rows += [{col[e]: Fraction(1)} for e in support if x.values[e] == 1]
    return _rank([r for r in rows if r]) == len(support)
