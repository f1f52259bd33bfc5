"""Oracles and certificates: exact optima, path covers, LP(x) and reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .instance import Instance, format_fraction, tour_cost
from .lp_core import LPSolution, solve_ser, solve_ser_plus
from .matching import (ImproveOptions, InvariantError, RunStats, TwoMatching, _View,
                       hamiltonian_path, run_algorithm1, run_directed)
from .simplex import OPTIMAL, ExactLP
from .tour import complete_to_tour

OPT_LIMIT = 20
COVER_LIMIT = 16
_INF = 1 << 20


class ResourceLimitError(ValueError):
    """An exact oracle was asked for an instance above its size guard."""


def _masks_by_popcount(bits: int) -> list[np.ndarray]:
    masks = np.arange(1 << bits, dtype=np.int64)
    pop = np.zeros(1 << bits, dtype=np.int64)
    for b in range(bits):
        pop += (masks >> b) & 1
    return [masks[pop == k] for k in range(bits + 1)]


def _subset_dp(cost: np.ndarray, init: np.ndarray) -> np.ndarray:
    """dp[mask, j]: cheapest walk visiting mask and ending at j.

    ``cost[i, j]`` is the price of stepping from i to j and ``init[j]`` the
    price of a walk consisting of j alone.
    """
    m = len(init)
    dp = np.full((1 << m, m), _INF, dtype=np.int32)
    for j in range(m):
        dp[1 << j, j] = init[j]
    layers = _masks_by_popcount(m)
    for k in range(2, m + 1):
        masks = layers[k]
        for j in range(m):
            sel = masks[(masks >> j) & 1 == 1]
            prev = dp[sel ^ (1 << j)]
            dp[sel, j] = (prev + cost[:, j]).min(axis=1)
    return dp


def exact_opt(inst: Instance) -> int:
    """Minimum tour cost by subset dynamic programming (start fixed at 0)."""
    n = inst.n
    if n > OPT_LIMIT:
        raise ResourceLimitError(f"exact_opt supports n <= {OPT_LIMIT}, got {n}")
    C = np.array(inst.cost_matrix(), dtype=np.int32)
    dp = _subset_dp(C[1:, 1:], C[0, 1:])
    return int((dp[-1] + C[1:, 0]).min())


def min_components(inst: Instance) -> int:
    """Fewest components of a spanning 2-matching of the unit-cost graph.

    For two or more components this is the minimum path cover; a single
    component is possible exactly when a unit Hamiltonian path exists.
    """
    n = inst.n
    if n > COVER_LIMIT:
        raise ResourceLimitError(f"min_components supports n <= {COVER_LIMIT}, got {n}")
    C = np.array(inst.cost_matrix(), dtype=np.int32)
    step = (C != 1).astype(np.int32)
    dp = _subset_dp(step, np.ones(n, dtype=np.int32))
    return int(dp[-1].min())


def has_unit_hamiltonian_cycle(inst: Instance) -> bool:
    return exact_opt(inst) == inst.n


# --------------------------------------------------------------------------
# certificates


def assignment_feasible(x: LPSolution, M, alpha) -> tuple[bool, dict | None]:
    """Feasibility of LP(x): y[C, e] >= 0, sum_e y >= alpha, sum_C y <= x_e."""
    alpha = Fraction(alpha)
    comps = M.components()
    support = x.support
    cols = [(ci, e) for ci in range(len(comps)) for e in support]
    lp = ExactLP([0] * len(cols))
    for ci in range(len(comps)):
        lp.add_row({j: 1 for j, (c, _) in enumerate(cols) if c == ci}, ">=", alpha)
    for e in support:
        lp.add_row({j: 1 for j, (_, f) in enumerate(cols) if f == e}, "<=", x.values[e])
    if lp.solve() != OPTIMAL:
        return False, None
    y = {(comps[cols[j][0]].vertices, cols[j][1]): v for j, v in lp.values().items()}
    total = sum(x.values.values(), Fraction(0))
    if alpha > 0 and total == x.n:
        assert len(comps) <= math.floor(x.n / alpha), "feasible LP(x) with too many components"
    return True, y


def wolsey_value(x: LPSolution, S: Iterable[int]) -> Fraction:
    """x over edges leaving S plus edges inside S (directions ignored)."""
    S = set(S)
    return sum((val for (u, v), val in x.values.items() if u in S or v in S), Fraction(0))


def wolsey_check(x: LPSolution, S: Iterable[int]) -> bool:
    S = set(S)
    if not S or len(S) >= x.n:
        raise ValueError("S must be a nonempty proper vertex subset")
    return wolsey_value(x, S) >= len(S) + 1


def cycle_cut_check(M: TwoMatching, x: LPSolution, max_size: int = 6) -> list[str]:
    """Violations of the small-cycle cut property at a fixpoint.

    A cycle C with at most ``max_size`` vertices (and not spanning) must have
    at least 3 support edges leaving it, and some pair u != v of C must have
    exactly two of those leaving edges between them while admitting a
    spanning u-v path of C.
    """
    view = _View(M, x)
    out = []
    for comp in view.comps:
        if not comp.is_cycle or comp.size > max_size or comp.size == x.n:
            continue
        Vc = set(comp.vertices)
        leaving = [e for e in x.support if (e[0] in Vc) != (e[1] in Vc)]
        if len(leaving) < 3:
            out.append(f"cycle {comp.vertices} has {len(leaving)} leaving edges")
            continue
        ok = False
        for u in comp.vertices:
            for v in comp.vertices:
                if u >= v:
                    continue
                at = sum(1 for e in leaving if u in e or v in e)
                if at == 2 and hamiltonian_path(view, comp.vertices, u, v) is not None:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            out.append(f"cycle {comp.vertices} has no path-forming pair owning two leaving edges")
    return out


# --------------------------------------------------------------------------
# reports


BOUNDS = {
    "sym_unit": Fraction(5, 4),
    "sym_half_integral": Fraction(7, 6),
    "sym_subcubic": Fraction(10, 9),
    "asym_unit": Fraction(3, 2),
    "asym_half_integral": Fraction(4, 3),
}


@dataclass
class GapReport:
    n: int
    kind: str
    opt_ser: Fraction
    opt_ser_plus: Fraction
    flags: dict[str, bool]
    opt: int | None = None
    min_components: int | None = None
    tour_cost: int | None = None
    components: int | None = None
    steps: int = 0
    verdicts: dict[str, bool] = field(default_factory=dict)
    alpha: Fraction | None = None
    assignment: bool | None = None

    @property
    def gap_ser(self) -> Fraction | None:
        return None if self.opt is None else Fraction(self.opt) / self.opt_ser

    @property
    def gap_ser_plus(self) -> Fraction | None:
        return None if self.opt is None else Fraction(self.opt) / self.opt_ser_plus

    @property
    def tour_ratio(self) -> Fraction | None:
        return None if self.tour_cost is None else Fraction(self.tour_cost) / self.opt_ser_plus

    def lines(self) -> list[str]:
        def fmt(v):
            if isinstance(v, bool):
                return str(v).lower()
            if isinstance(v, Fraction):
                return format_fraction(v)
            return str(v)

        rows = [("n", self.n), ("kind", self.kind), ("opt_ser", self.opt_ser),
                ("opt_ser_plus", self.opt_ser_plus)]
        if self.opt is not None:
            rows += [("opt", self.opt), ("gap_ser", self.gap_ser),
                     ("gap_ser_plus", self.gap_ser_plus)]
        if self.min_components is not None:
            rows.append(("min_components", self.min_components))
        rows += [(k, v) for k, v in sorted(self.flags.items())]
        if self.tour_cost is not None:
            rows += [("components", self.components), ("steps", self.steps),
                     ("tour_cost", self.tour_cost), ("tour_ratio", self.tour_ratio)]
        if self.alpha is not None:
            rows += [("alpha", self.alpha), ("assignment_feasible", self.assignment)]
        rows += [(f"bound_{k}", v) for k, v in sorted(self.verdicts.items())]
        return [f"{k} = {fmt(v)}" for k, v in rows]

    def __str__(self) -> str:
        return "\n".join(self.lines()) + "\n"


def applicable_bounds(kind: str, flags: dict[str, bool]) -> dict[str, Fraction]:
    if not flags.get("unit_support_cost"):
        return {}
    if kind == "sym":
        out = {"sym_unit": BOUNDS["sym_unit"]}
        if flags.get("half_integral"):
            out["sym_half_integral"] = BOUNDS["sym_half_integral"]
        if flags.get("subcubic_support"):
            out["sym_subcubic"] = BOUNDS["sym_subcubic"]
        return out
    out = {"asym_unit": BOUNDS["asym_unit"]}
    if flags.get("half_integral"):
        out["asym_half_integral"] = BOUNDS["asym_half_integral"]
    return out


def gap_report(inst: Instance, oracle: bool = True, alpha=None,
               options: ImproveOptions | None = None) -> GapReport:
    base = solve_ser(inst)
    x = solve_ser_plus(inst, base)
    rep = GapReport(inst.n, inst.kind, base.objective, x.objective, dict(x.flags))
    if oracle and inst.n <= OPT_LIMIT:
        rep.opt = exact_opt(inst)
        if inst.n <= COVER_LIMIT:
            rep.min_components = min_components(inst)
    stats = RunStats()
    if inst.symmetric:
        _, M = run_algorithm1(inst, options, stats, x=x)
    else:
        _, M = run_directed(inst, stats, x=x)
    tour = complete_to_tour(M, inst, x)
    rep.tour_cost = tour_cost(inst, tour)
    rep.components = len(M.components())
    rep.steps = stats.steps
    if stats.rejections:
        raise InvariantError(f"rejected witnesses: {stats.rejections[:3]}")
    for name, bound in applicable_bounds(inst.kind, x.flags).items():
        rep.verdicts[name] = rep.tour_cost <= math.ceil(bound * inst.n)
    if alpha is not None:
        rep.alpha = Fraction(alpha)
        rep.assignment, _ = assignment_feasible(x, M, rep.alpha)
    return rep
