"""Sparse tableau simplex over exact rationals.

Primal simplex (two phases, Bland's rule) for the first solve and a dual
simplex with the analogous smallest-index rule for re-optimising after
rows are appended.  Rows are stored as ``{column: Fraction}`` dicts.
"""

from __future__ import annotations

import copy
from fractions import Fraction
from typing import Mapping

ZERO = Fraction(0)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SolverError(RuntimeError):
    """The simplex exceeded its iteration cap (a defect, never expected)."""


class ExactLP:
    """minimize c.x subject to rows, x >= 0, all in exact arithmetic."""

    def __init__(self, costs: list, max_iter: int = 1_000_000):
        self.nstruct = len(costs)
        self.cost: dict[int, Fraction] = {j: Fraction(c) for j, c in enumerate(costs) if c}
        self.ncols = self.nstruct
        self.rows: list[dict[int, Fraction]] = []
        self.rhs: list[Fraction] = []
        self.basis: list[int] = []
        self.pending: list[tuple[dict[int, Fraction], str, Fraction]] = []
        self.d: dict[int, Fraction] = {}
        self.obj_rhs = ZERO
        self.artificial: set[int] = set()
        self.solved = False
        self.status: str | None = None
        self.max_iter = max_iter
        self.pivots = 0

    def copy(self) -> "ExactLP":
        return copy.deepcopy(self)

    # ------------------------------------------------------------------ model

    def add_row(self, coeffs: Mapping[int, object], sense: str, rhs) -> None:
        row = {j: Fraction(a) for j, a in coeffs.items() if a}
        if sense not in ("=", ">=", "<="):
            raise ValueError(f"bad sense {sense!r}")
        if not self.solved:
            self.pending.append((row, sense, Fraction(rhs)))
            return
        self._append_row(row, sense, Fraction(rhs))

    # ------------------------------------------------------------ primitives

    def _new_col(self) -> int:
        j = self.ncols
        self.ncols += 1
        return j

    def _pivot(self, r: int, j: int) -> None:
        self.pivots += 1
        if self.pivots > self.max_iter:
            raise SolverError("simplex iteration cap exceeded")
        prow = self.rows[r]
        p = prow[j]
        if p != 1:
            inv = 1 / p
            for k in prow:
                prow[k] *= inv
            self.rhs[r] *= inv
        prow[j] = Fraction(1)
        brow = self.rhs[r]
        items = list(prow.items())
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row.get(j)
            if f is None:
                continue
            for k, a in items:
                v = row.get(k, ZERO) - f * a
                if v:
                    row[k] = v
                else:
                    row.pop(k, None)
            self.rhs[i] -= f * brow
        f = self.d.get(j)
        if f is not None:
            d = self.d
            for k, a in items:
                v = d.get(k, ZERO) - f * a
                if v:
                    d[k] = v
                else:
                    d.pop(k, None)
            self.obj_rhs -= f * brow
        self.basis[r] = j

    def _primal(self, allowed) -> str:
        while True:
            entering = None
            for j in sorted(self.d):
                if self.d[j] < 0 and allowed(j):
                    entering = j
                    break
            if entering is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self._pivot(best[1], entering)

    def _dual(self) -> str:
        while True:
            leaving = None
            for i, b in enumerate(self.rhs):
                if b < 0 and (leaving is None or self.basis[i] < self.basis[leaving]):
                    leaving = i
            if leaving is None:
                return OPTIMAL
            row = self.rows[leaving]
            best = None
            for j, a in row.items():
                if a < 0 and j not in self.artificial:
                    key = (self.d.get(j, ZERO) / -a, j)
                    if best is None or key < best:
                        best = key
            if best is None:
                return INFEASIBLE
            self._pivot(leaving, best[1])

    # ---------------------------------------------------------------- solving

    def solve(self) -> str:
        """Two-phase primal simplex over all rows added so far."""
        if self.solved:
            raise RuntimeError("already solved; use reoptimize()")
        for row, sense, rhs in self.pending:
            if rhs < 0:
                row = {j: -a for j, a in row.items()}
                rhs = -rhs
                sense = {"=": "=", ">=": "<=", "<=": ">="}[sense]
            if sense == ">=":
                row[self._new_col()] = Fraction(-1)
            elif sense == "<=":
                s = self._new_col()
                row[s] = Fraction(1)
                self.rows.append(row)
                self.rhs.append(rhs)
                self.basis.append(s)
                continue
            a = self._new_col()
            self.artificial.add(a)
            row[a] = Fraction(1)
            self.rows.append(row)
            self.rhs.append(rhs)
            self.basis.append(a)
        self.pending = []
        self.solved = True

        # phase one: minimise the sum of artificials
        self.d, self.obj_rhs = {}, ZERO
        for i, row in enumerate(self.rows):
            if self.basis[i] in self.artificial:
                for j, a in row.items():
                    if j not in self.artificial:
                        self.d[j] = self.d.get(j, ZERO) - a
                self.obj_rhs -= self.rhs[i]
        self.d = {j: v for j, v in self.d.items() if v}
        self._primal(lambda j: True)
        if self.obj_rhs != 0:
            self.status = INFEASIBLE
            return self.status
        self._drop_artificials()

        # phase two
        self.d = dict(self.cost)
        self.obj_rhs = ZERO
        for i, j in enumerate(self.basis):
            cj = self.cost.get(j)
            if cj:
                for k, a in self.rows[i].items():
                    v = self.d.get(k, ZERO) - cj * a
                    if v:
                        self.d[k] = v
                    else:
                        self.d.pop(k, None)
                self.obj_rhs -= cj * self.rhs[i]
        self.status = self._primal(lambda j: True)
        return self.status

    def _drop_artificials(self) -> None:
        i = 0
        while i < len(self.rows):
            if self.basis[i] in self.artificial:
                cand = [j for j in self.rows[i] if j not in self.artificial]
                if cand:
                    self._pivot(i, min(cand))
                else:
                    del self.rows[i], self.rhs[i], self.basis[i]
                    continue
            i += 1
        for row in self.rows:
            for a in self.artificial:
                row.pop(a, None)
        for a in self.artificial:
            self.d.pop(a, None)

    def _append_row(self, row: dict[int, Fraction], sense: str, rhs: Fraction) -> None:
        if sense == "=":
            raise ValueError("only inequality rows can be appended after solving")
        if sense == "<=":
            row = {j: -a for j, a in row.items()}
            rhs = -rhs
        # now: row.x >= rhs, i.e. row.x - s = rhs with s >= 0
        row = dict(row)
        for i, j in enumerate(self.basis):
            f = row.get(j)
            if f:
                for k, a in self.rows[i].items():
                    v = row.get(k, ZERO) - f * a
                    if v:
                        row[k] = v
                    else:
                        row.pop(k, None)
                rhs -= f * self.rhs[i]
        s = self._new_col()
        new = {k: -a for k, a in row.items()}
        new[s] = Fraction(1)
        self.rows.append(new)
        self.rhs.append(-rhs)
        self.basis.append(s)

    def reoptimize(self) -> str:
        """Dual simplex after appending rows to an optimal tableau."""
        if not self.solved:
            return self.solve()
        self.status = self._dual()
        return self.status

    # ---------------------------------------------------------------- results

    def values(self) -> dict[int, Fraction]:
        out = {}
        for i, j in enumerate(self.basis):
            if j < self.nstruct and self.rhs[i]:
                out[j] = self.rhs[i]
        return out

    @property
    def objective(self) -> Fraction:
        return -self.obj_rhs
