"""Exact rational linear programming (dense tableau simplex).

Everything runs over `fractions.Fraction` with Bland's anti-cycling rule,
so feasibility answers, optima, and infeasibility certificates are exact.
Instances here are tiny (a handful of outcomes and events), which a dense
tableau handles comfortably.

`solve_feasibility` decides ``A x = b, x >= 0`` and, on infeasibility,
returns a Farkas vector ``y`` with ``y^T A <= 0`` componentwise and
``y^T b > 0`` (the dual multipliers of the phase-1 optimum).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

__all__ = ["LPResult", "solve_feasibility", "solve_lp"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass
class LPResult:
    status: str  # "feasible" | "infeasible" | "optimal" | "unbounded"
    x: Optional[list[Fraction]] = None
    value: Optional[Fraction] = None
    farkas: Optional[list[Fraction]] = None


class _Tableau:
    """Standard-form tableau: rows are equality constraints with rhs >= 0."""

    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], ncols: int):
        self.rows = rows
        self.rhs = rhs
        self.ncols = ncols
        self.basis: list[int] = []
        self.obj = [_ZERO] * ncols
        self.obj_rhs = _ZERO

    def pivot(self, r: int, c: int) -> None:
        rows, rhs, obj = self.rows, self.rhs, self.obj
        piv = rows[r][c]
        inv = _ONE / piv
        rows[r] = [v * inv for v in rows[r]]
        rhs[r] *= inv
        prow = rows[r]
        prhs = rhs[r]
        for i in range(len(rows)):
            if i == r:
                continue
            f = rows[i][c]
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
                rhs[i] -= f * prhs
        f = obj[c]
        if f:
            self.obj = [a - f * b for a, b in zip(obj, prow)]
            self.obj_rhs -= f * prhs
        self.basis[r] = c

    def minimize(self) -> None:
        """Bland's rule: entering = lowest column with negative reduced cost."""
        while True:
            obj = self.obj
            enter = -1
            for j in range(self.ncols):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return
            leave = -1
            best: Optional[Fraction] = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (
                        ratio == best and self.basis[i] < self.basis[leave]
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                raise _UnboundedError(enter)
            self.pivot(leave, enter)


class _UnboundedError(Exception):
    def __init__(self, column: int):
        self.column = column


def _phase_one(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Returns (tableau, signs, n) after minimizing artificial mass."""
    m = len(a)
    n = len(a[0]) if m else 0
    signs = [1] * m
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for i in range(m):
        row = [Fraction(v) for v in a[i]]
        r = Fraction(b[i])
        if r < 0:
            row = [-v for v in row]
            r = -r
            signs[i] = -1
        rows.append(row + [_ZERO] * m)
        rhs.append(r)
    for i in range(m):
        rows[i][n + i] = _ONE
    t = _Tableau(rows, rhs, n + m)
    t.basis = [n + i for i in range(m)]
    # phase-1 objective: sum of artificials, expressed over the basis
    obj = [_ZERO] * (n + m)
    obj_rhs = _ZERO
    for i in range(m):
        obj = [a_ - b_ for a_, b_ in zip(obj, rows[i])]
        obj_rhs -= rhs[i]
    for i in range(m):
        obj[n + i] += _ONE
    t.obj = obj
    t.obj_rhs = obj_rhs
    t.minimize()
    return t, signs, n, m


def solve_feasibility(
    a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> LPResult:
    """Decide ``A x = b, x >= 0`` exactly.

    Infeasibility comes with a Farkas certificate ``y``: ``y^T A <= 0``
    componentwise and ``y^T b > 0``.
    """
    m = len(a)
    if m == 0:
        return LPResult("feasible", x=[])
    t, signs, n, _ = _phase_one(a, b)
    value = -t.obj_rhs  # minimized artificial mass
    if value > 0:
        # duals: reduced cost of artificial j is 1 - y'_j
        y = [ (_ONE - t.obj[n + i]) * signs[i] for i in range(m)]
        # sanity: certificate must refute feasibility exactly
        for j in range(n):
            s = sum((y[i] * Fraction(a[i][j]) for i in range(m)), _ZERO)
            assert s <= 0, "Farkas certificate failed column check"
        assert sum((y[i] * Fraction(b[i]) for i in range(m)), _ZERO) > 0
        return LPResult("infeasible", farkas=y)
    x = [_ZERO] * n
    for i, bcol in enumerate(t.basis):
        if bcol < n:
            x[bcol] = t.rhs[i]
    return LPResult("feasible", x=x)


def solve_lp(
    a: Sequence[Sequence[Fraction]],
    b: Sequence[Fraction],
    c: Sequence[Fraction],
    maximize: bool = False,
) -> LPResult:
    """Optimize ``c^T x`` over ``A x = b, x >= 0`` exactly (two-phase)."""
    m = len(a)
    n = len(a[0]) if m else len(c)
    t, signs, n, m = _phase_one(a, b)
    if -t.obj_rhs > 0:
        y = [(_ONE - t.obj[n + i]) * signs[i] for i in range(m)]
        return LPResult("infeasible", farkas=y)
    # drive any basic artificial to a structural column where possible
    for i, bcol in enumerate(t.basis):
        if bcol >= n:
            for j in range(n):
                if t.rows[i][j] != 0:
                    t.pivot(i, j)
                    break
    # drop rows still pinned to artificials (redundant constraints)
    keep = [i for i, bcol in enumerate(t.basis) if bcol < n]
    t.rows = [t.rows[i][:n] for i in keep]
    t.rhs = [t.rhs[i] for i in keep]
    t.basis = [t.basis[i] for i in keep]
    t.ncols = n
    sign = -1 if maximize else 1
    cost = [sign * Fraction(v) for v in c]
    obj = list(cost)
    obj_rhs = _ZERO
    for i, bcol in enumerate(t.basis):
        f = obj[bcol]
        if f:
            obj = [a_ - f * b_ for a_, b_ in zip(obj, t.rows[i])]
            obj_rhs -= f * t.rhs[i]
    t.obj = obj
    t.obj_rhs = obj_rhs
    try:
        t.minimize()
    except _UnboundedError:
        return LPResult("unbounded")
    x = [_ZERO] * n
    for i, bcol in enumerate(t.basis):
        x[bcol] = t.rhs[i]
    value = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), _ZERO)
    return LPResult("optimal", x=x, value=value)
