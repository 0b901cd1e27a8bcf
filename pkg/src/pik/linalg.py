"""Exact rational linear algebra: rank, products and a simplex LP solver.

Everything here works on nested lists (or tuples) of :class:`Fraction`.
The simplex method uses Bland's rule, so with exact arithmetic it always
terminates and its answers are decisions, not approximations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

__all__ = [
    "LpProblem",
    "LpResult",
    "LpStatus",
    "in_convex_hull",
    "matmul",
    "rank",
    "solve_lp",
]

Matrix = Sequence[Sequence[Fraction]]


def matmul(A: Matrix, B: Matrix) -> list[list[Fraction]]:
    if not A or not B:
        raise ValueError("empty matrix")
    if len(A[0]) != len(B):
        raise ValueError(f"shape mismatch: {len(A)}x{len(A[0])} @ {len(B)}x{len(B[0])}")
    cols = list(zip(*B))
    out = []
    for row in A:
        nz = [(k, a) for k, a in enumerate(row) if a]
        out.append([sum((a * col[k] for k, a in nz), Fraction(0)) for col in cols])
    return out


def rank(M: Matrix) -> int:
    """Exact rank by fraction-free (Bareiss) elimination.

    Rows are first scaled to integers, so the elimination runs on Python
    ints only.
    """
    rows = []
    for row in M:
        row = [Fraction(x) for x in row]
        scale = lcm(*(x.denominator for x in row)) if row else 1
        rows.append([int(x * scale) for x in row])
    if not rows or not rows[0]:
        return 0
    m, n = len(rows), len(rows[0])
    r = 0
    prev = 1
    for c in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        for i in range(r + 1, m):
            a = rows[i][c]
            rows[i] = [(p * rows[i][j] - a * rows[r][j]) // prev for j in range(n)]
        prev = p
        r += 1
    return r


class LpStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """Linear program over ``variables`` unknowns.

    ``inequalities`` hold ``(row, rhs, sense)`` with sense ``"<="`` or
    ``">="``.  Variables are free unless ``nonnegative`` is set.  The
    objective, when given, is minimized.
    """

    variables: int
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)
    objective: Optional[Sequence] = None
    nonnegative: bool = False

    def __post_init__(self):
        for row, *_ in list(self.equalities) + list(self.inequalities):
            if len(row) != self.variables:
                raise ValueError("constraint row length does not match variable count")
        for _, _, sense in self.inequalities:
            if sense not in ("<=", ">="):
                raise ValueError(f"unknown sense {sense!r}")
        if self.objective is not None and len(self.objective) != self.variables:
            raise ValueError("objective length does not match variable count")

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        if self.nonnegative and any(v < 0 for v in x):
            return False
        for row, rhs in self.equalities:
            if _dot(row, x) != rhs:
                return False
        for row, rhs, sense in self.inequalities:
            lhs = _dot(row, x)
            if (sense == "<=" and lhs > rhs) or (sense == ">=" and lhs < rhs):
                return False
        return True


@dataclass
class LpResult:
    status: LpStatus
    assignment: Optional[list[Fraction]] = None
    objective: Optional[Fraction] = None

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.FEASIBLE


def _dot(row, x) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(row, x) if a), Fraction(0))


def _pivot(T, r, c):
    pr = T[r]
    p = pr[c]
    if p != 1:
        T[r] = pr = [v / p for v in pr]
    nz = [(j, v) for j, v in enumerate(pr) if v]
    for i, row in enumerate(T):
        if i == r:
            continue
        a = row[c]
        if a:
            for j, v in nz:
                row[j] -= a * v


def _run_simplex(T, basis, allowed) -> bool:
    """Minimize the last tableau row (reduced costs) in place.

    Returns False if unbounded.  Bland's rule on both choices.
    """
    obj = T[-1]
    m = len(T) - 1
    while True:
        enter = next((j for j in allowed if obj[j] < 0), None)
        if enter is None:
            return True
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        _pivot(T, best[1], enter)
        basis[best[1]] = enter


def solve_lp(p: LpProblem) -> LpResult:
    """Two-phase exact simplex.

    Returns a vertex assignment; when no objective is given, any feasible
    vertex is returned.
    """
    nv = p.variables
    # free variables are split as x = x+ - x-
    split = not p.nonnegative
    ns = 2 * nv if split else nv

    def expand(row):
        row = [Fraction(a) for a in row]
        return row + [-a for a in row] if split else row

    rows, rhs = [], []
    n_slack = len(p.inequalities)
    for row, b in p.equalities:
        rows.append(expand(row) + [Fraction(0)] * n_slack)
        rhs.append(Fraction(b))
    for k, (row, b, sense) in enumerate(p.inequalities):
        slack = [Fraction(0)] * n_slack
        slack[k] = Fraction(1) if sense == "<=" else Fraction(-1)
        rows.append(expand(row) + slack)
        rhs.append(Fraction(b))
    m = len(rows)
    nx = ns + n_slack
    if m == 0:
        x = [Fraction(0)] * nv
        if p.objective is not None and any(p.objective):
            return LpResult(LpStatus.UNBOUNDED)
        return LpResult(LpStatus.FEASIBLE, x, Fraction(0))

    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-a for a in rows[i]]
            rhs[i] = -rhs[i]
    total = nx + m
    T = []
    for i in range(m):
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        T.append(rows[i] + art + [rhs[i]])
    basis = list(range(nx, total))
    # phase 1 objective: sum of artificials, expressed in reduced form
    obj = [Fraction(0)] * (total + 1)
    for i in range(m):
        for j in range(nx):
            obj[j] -= T[i][j]
        obj[-1] -= T[i][-1]
    T.append(obj)
    _run_simplex(T, basis, range(nx))
    if T[-1][-1] != 0:
        return LpResult(LpStatus.INFEASIBLE)

    # drive artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(T) - 1:
        if basis[i] >= nx:
            col = next((j for j in range(nx) if T[i][j] != 0), None)
            if col is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, i, col)
            basis[i] = col
        i += 1

    cost = [Fraction(0)] * total
    if p.objective is not None:
        c = expand(p.objective)
        cost[:ns] = c
    obj = [Fraction(0)] * (total + 1)
    for j in range(total):
        obj[j] = cost[j]
    for i, bj in enumerate(basis):
        cb = cost[bj]
        if cb:
            for j in range(total + 1):
                obj[j] -= cb * T[i][j]
    T[-1] = obj
    if not _run_simplex(T, basis, range(nx)):
        return LpResult(LpStatus.UNBOUNDED)

    values = [Fraction(0)] * total
    for i, bj in enumerate(basis):
        values[bj] = T[i][-1]
    x = [values[j] - values[j + nv] for j in range(nv)] if split else values[:nv]
    value = _dot(p.objective, x) if p.objective is not None else None
    return LpResult(LpStatus.FEASIBLE, x, value)


def hull_problem(point: Sequence[Fraction], generators: Matrix) -> LpProblem:
    """Feasibility LP for ``point`` as a convex combination of generator rows."""
    g = len(generators)
    if g == 0:
        raise ValueError("no generators")
    dim = len(generators[0])
    if len(point) != dim:
        raise ValueError(f"point has length {len(point)}, generators have {dim} columns")
    eqs = [([Fraction(generators[k][c]) for k in range(g)], Fraction(point[c])) for c in range(dim)]
    eqs.append(([Fraction(1)] * g, Fraction(1)))
    return LpProblem(g, equalities=eqs, nonnegative=True)


def in_convex_hull(point: Sequence[Fraction], generators: Matrix) -> Optional[list[Fraction]]:
    """Convex weights reproducing ``point`` from the rows of ``generators``, or None."""
    res = solve_lp(hull_problem(point, generators))
    return res.assignment if res.feasible else None
