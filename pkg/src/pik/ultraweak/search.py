"""Numerical search for ``M = L N R`` and the branch-and-bound refutation.

The alternating LP runs in floating point and only proposes candidates;
:func:`extract_exact` turns a candidate into an exact certificate or gives
up.  The branch-and-bound lower bounds are made rigorous by re-evaluating
the LP dual in exact rational arithmetic, so a refutation never rests on
floating-point round-off.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ..commat import CommMatrix
from ..linalg import LpProblem, in_convex_hull, matmul, solve_lp
from .certificates import Certificate, check_certificate

log = logging.getLogger(__name__)

ZERO, ONE = Fraction(0), Fraction(1)

# denominators tried when snapping a float certificate to rationals
SNAP_DENOMINATORS = (1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 24, 30, 60, 120, 360, 720, 5040, 10**4, 10**6)


# -- floating-point alternating LP -----------------------------------------

def _lp_stochastic_fit(A: np.ndarray, M: np.ndarray, side: str):
    """min ||X A - M||_inf (side='left') or ||A X - M||_inf (side='right')
    over row-stochastic X.  Returns (X, residual)."""
    a, b = M.shape
    if side == "left":
        inner = A.shape[0]
        shape = (a, inner)
    else:
        inner = A.shape[1]
        shape = (inner, b)
    nx = shape[0] * shape[1]
    nvar = nx + 1
    A_ub = np.zeros((2 * a * b, nvar))
    b_ub = np.zeros(2 * a * b)
    r = 0
    for i in range(a):
        for j in range(b):
            coef = np.zeros(nvar)
            if side == "left":
                coef[i * inner:(i + 1) * inner] = A[:, j]
            else:
                for k in range(inner):
                    coef[k * b + j] = A[i, k]
            A_ub[r, :] = coef
            A_ub[r, -1] = -1
            b_ub[r] = M[i, j]
            A_ub[r + 1, :] = -coef
            A_ub[r + 1, -1] = -1
            b_ub[r + 1] = -M[i, j]
            r += 2
    A_eq = np.zeros((shape[0], nvar))
    for i in range(shape[0]):
        A_eq[i, i * shape[1]:(i + 1) * shape[1]] = 1
    c = np.zeros(nvar)
    c[-1] = 1
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(shape[0]),
                  bounds=[(0, None)] * nvar, method="highs")
    if res.status != 0:
        return None, np.inf
    X = np.clip(res.x[:nx].reshape(shape), 0, None)
    X /= X.sum(axis=1, keepdims=True)
    return X, float(res.x[-1])


def best_left_factor(N: np.ndarray, M: np.ndarray, R: np.ndarray):
    """Best row-stochastic L for fixed R, with its infinity-norm residual."""
    return _lp_stochastic_fit(N @ R, M, "left")


def best_right_factor(N: np.ndarray, M: np.ndarray, L: np.ndarray):
    return _lp_stochastic_fit(L @ N, M, "right")


def alternating_lp(N: np.ndarray, M: np.ndarray, seed: int, iters: int = 100, tol: float = 1e-11):
    """One seeded run of the alternating LP.  Returns (L, R, residual)."""
    rng = np.random.default_rng(seed)
    d, b = N.shape[1], M.shape[1]
    R = rng.dirichlet(np.ones(b), size=d)
    L, res = best_left_factor(N, M, R)
    if L is None:
        return None, R, np.inf
    stall = 0
    for _ in range(iters):
        if res < tol:
            break
        R_new, res_r = best_right_factor(N, M, L)
        if R_new is None:
            break
        L_new, res_l = best_left_factor(N, M, R_new)
        if L_new is None:
            break
        improved = res - res_l
        R, L = R_new, L_new
        res = min(res_l, res_r) if res_l <= res_r else res_l
        stall = stall + 1 if improved < 1e-12 else 0
        if stall >= 3:
            break
    return L, R, res


# -- exact extraction ------------------------------------------------------

def _snap_stochastic(X: np.ndarray, denom: int) -> Optional[list[list[Fraction]]]:
    out = []
    for row in X:
        q = [max(ZERO, Fraction(float(x)).limit_denominator(denom)) for x in row]
        s = sum(q)
        if s == 0:
            return None
        if s != 1:
            k = max(range(len(q)), key=lambda j: q[j])
            q[k] += 1 - s
            if q[k] < 0:
                q = [x / s for x in q]
                q[k] = max(ZERO, q[k])
                q = [x / sum(q) for x in q]
        out.append(q)
    return out


def _exact_left(N: CommMatrix, M: CommMatrix, Rq) -> Optional[Certificate]:
    W = matmul(N.data, Rq)
    L = []
    for row in M.data:
        w = in_convex_hull(row, W)
        if w is None:
            return None
        L.append(w)
    return Certificate(CommMatrix.from_rows(L), CommMatrix.from_rows(Rq))


def exact_right(N: CommMatrix, M: CommMatrix, Lq) -> Optional[Certificate]:
    """Exact LP for R given a rational L: ``(L N) R = M``, R row-stochastic."""
    P = matmul(Lq, N.data)
    a, d = len(P), len(P[0])
    b = M.cols
    eqs = []
    for i in range(a):
        for j in range(b):
            row = [ZERO] * (d * b)
            for k in range(d):
                row[k * b + j] = P[i][k]
            eqs.append((row, M.data[i][j]))
    for k in range(d):
        row = [ZERO] * (d * b)
        for j in range(b):
            row[k * b + j] = ONE
        eqs.append((row, ONE))
    res = solve_lp(LpProblem(d * b, equalities=eqs, nonnegative=True))
    if not res.feasible:
        return None
    x = res.assignment
    R = [x[k * b:(k + 1) * b] for k in range(d)]
    return Certificate(CommMatrix.from_rows(Lq), CommMatrix.from_rows(R))


def extract_exact(N: CommMatrix, M: CommMatrix, L: Optional[np.ndarray], R: Optional[np.ndarray]) -> Optional[Certificate]:
    """Turn a floating-point (L, R) into an exact certificate, if possible."""
    for denom in SNAP_DENOMINATORS:
        for side in ("R", "L"):
            X = R if side == "R" else L
            if X is None:
                continue
            q = _snap_stochastic(X, denom)
            if q is None:
                continue
            cert = _exact_left(N, M, q) if side == "R" else exact_right(N, M, q)
            if cert is not None and check_certificate(M, N, cert):
                return cert
    return None


# -- branch and bound ------------------------------------------------------

@dataclass
class BnbResult:
    status: str                      # "refuted", "found", "exhausted"
    lower_bound: Optional[Fraction] = None
    certificate: Optional[Certificate] = None
    best_residual: float = np.inf
    best_L: Optional[np.ndarray] = None
    best_R: Optional[np.ndarray] = None
    nodes: int = 0
    stats: dict = field(default_factory=dict)


class _Relaxation:
    """McCormick relaxation of min ||L N R - M||_inf over an R-box.

    Variables: L (a*c), P = L N (a*d), R (d*b), Y ~ P*R (a*d*b), s.
    """

    def __init__(self, N: CommMatrix, M: CommMatrix):
        self.N, self.M = N, M
        self.a, self.c = M.rows, N.rows
        self.d, self.b = N.cols, M.cols
        a, c, d, b = self.a, self.c, self.d, self.b
        self.oL = 0
        self.oP = a * c
        self.oR = self.oP + a * d
        self.oY = self.oR + d * b
        self.os = self.oY + a * d * b
        self.nvar = self.os + 1
        self.p_lo = [min(N.data[k][l] for k in range(c)) for l in range(d)]
        self.p_hi = [max(N.data[k][l] for k in range(c)) for l in range(d)]

        eq = []  # (dict, rhs)
        for i in range(a):
            eq.append(({self.oL + i * c + k: ONE for k in range(c)}, ONE))
        for i in range(a):
            for l in range(d):
                row = {self.oP + i * d + l: ONE}
                for k in range(c):
                    if N.data[k][l]:
                        row[self.oL + i * c + k] = -N.data[k][l]
                eq.append((row, ZERO))
        for l in range(d):
            eq.append(({self.oR + l * b + j: ONE for j in range(b)}, ONE))
        for i in range(a):
            for l in range(d):
                row = {self.Y(i, l, j): ONE for j in range(b)}
                row[self.oP + i * d + l] = -ONE
                eq.append((row, ZERO))
        self.eq = eq
        self.A_eq = self._dense([r for r, _ in eq])
        self.b_eq = np.array([float(v) for _, v in eq])

        # residual rows are box independent
        res = []
        for i in range(a):
            for j in range(b):
                row = {self.Y(i, l, j): ONE for l in range(d)}
                row[self.os] = -ONE
                res.append((row, M.data[i][j]))
                row = {self.Y(i, l, j): -ONE for l in range(d)}
                row[self.os] = -ONE
                res.append((row, -M.data[i][j]))
        self.residual_rows = res

    def Y(self, i, l, j):
        return self.oY + (i * self.d + l) * self.b + j

    def _dense(self, rows):
        A = np.zeros((len(rows), self.nvar))
        for r, row in enumerate(rows):
            for k, v in row.items():
                A[r, k] = float(v)
        return A

    def bounds(self, lo, hi):
        a, c, d, b = self.a, self.c, self.d, self.b
        bl = [ZERO] * self.nvar
        bu = [ONE] * self.nvar
        for i in range(a):
            for l in range(d):
                bl[self.oP + i * d + l] = self.p_lo[l]
                bu[self.oP + i * d + l] = self.p_hi[l]
        for l in range(d):
            for j in range(b):
                bl[self.oR + l * b + j] = lo[l][j]
                bu[self.oR + l * b + j] = hi[l][j]
                for i in range(a):
                    bl[self.Y(i, l, j)] = self.p_lo[l] * lo[l][j]
                    bu[self.Y(i, l, j)] = self.p_hi[l] * hi[l][j]
        return bl, bu

    def mccormick(self, lo, hi):
        rows = []
        for i in range(self.a):
            for l in range(self.d):
                p = self.oP + i * self.d + l
                pL, pU = self.p_lo[l], self.p_hi[l]
                for j in range(self.b):
                    r, y = self.oR + l * self.b + j, self.Y(i, l, j)
                    rL, rU = lo[l][j], hi[l][j]
                    rows.append(({y: -ONE, r: pL, p: rL}, pL * rL))
                    rows.append(({y: -ONE, r: pU, p: rU}, pU * rU))
                    rows.append(({y: ONE, r: -pU, p: -rL}, -pU * rL))
                    rows.append(({y: ONE, r: -pL, p: -rU}, -pL * rU))
        return rows

    def solve(self, lo, hi):
        """Return (certified lower bound, float LP solution or None)."""
        ub_rows = self.mccormick(lo, hi) + self.residual_rows
        bl, bu = self.bounds(lo, hi)
        A_ub = self._dense([r for r, _ in ub_rows])
        b_ub = np.array([float(v) for _, v in ub_rows])
        cvec = np.zeros(self.nvar)
        cvec[self.os] = 1
        fb = [(float(x), float(y)) for x, y in zip(bl, bu)]
        res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=fb, method="highs")
        if res.status != 0:
            return ZERO, None
        lam = [max(0.0, -v) for v in res.ineqlin.marginals]
        mu = [-v for v in res.eqlin.marginals]
        bound = self._dual_bound(ub_rows, lam, mu, bl, bu)
        return bound, res.x

    def _dual_bound(self, ub_rows, lam, mu, bl, bu) -> Fraction:
        """Exact lower bound from any multipliers lam >= 0, mu.

        For feasible x in the box:  s >= sum_k min(g_k bl_k, g_k bu_k) - lam.b_ub - mu.b_eq
        with g = e_s + A_ub^T lam + A_eq^T mu.
        """
        g = [ZERO] * self.nvar
        g[self.os] = ONE
        const = ZERO
        for (row, rhs), m in zip(ub_rows, lam):
            if m == 0.0:
                continue
            mf = Fraction(m)
            for k, v in row.items():
                g[k] += mf * v
            const -= mf * rhs
        for (row, rhs), m in zip(self.eq, mu):
            if m == 0.0:
                continue
            mf = Fraction(m)
            for k, v in row.items():
                g[k] += mf * v
            const -= mf * rhs
        total = const
        for gk, l, u in zip(g, bl, bu):
            if gk > 0:
                total += gk * l
            elif gk < 0:
                total += gk * u
        return total


def _tighten(lo, hi) -> bool:
    """Propagate row sums of R into the box; False if the box is empty."""
    changed = True
    while changed:
        changed = False
        for l in range(len(lo)):
            slo, shi = sum(lo[l]), sum(hi[l])
            if slo > 1 or shi < 1:
                return False
            for j in range(len(lo[l])):
                nlo = max(lo[l][j], 1 - (shi - hi[l][j]))
                nhi = min(hi[l][j], 1 - (slo - lo[l][j]))
                if nlo > nhi:
                    return False
                if nlo != lo[l][j] or nhi != hi[l][j]:
                    lo[l][j], hi[l][j] = nlo, nhi
                    changed = True
    return True


def branch_and_bound(
    N: CommMatrix,
    M: CommMatrix,
    delta: float = 1e-6,
    max_nodes: int = 20000,
    time_limit: Optional[float] = None,
) -> BnbResult:
    """Best-first branch and bound over boxes of R.

    A box is discarded once its certified lower bound on
    ``min ||L N R - M||_inf`` reaches ``delta``.  If every box is discarded
    the result is ``"refuted"`` with the smallest discarded bound; if a box
    yields an exact certificate the result is ``"found"``.
    """
    start = time.perf_counter()
    relax = _Relaxation(N, M)
    Nf, Mf = N.to_numpy(), M.to_numpy()
    d, b = N.cols, M.cols
    delta_q = Fraction(delta)
    tick = itertools.count()

    lo = [[ZERO] * b for _ in range(d)]
    hi = [[ONE] * b for _ in range(d)]
    best = BnbResult(status="exhausted")
    pruned_min: Optional[Fraction] = None
    heap = []

    def evaluate(lo, hi):
        nonlocal pruned_min
        bound, x = relax.solve(lo, hi)
        best.nodes += 1
        if bound >= delta_q:
            pruned_min = bound if pruned_min is None else min(pruned_min, bound)
            return None
        if x is not None:
            R = x[relax.oR:relax.oY].reshape(d, b).clip(0, None)
            R /= R.sum(axis=1, keepdims=True)
            L, res = best_left_factor(Nf, Mf, R)
            if L is not None and res < best.best_residual:
                best.best_residual, best.best_L, best.best_R = res, L, R
                if res < 1e-9:
                    cert = extract_exact(N, M, L, R)
                    if cert is not None:
                        best.certificate = cert
        heapq.heappush(heap, (float(bound), next(tick), lo, hi))
        return bound

    evaluate(lo, hi)
    while heap and best.certificate is None:
        if best.nodes >= max_nodes or (time_limit is not None and time.perf_counter() - start > time_limit):
            best.status = "exhausted"
            best.lower_bound = Fraction(heap[0][0]) if heap else None
            best.stats = {"open_boxes": len(heap), "seconds": time.perf_counter() - start}
            return best
        _, _, lo, hi = heapq.heappop(heap)
        l, j = max(((l, j) for l in range(d) for j in range(b)), key=lambda lj: hi[lj[0]][lj[1]] - lo[lj[0]][lj[1]])
        mid = (lo[l][j] + hi[l][j]) / 2
        for half in ("low", "high"):
            nlo = [r[:] for r in lo]
            nhi = [r[:] for r in hi]
            if half == "low":
                nhi[l][j] = mid
            else:
                nlo[l][j] = mid
            if _tighten(nlo, nhi):
                evaluate(nlo, nhi)
    if best.certificate is not None:
        best.status = "found"
    else:
        best.status = "refuted"
        best.lower_bound = pruned_min
    best.stats = {"seconds": time.perf_counter() - start}
    return best
