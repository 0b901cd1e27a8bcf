"""Three-valued decision of ``M ⊑ N``."""
from __future__ import annotations

import enum
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from ..commat import CommMatrix, gen_copt
from ..linalg import in_convex_hull, rank
from .certificates import (
    Certificate,
    build_collapse_cert,
    build_diagonal_cert,
    build_t_reduction,
    check_certificate,
    compose,
    identity_cert,
    rank_one_cert,
    row_permutation,
    via_identity_cert,
)
from .search import alternating_lp, branch_and_bound, exact_right, extract_exact

__all__ = [
    "Budget",
    "MajorizationDecision",
    "NoReason",
    "Verdict",
    "copt_chain",
    "copt_edges",
    "copt_shape",
    "majorizes",
]


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class NoReason(enum.Enum):
    RANK_EXCEEDS = "RankExceeds"
    BRANCH_AND_BOUND_EXHAUSTED = "BranchAndBoundExhausted"


@dataclass
class Budget:
    """Search configuration for :func:`majorizes`.

    Defaults can be overridden with the ``PIK_DELTA`` and ``PIK_RESTARTS``
    environment variables.
    """

    delta: float = field(default_factory=lambda: float(os.environ.get("PIK_DELTA", 1e-6)))
    restarts: int = field(default_factory=lambda: int(os.environ.get("PIK_RESTARTS", 32)))
    seed: int = 0
    alt_iters: int = 100
    max_nodes: int = 20000
    time_limit: Optional[float] = 120.0

    @property
    def seeds(self) -> range:
        return range(self.seed, self.seed + self.restarts)


@dataclass
class MajorizationDecision:
    verdict: Verdict
    certificate: Optional[Certificate] = None
    reason: Optional[NoReason] = None
    gap_bound: Optional[Fraction] = None
    residual: Optional[float] = None
    best_L: Optional[np.ndarray] = None
    best_R: Optional[np.ndarray] = None
    route: str = ""
    stats: dict = field(default_factory=dict)

    def to_dict(self, decimal: bool = False) -> dict:
        out: dict = {"verdict": self.verdict.value, "route": self.route}
        if self.certificate is not None:
            out.update(self.certificate.to_dict(decimal))
        if self.reason is not None:
            out["reason"] = self.reason.value
        if self.gap_bound is not None:
            out["gap_bound"] = float(self.gap_bound)
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def copt_shape(M: CommMatrix) -> Optional[tuple[int, int]]:
    """(n, t) if M is ``C^opt_{n,t}`` up to a row permutation."""
    n = M.cols
    if n < 2:
        return None
    zeros = sum(1 for x in M.data[0] if x == 0)
    if not 1 <= zeros <= n - 1 or M.rows != comb(n, zeros):
        return None
    return (n, zeros) if M.same_rows_as(gen_copt(n, zeros)) else None


def copt_edges(node, n_max):
    """Known relations ``node ⊑ other`` among optimal matrices up to n_max."""
    n, t = node
    if n + 1 <= n_max:
        yield (n + 1, t + 1), lambda: build_diagonal_cert(n, t)
    if t + 1 <= n - 1:
        yield (n, t + 1), lambda: build_t_reduction(n, t + 1)
    if t == n - 1:
        for n2 in range(n, n_max + 1):
            for t2 in range(1, n2):
                if (n2, t2) != node and n2 // (n2 - t2) >= n:
                    yield (n2, t2), (lambda n2=n2, t2=t2: build_collapse_cert(n, n2, t2))


def copt_chain(src: tuple[int, int], dst: tuple[int, int]) -> Optional[Certificate]:
    """Compose the constructive relations into ``C^opt_src ⊑ C^opt_dst``."""
    if src == dst:
        return identity_cert(gen_copt(*src))
    prev = {src: None}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        for nxt, make in copt_edges(node, dst[0]):
            if nxt in prev:
                continue
            prev[nxt] = (node, make)
            if nxt == dst:
                chain = []
                cur = nxt
                while prev[cur] is not None:
                    p, mk = prev[cur]
                    chain.append(mk())
                    cur = p
                cert = chain.pop()
                while chain:
                    cert = compose(cert, chain.pop())
                return cert
            queue.append(nxt)
    return None


def _copt_route(N: CommMatrix, M: CommMatrix) -> Optional[Certificate]:
    sm, sn = copt_shape(M), copt_shape(N)
    if sm is None or sn is None:
        return None
    core = copt_chain(sm, sn)
    if core is None:
        return None
    # M = Pm C_m and C_n = Pn^T N
    Pm = row_permutation(M, gen_copt(*sm))
    Pn_inv = row_permutation(gen_copt(*sn), N)
    return compose(Certificate(Pm, identity_cert(M).R), compose(core, Certificate(Pn_inv, identity_cert(N).R)))


def _hull_route(N: CommMatrix, M: CommMatrix) -> Optional[Certificate]:
    """R = identity: every row of M is a convex combination of rows of N."""
    if M.cols != N.cols:
        return None
    L = []
    for row in M.data:
        w = in_convex_hull(row, N.data)
        if w is None:
            return None
        L.append(w)
    return Certificate(CommMatrix.from_rows(L), identity_cert(N).R)


def _postprocess_route(N: CommMatrix, M: CommMatrix) -> Optional[Certificate]:
    """L = identity: M = N R."""
    if M.rows != N.rows:
        return None
    return exact_right(N, M, [list(r) for r in identity_cert(N).L.data])


def majorizes(N: CommMatrix, M: CommMatrix, budget: Optional[Budget] = None) -> MajorizationDecision:
    """Decide whether ``M ⊑ N`` (M = L N R for row-stochastic L, R).

    Pipeline: rank test, structural constructions, exact single-sided LPs,
    seeded alternating LP with exact extraction, then branch and bound over
    R.  Every Yes carries a verified exact certificate; every No is either
    a rank violation or a certified positive gap.
    """
    budget = budget or Budget()
    if rank(M.data) > rank(N.data):
        return MajorizationDecision(Verdict.NO, reason=NoReason.RANK_EXCEEDS, route="rank")

    structural = (
        ("identical", lambda: identity_cert(M) if M == N else None),
        ("rank-one", lambda: rank_one_cert(M, N)),
        ("optimal-chain", lambda: _copt_route(N, M)),
        ("via-identity", lambda: via_identity_cert(M, N)),
        ("row-hull", lambda: _hull_route(N, M)),
        ("post-processing", lambda: _postprocess_route(N, M)),
    )
    for name, build in structural:
        cert = build()
        if cert is not None and check_certificate(M, N, cert):
            return MajorizationDecision(Verdict.YES, certificate=cert, residual=0.0, route=name)

    Nf, Mf = N.to_numpy(), M.to_numpy()
    best = (np.inf, None, None)
    for seed in budget.seeds:
        L, R, res = alternating_lp(Nf, Mf, seed, iters=budget.alt_iters)
        if res < best[0]:
            best = (res, L, R)
        if res < 1e-9:
            cert = extract_exact(N, M, L, R)
            if cert is not None:
                return MajorizationDecision(Verdict.YES, certificate=cert, residual=0.0,
                                            route=f"alternating-lp(seed={seed})")

    bnb = branch_and_bound(N, M, delta=budget.delta, max_nodes=budget.max_nodes,
                           time_limit=budget.time_limit)
    stats = {"nodes": bnb.nodes, **bnb.stats}
    if bnb.status == "found":
        return MajorizationDecision(Verdict.YES, certificate=bnb.certificate, residual=0.0,
                                    route="branch-and-bound", stats=stats)
    if bnb.status == "refuted":
        return MajorizationDecision(Verdict.NO, reason=NoReason.BRANCH_AND_BOUND_EXHAUSTED,
                                    gap_bound=bnb.lower_bound, route="branch-and-bound", stats=stats)
    res, L, R = best
    if bnb.best_residual < res:
        res, L, R = bnb.best_residual, bnb.best_L, bnb.best_R
    return MajorizationDecision(Verdict.UNKNOWN, residual=float(res), best_L=L, best_R=R,
                                route="budget-exhausted", stats=stats)
