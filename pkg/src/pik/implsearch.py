"""Implementations of communication matrices in qubit, rebit and qudit systems.

:func:`find_implementation` first tries exact constructions (and anything
reachable from them through a majorization certificate), then the
impossibility theorems, and only then a numerical see-saw search.  The
see-saw never claims impossibility; it reports its best residual.
"""
from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .commat import CommMatrix, gen_copt
from .linalg import rank
from .quantum import (
    EPS,
    DensityOperator,
    PhysicalityError,
    Povm,
    basis_states,
    born_probabilities,
    compose_with_certificate,
    max_abs_diff,
    mixture_construction,
    projective_povm,
    qubit_uniform_setup,
    qutrit_c42,
    sic_povm,
    span_dimension,
    sym_states_from_povm,
)
from .ultraweak import copt_chain, copt_shape
from .ultraweak.certificates import Certificate, compose, identity_cert, row_permutation

log = logging.getLogger(__name__)

__all__ = [
    "SearchBudget",
    "SearchStatus",
    "SearchVerdict",
    "SystemSpec",
    "Theorem",
    "find_implementation",
    "known_impossibility",
    "operational_dimension",
    "seesaw",
]


@dataclass(frozen=True)
class SystemSpec:
    """A qubit, a rebit (real qubit) or a complex qudit of dimension d."""

    kind: str
    d: int = 2

    def __post_init__(self):
        if self.kind not in ("qubit", "rebit", "qudit"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind in ("qubit", "rebit") and self.d != 2:
            raise ValueError(f"{self.kind} has dimension 2")
        if self.d < 2:
            raise ValueError("dimension must be at least 2")
        if self.kind == "qudit" and self.d == 2:
            object.__setattr__(self, "kind", "qubit")

    @classmethod
    def parse(cls, text: str) -> "SystemSpec":
        text = text.strip().lower()
        if text in ("qubit", "rebit"):
            return cls(text)
        if text.startswith("qudit:"):
            try:
                d = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad qudit dimension in {text!r}") from None
            return cls("qudit", d)
        raise ValueError(f"system must be qubit, rebit or qudit:<d>, got {text!r}")

    @property
    def real(self) -> bool:
        return self.kind == "rebit"

    @property
    def field(self) -> str:
        return "real" if self.real else "complex"

    def __str__(self):
        return f"qudit:{self.d}" if self.kind == "qudit" else self.kind


def operational_dimension(sys: SystemSpec) -> int:
    """Largest n with id_n implementable: d for every system handled here."""
    return sys.d


class Theorem(str, enum.Enum):
    SPAN_BOUND = "prop1-span-bound"
    NO_QUBIT_T2 = "prop2-no-qubit-t2"
    BLOCH_GRAM = "theorem1-bloch-gram-rank"
    OPERATIONAL_DIMENSION = "operational-dimension"


class SearchStatus(enum.Enum):
    REALIZABLE = "realizable"
    IMPOSSIBLE = "impossible"
    UNKNOWN = "unknown"


@dataclass
class SearchVerdict:
    status: SearchStatus
    states: Optional[list] = None
    povm: Optional[Povm] = None
    theorem: Optional[Theorem] = None
    residual: Optional[float] = None
    provenance: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "provenance": self.provenance}
        if self.theorem is not None:
            out["theorem"] = self.theorem.value
        if self.detail:
            out["detail"] = self.detail
        if self.residual is not None:
            out["residual"] = self.residual
        if self.states is not None:
            out["states"] = [s.to_dict() for s in self.states]
            out.update(self.povm.to_dict())
        return out


@dataclass
class SearchBudget:
    restarts: int = field(default_factory=lambda: int(os.environ.get("PIK_RESTARTS", 64)))
    iters: int = 2000
    seed: int = 0
    tol: float = EPS


# -- exact constructions ---------------------------------------------------

Setup = tuple[list[DensityOperator], Povm]


def _embed(setup: Setup, d: int, real: bool) -> Setup:
    """Embed a setup from dimension d0 <= d into dimension d."""
    states, povm = setup
    d0 = povm.dim
    if d0 == d and povm.real == real:
        return states, povm
    dtype = float if real else complex

    def pad(m):
        out = np.zeros((d, d), dtype=dtype)
        out[:d0, :d0] = np.asarray(m).real if real else m
        return out

    effects = [pad(e) for e in povm.effects]
    effects[-1][d0:, d0:] += np.eye(d - d0)
    return [DensityOperator(pad(s.matrix), real=real) for s in states], Povm(tuple(effects), real=real)


def _identity_like(n: int, d: int, real: bool) -> Setup:
    """C^opt_{n,n-1}: the row missing column j is the basis state |j>."""
    states = basis_states(d, n, real)
    order = [n - 1 - r for r in range(n)]
    return [states[j] for j in order], projective_povm(d, n, real)


def _mixture(n: int, d: int, real: bool) -> Setup:
    return mixture_construction(basis_states(d, n, real)), projective_povm(d, n, real)


def _symmetric(povm: Povm, n: int, d: int) -> Setup:
    return sym_states_from_povm(povm, n, d), povm


def constructions(sys: SystemSpec) -> dict[tuple[int, int], tuple[str, Callable[[], Setup]]]:
    """Exact realizations of ``C^opt_{n,t}`` (in row order) known for this system."""
    d, real = sys.d, sys.real
    out: dict = {}
    for n in range(2, d + 1):
        out[(n, n - 1)] = ("distinguishable-basis", lambda n=n: _identity_like(n, d, real))
        if n - 1 != 1:
            out[(n, 1)] = ("leave-one-out-mixtures", lambda n=n: _mixture(n, d, real))
    if d == 2:
        out[(3, 1)] = ("bloch-trine", lambda: qubit_uniform_setup(3, real))
        if not real:
            out[(4, 1)] = ("bloch-tetrahedron", lambda: qubit_uniform_setup(4))
    elif not real:
        out[(4, 1)] = ("qubit-sic-embedded", lambda: _embed(_symmetric(sic_povm(2), 4, 2), d, False))
        out[(4, 2)] = ("qutrit-c42", lambda: _embed(qutrit_c42(), d, False))
        out[(9, 1)] = ("qutrit-sic", lambda: _embed(_symmetric(sic_povm(3), 9, 3), d, False))
    return out


def _verified(C: CommMatrix, states, povm) -> bool:
    try:
        return max_abs_diff(born_probabilities(states, povm), C.to_numpy()) <= EPS
    except (PhysicalityError, ValueError):
        return False


def _construct(C: CommMatrix, shape: tuple[int, int], sys: SystemSpec) -> Optional[SearchVerdict]:
    """Realize C via a construction, composed with a chain certificate if needed."""
    table = constructions(sys)
    # deterministic preference: direct hit, then seeds in sorted order
    candidates = ([shape] if shape in table else []) + sorted(k for k in table if k != shape)
    target = gen_copt(*shape)
    for seed in candidates:
        cert = copt_chain(shape, seed)
        if cert is None:
            continue
        name, build = table[seed]
        states, povm = build()
        if seed != shape:
            states, povm = compose_with_certificate(states, povm, cert)
            name = f"{name} C^opt_{{{seed[0]},{seed[1]}}} + certificate"
        perm = row_permutation(C, target)
        if perm is not None and C != target:
            states, povm = compose_with_certificate(states, povm, Certificate(perm, identity_cert(C).R))
        if _verified(C, states, povm):
            return SearchVerdict(SearchStatus.REALIZABLE, states, povm, provenance=f"construction:{name}",
                                 residual=max_abs_diff(born_probabilities(states, povm), C))
    return None


# -- impossibility ---------------------------------------------------------

def _gram_rank(n: int) -> int:
    """Rank of the Gram matrix with unit diagonal and off-diagonal 1/(1-n)."""
    c = Fraction(1, 1 - n)
    G = [[Fraction(1) if i == j else c for j in range(n)] for i in range(n)]
    return rank(G)


def known_impossibility(n: int, t: int, sys: SystemSpec) -> Optional[tuple[Theorem, str]]:
    """Theorem-backed reason why ``C^opt_{n,t}`` has no implementation, if any."""
    d = sys.d
    if d == 2 and t >= 2:
        return Theorem.NO_QUBIT_T2, "two rows share a zero column; a nonzero singular qubit effect has a 1-dim kernel"
    if t == 1 and n > d * d:
        return Theorem.SPAN_BOUND, f"at most d^2={d * d} uniformly antidistinguishable states, n={n}"
    if d == 2 and t == 1:
        bloch_dim = 2 if sys.real else 3
        g = _gram_rank(n)
        if g > bloch_dim:
            return Theorem.BLOCH_GRAM, (
                f"pure Bloch vectors with pairwise dot 1/(1-n) have Gram rank {g} > {bloch_dim}"
            )
    span = span_dimension(d, sys.real)
    if t == 1 and n > span:
        return Theorem.SPAN_BOUND, f"at most {span} uniformly antidistinguishable real states, n={n}"
    m = n // (n - t)
    if m > operational_dimension(sys):
        return Theorem.OPERATIONAL_DIMENSION, (
            f"C^opt_{{{m},{m - 1}}} ~ id_{m} is majorized by C^opt_{{{n},{t}}} "
            f"but the operational dimension is {operational_dimension(sys)}"
        )
    return None


# -- see-saw ---------------------------------------------------------------

def _simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of v onto the probability simplex."""
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1
    idx = np.arange(1, v.shape[-1] + 1)
    cond = u - css / idx > 0
    r = cond.shape[-1] - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, r[..., None], axis=-1) / (r[..., None] + 1)
    return np.maximum(v - theta, 0)


def _project_states(S: np.ndarray) -> np.ndarray:
    S = (S + np.conj(np.swapaxes(S, 1, 2))) / 2
    w, V = np.linalg.eigh(S)
    w = _simplex_project(w)
    return np.einsum("kab,kb,kcb->kac", V, w, V.conj())


def _normalize_povm(E: np.ndarray) -> np.ndarray:
    """Clip to PSD, then map onto the POVM set via S^{-1/2} E S^{-1/2}."""
    E = (E + np.conj(np.swapaxes(E, 1, 2))) / 2
    w, V = np.linalg.eigh(E)
    E = np.einsum("kab,kb,kcb->kac", V, np.clip(w, 0, None), V.conj())
    S = E.sum(axis=0)
    w, V = np.linalg.eigh(S)
    w = np.maximum(w, 1e-12)
    Sm = (V * w ** -0.5) @ V.conj().T
    return np.einsum("ab,kbc,cd->kad", Sm, E, Sm)


def _project_povm(E: np.ndarray, rounds: int = 30) -> np.ndarray:
    """Dykstra projection onto {E_k PSD} ∩ {sum E_k = 1}, then exact normalization."""
    n, d = E.shape[0], E.shape[1]
    eye = np.eye(d)
    x = E.copy()
    p = np.zeros_like(E)
    q = np.zeros_like(E)
    for _ in range(rounds):
        y = x + p
        y = (y + np.conj(np.swapaxes(y, 1, 2))) / 2
        w, V = np.linalg.eigh(y)
        z = np.einsum("kab,kb,kcb->kac", V, np.clip(w, 0, None), V.conj())
        p = y - z
        y = z + q
        x = y - (y.sum(axis=0) - eye) / n
        q = y - x
    return _normalize_povm(x)


def _objective(S, E, C):
    P = np.einsum("iab,jba->ij", S, E).real
    return float(np.sum((P - C) ** 2)), P


def _random_setup(rng, k, n, d, real):
    if real:
        A = rng.normal(size=(k, d, d))
        B = rng.normal(size=(n, d, d))
    else:
        A = rng.normal(size=(k, d, d)) + 1j * rng.normal(size=(k, d, d))
        B = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    S = np.einsum("kab,kcb->kac", A, A.conj())
    S /= np.trace(S, axis1=1, axis2=2).real[:, None, None]
    E = _normalize_povm(np.einsum("kab,kcb->kac", B, B.conj()))
    return S, E


@dataclass
class SeesawRun:
    seed: int
    residual: float
    objective_trace: list
    states: np.ndarray
    effects: np.ndarray


def seesaw(C: np.ndarray, d: int, real: bool, seed: int, iters: int = 2000, tol: float = EPS,
           inner: int = 5) -> SeesawRun:
    """Alternate projected-gradient updates of the states and of the POVM.

    Minimizes ``f = sum_ij (tr[rho_i M(j)] - C_ij)^2``.  An update is kept
    only if it does not increase f, so the recorded objective trace is
    non-increasing.
    """
    C = np.asarray(C, dtype=float)
    k, n = C.shape
    rng = np.random.default_rng(seed)
    S, E = _random_setup(rng, k, n, d, real)
    f, P = _objective(S, E, C)
    trace = [f]
    for _ in range(iters):
        if np.max(np.abs(P - C)) < tol / 10:
            break
        # states: f is separable over rows
        gram_e = np.einsum("jab,kba->jk", E, E).real
        step = 1 / (2 * max(np.linalg.eigvalsh(gram_e)[-1], 1e-12))
        S_new = S
        for _ in range(inner):
            R = np.einsum("iab,jba->ij", S_new, E).real - C
            S_new = _project_states(S_new - step * 2 * np.einsum("ij,jab->iab", R, E))
        f_new, P_new = _objective(S_new, E, C)
        if f_new <= f:
            S, f, P = S_new, f_new, P_new
        # measurement
        gram_s = np.einsum("iab,jba->ij", S, S).real
        step = 1 / (2 * max(np.linalg.eigvalsh(gram_s)[-1], 1e-12))
        E_new = E
        for _ in range(inner):
            R = np.einsum("iab,jba->ij", S, E_new).real - C
            E_new = _project_povm(E_new - step * 2 * np.einsum("ij,iab->jab", R, S))
        f_new, P_new = _objective(S, E_new, C)
        if f_new <= f:
            E, f, P = E_new, f_new, P_new
        trace.append(f)
        if len(trace) > 200 and trace[-200] - f < 1e-14 * max(1.0, trace[-200]):
            break
    if real:
        S, E = S.real, E.real
    return SeesawRun(seed, float(np.max(np.abs(P - C))), trace, S, E)


# -- entry point -----------------------------------------------------------

def find_implementation(C: CommMatrix, sys: SystemSpec, budget: Optional[SearchBudget] = None) -> SearchVerdict:
    """Realizable / impossible-by-theorem / unknown verdict for C in sys."""
    budget = budget or SearchBudget()
    shape = copt_shape(C)
    if shape is not None:
        found = _construct(C, shape, sys)
        if found is not None:
            return found
        reason = known_impossibility(*shape, sys)
        if reason is not None:
            theorem, detail = reason
            return SearchVerdict(SearchStatus.IMPOSSIBLE, theorem=theorem,
                                 provenance=f"theorem:{theorem.value}", detail=detail)
    elif rank(C.data) == C.rows == C.cols and all(
        sum(1 for x in row if x) == 1 for row in C.data
    ) and C.rows > operational_dimension(sys):
        return SearchVerdict(SearchStatus.IMPOSSIBLE, theorem=Theorem.OPERATIONAL_DIMENSION,
                             provenance=f"theorem:{Theorem.OPERATIONAL_DIMENSION.value}",
                             detail=f"permutation matrix of size {C.rows} > operational dimension")

    target = C.to_numpy()
    best: Optional[SeesawRun] = None
    for r in range(budget.restarts):
        run = seesaw(target, sys.d, sys.real, seed=budget.seed + r, iters=budget.iters, tol=budget.tol)
        if best is None or run.residual < best.residual:
            best = run
        if run.residual < budget.tol:
            break
    if best is not None and best.residual < budget.tol:
        try:
            states = [DensityOperator(s, real=sys.real) for s in best.states]
            povm = Povm(tuple(best.effects), real=sys.real)
        except PhysicalityError:
            states = None
        if states is not None and _verified(C, states, povm):
            return SearchVerdict(SearchStatus.REALIZABLE, states, povm, residual=best.residual,
                                 provenance=f"seesaw(seed={best.seed})")
    return SearchVerdict(SearchStatus.UNKNOWN, residual=None if best is None else best.residual,
                         provenance="seesaw-budget-exhausted",
                         detail="no implementation found; this is not a proof of impossibility")
