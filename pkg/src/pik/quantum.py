"""Qudit states, POVMs, the Born rule and the explicit constructions.

Matrices are numpy arrays (complex, or real in rebit mode).  Physicality
checks use ``EPS = 1e-9``; constants printed as halves, quarters, 1/sqrt(2)
and 1/sqrt(3) are evaluated at full double precision.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .commat import CommMatrix, MatrixFormatError, gen_copt

__all__ = [
    "EPS",
    "BlochVector",
    "DensityOperator",
    "Povm",
    "PhysicalityError",
    "QUTRIT_C42_LABELS",
    "SX",
    "SY",
    "SZ",
    "basis_states",
    "born",
    "born_probabilities",
    "compose_with_certificate",
    "is_antidistinguishable",
    "is_symmetric",
    "is_uniformly_antidistinguishable",
    "max_abs_diff",
    "mixture_construction",
    "op_from_dict",
    "povm_feasibility",
    "povm_from_json",
    "projective_povm",
    "qubit_sic_povm",
    "qubit_uniform_set",
    "qubit_uniform_setup",
    "qutrit_c42",
    "qutrit_sic_povm",
    "setup_to_dict",
    "sic_povm",
    "span_dimension",
    "states_from_json",
    "sym_states_from_povm",
    "trine_povm",
]

EPS = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)


class PhysicalityError(ValueError):
    """A matrix fails the Hermitian / PSD / normalization checks."""


def _as_matrix(m, real: bool) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PhysicalityError(f"expected a square matrix, got shape {m.shape}")
    if real:
        if np.max(np.abs(m.imag), initial=0.0) > EPS:
            raise PhysicalityError("rebit operators must be real")
        return np.ascontiguousarray(m.real)
    return m


def _check_hermitian_psd(m: np.ndarray, what: str) -> np.ndarray:
    if np.max(np.abs(m - m.conj().T)) > EPS:
        raise PhysicalityError(f"{what} is not Hermitian")
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if evals[0] < -EPS:
        raise PhysicalityError(f"{what} has negative eigenvalue {evals[0]:.3g}")
    return evals


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace operator."""

    matrix: np.ndarray
    real: bool = False

    def __post_init__(self):
        m = _as_matrix(self.matrix, self.real)
        _check_hermitian_psd(m, "state")
        if abs(np.trace(m).real - 1) > EPS:
            raise PhysicalityError(f"state has trace {np.trace(m).real:.12g}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_bloch(cls, r: Sequence[float], real: bool = False) -> "DensityOperator":
        r = np.asarray(r, dtype=float)
        if real and abs(r[1]) > EPS:
            raise PhysicalityError("rebit Bloch vectors lie in the x-z plane")
        m = (I2 + r[0] * SX + r[1] * SY + r[2] * SZ) / 2
        return cls(m, real=real)

    @classmethod
    def pure(cls, ket: Sequence[complex], real: bool = False) -> "DensityOperator":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), real=real)

    def bloch(self) -> np.ndarray:
        if self.dim != 2:
            raise ValueError("Bloch vectors exist for qubits only")
        m = np.asarray(self.matrix, dtype=complex)
        return np.array([np.trace(m @ s).real for s in PAULI])

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self) -> bool:
        return abs(self.purity() - 1) <= EPS

    def to_dict(self) -> dict:
        return _op_to_dict(self.matrix)


@dataclass(frozen=True, eq=False)
class Povm:
    """Effects ``M(1), ..., M(n)``: each PSD, summing to the identity."""

    effects: tuple
    real: bool = False

    def __post_init__(self):
        effects = tuple(_as_matrix(e, self.real) for e in self.effects)
        if not effects:
            raise PhysicalityError("a POVM needs at least one outcome")
        d = effects[0].shape[0]
        for k, e in enumerate(effects):
            if e.shape != (d, d):
                raise PhysicalityError(f"effect {k + 1} has shape {e.shape}, expected {(d, d)}")
            _check_hermitian_psd(e, f"effect {k + 1}")
        if np.max(np.abs(sum(effects) - np.eye(d))) > EPS:
            raise PhysicalityError("effects do not sum to the identity")
        for e in effects:
            e.setflags(write=False)
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.effects)

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, j):
        return self.effects[j]

    def to_dict(self) -> dict:
        return {"effects": [_op_to_dict(e) for e in self.effects]}


@dataclass(frozen=True)
class BlochVector:
    r: tuple[float, float, float]
    weight: Optional[float] = None

    def __post_init__(self):
        if np.linalg.norm(self.r) > 1 + EPS:
            raise PhysicalityError("Bloch vector outside the unit ball")
        if self.weight is not None and self.weight <= 0:
            raise PhysicalityError("weights must be positive")

    @property
    def is_pure(self) -> bool:
        return abs(np.linalg.norm(self.r) - 1) <= EPS

    def state(self, real: bool = False) -> DensityOperator:
        return DensityOperator.from_bloch(self.r, real=real)


# -- JSON ------------------------------------------------------------------

def _op_to_dict(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": m.shape[0], "re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}


def op_from_dict(payload: dict) -> np.ndarray:
    if not isinstance(payload, dict):
        raise MatrixFormatError("operator must be a JSON object")
    for key in ("dim", "re"):
        if key not in payload:
            raise MatrixFormatError(f"operator missing field '{key}'")
    d = payload["dim"]
    if not isinstance(d, int) or d < 1:
        raise MatrixFormatError("field 'dim' must be a positive integer")
    re = payload["re"]
    im = payload.get("im", [0.0] * (d * d))
    if not isinstance(re, list) or len(re) != d * d:
        raise MatrixFormatError(f"field 're' must hold {d * d} numbers")
    if not isinstance(im, list) or len(im) != d * d:
        raise MatrixFormatError(f"field 'im' must hold {d * d} numbers")
    try:
        return (np.array(re, dtype=float) + 1j * np.array(im, dtype=float)).reshape(d, d)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"operator entries: {exc}") from None


def states_from_json(text: str, real: bool = False) -> list[DensityOperator]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON: {exc}") from None
    if isinstance(payload, dict):
        if "states" not in payload:
            raise MatrixFormatError("missing field 'states'")
        payload = payload["states"]
    if not isinstance(payload, list) or not payload:
        raise MatrixFormatError("field 'states' must be a non-empty list of operators")
    return [DensityOperator(op_from_dict(p), real=real) for p in payload]


def povm_from_json(text: str, real: bool = False) -> Povm:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON: {exc}") from None
    if isinstance(payload, dict):
        if "effects" not in payload:
            raise MatrixFormatError("missing field 'effects'")
        payload = payload["effects"]
    if not isinstance(payload, list) or not payload:
        raise MatrixFormatError("field 'effects' must be a non-empty list of operators")
    return Povm(tuple(op_from_dict(p) for p in payload), real=real)


def setup_to_dict(states: Sequence[DensityOperator], povm: Povm) -> dict:
    return {"states": [s.to_dict() for s in states], **povm.to_dict()}


# -- Born rule -------------------------------------------------------------

def born_probabilities(states: Sequence[DensityOperator], povm: Povm) -> np.ndarray:
    """Float matrix ``C[i, j] = tr[rho_i M(j)]``, checked and clamped."""
    d = povm.dim
    for k, s in enumerate(states):
        if s.dim != d:
            raise ValueError(f"state {k + 1} has dimension {s.dim}, POVM has {d}")
    S = np.array([np.asarray(s.matrix, dtype=complex) for s in states])
    E = np.array([np.asarray(e, dtype=complex) for e in povm.effects])
    # tr[rho E] = sum_ab rho_ab E_ba
    C = np.einsum("iab,jba->ij", S, E)
    if np.max(np.abs(C.imag)) > EPS:
        raise PhysicalityError("Born probabilities have an imaginary part")
    C = C.real
    if C.min() < -EPS or C.max() > 1 + EPS:
        raise PhysicalityError("Born probabilities outside [0, 1]")
    C = np.clip(C, 0.0, 1.0)
    sums = C.sum(axis=1)
    if np.max(np.abs(sums - 1)) > EPS:
        raise PhysicalityError("Born matrix rows do not sum to 1")
    return C / sums[:, None]


def born(states: Sequence[DensityOperator], povm: Povm) -> CommMatrix:
    """Communication matrix of a setup, as exact rationals of the float values."""
    C = born_probabilities(states, povm)
    rows = []
    for row in C:
        q = [Fraction(float(x)) for x in row]
        s = sum(q)
        rows.append(tuple(x / s for x in q))
    return CommMatrix(tuple(rows))


def max_abs_diff(A, B) -> float:
    a = A.to_numpy() if isinstance(A, CommMatrix) else np.asarray(A, dtype=float)
    b = B.to_numpy() if isinstance(B, CommMatrix) else np.asarray(B, dtype=float)
    if a.shape != b.shape:
        return np.inf
    return float(np.max(np.abs(a - b)))


# -- POVM feasibility by alternating projections ---------------------------

def _herm_basis(d: int, real: bool) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of Hermitian (or real symmetric) d x d matrices."""
    basis = []
    for k in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[k, k] = 1
        basis.append(m)
    for k in range(d):
        for l in range(k + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[k, l] = m[l, k] = 1 / np.sqrt(2)
            basis.append(m)
            if not real:
                m = np.zeros((d, d), dtype=complex)
                m[k, l] = -1j / np.sqrt(2)
                m[l, k] = 1j / np.sqrt(2)
                basis.append(m)
    return np.array(basis)


def _coords(m: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("kab,ab->k", basis.conj(), m).real


def povm_feasibility(
    states: Sequence[DensityOperator],
    targets: dict[tuple[int, int], float],
    n_outcomes: int,
    real: bool = False,
    iters: int = 10_000,
) -> Optional[Povm]:
    """Find a POVM with ``tr[rho_i M(j)] = targets[i, j]`` for the given pairs.

    Alternates between the affine set (normalization plus the trace
    constraints) and the product of PSD cones.  Returns a POVM only if every
    constraint holds within ``EPS``; otherwise None.
    """
    d = states[0].dim
    basis = _herm_basis(d, real)
    m = len(basis)
    rows, rhs = [], []
    ident = _coords(np.eye(d), basis)
    for k in range(m):
        row = np.zeros(n_outcomes * m)
        row[k::m] = 1
        rows.append(row)
        rhs.append(ident[k])
    svec = [_coords(np.asarray(s.matrix, dtype=complex), basis) for s in states]
    for (i, j), v in sorted(targets.items()):
        row = np.zeros(n_outcomes * m)
        row[j * m:(j + 1) * m] = svec[i]
        rows.append(row)
        rhs.append(v)
    A, b = np.array(rows), np.array(rhs)
    A_pinv = np.linalg.pinv(A)

    def to_ops(x):
        return np.einsum("jk,kab->jab", x.reshape(n_outcomes, m), basis)

    x = np.tile(ident / n_outcomes, n_outcomes)
    for it in range(iters):
        x = x - A_pinv @ (A @ x - b)
        ops = to_ops(x)
        evals, evecs = np.linalg.eigh(ops)
        if it % 10 == 0 and evals.min() >= -EPS / 10 and np.max(np.abs(A @ x - b)) <= EPS / 10:
            break
        evals = np.clip(evals, 0, None)
        psd = np.einsum("jab,jb,jcb->jac", evecs, evals, evecs.conj())
        x = np.array([_coords(p, basis) for p in psd]).ravel()
    x = x - A_pinv @ (A @ x - b)
    ops = to_ops(x)
    ops = (ops + np.conj(np.transpose(ops, (0, 2, 1)))) / 2
    if real:
        ops = ops.real
    try:
        povm = Povm(tuple(ops), real=real)
    except PhysicalityError:
        return None
    C = born_probabilities(states, povm)
    if any(abs(C[i, j] - v) > EPS for (i, j), v in targets.items()):
        return None
    return povm


# -- antidistinguishability ------------------------------------------------

def _check_states(states: Sequence[DensityOperator]) -> None:
    if len(states) < 2:
        raise ValueError("need at least two states")
    d = states[0].dim
    if any(s.dim != d for s in states):
        raise ValueError("states must share one dimension")


def _qubit_effects(rs: np.ndarray, ts: np.ndarray, real: bool) -> Optional[Povm]:
    effects = []
    for r, t in zip(rs, ts):
        effects.append(t / 2 * (I2 - r[0] * SX - r[1] * SY - r[2] * SZ))
    if real:
        effects = [e.real for e in effects]
    try:
        return Povm(tuple(effects), real=real)
    except PhysicalityError:
        return None


def is_antidistinguishable(states: Sequence[DensityOperator]) -> Optional[Povm]:
    """A POVM with nonzero effects and ``tr[rho_j M(j)] = 0`` for all j, or None.

    For qubits every state must be pure, and the weights need ``t_j > 0``
    with ``sum t_j r_j = 0`` and ``sum t_j = 2``; the weights maximizing the
    smallest ``t_j`` are used, giving ``M(j) = t_j/2 (1 - r_j . sigma)``.
    """
    _check_states(states)
    real = all(s.real for s in states)
    n = len(states)
    if states[0].dim == 2:
        if not all(s.is_pure() for s in states):
            return None
        rs = np.array([s.bloch() for s in states])
        # variables t_1..t_n, tau; maximize tau with t_k >= tau
        c = np.zeros(n + 1)
        c[-1] = -1
        A_eq = np.zeros((4, n + 1))
        A_eq[:3, :n] = rs.T
        A_eq[3, :n] = 1
        b_eq = np.array([0, 0, 0, 2.0])
        A_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=b_eq,
                      bounds=[(0, 2)] * (n + 1), method="highs")
        if res.status != 0 or -res.fun <= EPS:
            return None
        povm = _qubit_effects(rs, np.clip(res.x[:n], 0, None), real)
    else:
        povm = povm_feasibility(states, {(j, j): 0.0 for j in range(n)}, n, real=real)
    if povm is None or any(np.trace(e).real <= EPS for e in povm.effects):
        return None
    C = born_probabilities(states, povm)
    return povm if np.all(np.abs(np.diag(C)) <= EPS) else None


def span_dimension(d: int, real: bool) -> int:
    """Real dimension of the span of d x d density operators."""
    return d * (d + 1) // 2 if real else d * d


def is_uniformly_antidistinguishable(states: Sequence[DensityOperator]) -> Optional[Povm]:
    """A POVM reproducing ``C^opt_n`` on these states, or None.

    No search is attempted beyond the span-dimension bound (at most d^2
    states for complex qudits).
    """
    _check_states(states)
    n, d = len(states), states[0].dim
    real = all(s.real for s in states)
    if n > span_dimension(d, real):
        return None
    target = gen_copt(n, 1).to_numpy()

    def verified(povm):
        if povm is not None and max_abs_diff(born_probabilities(states, povm), target) <= EPS:
            return povm
        return None

    if d == 2:
        if not all(s.is_pure() for s in states):
            return None
        rs = np.array([s.bloch() for s in states])
        ts = np.empty(n)
        for k in range(n):
            j = 0 if k != 0 else 1
            gap = 1 - rs[j] @ rs[k]
            if gap <= EPS:
                return None
            ts[k] = 2 / ((n - 1) * gap)
        return verified(_qubit_effects(rs, ts, real))

    for povm in _candidate_povms(states, real):
        if verified(povm) is not None:
            return povm
    targets = {(i, j): float(target[i, j]) for i in range(n) for j in range(n)}
    return verified(povm_feasibility(states, targets, n, real=real))


def _candidate_povms(states, real):
    """Closed-form guesses tried before the numerical search."""
    n, d = len(states), states[0].dim
    S = [np.asarray(s.matrix) for s in states]
    eye = np.eye(d)
    out = []
    # inverse of rho_i = (1 - (n/d) M(i)) / (d - 1)
    try:
        out.append(Povm(tuple(d / n * (eye - (d - 1) * s) for s in S), real=real))
    except PhysicalityError:
        pass
    # inverse of the leave-one-out mixtures: rho_j = sum(rho') - (n-1) rho'_j
    total = sum(S)
    originals = [total - (n - 1) * s for s in S]
    projs = []
    for o in originals:
        w, v = np.linalg.eigh((o + o.conj().T) / 2)
        keep = v[:, w > 0.5]
        projs.append(keep @ keep.conj().T)
    rest = eye - sum(projs)
    if projs:
        projs[0] = projs[0] + rest
        try:
            out.append(Povm(tuple(projs), real=real))
        except PhysicalityError:
            pass
    return out


# -- constructions ---------------------------------------------------------

def mixture_construction(states: Sequence[DensityOperator]) -> list[DensityOperator]:
    """Leave-one-out uniform mixtures ``rho'_i = sum_{j != i} rho_j / (n-1)``."""
    n = len(states)
    if n < 2:
        raise ValueError("need at least two states")
    real = all(s.real for s in states)
    total = sum(np.asarray(s.matrix) for s in states)
    return [DensityOperator((total - s.matrix) / (n - 1), real=real) for s in states]


def basis_states(d: int, n: Optional[int] = None, real: bool = False) -> list[DensityOperator]:
    n = d if n is None else n
    return [DensityOperator(np.diag(np.eye(d)[k]), real=real) for k in range(n)]


def projective_povm(d: int, n: Optional[int] = None, real: bool = False) -> Povm:
    """Computational-basis measurement; with n < d the spare projectors join outcome n."""
    n = d if n is None else n
    effects = [np.diag(np.eye(d)[k]).astype(complex) for k in range(n)]
    effects[-1] = effects[-1] + sum((np.diag(np.eye(d)[k]) for k in range(n, d)), np.zeros((d, d)))
    return Povm(tuple(effects), real=real)


_SIC_SIGNS = ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))


def qubit_sic_povm() -> Povm:
    """Tetrahedral qubit SIC: ``M(j) = (1 + s_j . sigma / sqrt 3) / 4``."""
    k = 1 / np.sqrt(3)
    return Povm(tuple((I2 + k * (a * SX + b * SY + c * SZ)) / 4 for a, b, c in _SIC_SIGNS))


def trine_povm(real: bool = False) -> Povm:
    """Qubit trine ``N(j) = (1 + n_j . sigma) / 3``; rebit version uses sigma_z for sigma_y."""
    second = SZ if real else SY
    h = np.sqrt(3) / 2
    effects = (
        (I2 + SX) / 3,
        (I2 - SX / 2 + h * second) / 3,
        (I2 - SX / 2 - h * second) / 3,
    )
    if real:
        effects = tuple(e.real for e in effects)
    return Povm(effects, real=real)


def qutrit_sic_povm() -> Povm:
    """Hesse SIC: Weyl-Heisenberg orbit of the fiducial (0, 1, -1)/sqrt 2, scaled by 1/3."""
    d = 3
    w = np.exp(2j * np.pi / d)
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag([w ** k for k in range(d)])
    fid = np.array([0, 1, -1]) / np.sqrt(2)
    effects = []
    for a in range(d):
        for b in range(d):
            v = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b) @ fid
            effects.append(np.outer(v, v.conj()) / d)
    return Povm(tuple(effects))


def sic_povm(d: int) -> Povm:
    if d == 2:
        return qubit_sic_povm()
    if d == 3:
        return qutrit_sic_povm()
    raise ValueError("built-in SIC measurements exist for d = 2, 3 only")


def is_symmetric(povm: Povm, tol: float = EPS) -> bool:
    """Rank-1 effects with constant trace and constant pairwise overlap."""
    effects = [np.asarray(e, dtype=complex) for e in povm.effects]
    for e in effects:
        evals = np.linalg.eigvalsh(e)
        if np.sum(evals > tol) != 1:
            return False
    traces = [np.trace(e).real for e in effects]
    overlaps = [np.trace(a @ b).real for i, a in enumerate(effects) for b in effects[i + 1:]]
    return np.ptp(traces) <= tol and (not overlaps or np.ptp(overlaps) <= tol)


def sym_states_from_povm(povm: Povm, n: int, d: int) -> list[DensityOperator]:
    """States ``rho_i = (1 - (n/d) M(i)) / (d-1)`` for a symmetric POVM."""
    if povm.outcomes != n or povm.dim != d:
        raise ValueError(f"POVM has {povm.outcomes} outcomes in dimension {povm.dim}, expected {n}, {d}")
    if d < 2:
        raise ValueError("need d >= 2")
    if not is_symmetric(povm):
        raise PhysicalityError("POVM is not symmetric (rank-1, constant trace and overlap)")
    eye = np.eye(d)
    return [DensityOperator((eye - n / d * np.asarray(e)) / (d - 1), real=povm.real) for e in povm.effects]


def qubit_uniform_set(n: int, real: bool = False) -> list[BlochVector]:
    """Unit Bloch vectors with pairwise dot products ``1/(1-n)`` and weights ``2/n``.

    n=2: antipodal pair, n=3: trine (x-y plane, or x-z for rebits),
    n=4: tetrahedron (not available for rebits).
    """
    if n == 2:
        vecs = [(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)]
    elif n == 3:
        h = np.sqrt(3) / 2
        vecs = [(-1.0, 0.0, 0.0), (0.5, -h, 0.0), (0.5, h, 0.0)]
        if real:
            vecs = [(x, 0.0, y) for x, y, _ in vecs]
    elif n == 4:
        if real:
            raise ValueError("four such vectors cannot lie in a plane")
        k = 1 / np.sqrt(3)
        vecs = [(-a * k, -b * k, -c * k) for a, b, c in _SIC_SIGNS]
    else:
        raise ValueError(f"uniformly antidistinguishable qubit sets exist only for n in {{2, 3, 4}}, got {n}")
    return [BlochVector(tuple(v), weight=2 / n) for v in vecs]


def qubit_uniform_setup(n: int, real: bool = False) -> tuple[list[DensityOperator], Povm]:
    """States and measurement realizing ``C^opt_{n,1}`` on a qubit (or rebit)."""
    vecs = qubit_uniform_set(n, real)
    states = [v.state(real) for v in vecs]
    rs = np.array([v.r for v in vecs])
    povm = _qubit_effects(rs, np.array([v.weight for v in vecs]), real)
    return states, povm


# outcome pair of each state of qutrit_c42(), in row order of C^opt_{4,2}
QUTRIT_C42_LABELS = ("34", "24", "23", "14", "13", "12")


def qutrit_c42() -> tuple[list[DensityOperator], Povm]:
    """Six pure qutrit states and a four-outcome POVM realizing ``C^opt_{4,2}``.

    ``rho_ij`` gives outcomes i and j with probability 1/2 each, so it sits
    on the row of the complementary tuple; states are returned in row order,
    i.e. labelled by :data:`QUTRIT_C42_LABELS`.
    """
    q = 0.25
    h = 1 / (2 * np.sqrt(2))
    rhos = [
        [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
        [[q, -q, -h], [-q, q, h], [-h, h, 0.5]],
        [[q, q, -h], [q, q, -h], [-h, -h, 0.5]],
        [[q, q, h], [q, q, h], [h, h, 0.5]],
        [[q, -q, h], [-q, q, -h], [h, -h, 0.5]],
        [[0, 0, 0], [0, 1, 0], [0, 0, 0]],
    ]
    effects = [
        [[0.5, 0, -h], [0, 0, 0], [-h, 0, q]],
        [[0.5, 0, h], [0, 0, 0], [h, 0, q]],
        [[0, 0, 0], [0, 0.5, h], [0, h, q]],
        [[0, 0, 0], [0, 0.5, -h], [0, -h, q]],
    ]
    states = [DensityOperator(np.array(r, dtype=float), real=True) for r in reversed(rhos)]
    return states, Povm(tuple(np.array(e, dtype=float) for e in effects), real=True)


def compose_with_certificate(states: Sequence[DensityOperator], povm: Povm, cert) -> tuple[list[DensityOperator], Povm]:
    """Mix states with the rows of L and post-process outcomes with R.

    The new setup has Born matrix ``L @ born(states, povm) @ R``.
    """
    L, R = cert.L.to_numpy(), cert.R.to_numpy()
    if L.shape[1] != len(states):
        raise ValueError(f"L has {L.shape[1]} columns but there are {len(states)} states")
    if R.shape[0] != povm.outcomes:
        raise ValueError(f"R has {R.shape[0]} rows but the POVM has {povm.outcomes} outcomes")
    real = povm.real and all(s.real for s in states)
    S = np.array([np.asarray(s.matrix) for s in states])
    E = np.array([np.asarray(e) for e in povm.effects])
    new_states = [DensityOperator(np.tensordot(row, S, axes=1), real=real) for row in L]
    new_effects = tuple(np.tensordot(R[:, q], E, axes=1) for q in range(R.shape[1]))
    return new_states, Povm(new_effects, real=real)
