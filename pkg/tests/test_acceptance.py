"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (bypassing output capture)
with its runtime, then re-raises on failure so the pytest status agrees.
"""
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest

from reference_data import C42, CERTS_INTO_C42, optimal_n1
from pik.commat import CommMatrix, gen_copt, psuc, psuc_prime
from pik.implsearch import SearchBudget, SearchStatus, SystemSpec, Theorem, find_implementation
from pik.linalg import matmul
from pik.quantum import (
    SX,
    SY,
    DensityOperator,
    Povm,
    born_probabilities,
    compose_with_certificate,
    is_antidistinguishable,
    is_uniformly_antidistinguishable,
    max_abs_diff,
    qubit_sic_povm,
    qubit_uniform_setup,
    qutrit_c42,
    sym_states_from_povm,
)
from pik.tables import CellStatus, build_table, check_table_consistency, inconsistent_fixtures
from pik.ultraweak import (
    Certificate,
    NoReason,
    Verdict,
    build_diagonal_cert,
    build_t_reduction,
    check_certificate,
    compose,
    majorizes,
)


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(label, limit=None):
        start = time.perf_counter()
        ok, note = False, ""
        try:
            yield
            elapsed = time.perf_counter() - start
            ok = limit is None or elapsed < limit
            if not ok:
                note = f" exceeded {limit:g} s"
        except Exception as exc:
            elapsed = time.perf_counter() - start
            note = f" {type(exc).__name__}: {exc}".rstrip()
            raise
        finally:
            with capsys.disabled():
                print(f"\n{'PASS' if ok else 'FAIL'} {label} ({elapsed:.2f} s){note}")
        assert ok, f"{label}{note}"

    return run


def cm(rows):
    return CommMatrix.from_rows(rows)


def test_exact_matrix_reproduction(criterion):
    with criterion("exact matrix reproduction", limit=1.0):
        assert gen_copt(4, 2) == cm(C42)
        assert all(gen_copt(4, 2)[i, j] == F(C42[i][j]) for i in range(6) for j in range(4))
        for n in range(2, 11):
            assert gen_copt(n, 1) == cm(optimal_n1(n))


def test_success_functionals(criterion):
    with criterion("success functionals"):
        for n in range(2, 13):
            C = gen_copt(n)
            assert psuc(C) == psuc_prime(C) == F(1, n - 1)


def test_certificate_fixtures(criterion):
    with criterion("certificate fixtures", limit=5.0):
        for L, R, M in CERTS_INTO_C42.values():
            assert check_certificate(cm(M), gen_copt(4, 2), Certificate(cm(L), cm(R)))
        for n in range(2, 8):
            for t in range(1, n):
                assert check_certificate(gen_copt(n, t), gen_copt(n + 1, t + 1), build_diagonal_cert(n, t))
            for t in range(2, n):
                assert check_certificate(gen_copt(n, t - 1), gen_copt(n, t), build_t_reduction(n, t))


def test_negative_decisions(criterion):
    with criterion("negative decisions", limit=60.0):
        d = majorizes(gen_copt(2), gen_copt(3))
        assert d.verdict is Verdict.NO and d.reason is NoReason.RANK_EXCEEDS
        d = majorizes(gen_copt(3), gen_copt(2))
        assert d.verdict is Verdict.NO and d.reason is not NoReason.RANK_EXCEEDS
        assert d.gap_bound is not None and d.gap_bound >= F(1, 10**6)


def test_quantum_fixtures(criterion):
    with criterion("quantum fixtures"):
        povm = qubit_sic_povm()
        assert max_abs_diff(born_probabilities(sym_states_from_povm(povm, 4, 2), povm), gen_copt(4)) <= 1e-12
        states, povm = qubit_uniform_setup(3)
        assert max_abs_diff(born_probabilities(states, povm), gen_copt(3)) <= 1e-12
        states, povm = qutrit_c42()
        assert max_abs_diff(born_probabilities(states, povm), gen_copt(4, 2)) <= 1e-12


def test_antidistinguishability_dichotomy(criterion):
    with criterion("antidistinguishable but not uniformly"):
        xy = [DensityOperator((np.eye(2) + s * P) / 2) for P in (SX, SY) for s in (1, -1)]
        witness = is_antidistinguishable(xy)
        assert witness is not None
        assert all(abs(np.trace(r.matrix @ e)) <= 1e-9 for r, e in zip(xy, witness.effects))
        assert is_uniformly_antidistinguishable(xy) is None


def test_qubit_boundary(criterion):
    qubit = SystemSpec("qubit")
    budget = SearchBudget(restarts=2, iters=200)
    with criterion("qubit implementation boundary"):
        for n in (2, 3, 4):
            v = find_implementation(gen_copt(n), qubit, budget)
            assert v.status is SearchStatus.REALIZABLE
            assert max_abs_diff(born_probabilities(v.states, v.povm), gen_copt(n)) <= 1e-9
        v = find_implementation(gen_copt(5), qubit, budget)
        assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.SPAN_BOUND
        for n in range(3, 9):
            for t in range(2, n):
                v = find_implementation(gen_copt(n, t), qubit, budget)
                assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.NO_QUBIT_T2


def test_tables(criterion):
    with criterion("communication tables", limit=120.0):
        qubit = build_table(SystemSpec("qubit"), 4)
        rebit = build_table(SystemSpec("rebit"), 4)
        assert qubit.with_status(CellStatus.IMPLEMENTABLE) == [(2, 1), (3, 1), (4, 1)]
        assert qubit.with_status(CellStatus.IMPOSSIBLE) == [(3, 2), (4, 2), (4, 3)]
        assert rebit.with_status(CellStatus.IMPLEMENTABLE) == [(2, 1), (3, 1)]
        assert rebit.with_status(CellStatus.IMPOSSIBLE) == [(3, 2), (4, 1), (4, 2), (4, 3)]
        assert check_table_consistency(qubit) == [] and check_table_consistency(rebit) == []
        for table in inconsistent_fixtures().values():
            assert check_table_consistency(table)


def _stochastic(rng, rows, cols, denom=6):
    out = []
    for _ in range(rows):
        w = rng.integers(0, denom, size=cols)
        if w.sum() == 0:
            w[rng.integers(cols)] = 1
        out.append([F(int(x), int(w.sum())) for x in w])
    return cm(out)


def _random_setup(rng, d, k, n):
    states = []
    for _ in range(k):
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = G @ G.conj().T
        states.append(DensityOperator(rho / np.trace(rho).real))
    A = [(lambda G: G @ G.conj().T)(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(n)]
    w, V = np.linalg.eigh(sum(A))
    S = V @ np.diag(w ** -0.5) @ V.conj().T
    return states, Povm(tuple(S @ a @ S for a in A))


def test_property_suites(criterion):
    rng = np.random.default_rng(7)
    with criterion("property suites"):
        # preorder laws on random stochastic matrices up to 6x5
        for _ in range(100):
            N = _stochastic(rng, int(rng.integers(1, 7)), int(rng.integers(1, 6)))
            assert majorizes(N, N).verdict is Verdict.YES
            c1 = Certificate(_stochastic(rng, int(rng.integers(1, 6)), N.rows), _stochastic(rng, N.cols, int(rng.integers(1, 6))))
            M = cm(matmul(matmul(c1.L.data, N.data), c1.R.data))
            c2 = Certificate(_stochastic(rng, int(rng.integers(1, 6)), M.rows), _stochastic(rng, M.cols, int(rng.integers(1, 6))))
            K = cm(matmul(matmul(c2.L.data, M.data), c2.R.data))
            assert check_certificate(K, N, compose(c2, c1))

        # Born matrices are row-stochastic
        for _ in range(100):
            d, k, n = (int(x) for x in rng.integers(2, 5, size=3))
            C = born_probabilities(*_random_setup(rng, d, k, n))
            assert np.all(C >= -1e-9) and np.max(np.abs(C.sum(axis=1) - 1)) <= 1e-9

        # closure: compose each certificate with a realization, then apply Born
        states, povm = qutrit_c42()
        for L, R, M in CERTS_INTO_C42.values():
            s, p = compose_with_certificate(states, povm, Certificate(cm(L), cm(R)))
            assert max_abs_diff(born_probabilities(s, p), cm(M)) <= 1e-9
        for n in range(2, 5):
            for t in range(1, n):
                big = find_implementation(gen_copt(n + 1, t + 1), SystemSpec("qudit", n + 1))
                assert big.status is SearchStatus.REALIZABLE
                s, p = compose_with_certificate(big.states, big.povm, build_diagonal_cert(n, t))
                assert max_abs_diff(born_probabilities(s, p), gen_copt(n, t)) <= 1e-9
            for t in range(2, n):
                big = find_implementation(gen_copt(n, t), SystemSpec("qudit", n))
                s, p = compose_with_certificate(big.states, big.povm, build_t_reduction(n, t))
                assert max_abs_diff(born_probabilities(s, p), gen_copt(n, t - 1)) <= 1e-9
