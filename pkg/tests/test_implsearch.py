from fractions import Fraction as F

import numpy as np
import pytest

from reference_data import CERTS_INTO_C42
from pik.commat import CommMatrix, gen_copt, identity
from pik.implsearch import (
    SearchBudget,
    SearchStatus,
    SystemSpec,
    Theorem,
    _gram_rank,
    constructions,
    find_implementation,
    known_impossibility,
    operational_dimension,
    seesaw,
)
from pik.quantum import EPS, DensityOperator, born_probabilities, compose_with_certificate, max_abs_diff, projective_povm
from pik.ultraweak import Certificate, build_collapse_cert, build_diagonal_cert, build_t_reduction, copt_chain

QUBIT, REBIT = SystemSpec("qubit"), SystemSpec("rebit")
QUTRIT = SystemSpec("qudit", 3)
SMALL = SearchBudget(restarts=2, iters=150)


def assert_realizes(v, C):
    assert v.status is SearchStatus.REALIZABLE
    assert max_abs_diff(born_probabilities(v.states, v.povm), C) <= EPS


# -- systems ---------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("qubit", SystemSpec("qubit")),
    ("rebit", SystemSpec("rebit")),
    ("qudit:3", SystemSpec("qudit", 3)),
    ("qudit:2", SystemSpec("qubit")),
    (" Qudit:5 ", SystemSpec("qudit", 5)),
])
def test_parse(text, expected):
    assert SystemSpec.parse(text) == expected


@pytest.mark.parametrize("text", ["qutrit", "qudit:x", "qudit:1", "rebit:3"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        SystemSpec.parse(text)


def test_operational_dimension():
    assert operational_dimension(QUBIT) == 2
    assert operational_dimension(REBIT) == 2
    assert operational_dimension(QUTRIT) == 3
    assert REBIT.real and not QUBIT.real and QUBIT.field == "complex"


# -- qubit boundary ----------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_qubit_realizes_small_uniform_tests(n):
    assert_realizes(find_implementation(gen_copt(n), QUBIT, SMALL), gen_copt(n))


def test_qubit_five_is_excluded_by_span_bound():
    v = find_implementation(gen_copt(5), QUBIT, SMALL)
    assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.SPAN_BOUND


@pytest.mark.parametrize("n,t", [(n, t) for n in range(3, 8) for t in range(2, n)])
@pytest.mark.parametrize("sys", [QUBIT, REBIT])
def test_no_two_level_realization_beyond_t1(n, t, sys):
    v = find_implementation(gen_copt(n, t), sys, SMALL)
    assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.NO_QUBIT_T2


def test_rebit_c41_is_excluded_by_planar_geometry():
    v = find_implementation(gen_copt(4), REBIT, SMALL)
    assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.BLOCH_GRAM


def test_gram_rank_argument():
    # pairwise dot 1/(1-n) on n unit vectors needs n-1 dimensions
    for n in range(2, 8):
        assert _gram_rank(n) == n - 1


def test_qubit_and_rebit_diverge():
    targets = [gen_copt(n) for n in (2, 3, 4)]
    qubit = [find_implementation(C, QUBIT, SMALL).status for C in targets]
    rebit = [find_implementation(C, REBIT, SMALL).status for C in targets]
    assert qubit.count(SearchStatus.REALIZABLE) == 3
    assert rebit.count(SearchStatus.REALIZABLE) == 2
    assert operational_dimension(QUBIT) == operational_dimension(REBIT)


def test_rebit_realizations_are_real():
    for n in (2, 3):
        v = find_implementation(gen_copt(n), REBIT, SMALL)
        assert all(np.isrealobj(s.matrix) for s in v.states)
        assert all(np.isrealobj(e) for e in v.povm.effects)


# -- qudits ----------------------------------------------------------------

def test_qutrit_c42_is_realizable():
    v = find_implementation(gen_copt(4, 2), QUTRIT, SMALL)
    assert_realizes(v, gen_copt(4, 2))
    assert "qutrit-c42" in v.provenance


@pytest.mark.parametrize("d", [3, 4, 5])
def test_mixtures_up_to_dimension(d):
    sys = SystemSpec("qudit", d)
    for n in range(2, d + 1):
        assert_realizes(find_implementation(gen_copt(n), sys, SMALL), gen_copt(n))


def test_qutrit_sic_realizes_nine():
    v = find_implementation(gen_copt(9), QUTRIT, SMALL)
    assert_realizes(v, gen_copt(9))


def test_identity_beyond_dimension_is_impossible():
    v = find_implementation(identity(4), QUTRIT, SMALL)
    assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.OPERATIONAL_DIMENSION
    # on a qubit the t >= 2 theorem already covers identity-like targets
    assert find_implementation(identity(3), QUBIT, SMALL).theorem is Theorem.NO_QUBIT_T2
    v = find_implementation(gen_copt(4, 3), QUTRIT, SMALL)
    assert v.status is SearchStatus.IMPOSSIBLE and v.theorem is Theorem.OPERATIONAL_DIMENSION


def test_collapse_bound_for_qutrit():
    # floor(6/2) = 3 <= 3 allows C^opt_{6,4}; floor(8/2) = 4 > 3 forbids C^opt_{8,6}
    assert known_impossibility(6, 4, QUTRIT) is None
    assert known_impossibility(8, 6, QUTRIT)[0] is Theorem.OPERATIONAL_DIMENSION


def test_open_qutrit_case_reports_unknown():
    v = find_implementation(gen_copt(5), QUTRIT, SearchBudget(restarts=1, iters=60))
    assert v.status is SearchStatus.UNKNOWN
    assert v.residual is not None and v.residual > 0 and v.theorem is None


def test_row_permuted_target():
    C = gen_copt(4)
    P = CommMatrix(tuple(reversed(C.data)))
    assert_realizes(find_implementation(P, QUBIT, SMALL), P)


def test_constructions_reproduce_their_targets():
    for sys in (QUBIT, REBIT, QUTRIT, SystemSpec("qudit", 4)):
        for shape, (_, build) in constructions(sys).items():
            states, povm = build()
            assert max_abs_diff(born_probabilities(states, povm), gen_copt(*shape)) <= EPS


# -- closure under certificates ----------------------------------------------

def _known_certificates():
    out = []
    for name, (L, R, M) in CERTS_INTO_C42.items():
        out.append(((4, 2), CommMatrix.from_rows(M), Certificate(CommMatrix.from_rows(L), CommMatrix.from_rows(R))))
    out.append(((3, 2), gen_copt(2), build_diagonal_cert(2, 1)))
    out.append(((4, 2), gen_copt(3), build_diagonal_cert(3, 1)))
    out.append(((4, 2), gen_copt(4), build_t_reduction(4, 2)))
    out.append(((3, 2), gen_copt(3), build_t_reduction(3, 2)))
    out.append(((4, 2), gen_copt(2, 1), build_collapse_cert(2, 4, 2)))
    out.append(((9, 1), gen_copt(9), Certificate(identity(9), identity(9))))
    return out


@pytest.mark.parametrize("src,M,cert", _known_certificates())
def test_downward_closure(src, M, cert):
    v = find_implementation(gen_copt(*src), QUTRIT, SMALL)
    assert v.status is SearchStatus.REALIZABLE
    states, povm = compose_with_certificate(v.states, v.povm, cert)
    assert max_abs_diff(born_probabilities(states, povm), M) <= EPS


def test_closure_along_chains_in_four_dimensions():
    sys = SystemSpec("qudit", 4)
    v = find_implementation(gen_copt(4, 3), sys, SMALL)
    for shape in [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2)]:
        cert = copt_chain(shape, (4, 3))
        states, povm = compose_with_certificate(v.states, v.povm, cert)
        assert max_abs_diff(born_probabilities(states, povm), gen_copt(*shape)) <= EPS


# -- see-saw ---------------------------------------------------------------

def _random_target(rng, d, k, n):
    kets = rng.normal(size=(k, d)) + 1j * rng.normal(size=(k, d))
    states = [DensityOperator.pure(v) for v in kets]
    return born_probabilities(states, projective_povm(d, n))


@pytest.mark.parametrize("d,k,n", [(2, 3, 2), (2, 4, 2), (3, 3, 3)])
def test_seesaw_is_monotone_and_converges(d, k, n, rng):
    C = _random_target(rng, d, k, n)
    run = seesaw(C, d, False, seed=0, iters=2000)
    assert all(b <= a for a, b in zip(run.objective_trace, run.objective_trace[1:]))
    assert run.residual < EPS


def test_seesaw_monotone_on_unreachable_target():
    run = seesaw(gen_copt(3, 2).to_numpy(), 2, False, seed=3, iters=300)
    assert all(b <= a for a, b in zip(run.objective_trace, run.objective_trace[1:]))
    assert run.residual > 1e-3


def test_search_falls_back_to_seesaw(rng):
    C = _random_target(rng, 2, 3, 2)
    exact = CommMatrix.from_rows([[F(x).limit_denominator(10**6) for x in row] for row in C])
    exact = CommMatrix.from_rows([[row[0], 1 - row[0]] for row in exact.data])
    # rounding keeps the target realizable: entries in [0, 1] with two outcomes
    v = find_implementation(exact, QUBIT, SearchBudget(restarts=4, iters=2000))
    assert_realizes(v, exact)
    assert v.provenance.startswith("seesaw")


def test_seesaw_is_deterministic():
    budget = SearchBudget(restarts=2, iters=80, seed=7)
    a = find_implementation(gen_copt(5), QUTRIT, budget)
    b = find_implementation(gen_copt(5), QUTRIT, budget)
    assert a.residual == b.residual and a.provenance == b.provenance


def test_verdict_serializes():
    d = find_implementation(gen_copt(3), QUBIT, SMALL).to_dict()
    assert d["status"] == "realizable" and len(d["states"]) == 3 and len(d["effects"]) == 3
    d = find_implementation(gen_copt(5), QUBIT, SMALL).to_dict()
    assert d["status"] == "impossible" and d["theorem"] == Theorem.SPAN_BOUND.value

