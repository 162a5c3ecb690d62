import numpy as np
import pytest

from modules.errors import DegenerateInstanceError, ValidationError
from modules.hamiltonian import SpinPolynomial, build_total
from modules.lattice_model import Peptide
from modules.pauli_engine import (PauliSum, PauliTerm, alpha1, cd_term, commutator, count_terms, driver,
                                  z_poly_to_pauli)
from tests import oracles


def random_diagonal(rng, n_q, n_terms=6):
    terms = {}
    for _ in range(n_terms):
        k = int(rng.integers(1, min(n_q, 4) + 1))
        qs = tuple(sorted(rng.choice(n_q, size=k, replace=False).tolist()))
        terms[qs] = float(rng.normal())
    return SpinPolynomial(n_q, terms)


def random_pauli(rng, n_q, n_terms=5):
    terms = {}
    for _ in range(n_terms):
        letters = "".join(rng.choice(list("IXYZ"), size=n_q))
        terms[letters] = complex(rng.normal(), rng.normal())
    return PauliSum(n_q, terms)


def test_products():
    x = PauliSum(1, {"X": 1})
    y = PauliSum(1, {"Y": 1})
    z = PauliSum(1, {"Z": 1})
    assert x * y == PauliSum(1, {"Z": 1j})
    assert y * z == PauliSum(1, {"X": 1j})
    assert z * x == PauliSum(1, {"Y": 1j})
    assert y * x == PauliSum(1, {"Z": -1j})
    assert (x * x) == PauliSum(1, {"I": 1})


def test_commutator_single_qubit():
    x = PauliSum(1, {"X": 1})
    z = PauliSum(1, {"Z": 1})
    assert commutator(x, z) == PauliSum(1, {"Y": -2j})
    assert commutator(z, z).is_zero()


def test_cancellation_drops_terms():
    a = PauliSum(2, {"XZ": 1.0, "ZZ": 2.0})
    assert len(a - a) == 0
    assert len(a + PauliSum(2, {"XZ": -1.0})) == 1


@pytest.mark.parametrize("seed", range(20))
def test_commutator_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n_q = int(rng.integers(1, 6))
    a, b = random_pauli(rng, n_q), random_pauli(rng, n_q)
    dense = oracles.commutator(oracles.pauli_to_matrix(a), oracles.pauli_to_matrix(b))
    assert np.allclose(oracles.pauli_to_matrix(commutator(a, b)), dense, atol=1e-10)
    assert np.allclose(oracles.pauli_to_matrix(a * b),
                       oracles.pauli_to_matrix(a) @ oracles.pauli_to_matrix(b), atol=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_cd_term_and_alpha1_match_dense(seed):
    rng = np.random.default_rng(100 + seed)
    n_q = int(rng.integers(1, 6))
    h_f = random_diagonal(rng, n_q)
    h = rng.normal(size=n_q) if seed % 2 else np.zeros(n_q)
    h_i = driver(h)
    cd = cd_term(h_i, h_f)

    dense_i = oracles.pauli_to_matrix(h_i)
    dense_f = oracles.pauli_to_matrix(z_poly_to_pauli(h_f))
    expected = 1j * oracles.commutator(dense_i, dense_f)
    assert np.allclose(oracles.pauli_to_matrix(cd.pauli), expected, atol=1e-10)
    for term in cd.terms():
        assert term.coeff.imag == 0
        assert term.n_y == 1

    for lam in (0.0, 0.25, 0.5, 1.0):
        want = oracles.alpha1(dense_i, dense_f, lam)
        got = cd.alpha1(lam)
        assert abs(got - want) <= 1e-9 * abs(want)


def test_single_qubit_alpha1_is_constant():
    h_f = SpinPolynomial(1, {(0,): 1})
    for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
        assert alpha1(driver([0.0]), h_f, lam) == pytest.approx(-0.25, abs=1e-15)


def test_single_qubit_alpha1_with_bias():
    h_f = SpinPolynomial(1, {(0,): 1})
    for h in (-1.5, 0.5, 2.0):
        for lam in (0.0, 0.5, 1.0):
            want = -1.0 / (4.0 * (1.0 + (1.0 - lam) * h * h))
            assert alpha1(driver([h]), h_f, lam) == pytest.approx(want, rel=1e-12)


def test_cd_strings_do_not_depend_on_bias():
    rng = np.random.default_rng(9)
    h_f = random_diagonal(rng, 4)
    plain = cd_term(driver(np.zeros(4)), h_f)
    biased = cd_term(driver(rng.normal(size=4)), h_f)
    assert plain.pauli == biased.pauli
    assert plain.alpha1(0.5) != biased.alpha1(0.5)


def test_cd_rejects_off_diagonal_problem():
    with pytest.raises(ValidationError):
        cd_term(driver([0.0, 0.0]), PauliSum(2, {"XI": 1.0}))


def test_constant_problem_is_degenerate():
    cd = cd_term(driver([0.0, 0.0]), SpinPolynomial(2, {(): 3.0}))
    assert len(cd.pauli) == 0
    with pytest.raises(DegenerateInstanceError):
        cd.alpha1(0.5)
    with pytest.raises(ValidationError):
        cd.alpha1(1.5)


def test_pruning_is_monotone(hp):
    h_f = build_total(Peptide.from_string("HPHPPHHPH"), hp)
    cd = cd_term(driver(np.zeros(h_f.n_q)), h_f)
    thetas = [0.0, 0.01, 0.1, 1.0, 5.0, 50.0, float("inf")]
    counts = [len(cd.surviving(theta, 1.0)) for theta in thetas]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] == len(cd.pauli)
    assert counts[-1] == 0
    assert cd.gate_estimate(float("inf"), 1.0, 3) == 0


def test_gate_estimate_counts_multi_body_terms():
    # H_f = Z0 + Z0 Z1：i[-X0, Z0] = -2 Y0，i[-X0 - X1, Z0 Z1] = -2 Y0 Z1 - 2 Z0 Y1
    h_f = SpinPolynomial(2, {(0,): 1.0, (0, 1): 1.0})
    cd = cd_term(driver([0.0, 0.0]), h_f)
    assert cd.pauli == PauliSum(2, {"YI": -2.0, "YZ": -2.0, "ZY": -2.0})
    assert cd.gate_estimate(0.0, 1.0, 1) == 4
    assert cd.gate_estimate(0.0, 1.0, 3) == 12
    assert cd.r_coeffs == {"YI": 2.0, "YZ": 2.0, "ZY": 2.0}


def test_count_terms_symbolic_path_handles_hardware_scale(hp):
    h_f = build_total(Peptide.from_string("IDWKKLLDAAKQIL"), hp)
    assert h_f.n_q == 46
    counts = count_terms(h_f, [0.0, 0.01, 1.0])
    assert counts[0.0] >= counts[0.01] >= counts[1.0] > 0


def test_term_letters_round_trip():
    term = PauliTerm.from_letters("IXYZ", 0.5)
    assert term.letters == "IXYZ"
    assert term.weight == 3
    assert term.n_y == 1
    assert PauliSum(4, {"IXYZ": 0.5}).to_text() == "0.5 IXYZ"
