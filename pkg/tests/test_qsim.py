import math

import numpy as np
import pytest

from modules.errors import SimulationCapError, ValidationError
from modules.hamiltonian import SpinPolynomial
from modules.pauli_engine import PauliTerm, cd_term, driver
from modules.qsim import (SampleSet, StateVector, apply_pauli_rotation, bitstring_to_index, exact_distribution,
                          index_to_bitstring, prepare_initial, sample, trotter_impulse)
from tests import oracles


def test_little_endian_indexing():
    assert index_to_bitstring(1, 3) == "100"
    assert bitstring_to_index("001") == 4
    state = StateVector.basis("10")
    assert state.expectation_z(0) == -1.0
    assert state.expectation_z(1) == 1.0


def test_initial_state_is_driver_ground_state():
    for h in ([0.0], [1.3], [-0.7], [0.4, -2.0, 0.0]):
        state = prepare_initial(h)
        dense = oracles.pauli_to_matrix(driver(h))
        energy = np.vdot(state.amplitudes, dense @ state.amplitudes).real
        assert energy == pytest.approx(-sum(math.sqrt(1 + v * v) for v in h), abs=1e-12)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_positive_bias_polarizes_toward_one():
    state = prepare_initial([2.0, -2.0])
    assert state.expectation_z(0) < 0
    assert state.expectation_z(1) > 0


@pytest.mark.parametrize("letters", ["X", "Y", "Z", "XY", "YZI", "ZXYX"])
def test_rotation_matches_dense(letters):
    rng = np.random.default_rng(len(letters))
    n_q = len(letters)
    amps = rng.normal(size=2 ** n_q) + 1j * rng.normal(size=2 ** n_q)
    amps /= np.linalg.norm(amps)
    state = StateVector(amps)
    apply_pauli_rotation(state, PauliTerm.from_letters(letters), 0.37)
    assert np.allclose(state.amplitudes, oracles.expm_pauli(letters, 0.37) @ amps, atol=1e-12)


def test_norm_preserved_over_many_rotations():
    rng = np.random.default_rng(0)
    n_q = 4
    state = prepare_initial(rng.normal(size=n_q))
    for _ in range(10_000):
        letters = "".join(rng.choice(list("IXYZ"), size=n_q))
        apply_pauli_rotation(state, PauliTerm.from_letters(letters), float(rng.normal()))
    assert abs(state.norm() - 1.0) <= 1e-10


def test_diagonal_rotations_keep_distribution():
    state = prepare_initial([0.3, -1.1, 0.8])
    before = state.probabilities().copy()
    for letters in ("ZII", "ZZI", "IZZ", "ZZZ"):
        apply_pauli_rotation(state, PauliTerm.from_letters(letters), 1.234)
    assert np.allclose(state.probabilities(), before, atol=1e-14)


def test_single_qubit_impulse_closed_form():
    """H_f = Z，h=0，T=1：A = α₁·(-2Y)，α₁ = -1/4，角度 1/2，⟨Z⟩ = -sin 1"""
    cd = cd_term(driver([0.0]), SpinPolynomial(1, {(0,): 1}))
    state = prepare_initial([0.0])
    trotter_impulse(state, cd, 1.0, 1, 0.0)
    assert state.expectation_z(0) == pytest.approx(-math.sin(1.0), abs=1e-10)
    expected = oracles.expm_pauli("Y", 0.5) @ (np.ones(2) / math.sqrt(2))
    assert np.allclose(state.amplitudes, expected, atol=1e-10)


def test_infinite_threshold_is_identity():
    h_f = SpinPolynomial(2, {(0,): 1.0, (0, 1): -0.5})
    cd = cd_term(driver([0.0, 0.0]), h_f)
    state = prepare_initial([0.0, 0.0])
    before = state.amplitudes.copy()
    trotter_impulse(state, cd, 1.0, 4, float("inf"))
    assert np.array_equal(state.amplitudes, before)


def test_cap_is_enforced():
    with pytest.raises(SimulationCapError):
        prepare_initial(np.zeros(5), cap=4)


def test_sampling_basis_state():
    state = StateVector.basis("0110")
    samples = sample(state, 1000, seed=1)
    assert samples.counts == {"0110": 1000}


def test_sampling_plus_state_is_balanced():
    samples = sample(prepare_initial([0.0]), 100_000, seed=4)
    ones = samples.counts.get("1", 0)
    sigma = math.sqrt(100_000 * 0.25)
    assert abs(ones - 50_000) < 5 * sigma


def test_sampling_is_deterministic():
    state = prepare_initial([0.2, -0.4, 1.0])
    assert sample(state, 500, seed=9).counts == sample(state, 500, seed=9).counts
    assert sample(state, 500, seed=np.random.SeedSequence([9, 1])).counts == \
        sample(state, 500, seed=np.random.SeedSequence([9, 1])).counts


def test_sampling_rejects_unnormalized_state():
    state = StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        sample(state, 10, seed=0)


def test_exact_distribution():
    dist = exact_distribution(prepare_initial([0.0, 0.0]))
    assert set(dist) == {"00", "01", "10", "11"}
    assert all(p == pytest.approx(0.25) for p in dist.values())


def test_sample_set_ranking_and_csv(tmp_path):
    h_f = SpinPolynomial(2, {(0,): 1.0, (1,): 0.5})
    samples = SampleSet({"00": 3, "11": 2, "10": 1, "01": 0}, 2, h_f)
    assert "01" not in samples.counts
    assert samples.total_shots == 6
    assert [b for b, _c, _e in samples.ranked()] == ["11", "10", "00"]
    assert samples.shots()[:3] == ["11", "11", "10"]
    assert samples.top(3).counts == {"10": 1, "11": 2}
    assert samples.mean_energy() == pytest.approx((3 * 1.5 + 2 * -1.5 + 1 * -0.5) / 6)

    path = tmp_path / "s.csv"
    samples.to_csv(str(path))
    assert path.read_text(encoding="utf-8").splitlines()[0] == "bitstring,count,energy"
    again = SampleSet.from_csv(str(path), h_f)
    assert again.counts == samples.counts
    assert again.energies == samples.energies


def test_sample_set_merge_and_validation():
    a = SampleSet({"01": 2}, 2)
    b = SampleSet({"01": 1, "11": 4}, 2)
    assert a.merge(b).counts == {"01": 3, "11": 4}
    with pytest.raises(ValidationError):
        SampleSet({"011": 1}, 2)
    with pytest.raises(ValidationError):
        _ = a.energies
