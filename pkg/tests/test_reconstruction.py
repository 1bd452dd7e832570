"""Count handling, the linear inverse, projection, and likelihood fitting."""

import numpy as np
import pytest

from pitomo.basis import bloch_from_dense, dense_from_bloch, pi_twirl
from pitomo.error_model import VarianceModel
from pitomo.exceptions import IncompleteDataError, InsufficientCountsError
from pitomo.reconstruction import (
    CountData,
    class_histogram,
    ml_fit,
    physical_projection,
    reconstruct,
    setting_moment,
)
from pitomo.scheme import optimize_scheme
from pitomo.simulate import StateSpec, run_experiment
from pitomo.states import noisy_dicke


def test_count_data_validation():
    CountData(2, [("a", {"00": 1}), ("b", {"11": 2})])
    with pytest.raises(ValueError, match="duplicate"):
        CountData(2, [("a", {}), ("a", {})])
    with pytest.raises(ValueError, match="bitstring"):
        CountData(2, [("a", {"012": 1})])
    with pytest.raises(ValueError, match="bitstring"):
        CountData(2, [("a", {"0x": 1})])


def test_count_data_lookup():
    data = CountData(2, [("a", {"00": 1}), ("b", {"11": 2})])
    assert data.setting_ids == ["a", "b"]
    assert data.outcomes("b") == {"11": 2}
    with pytest.raises(KeyError):
        data.outcomes("c")


def test_class_histogram():
    hist = class_histogram({"00": 5, "01": 2, "10": 1, "11": 7}, 2)
    np.testing.assert_array_equal(hist, [5, 3, 7])
    with pytest.raises(ValueError, match="negative"):
        class_histogram({"00": -1}, 2)


def test_setting_moment_hand_case():
    # three qubits, two identity factors: per-class statistic is
    # (1, 1/3, -1/3, -1); histogram (3, 1, 0, 0) gives mean 5/6 and
    # spread 1/12, so the mean's variance is (1/12)/3 = 1/36
    value, variance = setting_moment([3, 1, 0, 0], 2)
    assert value == pytest.approx(5.0 / 6.0)
    assert variance == pytest.approx(1.0 / 36.0)


def test_setting_moment_needs_two_counts():
    with pytest.raises(InsufficientCountsError):
        setting_moment([1, 0, 0], 0)
    with pytest.raises(InsufficientCountsError):
        setting_moment([0, 0, 0], 0)


@pytest.fixture(scope="module")
def scheme2():
    return optimize_scheme(2, VarianceModel.white_noise(800.0), seed=9, budget=150)


def test_reconstruct_mixed_state_within_error_bars(scheme2):
    counts = run_experiment(StateSpec("mixed", n_qubits=2), scheme2, 800.0, seed=5)
    b = reconstruct(scheme2, counts)
    assert b.values[0] == 1.0
    assert b.sigmas[0] == 0.0
    assert np.all(b.sigmas[1:] > 0.0)
    # every non-identity class averages to zero on the mixed state
    assert np.all(np.abs(b.values[1:]) <= 5.0 * b.sigmas[1:])


def test_reconstruct_requires_all_settings(scheme2):
    counts = run_experiment(StateSpec("mixed", n_qubits=2), scheme2, 800.0, seed=5)
    partial = CountData(2, counts.settings[:-1])
    with pytest.raises(IncompleteDataError) as err:
        reconstruct(scheme2, partial)
    assert err.value.missing == [scheme2.setting_ids[-1]]
    with pytest.raises(ValueError, match="qubits"):
        reconstruct(scheme2, CountData(3, []))


def test_projection_hand_case():
    shifted = np.diag([0.6, 0.6, -0.2])
    out = physical_projection(shifted)
    np.testing.assert_allclose(out, np.diag([0.5, 0.5, 0.0]), atol=1e-12)


def test_projection_properties(rng, random_density):
    for _ in range(5):
        rho = random_density(8, rng)
        noisy = rho + 0.1 * _random_hermitian(rng, 8)
        out = physical_projection(noisy)
        evals = np.linalg.eigvalsh(out)
        assert evals.min() >= -1e-12
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
        # idempotent on its own output
        np.testing.assert_allclose(physical_projection(out), out, atol=1e-10)
        # no sampled density matrix is closer in Frobenius norm
        best = np.linalg.norm(noisy - out)
        for _ in range(20):
            other = random_density(8, rng)
            assert best <= np.linalg.norm(noisy - other) + 1e-12


def test_projection_keeps_permutation_symmetry(rng, random_pi_state):
    rho = random_pi_state(3, rng)
    noisy = rho + 0.05 * pi_twirl(_random_hermitian(rng, 8))
    out = physical_projection(noisy)
    assert np.abs(out - pi_twirl(out)).max() <= 1e-10


def test_projection_rejects_non_hermitian():
    bad = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="Hermitian"):
        physical_projection(bad)
    with pytest.raises(ValueError, match="square"):
        physical_projection(np.zeros((2, 3)))


def _random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = g + g.conj().T
    return h / np.linalg.norm(h)


@pytest.fixture(scope="module")
def dicke_counts(scheme2):
    rho = noisy_dicke(2, 0.2, 1)
    counts = run_experiment(bloch_from_dense(rho), scheme2, 3000.0, seed=8)
    return rho, counts


def test_ml_fit_converges_close_to_truth(scheme2, dicke_counts):
    from pitomo.analysis import fidelity

    rho, counts = dicke_counts
    res = ml_fit(scheme2, counts)
    assert res.converged
    assert res.n_iterations < 1000
    assert fidelity(res.rho, rho) >= 0.995
    # the fit stays permutationally invariant and physical
    assert np.abs(res.rho - pi_twirl(res.rho)).max() <= 1e-10
    assert np.linalg.eigvalsh(res.rho).min() >= -1e-12
    assert np.trace(res.rho).real == pytest.approx(1.0, abs=1e-10)


def test_ml_fit_likelihood_monotone_in_budget(scheme2, dicke_counts):
    _, counts = dicke_counts
    lls = [
        ml_fit(scheme2, counts, max_iterations=k).log_likelihood
        for k in (1, 3, 10, 50)
    ]
    assert all(a <= b + 1e-9 for a, b in zip(lls, lls[1:]))


def test_ml_fit_accepts_dense_start(scheme2, dicke_counts):
    rho, counts = dicke_counts
    res = ml_fit(scheme2, counts, initial=rho)
    assert res.converged
    assert np.abs(res.rho - pi_twirl(res.rho)).max() <= 1e-10


def test_ml_fit_agrees_with_projected_linear_estimate(scheme2, dicke_counts):
    from pitomo.analysis import fidelity

    _, counts = dicke_counts
    res = ml_fit(scheme2, counts)
    rho_lin = physical_projection(dense_from_bloch(reconstruct(scheme2, counts)))
    assert fidelity(res.rho, rho_lin) >= 0.999


def test_ml_fit_rejects_empty_counts(scheme2):
    empty = CountData(2, [(sid, {}) for sid in scheme2.setting_ids])
    with pytest.raises(InsufficientCountsError):
        ml_fit(scheme2, empty)
