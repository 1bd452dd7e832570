"""Design matrix, closed-form coefficients, and the direction search."""

import numpy as np
import pytest
from scipy.optimize import minimize

from pitomo.basis import expand_setting
from pitomo.error_model import VarianceModel, e_total
from pitomo.exceptions import SingularSystemError
from pitomo.scheme import (
    Scheme,
    canonicalize_directions,
    coefficient_table,
    design_matrix,
    frame_potential,
    init_directions,
    measured_classes,
    num_settings,
    optimize_scheme,
    scheme_from_directions,
    solve_coefficients,
)

MODEL = VarianceModel.white_noise(500.0)


def test_num_settings_values():
    assert num_settings(1) == 3
    assert num_settings(2) == 6
    assert num_settings(4) == 15
    assert num_settings(6) == 28
    assert num_settings(14) == 120


def test_measured_classes_exclude_identity():
    classes = measured_classes(3)
    assert len(classes) == 19
    assert all(idx.weight > 0 for idx in classes)


def test_design_matrix_two_qubit_hand_case():
    # full-weight rows for x and y settings; class order is lexicographic
    # in (k, l, m): 002, 011, 020, 101, 110, 200 with multinomial weights
    dirs = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    V = design_matrix(dirs, 0, 2)
    expected = np.array(
        [
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 1.0],
            [0.0, 0.0],
            [0.0, 0.0],
            [1.0, 0.0],
        ]
    )
    np.testing.assert_allclose(V, expected)


def test_design_matrix_columns_match_setting_expansion(rng):
    # each column must reproduce the symmetrized-power expansion of its
    # direction, restricted to the classes with that identity count
    n_qubits = 3
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    for n_id in range(n_qubits):
        V = design_matrix(np.array([a]), n_id, n_qubits)
        coeffs = expand_setting(a, n_id, n_qubits)
        block = [idx for idx in measured_classes(n_qubits) if idx.n == n_id]
        np.testing.assert_allclose(
            V[:, 0], [coeffs[idx] for idx in block], atol=1e-14
        )


def test_solve_coefficients_hand_cases():
    V = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(
        solve_coefficients(V, np.array([1.0, 1.0]), np.array([1.0])), [0.5, 0.5]
    )
    # doubling the second weight moves 4x more weight onto the first column
    np.testing.assert_allclose(
        solve_coefficients(V, np.array([1.0, 2.0]), np.array([1.0])), [0.8, 0.2]
    )


def test_solve_coefficients_matches_iterative_minimizer(rng):
    for _ in range(5):
        s = rng.integers(2, 8)
        l = rng.integers(s, 15)
        V = rng.normal(size=(s, l))
        w = np.exp(rng.normal(size=l))
        v = rng.normal(size=s)
        c = solve_coefficients(V, w, v)
        assert np.linalg.norm(V @ c - v) <= 1e-9
        res = minimize(
            lambda x: np.sum((w * x) ** 2),
            np.linalg.lstsq(V, v, rcond=None)[0],
            jac=lambda x: 2 * w * w * x,
            constraints=[{"type": "eq", "fun": lambda x: V @ x - v, "jac": lambda x: V}],
            method="SLSQP",
            options={"maxiter": 500, "ftol": 1e-14},
        )
        obj = float(np.sum((w * c) ** 2))
        assert obj == pytest.approx(float(np.sum((w * res.x) ** 2)), rel=1e-7, abs=1e-12)


def test_solve_coefficients_validation():
    V = np.array([[1.0, 1.0]])
    with pytest.raises(ValueError, match="weight per column"):
        solve_coefficients(V, np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="positive"):
        solve_coefficients(V, np.array([1.0, 0.0]), np.array([1.0]))
    with pytest.raises(SingularSystemError):
        solve_coefficients(
            np.array([[1.0, 1.0], [1.0, 1.0]]),
            np.array([1.0, 1.0]),
            np.array([1.0, 2.0]),
        )


def test_coefficient_table_satisfies_unit_constraints():
    dirs = init_directions(num_settings(3), seed=5)
    table = coefficient_table(dirs, MODEL, 3)
    classes = measured_classes(3)
    for n_id in range(3):
        sel = [i for i, idx in enumerate(classes) if idx.n == n_id]
        V = design_matrix(dirs, n_id, 3)
        np.testing.assert_allclose(V @ table[sel].T, np.eye(len(sel)), atol=1e-9)


def test_coefficient_table_reports_degenerate_directions():
    # six copies of z cannot isolate anything involving x or y
    dirs = np.tile([0.0, 0.0, 1.0], (6, 1))
    with pytest.raises(SingularSystemError, match="cannot isolate"):
        coefficient_table(dirs, MODEL, 2)


def test_frame_potential_orthonormal_triple():
    # diagonal terms only: 3 * 1^4
    assert frame_potential(np.eye(3)) == pytest.approx(3.0)


def test_init_directions_deterministic_and_spread():
    a = init_directions(10, seed=3)
    b = init_directions(10, seed=3)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    raw = np.random.default_rng(np.random.SeedSequence([3, 0])).normal(size=(10, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    assert frame_potential(a) <= frame_potential(raw)


def test_canonicalize_directions_hemisphere_rules():
    dirs = np.array(
        [
            [0.0, 0.0, -1.0],
            [0.0, -1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.3, -0.4, 0.5],
            [-0.6, 0.8, 0.0],
        ]
    )
    out = canonicalize_directions(dirs)
    np.testing.assert_allclose(
        out,
        [
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.3, -0.4, 0.5],
            [-0.6, 0.8, 0.0],
        ],
    )


def test_scheme_validation_and_ids():
    d = num_settings(2)
    dirs = init_directions(d, seed=1)
    table = coefficient_table(dirs, MODEL, 2)
    sch = Scheme(2, dirs, table, 500.0)
    assert sch.setting_ids == ["s1", "s2", "s3", "s4", "s5", "s6"]
    assert [sid for sid, _ in sch.settings] == sch.setting_ids
    pos = sch.measured_classes.index((0, 0, 2, 0))
    np.testing.assert_array_equal(sch.coefficient_row((0, 0, 2, 0)), table[pos])
    with pytest.raises(ValueError, match="directions"):
        Scheme(2, dirs[:-1], table, 500.0)
    with pytest.raises(ValueError, match="coefficient table"):
        Scheme(2, dirs, table[:-1], 500.0)
    with pytest.raises(ValueError, match="setting ids"):
        Scheme(2, dirs, table, 500.0, ["a", "b"])


def test_scheme_from_directions_checks_count_and_norm():
    with pytest.raises(ValueError, match="settings"):
        scheme_from_directions(np.eye(3), MODEL, 2)
    bad = init_directions(6, seed=1)
    bad[0] *= 2.0
    with pytest.raises(ValueError, match="unit length"):
        scheme_from_directions(bad, MODEL, 2)


def test_optimizer_deterministic_and_monotone():
    trace: list = []
    sch = optimize_scheme(2, MODEL, seed=9, budget=200, objective_trace=trace)
    again = optimize_scheme(2, MODEL, seed=9, budget=200)
    np.testing.assert_array_equal(sch.directions, again.directions)
    np.testing.assert_array_equal(sch.coefficients, again.coefficients)
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    # canonical hemisphere normal form
    for ax, ay, az in sch.directions:
        assert az > 0 or (az == 0 and (ay > 0 or (ay == 0 and ax > 0)))


def test_optimizer_two_qubits_reaches_icosahedral_layout():
    # the known optimum for six settings: half of an icosahedron's vertices
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    ico = np.array(
        [
            [0, 1, phi],
            [0, -1, phi],
            [1, phi, 0],
            [-1, phi, 0],
            [phi, 0, 1],
            [phi, 0, -1],
        ],
        dtype=float,
    )
    ico /= np.linalg.norm(ico, axis=1, keepdims=True)
    reference = e_total(scheme_from_directions(ico, MODEL, 2), MODEL)
    sch = optimize_scheme(2, MODEL, seed=9, budget=400)
    assert e_total(sch, MODEL) == pytest.approx(reference, rel=1e-6)


def test_optimizer_validation():
    with pytest.raises(ValueError, match="objective"):
        optimize_scheme(2, MODEL, objective="most")
    with pytest.raises(ValueError, match="budget"):
        optimize_scheme(2, MODEL, budget=0)
