from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pitomo.basis import (
    BlochVector,
    PiIndex,
    as_direction,
    basis_position,
    bloch_from_dense,
    check_dense_size,
    dense_basis_op,
    dense_from_bloch,
    enumerate_basis,
    expand_setting,
    multiplicity,
    num_classes,
    pi_twirl,
)
from pitomo.exceptions import CapacityError


def test_class_count_four_qubits():
    classes = enumerate_basis(4)
    assert len(classes) == 35
    assert num_classes(4) == 35
    assert sum(1 for idx in classes if idx.weight > 0) == 34


@pytest.mark.parametrize("n", range(1, 9))
def test_class_count_formula(n):
    assert num_classes(n) == comb(n + 3, 3)
    assert len(enumerate_basis(n)) == num_classes(n)


def test_identity_class_comes_first():
    for n in (1, 3, 5):
        first = enumerate_basis(n)[0]
        assert first == PiIndex(0, 0, 0, n)


def test_canonical_order_is_lexicographic():
    classes = enumerate_basis(3)
    keys = [(idx.k, idx.l, idx.m) for idx in classes]
    assert keys == sorted(keys)


@given(st.integers(min_value=1, max_value=8))
def test_multiplicities_cover_all_pauli_strings(n):
    assert sum(multiplicity(idx) for idx in enumerate_basis(n)) == 4 ** n


@given(st.integers(min_value=1, max_value=8))
def test_basis_position_is_a_bijection(n):
    pos = basis_position(n)
    assert sorted(pos.values()) == list(range(num_classes(n)))
    for idx in enumerate_basis(n):
        assert enumerate_basis(n)[pos[idx]] == idx


def test_multiplicity_values():
    assert multiplicity(PiIndex(2, 0, 0, 2)) == 6
    assert multiplicity(PiIndex(0, 0, 0, 4)) == 1
    assert multiplicity(PiIndex(1, 1, 1, 1)) == 24


def test_as_direction_normalizes_and_validates():
    v = as_direction([0.0, 0.0, 1.0])
    np.testing.assert_allclose(v, [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        as_direction([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        as_direction([1.0, 1.0])


def test_expand_setting_two_qubit_diagonal():
    a = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    got = expand_setting(a, 0, 2)
    expected = {
        PiIndex(2, 0, 0, 0): 0.5,
        PiIndex(0, 2, 0, 0): 0.5,
        PiIndex(1, 1, 0, 0): 1.0,
    }
    assert set(got) == set(expected)
    for idx, value in expected.items():
        assert got[idx] == pytest.approx(value, abs=1e-15)


def test_expand_setting_matches_dense_expectation(rng, random_pi_state):
    """The expansion must reproduce <(a.s)^r x 1^n> on invariant states."""
    n_qubits, n_identity = 3, 1
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0]).astype(complex)
    for _ in range(5):
        a = rng.normal(size=3)
        a /= np.linalg.norm(a)
        single = a[0] * sx + a[1] * sy + a[2] * sz
        obs = np.kron(np.kron(single, single), np.eye(2))
        rho = random_pi_state(n_qubits, rng)
        direct = np.real(np.trace(rho @ obs))
        b = bloch_from_dense(rho)
        expansion = sum(
            c * b.value(idx) for idx, c in expand_setting(a, n_identity, n_qubits).items()
        )
        assert expansion == pytest.approx(direct, abs=1e-12)


def test_basis_operator_norms():
    # class averaging makes Tr(B^2) = 2^N / multiplicity
    for idx in ((1, 1, 0, 2), (2, 0, 0, 2), (0, 0, 0, 4)):
        op = dense_basis_op(PiIndex(*idx))
        mult = multiplicity(PiIndex(*idx))
        assert np.trace(op @ op).real == pytest.approx(16.0 / mult, rel=1e-13)


def test_bloch_round_trip(rng, random_pi_state):
    rho = random_pi_state(4, rng)
    b = bloch_from_dense(rho)
    assert b.value((0, 0, 0, 4)) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(b.values).max() <= 1.0 + 1e-12
    back = dense_from_bloch(b)
    assert np.abs(back - rho).max() < 1e-13


def test_twirl_is_idempotent_and_trace_preserving(rng, random_density):
    rho = random_density(8, rng)
    tw = pi_twirl(rho)
    assert np.trace(tw).real == pytest.approx(1.0, abs=1e-12)
    assert np.abs(tw - tw.conj().T).max() < 1e-13
    assert np.abs(pi_twirl(tw) - tw).max() < 1e-13
    purity = np.trace(tw @ tw).real
    assert purity <= np.trace(rho @ rho).real + 1e-12


def test_twirl_methods_agree(rng, random_density):
    rho = random_density(16, rng)
    a = pi_twirl(rho, method="permutations")
    b = pi_twirl(rho, method="classes")
    assert np.abs(a - b).max() < 1e-13


def test_twirl_equals_permutation_average(rng, random_density):
    """Direct average over all qubit permutations, rebuilt from scratch."""
    from itertools import permutations

    n = 3
    rho = random_density(2 ** n, rng)
    acc = np.zeros_like(rho)
    for perm in permutations(range(n)):
        p = np.zeros((2 ** n, 2 ** n))
        for i in range(2 ** n):
            bits = format(i, f"0{n}b")
            j = int("".join(bits[perm.index(q)] for q in range(n)), 2)
            p[j, i] = 1.0
        acc += p @ rho @ p.T
    acc /= 6.0
    assert np.abs(pi_twirl(rho) - acc).max() < 1e-13


def test_dense_guard():
    with pytest.raises(CapacityError):
        check_dense_size(11)
    check_dense_size(10)


def test_bloch_vector_accessors():
    b = BlochVector.from_entries(
        2, {(0, 0, 0, 2): 1.0, (1, 0, 0, 1): 0.25}, {(0, 0, 0, 2): 0.0, (1, 0, 0, 1): 0.01}
    )
    assert b.value((1, 0, 0, 1)) == 0.25
    assert b.sigma((1, 0, 0, 1)) == 0.01
    assert b.value((0, 1, 0, 1)) == 0.0
    assert len(b.items()) == num_classes(2)
    with pytest.raises(ValueError):
        BlochVector(2, np.zeros(3))
