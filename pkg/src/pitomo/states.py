"""Reference states and collective spin operators."""

from __future__ import annotations

from math import comb

import numpy as np

from .basis import PAULI, check_dense_size


def dicke_state(n_qubits: int, excitations: int) -> np.ndarray:
    """Symmetric Dicke state vector with the given number of |1> qubits."""
    check_dense_size(n_qubits)
    if not 0 <= excitations <= n_qubits:
        raise ValueError(
            f"excitations must be in [0, {n_qubits}], got {excitations}"
        )
    dim = 1 << n_qubits
    ones = np.bitwise_count(np.arange(dim, dtype=np.uint64))
    vec = (ones == excitations).astype(complex)
    return vec / np.sqrt(comb(n_qubits, excitations))


def symmetric_projector(n_qubits: int) -> np.ndarray:
    """Projector onto the symmetric subspace, rank N + 1."""
    check_dense_size(n_qubits)
    dim = 1 << n_qubits
    ones = np.bitwise_count(np.arange(dim, dtype=np.uint64)).astype(np.int64)
    proj = np.zeros((dim, dim), dtype=complex)
    # <i|P|j> = 1/C(N, e) when both strings carry e excitations
    for e in range(n_qubits + 1):
        sel = np.flatnonzero(ones == e)
        proj[np.ix_(sel, sel)] = 1.0 / comb(n_qubits, e)
    return proj


def collective_op(axis: str, power: int, n_qubits: int) -> np.ndarray:
    """Power of a collective spin component, J_axis = sum_k sigma_axis^(k) / 2."""
    check_dense_size(n_qubits)
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not isinstance(power, (int, np.integer)) or power < 1:
        raise ValueError(f"power must be a positive integer, got {power!r}")
    dim = 1 << n_qubits
    J = np.zeros((dim, dim), dtype=complex)
    for q in range(n_qubits):
        term = np.eye(1, dtype=complex)
        for r in range(n_qubits):
            term = np.kron(term, PAULI[axis] if r == q else np.eye(2, dtype=complex))
        J += 0.5 * term
    return np.linalg.matrix_power(J, power)


def maximally_mixed(n_qubits: int) -> np.ndarray:
    check_dense_size(n_qubits)
    dim = 1 << n_qubits
    return np.eye(dim, dtype=complex) / dim


def noisy_dicke(n_qubits: int, noise: float, excitations: int | None = None) -> np.ndarray:
    """White-noise admixture of the half-filled (or given) Dicke state."""
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise weight must lie in [0, 1], got {noise}")
    if excitations is None:
        if n_qubits % 2:
            raise ValueError("half-filled Dicke state needs an even qubit count")
        excitations = n_qubits // 2
    psi = dicke_state(n_qubits, excitations)
    return noise * maximally_mixed(n_qubits) + (1.0 - noise) * np.outer(psi, psi.conj())
