"""Outcome model for measuring one observable on every qubit.

A setting measures A = ax X + ay Y + az Z on all N qubits at once.  The
sufficient statistic of an outcome string is how many qubits gave the -1
result, so everything here works with those Hamming classes: their
eigenvalue weights, and their probabilities for dense or Bloch states.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .basis import BlochVector, as_direction, check_dense_size, expand_setting


@lru_cache(maxsize=None)
def class_moment_weight(n_qubits: int, n_identity: int, weight: int) -> float:
    """Eigenvalue of the class-averaged observable power on an outcome class.

    For a string with `weight` qubits in the -1 outcome, this is the mean of
    the product of N - n outcomes over all subsets of that size, i.e. the
    value the outcome contributes to the class moment with n identities.
    """
    if not 0 <= weight <= n_qubits:
        raise ValueError(f"weight must be in [0, {n_qubits}], got {weight}")
    if not 0 <= n_identity <= n_qubits:
        raise ValueError(
            f"identity count must be in [0, {n_qubits}], got {n_identity}"
        )
    r = n_qubits - n_identity
    total = comb(n_qubits, r)
    acc = 0
    for t in range(min(weight, r) + 1):
        acc += (-1) ** t * comb(weight, t) * comb(n_qubits - weight, r - t)
    return acc / total


def class_weights(n_qubits: int, n_identity: int) -> np.ndarray:
    """class_moment_weight for every Hamming class, as an array."""
    return np.array(
        [class_moment_weight(n_qubits, n_identity, w) for w in range(n_qubits + 1)]
    )


def measurement_rotation(a) -> np.ndarray:
    """Single-qubit unitary whose columns are the +1 / -1 eigenvectors of a.sigma."""
    ax, ay, az = as_direction(a)
    A = np.array([[az, ax - 1j * ay], [ax + 1j * ay, -az]])
    vals, vecs = np.linalg.eigh(A)
    # eigh sorts ascending; put the +1 eigenvector first
    U = vecs[:, ::-1]
    # fix the phase so results do not depend on LAPACK details
    for col in range(2):
        pivot = U[np.argmax(np.abs(U[:, col])), col]
        U[:, col] *= np.conj(pivot) / abs(pivot)
    return U


def outcome_probabilities(rho: np.ndarray, a) -> np.ndarray:
    """Probability of each outcome bitstring when measuring a on all qubits."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    n_qubits = dim.bit_length() - 1
    if rho.shape != (dim, dim) or dim != 1 << n_qubits:
        raise ValueError(f"expected a 2^N x 2^N matrix, got shape {rho.shape}")
    check_dense_size(n_qubits)
    U = np.eye(1, dtype=complex)
    u1 = measurement_rotation(a)
    for _ in range(n_qubits):
        U = np.kron(U, u1)
    probs = np.einsum("ij,jk,ki->i", U.conj().T, rho, U).real
    if probs.min() < -1e-9 or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("input is not a normalized positive state")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def _binomial_polys(n_qubits: int) -> list[np.ndarray]:
    """Coefficients in t of C(N,r) ((1+t)/2)^(N-r) ((1-t)/2)^r for each r."""
    out = []
    for r in range(n_qubits + 1):
        poly = np.array([1.0])
        for _ in range(n_qubits - r):
            poly = np.convolve(poly, [1.0, 1.0])
        for _ in range(r):
            poly = np.convolve(poly, [1.0, -1.0])
        out.append(comb(n_qubits, r) * poly / 2.0 ** n_qubits)
    return out


def class_probabilities(state, a) -> np.ndarray:
    """Hamming-class probabilities for one setting.

    Dense states go through the rotated basis; Bloch vectors use the
    symmetrized product expansion, which never touches a dense matrix and
    therefore works for any qubit count.
    """
    if isinstance(state, BlochVector):
        nq = state.n_qubits
        vec = as_direction(a)
        # generating polynomial sum_w p_w t^w = sum_r mu_r * C(N,r) a-moment polys
        probs = np.zeros(nq + 1)
        polys = _binomial_polys(nq)
        probs += polys[0]  # r = 0 term is the identity moment, always 1
        for r in range(1, nq + 1):
            coeffs = expand_setting(vec, nq - r, nq)
            mu = sum(c * state.value(idx) for idx, c in coeffs.items())
            probs += mu * polys[r]
        if probs.min() < -1e-8:
            raise ValueError("Bloch vector does not describe a physical state")
        probs = np.clip(probs, 0.0, None)
        return probs / probs.sum()
    probs = outcome_probabilities(state, a)
    nq = probs.size.bit_length() - 1
    ones = np.bitwise_count(np.arange(probs.size, dtype=np.uint64)).astype(np.int64)
    return np.bincount(ones, weights=probs, minlength=nq + 1)
