"""Operator algebra for the permutation-symmetric Pauli basis.

An N-qubit Pauli product is classified by how many X, Y, Z and identity
factors it contains; permuting qubits never leaves the class.  Averaging a
class over all distinct arrangements gives one basis operator per class,
and the expectation values of these operators form a generalized Bloch
vector that captures exactly the permutation-invariant part of a state.

Conventions used throughout:
  * classes are labelled by PiIndex(k, l, m, n) with k X's, l Y's, m Z's
    and n identities, k+l+m+n = N;
  * class operators are arithmetic means over their arrangements, so every
    Bloch entry lies in [-1, 1] and the identity entry equals Tr(rho);
  * canonical class order is lexicographic in (k, l, m), identity first;
  * basis state index i has qubit 1 in the most significant bit, and bit
    value 0 corresponds to the +1 outcome of a measured observable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import CapacityError

# Dense 2^N x 2^N work is refused above this size.
DENSE_QUBIT_LIMIT = 10

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class PiIndex(NamedTuple):
    """Pauli-class label: factor counts for X, Y, Z and the identity."""

    k: int
    l: int
    m: int
    n: int

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return self.k + self.l + self.m


def check_qubit_count(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or n_qubits < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n_qubits!r}")


def check_dense_size(n_qubits: int) -> None:
    check_qubit_count(n_qubits)
    if n_qubits > DENSE_QUBIT_LIMIT:
        raise CapacityError(
            f"dense path supports at most {DENSE_QUBIT_LIMIT} qubits, got {n_qubits}"
        )


@lru_cache(maxsize=None)
def enumerate_basis(n_qubits: int) -> tuple[PiIndex, ...]:
    """All Pauli classes for n_qubits in canonical (k, l, m) order."""
    check_qubit_count(n_qubits)
    out = []
    for k in range(n_qubits + 1):
        for l in range(n_qubits - k + 1):
            for m in range(n_qubits - k - l + 1):
                out.append(PiIndex(k, l, m, n_qubits - k - l - m))
    return tuple(out)


@lru_cache(maxsize=None)
def basis_position(n_qubits: int) -> dict[PiIndex, int]:
    return {idx: i for i, idx in enumerate(enumerate_basis(n_qubits))}


def num_classes(n_qubits: int) -> int:
    return comb(n_qubits + 3, 3)


def multiplicity(idx: PiIndex) -> int:
    """Distinct qubit arrangements of the class: N! / (k! l! m! n!)."""
    if min(idx) < 0:
        raise ValueError(f"negative factor count in {idx}")
    total = sum(idx)
    return factorial(total) // (
        factorial(idx.k) * factorial(idx.l) * factorial(idx.m) * factorial(idx.n)
    )


def as_index(idx, n_qubits: int | None = None) -> PiIndex:
    """Coerce a 4-tuple to PiIndex, optionally checking the qubit count."""
    idx = PiIndex(*(int(v) for v in idx))
    if min(idx) < 0:
        raise ValueError(f"negative factor count in {idx}")
    if n_qubits is not None and sum(idx) != n_qubits:
        raise ValueError(f"{idx} does not describe {n_qubits} qubits")
    return idx


def as_direction(a) -> np.ndarray:
    """Validate a measurement direction: real 3-vector of unit length."""
    vec = np.asarray(a, dtype=float)
    if vec.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {vec.shape}")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"direction must be unit length, |a| = {norm}")
    return vec


def _multinomial_weights(r: int) -> list[tuple[tuple[int, int, int], float]]:
    """(k, l, m) with k+l+m = r, canonical order, with r!/(k! l! m!)."""
    out = []
    for k in range(r + 1):
        for l in range(r - k + 1):
            m = r - k - l
            w = factorial(r) // (factorial(k) * factorial(l) * factorial(m))
            out.append(((k, l, m), float(w)))
    return out


def expand_setting(a, n_identity: int, n_qubits: int) -> dict[PiIndex, float]:
    """Expand the symmetrized power of a measured observable in the class basis.

    For A = ax X + ay Y + az Z, the class-averaged operator built from N - n
    copies of A and n identities decomposes over the classes with the same
    identity count.  Returns the nonzero coefficients keyed by PiIndex.
    """
    vec = as_direction(a)
    check_qubit_count(n_qubits)
    if not 0 <= n_identity <= n_qubits - 1:
        raise ValueError(
            f"identity count must be in [0, {n_qubits - 1}], got {n_identity}"
        )
    r = n_qubits - n_identity
    coeffs: dict[PiIndex, float] = {}
    for (k, l, m), w in _multinomial_weights(r):
        c = w * vec[0] ** k * vec[1] ** l * vec[2] ** m
        if c != 0.0:
            coeffs[PiIndex(k, l, m, n_identity)] = c
    return coeffs


# ---------------------------------------------------------------------------
# dense Pauli-string machinery
#
# A Pauli string acts on basis states by flipping the X/Y bits and attaching
# a phase, so its dense matrix has a single nonzero per column.  Building
# class operators from this action costs O(2^N) per string instead of O(4^N).

def _string_action(x_mask: int, y_mask: int, z_mask: int, n_qubits: int):
    """Column-sparse form of a Pauli string: rows, values per column index."""
    dim = 1 << n_qubits
    cols = np.arange(dim, dtype=np.uint64)
    rows = cols ^ np.uint64(x_mask | y_mask)
    y_ones = np.bitwise_count(cols & np.uint64(y_mask)).astype(np.int64)
    z_ones = np.bitwise_count(cols & np.uint64(z_mask)).astype(np.int64)
    n_y = int(y_mask).bit_count()
    vals = (1j) ** n_y * (-1.0) ** ((y_ones + z_ones) % 2)
    return rows.astype(np.int64), vals


def _class_masks(idx: PiIndex) -> Iterable[tuple[int, int, int]]:
    """Site masks (x, y, z) for every distinct arrangement of the class."""
    n_qubits = sum(idx)
    sites = tuple(range(n_qubits))
    for xs in itertools.combinations(sites, idx.k):
        rest = tuple(q for q in sites if q not in xs)
        for ys in itertools.combinations(rest, idx.l):
            rest2 = tuple(q for q in rest if q not in ys)
            for zs in itertools.combinations(rest2, idx.m):
                x_mask = sum(1 << q for q in xs)
                y_mask = sum(1 << q for q in ys)
                z_mask = sum(1 << q for q in zs)
                yield x_mask, y_mask, z_mask


def dense_basis_op(idx, n_qubits: int | None = None) -> np.ndarray:
    """Dense matrix of the normalized class operator."""
    idx = as_index(idx, n_qubits)
    nq = sum(idx)
    check_dense_size(nq)
    dim = 1 << nq
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    count = 0
    for masks in _class_masks(idx):
        rows, vals = _string_action(*masks, nq)
        out[rows, cols] += vals
        count += 1
    return out / count


def bloch_from_dense(rho: np.ndarray, atol: float = 1e-10) -> "BlochVector":
    """Generalized Bloch vector of a density operator.

    Works for any Hermitian input; non-symmetric structure simply does not
    show up, so the result equals the Bloch vector of the twirled state.
    """
    rho = np.asarray(rho)
    dim = rho.shape[0]
    n_qubits = dim.bit_length() - 1
    if rho.shape != (dim, dim) or dim != 1 << n_qubits:
        raise ValueError(f"expected a 2^N x 2^N matrix, got shape {rho.shape}")
    check_dense_size(n_qubits)
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix must be Hermitian")
    classes = enumerate_basis(n_qubits)
    values = np.empty(len(classes))
    cols = np.arange(dim)
    for i, idx in enumerate(classes):
        acc = 0.0 + 0.0j
        count = 0
        for masks in _class_masks(idx):
            rows, vals = _string_action(*masks, n_qubits)
            # Tr(rho P) for column-sparse P: sum_c rho[c, rows[c]] * vals[c]
            acc += np.dot(rho[cols, rows], vals)
            count += 1
        values[i] = acc.real / count
    return BlochVector(n_qubits, values)


def dense_from_bloch(b: "BlochVector") -> np.ndarray:
    """Dense (possibly unnormalized) operator with the given Bloch entries."""
    check_dense_size(b.n_qubits)
    dim = 1 << b.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    scale = 2.0 ** (-b.n_qubits)
    for idx, value in zip(b.classes, b.values):
        if value == 0.0:
            continue
        w = scale * value
        for masks in _class_masks(idx):
            rows, vals = _string_action(*masks, b.n_qubits)
            out[rows, cols] += w * vals
    return out


def _qubit_permutation_table(n_qubits: int, perm) -> np.ndarray:
    """Basis-state relabelling induced by a qubit permutation."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    out = np.zeros(dim, dtype=np.int64)
    for src, dst in enumerate(perm):
        bit = (idx >> src) & 1
        out |= bit << dst
    return out


def pi_twirl(rho: np.ndarray, method: str = "auto", atol: float = 1e-10) -> np.ndarray:
    """Project a density operator onto its permutation-invariant part.

    method "permutations" averages over all N! qubit relabellings (kept for
    small N as an independent reference), "classes" goes through the class
    basis, "auto" picks by size.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    n_qubits = dim.bit_length() - 1
    if rho.shape != (dim, dim) or dim != 1 << n_qubits:
        raise ValueError(f"expected a 2^N x 2^N matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("input must be Hermitian")
    if method == "auto":
        method = "permutations" if n_qubits <= 5 else "classes"
    if method == "permutations":
        if n_qubits > 8:
            raise CapacityError("permutation average is limited to 8 qubits")
        acc = np.zeros_like(rho)
        for perm in itertools.permutations(range(n_qubits)):
            table = _qubit_permutation_table(n_qubits, perm)
            acc += rho[np.ix_(table, table)]
        return acc / factorial(n_qubits)
    if method == "classes":
        return dense_from_bloch(bloch_from_dense(rho, atol=atol))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class BlochVector:
    """Expectation values of the class operators, canonical order.

    sigmas, when present, are one-standard-deviation error bars aligned
    with values.
    """

    n_qubits: int
    values: np.ndarray
    sigmas: np.ndarray | None = None

    def __post_init__(self):
        check_qubit_count(self.n_qubits)
        self.values = np.asarray(self.values, dtype=float)
        expected = num_classes(self.n_qubits)
        if self.values.shape != (expected,):
            raise ValueError(
                f"expected {expected} entries for {self.n_qubits} qubits, "
                f"got shape {self.values.shape}"
            )
        if self.sigmas is not None:
            self.sigmas = np.asarray(self.sigmas, dtype=float)
            if self.sigmas.shape != self.values.shape:
                raise ValueError("sigmas must align with values")

    @property
    def classes(self) -> tuple[PiIndex, ...]:
        return enumerate_basis(self.n_qubits)

    def value(self, idx) -> float:
        return float(self.values[basis_position(self.n_qubits)[as_index(idx, self.n_qubits)]])

    def sigma(self, idx) -> float | None:
        if self.sigmas is None:
            return None
        return float(self.sigmas[basis_position(self.n_qubits)[as_index(idx, self.n_qubits)]])

    def items(self):
        if self.sigmas is None:
            return [(idx, v, None) for idx, v in zip(self.classes, self.values)]
        return list(zip(self.classes, self.values, self.sigmas))

    @classmethod
    def from_entries(cls, n_qubits: int, entries: dict, sigmas: dict | None = None):
        pos = basis_position(n_qubits)
        values = np.zeros(num_classes(n_qubits))
        for idx, v in entries.items():
            values[pos[as_index(idx, n_qubits)]] = v
        sig = None
        if sigmas is not None:
            sig = np.zeros_like(values)
            for idx, s in sigmas.items():
                sig[pos[as_index(idx, n_qubits)]] = s
        return cls(n_qubits, values, sig)
