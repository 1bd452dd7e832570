"""Estimate Bloch entries and density operators from counted outcomes.

Counts enter as per-setting bitstring tallies (leftmost character is qubit
1, '0' is the +1 outcome).  Only the Hamming class of a bitstring matters
for permutationally invariant targets, so everything downstream works on
per-class histograms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BlochVector, check_dense_size, check_qubit_count, pi_twirl
from .error_model import VarianceModel  # noqa: F401  (re-exported for callers)
from .exceptions import (
    IncompleteDataError,
    InsufficientCountsError,
)
from .measurement import class_weights, measurement_rotation
from .states import maximally_mixed


@dataclass
class CountData:
    """Raw outcome tallies for a list of settings, keyed by setting id."""

    n_qubits: int
    settings: list

    def __post_init__(self):
        check_qubit_count(self.n_qubits)
        seen = set()
        for sid, outcomes in self.settings:
            if sid in seen:
                raise ValueError(f"duplicate setting id {sid!r}")
            seen.add(sid)
            for bits in outcomes:
                _check_bitstring(bits, self.n_qubits)

    def outcomes(self, setting_id: str) -> dict:
        for sid, outcomes in self.settings:
            if sid == setting_id:
                return outcomes
        raise KeyError(setting_id)

    @property
    def setting_ids(self) -> list[str]:
        return [sid for sid, _ in self.settings]


def _check_bitstring(bits: str, n_qubits: int):
    if len(bits) != n_qubits or any(c not in "01" for c in bits):
        raise ValueError(
            f"outcome key {bits!r} is not a {n_qubits}-character bitstring"
        )


def class_histogram(outcomes: dict, n_qubits: int) -> np.ndarray:
    """Collapse bitstring tallies onto Hamming classes (number of '1's)."""
    hist = np.zeros(n_qubits + 1)
    for bits, count in outcomes.items():
        _check_bitstring(bits, n_qubits)
        if count < 0:
            raise ValueError(f"negative count for outcome {bits!r}")
        hist[bits.count("1")] += count
    return hist


def setting_moment(histogram, n_identity: int):
    """Plugin moment of one symmetrized observable power and its variance.

    Returns (value, variance); the variance is the sample variance of the
    per-shot statistic divided by (total - 1).
    """
    hist = np.asarray(histogram, dtype=float)
    n_qubits = hist.size - 1
    total = hist.sum()
    if total < 2:
        raise InsufficientCountsError(
            f"need at least 2 counts per setting to estimate a variance, got {total:g}"
        )
    h = class_weights(n_qubits, n_identity)
    value = float(hist @ h) / total
    second = float(hist @ (h * h)) / total
    spread = max(second - value * value, 0.0)
    return value, spread / (total - 1.0)


def _matched_histograms(scheme, counts: CountData) -> np.ndarray:
    if counts.n_qubits != scheme.n_qubits:
        raise ValueError(
            f"counts are for {counts.n_qubits} qubits, scheme for {scheme.n_qubits}"
        )
    by_id = dict(counts.settings)
    missing = [sid for sid in scheme.setting_ids if sid not in by_id]
    if missing:
        raise IncompleteDataError(
            f"counts lack settings {missing}", missing=missing
        )
    return np.array(
        [class_histogram(by_id[sid], scheme.n_qubits) for sid in scheme.setting_ids]
    )


def reconstruct(scheme, counts: CountData) -> BlochVector:
    """Linear estimate of every Bloch entry with propagated error bars.

    Independent settings let variances add in quadrature through the
    coefficient table; the identity entry is fixed to 1 exactly.
    """
    n_qubits = scheme.n_qubits
    hists = _matched_histograms(scheme, counts)
    d = scheme.num_settings
    moments = np.empty((n_qubits, d))
    variances = np.empty((n_qubits, d))
    for n_id in range(n_qubits):
        for j in range(d):
            moments[n_id, j], variances[n_id, j] = setting_moment(hists[j], n_id)
    values = np.empty(len(scheme.measured_classes) + 1)
    sigmas = np.empty_like(values)
    values[0] = 1.0
    sigmas[0] = 0.0
    for i, idx in enumerate(scheme.measured_classes):
        row = scheme.coefficients[i]
        values[i + 1] = row @ moments[idx.n]
        sigmas[i + 1] = np.sqrt((row * row) @ variances[idx.n])
    return BlochVector(n_qubits, values, sigmas)


def physical_projection(rho: np.ndarray, atol: float = 1e-8) -> np.ndarray:
    """Nearest density matrix in Frobenius norm.

    Diagonalizes, projects the spectrum onto the probability simplex, and
    rebuilds; a Hermitian input therefore stays in the span of its own
    eigenprojectors, so permutation symmetry survives.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError("matrix is not Hermitian within tolerance")
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    u = np.sort(evals)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    support = u + (1.0 - css) / k > 0
    k_star = int(np.max(k[support]))
    tau = (1.0 - css[k_star - 1]) / k_star
    clipped = np.maximum(evals + tau, 0.0)
    return (evecs * clipped) @ evecs.conj().T


@dataclass
class MaxLikelihoodResult:
    """Outcome of the iterative likelihood maximization."""

    rho: np.ndarray
    converged: bool
    n_iterations: int
    log_likelihood: float


def ml_fit(
    scheme,
    counts: CountData,
    initial: np.ndarray | None = None,
    max_iterations: int = 1000,
    tol: float = 1e-10,
) -> MaxLikelihoodResult:
    """Maximum-likelihood density matrix for class-resolved count data.

    Fixed-point iteration rho -> R rho R with R the likelihood gradient
    operator; any step that would lower the log-likelihood is replaced by
    a diluted step (1 + eps R) rho (1 + eps R) with eps halved until the
    likelihood improves.  A permutationally invariant start stays
    permutationally invariant throughout.
    """
    n_qubits = scheme.n_qubits
    check_dense_size(n_qubits)
    hists = _matched_histograms(scheme, counts)
    dim = 2 ** n_qubits
    total = hists.sum()
    if total <= 0:
        raise InsufficientCountsError("no counts to fit")

    weights = np.arange(dim)
    popcounts = np.bitwise_count(weights)
    class_cols = [np.flatnonzero(popcounts == w) for w in range(n_qubits + 1)]
    # per setting: columns of the product rotation grouped by Hamming class
    frames = []
    for j in range(scheme.num_settings):
        u1 = measurement_rotation(scheme.directions[j])
        full = u1
        for _ in range(n_qubits - 1):
            full = np.kron(full, u1)
        frames.append([full[:, cols] for cols in class_cols])

    def probabilities(rho):
        p = np.empty((len(frames), n_qubits + 1))
        for j, groups in enumerate(frames):
            for w, block in enumerate(groups):
                p[j, w] = np.real(np.einsum("iw,ij,jw->", block.conj(), rho, block))
        return np.clip(p, 0.0, None)

    observed = hists > 0

    def log_likelihood(p):
        return float(np.sum(hists[observed] * np.log(np.maximum(p[observed], 1e-300))))

    def gradient(p):
        r = np.zeros((dim, dim), dtype=complex)
        ratios = np.zeros_like(p)
        ratios[observed] = hists[observed] / np.maximum(p[observed], 1e-300)
        for j, groups in enumerate(frames):
            for w, block in enumerate(groups):
                if ratios[j, w] > 0:
                    r += ratios[j, w] * (block @ block.conj().T)
        return r / total

    if initial is None:
        rho = maximally_mixed(n_qubits)
    else:
        rho = pi_twirl(np.asarray(initial, dtype=complex))
        rho = rho / np.trace(rho).real

    p = probabilities(rho)
    ll = log_likelihood(p)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        r = gradient(p)
        cand = r @ rho @ r
        cand /= np.trace(cand).real
        cand_p = probabilities(cand)
        cand_ll = log_likelihood(cand_p)
        if cand_ll < ll:
            eps = 0.5
            while eps > 1e-8:
                step = (np.eye(dim) + eps * r) / (1.0 + eps)
                cand = step @ rho @ step
                cand /= np.trace(cand).real
                cand_p = probabilities(cand)
                cand_ll = log_likelihood(cand_p)
                if cand_ll >= ll:
                    break
                eps *= 0.5
            if cand_ll < ll:
                converged = True  # no ascent direction left at machine precision
                break
        gain = cand_ll - ll
        rho, p, ll = cand, cand_p, cand_ll
        if gain <= tol * (1.0 + abs(ll)):
            converged = True
            break
    return MaxLikelihoodResult(rho, converged, iterations, ll)
