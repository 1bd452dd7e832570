"""Symmetry diagnostics and fidelity bounds.

Answers two questions around a symmetric reconstruction: is the state
close enough to the symmetric subspace for the reduced tomography to be
meaningful, and how much can any conclusion drawn from the symmetrized
state differ from the truth.  The symmetric-overlap bounds need only the
three coordinate settings x, y, z regardless of qubit count.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .basis import BlochVector, bloch_from_dense, check_dense_size, multiplicity
from .exceptions import (
    IncompleteDataError,
    InsufficientCountsError,
    UnsupportedSizeError,
)
from .reconstruction import CountData, class_histogram
from .states import collective_op, dicke_state, symmetric_projector

# Axis polynomials g_a such that the symmetric-subspace overlap obeys
# <P_s> >= sum_a <g_a(J_a)>.  The eight-qubit coefficients are kept at
# full solver precision: rounding them to the four displayed digits
# breaks positive semidefiniteness of P_s - sum_a g_a(J_a) at the 1e-4
# level, which would invalidate the bound.
_N8_XY = {
    2: -0.0016163942096218491,
    4: 0.0022000195569235803,
    6: -0.0006285733654702311,
    8: 4.489801816850834e-05,
}
_N8_Z = {
    2: 0.0032651899086657186,
    4: -0.004444358826300634,
    6: 0.0012698204583081105,
    8: -9.070154067280141e-05,
}
_PS_AXIS_COEFFS = {
    4: {axis: {2: -1.0 / 18.0, 4: 1.0 / 18.0} for axis in "xyz"},
    6: {axis: {2: 2.0 / 225.0, 4: -1.0 / 90.0, 6: 1.0 / 450.0} for axis in "xyz"},
    8: {"x": dict(_N8_XY), "y": dict(_N8_XY), "z": dict(_N8_Z)},
}

# counts for the three coordinate settings are keyed by these ids
AXIS_SETTING_IDS = {"x": "X", "y": "Y", "z": "Z"}


def ps_bound_coefficients(n_qubits: int) -> dict:
    """Per-axis polynomial coefficients of the symmetric-overlap bound."""
    try:
        table = _PS_AXIS_COEFFS[n_qubits]
    except KeyError:
        raise UnsupportedSizeError(
            f"symmetric-overlap bound coefficients exist only for "
            f"{sorted(_PS_AXIS_COEFFS)} qubits, not {n_qubits}"
        ) from None
    return {axis: dict(powers) for axis, powers in table.items()}


def ps_bound_operator(n_qubits: int) -> np.ndarray:
    """Dense bound operator; P_s minus this matrix is positive semidefinite."""
    check_dense_size(n_qubits)
    coeffs = ps_bound_coefficients(n_qubits)
    dim = 2 ** n_qubits
    op = np.zeros((dim, dim), dtype=complex)
    for axis, powers in coeffs.items():
        for power, c in powers.items():
            op += c * collective_op(axis, power, n_qubits)
    return op


def _moment_value(entry) -> float:
    if isinstance(entry, (tuple, list, np.ndarray)):
        return float(entry[0])
    return float(entry)


def ps_bound_from_moments(jmoments: dict, n_qubits: int) -> float:
    """Lower bound on the symmetric-subspace overlap from spin moments.

    jmoments maps (axis, power) to a value or a (value, sigma) pair; the
    required powers are the even ones up to n_qubits.
    """
    coeffs = ps_bound_coefficients(n_qubits)
    total = 0.0
    missing = []
    for axis, powers in coeffs.items():
        for power, c in powers.items():
            if (axis, power) not in jmoments:
                missing.append((axis, power))
                continue
            total += c * _moment_value(jmoments[(axis, power)])
    if missing:
        raise IncompleteDataError(
            f"moments {missing} are required for the bound", missing=missing
        )
    return total


def _axis_histograms(data: CountData, n_qubits: int) -> dict:
    by_id = dict(data.settings)
    missing = [sid for sid in AXIS_SETTING_IDS.values() if sid not in by_id]
    if missing:
        raise IncompleteDataError(
            f"counts lack the coordinate settings {missing}", missing=missing
        )
    return {
        axis: class_histogram(by_id[sid], n_qubits)
        for axis, sid in AXIS_SETTING_IDS.items()
    }


def _histogram_statistic(hist: np.ndarray, stat: np.ndarray):
    """Plugin mean and mean-variance of a per-shot statistic."""
    total = hist.sum()
    if total < 2:
        raise InsufficientCountsError(
            f"need at least 2 counts per setting, got {total:g}"
        )
    mean = float(hist @ stat) / total
    second = float(hist @ (stat * stat)) / total
    return mean, max(second - mean * mean, 0.0) / (total - 1.0)


def jmoments_from_counts(data: CountData, n_qubits: int, powers=None) -> dict:
    """Collective spin moments from x, y, z setting counts.

    A Hamming class with w ones has collective spin projection
    (n_qubits - 2 w) / 2 along the measured axis.  Returns a map from
    (axis, power) to (value, sigma).
    """
    if powers is None:
        powers = range(1, n_qubits + 1)
    hists = _axis_histograms(data, n_qubits)
    j_values = (n_qubits - 2.0 * np.arange(n_qubits + 1)) / 2.0
    out = {}
    for axis, hist in hists.items():
        for power in powers:
            mean, var = _histogram_statistic(hist, j_values ** power)
            out[(axis, power)] = (mean, sqrt(var))
    return out


def ps_bound_from_counts(data: CountData, n_qubits: int):
    """Symmetric-overlap lower bound with an error bar, straight from counts.

    Each axis contributes a single per-shot statistic g_a(j), so the
    correlation between different powers of the same setting is handled
    exactly; independent settings then add in quadrature.
    """
    coeffs = ps_bound_coefficients(n_qubits)
    hists = _axis_histograms(data, n_qubits)
    j_values = (n_qubits - 2.0 * np.arange(n_qubits + 1)) / 2.0
    total = 0.0
    variance = 0.0
    for axis, powers in coeffs.items():
        stat = np.zeros_like(j_values)
        for power, c in powers.items():
            stat += c * j_values ** power
        mean, var = _histogram_statistic(hists[axis], stat)
        total += mean
        variance += var
    return total, sqrt(variance)


def obs2_bound(ps: float) -> float:
    """Fidelity of a state to its symmetrized self is at least ps squared."""
    if not 0.0 <= ps <= 1.0:
        raise ValueError(f"overlap must be in [0, 1], got {ps}")
    return ps * ps


def n_subspaces(n_qubits: int) -> int:
    """Number of spin-j blocks counted with multiplicity.

    Telescoping the multiplicities C(N, N/2 - j) - C(N, N/2 - j - 1)
    leaves the central binomial coefficient.
    """
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return comb(n_qubits, n_qubits // 2)


def strong_bound(ps: float, n_qubits: int) -> float:
    """Sharper fidelity bound using how few invariant blocks exist.

    Degenerates to the plain squared bound for a single qubit, where the
    correction term is 0/0.
    """
    base = obs2_bound(ps)
    n_ss = n_subspaces(n_qubits)
    if n_ss == 1:
        return base
    return base + (1.0 - ps) ** 2 / (n_ss - 1.0)


def fidelity(rho: np.ndarray, sigma: np.ndarray, atol: float = 1e-8) -> float:
    """Squared Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected two square matrices of equal shape")
    for name, mat in (("first", rho), ("second", sigma)):
        if np.abs(mat - mat.conj().T).max() > atol:
            raise ValueError(f"{name} argument is not Hermitian within tolerance")
        if abs(np.trace(mat).real - 1.0) > 1e-6:
            raise ValueError(f"{name} argument does not have unit trace")
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if evals.min() < -atol:
        raise ValueError(f"first argument has eigenvalue {evals.min():.3e} < 0")
    if np.linalg.eigvalsh(0.5 * (sigma + sigma.conj().T)).min() < -atol:
        raise ValueError("second argument is not positive semidefinite")
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    inner = np.linalg.eigvalsh(root @ sigma @ root)
    value = float(np.sum(np.sqrt(np.clip(inner, 0.0, None)))) ** 2
    return min(value, 1.0)


def trace_bound(f: float) -> float:
    """Half trace distance between a state and its symmetrization is at
    most sqrt(1 - F)."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {f}")
    return sqrt(1.0 - f)


def element_bound(f: float) -> float:
    """The same sqrt(1 - F) caps any single expectation-value shift."""
    return trace_bound(f)


def symmetric_expectation(b: BlochVector, op: np.ndarray):
    """Expectation of a Hermitian operator on the state behind a Bloch
    vector, with linear error propagation when error bars are present.

    Returns (value, sigma); sigma is None without error bars.
    """
    check_dense_size(b.n_qubits)
    op_bloch = bloch_from_dense(np.asarray(op, dtype=complex))
    mults = np.array([multiplicity(idx) for idx in b.classes], dtype=float)
    coeffs = mults * op_bloch.values / 2 ** b.n_qubits
    value = float(coeffs @ b.values)
    if b.sigmas is None:
        return value, None
    return value, float(np.sqrt((coeffs * coeffs) @ (b.sigmas * b.sigmas)))


def dicke_fidelities(state, n_qubits: int | None = None) -> dict:
    """Overlap with every Dicke state, keyed by excitation number.

    Accepts a Bloch vector (error bars propagate) or a dense matrix
    (sigma is None).  Projecting onto a symmetric pure state only sees
    the symmetrized part of a dense input.
    """
    if isinstance(state, BlochVector):
        n_qubits = state.n_qubits
    elif n_qubits is None:
        n_qubits = int(np.log2(np.asarray(state).shape[0]))
    check_dense_size(n_qubits)
    out = {}
    for e in range(n_qubits + 1):
        ket = dicke_state(n_qubits, e)
        if isinstance(state, BlochVector):
            out[e] = symmetric_expectation(state, np.outer(ket, ket.conj()))
        else:
            out[e] = (float(np.real(ket.conj() @ state @ ket)), None)
    return out


def three_setting_witness() -> np.ndarray:
    """Four-qubit entanglement witness built from x, y, z moments only."""
    eye = np.eye(16)
    jx2 = collective_op("x", 2, 4)
    jy2 = collective_op("y", 2, 4)
    jz2 = collective_op("z", 2, 4)
    jx4 = collective_op("x", 4, 4)
    jy4 = collective_op("y", 4, 4)
    jz4 = collective_op("z", 4, 4)
    return (
        2.0 * eye
        + (jx2 + jy2 - jx4 - jy4) / 6.0
        + (31.0 / 12.0) * jz2
        - (7.0 / 12.0) * jz4
    )


def projector_witness() -> np.ndarray:
    """Witness whose expectation is 2/3 minus the half-filled Dicke fidelity."""
    ket = dicke_state(4, 2)
    return (2.0 / 3.0) * np.eye(16) - np.outer(ket, ket.conj())


_WITNESS_XY = {2: 1.0 / 6.0, 4: -1.0 / 6.0}
_WITNESS_Z = {2: 31.0 / 12.0, 4: -7.0 / 12.0}


def witness_fidelity_bound(jmoments: dict) -> float:
    """Lower bound on the half-filled Dicke fidelity of four qubits.

    Uses moments up to fourth order from the three coordinate settings;
    the bound is 2/3 - <witness>/3.
    """
    needed = [(axis, p) for axis in "xy" for p in (2, 4)] + [("z", 2), ("z", 4)]
    missing = [key for key in needed if key not in jmoments]
    if missing:
        raise IncompleteDataError(
            f"moments {missing} are required for the witness", missing=missing
        )
    w = 2.0
    for axis in "xy":
        for power, c in _WITNESS_XY.items():
            w += c * _moment_value(jmoments[(axis, power)])
    for power, c in _WITNESS_Z.items():
        w += c * _moment_value(jmoments[("z", power)])
    return 2.0 / 3.0 - w / 3.0


def witness_fidelity_bound_from_counts(data: CountData):
    """Witness-based fidelity bound with an error bar, from x, y, z counts."""
    hists = _axis_histograms(data, 4)
    j_values = (4 - 2.0 * np.arange(5)) / 2.0
    value = 2.0
    variance = 0.0
    for axis in "xyz":
        table = _WITNESS_Z if axis == "z" else _WITNESS_XY
        stat = np.zeros_like(j_values)
        for power, c in table.items():
            stat += c * j_values ** power
        mean, var = _histogram_statistic(hists[axis], stat)
        value += mean
        variance += var
    return 2.0 / 3.0 - value / 3.0, sqrt(variance) / 3.0


@dataclass
class SymmetryReport:
    """Everything the three coordinate settings say about symmetry.

    A report may be partial: when no overlap bound exists for the qubit
    count, every bound field is None and note says why.
    """

    n_qubits: int
    n_ss: int
    ps_lower: float | None = None
    ps_sigma: float | None = None
    fidelity_lower_obs2: float | None = None
    fidelity_obs2_sigma: float | None = None
    fidelity_lower_strong: float | None = None
    fidelity_strong_sigma: float | None = None
    trace_bound: float | None = None
    trace_bound_sigma: float | None = None
    note: str = ""


def _report_from_bound(n_qubits: int, ps: float, ps_sigma: float, note: str = "") -> SymmetryReport:
    clipped = min(max(ps, 0.0), 1.0)
    if clipped != ps:
        extra = f"overlap bound {ps:.6g} clipped into [0, 1] for the fidelity bounds"
        note = f"{note}; {extra}" if note else extra
    n_ss = n_subspaces(n_qubits)
    strong = strong_bound(clipped, n_qubits)
    slope = 2.0 * clipped
    if n_ss > 1:
        slope = abs(2.0 * clipped - 2.0 * (1.0 - clipped) / (n_ss - 1.0))
    strong_sigma = slope * ps_sigma
    tb = trace_bound(strong)
    # finite difference instead of the derivative, which diverges as the
    # fidelity bound approaches 1
    tb_sigma = trace_bound(max(strong - strong_sigma, 0.0)) - tb
    return SymmetryReport(
        n_qubits=n_qubits,
        n_ss=n_ss,
        ps_lower=ps,
        ps_sigma=ps_sigma,
        fidelity_lower_obs2=obs2_bound(clipped),
        fidelity_obs2_sigma=2.0 * clipped * ps_sigma,
        fidelity_lower_strong=strong,
        fidelity_strong_sigma=strong_sigma,
        trace_bound=tb,
        trace_bound_sigma=tb_sigma,
        note=note,
    )


def symmetry_report(data: CountData, n_qubits: int) -> SymmetryReport:
    """Assemble the symmetry diagnostics for one counts record.

    Qubit counts without tabulated bound coefficients yield a partial
    report instead of an error; missing coordinate settings still raise.
    """
    try:
        ps, ps_sigma = ps_bound_from_counts(data, n_qubits)
    except UnsupportedSizeError as exc:
        _axis_histograms(data, n_qubits)  # still insist on complete data
        return SymmetryReport(
            n_qubits=n_qubits, n_ss=n_subspaces(n_qubits), note=str(exc)
        )
    return _report_from_bound(n_qubits, ps, ps_sigma)


def symmetry_report_from_bloch(b: BlochVector) -> SymmetryReport:
    """Symmetry diagnostics evaluated on a reconstructed state.

    The bound operator expectation is one linear functional of the Bloch
    entries, so its error bar propagates directly.
    """
    try:
        op = ps_bound_operator(b.n_qubits)
    except UnsupportedSizeError as exc:
        return SymmetryReport(
            n_qubits=b.n_qubits, n_ss=n_subspaces(b.n_qubits), note=str(exc)
        )
    ps, ps_sigma = symmetric_expectation(b, op)
    return _report_from_bound(b.n_qubits, ps, ps_sigma or 0.0)
