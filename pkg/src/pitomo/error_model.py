"""Statistical error model for Poissonian count experiments.

Each setting collects a Poisson-distributed total number of events with
expectation lambda.  The variance of a class moment estimated from one
setting is the per-event variance of its outcome statistic divided by
lambda - 1; for white noise this collapses to 1 / (C(N, n) (lambda - 1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .basis import BlochVector, as_direction, check_qubit_count
from .measurement import class_probabilities, class_weights

WHITE_NOISE = "white-noise"
STATE_BASED = "state-based"


@dataclass
class VarianceModel:
    """Counting-noise assumptions used to weight and score schemes.

    kind is "white-noise" (closed form, direction independent) or
    "state-based" (variance of the outcome statistic under a prior state).
    lam is the expected total count per setting; an array gives one value
    per setting.
    """

    kind: str
    lam: float | np.ndarray
    rho0: object | None = None

    def __post_init__(self):
        if self.kind not in (WHITE_NOISE, STATE_BASED):
            raise ValueError(f"unknown model kind {self.kind!r}")
        lam = np.asarray(self.lam, dtype=float)
        if np.any(lam <= 1.0):
            raise ValueError("expected counts per setting must exceed 1")
        self.lam = float(lam) if lam.ndim == 0 else lam
        if self.kind == STATE_BASED and self.rho0 is None:
            raise ValueError("state-based model needs a prior state")

    @classmethod
    def white_noise(cls, lam) -> "VarianceModel":
        return cls(WHITE_NOISE, lam)

    @classmethod
    def from_state(cls, rho0, lam) -> "VarianceModel":
        return cls(STATE_BASED, lam, rho0)

    def lam_for(self, setting_index: int | None) -> float:
        if np.ndim(self.lam) == 0:
            return float(self.lam)
        if setting_index is None:
            raise ValueError("per-setting counts need a setting index")
        return float(np.asarray(self.lam)[setting_index])


def setting_variance(
    a,
    n_identity: int,
    model: VarianceModel,
    *,
    n_qubits: int,
    setting_index: int | None = None,
) -> float:
    """Variance of one class moment estimated from a single setting."""
    check_qubit_count(n_qubits)
    if not 0 <= n_identity <= n_qubits - 1:
        raise ValueError(
            f"identity count must be in [0, {n_qubits - 1}], got {n_identity}"
        )
    lam = model.lam_for(setting_index)
    if model.kind == WHITE_NOISE:
        as_direction(a)  # direction still has to be sane
        return 1.0 / (comb(n_qubits, n_identity) * (lam - 1.0))
    probs = class_probabilities(model.rho0, a)
    if probs.size != n_qubits + 1:
        raise ValueError("prior state size does not match n_qubits")
    h = class_weights(n_qubits, n_identity)
    spread = float(probs @ h**2 - (probs @ h) ** 2)
    return spread / (lam - 1.0)


def bloch_element_variance(coeff_row, variances) -> float:
    """Variance of a linear combination of independent setting moments."""
    c = np.asarray(coeff_row, dtype=float)
    v = np.asarray(variances, dtype=float)
    if c.shape != v.shape:
        raise ValueError("coefficient row and variances must align")
    if np.any(v < 0.0):
        raise ValueError("variances must be non-negative")
    return float(np.sum(c * c * v))


def _setting_variance_table(scheme, model: VarianceModel) -> np.ndarray:
    """variances[j, n] for setting j and identity count n."""
    nq = scheme.n_qubits
    lam = model.lam
    if np.ndim(lam) == 1 and np.asarray(lam).size != scheme.num_settings:
        raise ValueError("per-setting counts must match the scheme size")
    out = np.empty((scheme.num_settings, nq))
    for j in range(scheme.num_settings):
        for n_id in range(nq):
            out[j, n_id] = setting_variance(
                scheme.directions[j], n_id, model, n_qubits=nq, setting_index=j
            )
    return out


def element_variances(scheme, model: VarianceModel) -> np.ndarray:
    """Per-class estimator variances, aligned with the scheme's class list."""
    table = _setting_variance_table(scheme, model)
    n_ids = np.array([idx.n for idx in scheme.measured_classes])
    per_setting = table[:, n_ids].T  # (classes, settings)
    return np.einsum("cj,cj->c", scheme.coefficients**2, per_setting)


def e_total(scheme, model: VarianceModel, objective: str = "all") -> float:
    """Multiplicity-weighted sum of element variances.

    objective "all" scores every measurable class, "full" only the classes
    with no identity factor.  The identity class is fixed by normalization
    and contributes nothing either way.
    """
    if objective not in ("all", "full"):
        raise ValueError(f"objective must be 'all' or 'full', got {objective!r}")
    variances = element_variances(scheme, model)
    weights = np.array([float(m) for m in scheme.measured_multiplicities])
    if objective == "full":
        sel = np.array([idx.n == 0 for idx in scheme.measured_classes])
        return float(np.sum(weights[sel] * variances[sel]))
    return float(np.sum(weights * variances))


def eps_max(scheme, model: VarianceModel) -> float:
    """Largest single-element standard deviation under the model."""
    return float(np.sqrt(element_variances(scheme, model).max()))
