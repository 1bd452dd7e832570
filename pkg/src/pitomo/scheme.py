"""Measurement scheme design.

A scheme is a list of measurement directions, one collectively measured
observable per setting, together with the coefficient table that maps
setting moments onto Bloch entries.  D = (N+2)(N+1)/2 settings suffice for
every class, and for a fixed direction set the statistically optimal
coefficients have a closed form; the directions themselves are improved by
seeded random-rotation descent on the total variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .basis import (
    PiIndex,
    as_direction,
    check_qubit_count,
    enumerate_basis,
    multiplicity,
)
from .error_model import VarianceModel, e_total, setting_variance
from .exceptions import OptimizationFailedError, SingularSystemError


def num_settings(n_qubits: int) -> int:
    """Settings needed to determine every class: (N^2 + 3N + 2) / 2."""
    check_qubit_count(n_qubits)
    return comb(n_qubits + 2, 2)


def measured_classes(n_qubits: int) -> tuple[PiIndex, ...]:
    """All classes estimated from data, i.e. everything but the identity."""
    return tuple(idx for idx in enumerate_basis(n_qubits) if idx.weight > 0)


@dataclass
class Scheme:
    """Directions plus the coefficient table of a complete measurement plan.

    coefficients has one row per measured class (canonical order, identity
    excluded) and one column per setting; lam records the per-setting count
    expectation the design was scored with.
    """

    n_qubits: int
    directions: np.ndarray
    coefficients: np.ndarray
    lam: float
    setting_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        check_qubit_count(self.n_qubits)
        self.directions = np.asarray(self.directions, dtype=float)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        d = num_settings(self.n_qubits)
        if self.directions.shape != (d, 3):
            raise ValueError(
                f"expected {d} directions for {self.n_qubits} qubits, "
                f"got shape {self.directions.shape}"
            )
        rows = len(measured_classes(self.n_qubits))
        if self.coefficients.shape != (rows, d):
            raise ValueError(
                f"expected coefficient table of shape {(rows, d)}, "
                f"got {self.coefficients.shape}"
            )
        if not self.setting_ids:
            width = len(str(d))
            self.setting_ids = [f"s{j + 1:0{width}d}" for j in range(d)]
        if len(self.setting_ids) != d:
            raise ValueError("setting ids must match the number of settings")

    @property
    def num_settings(self) -> int:
        return self.directions.shape[0]

    @property
    def measured_classes(self) -> tuple[PiIndex, ...]:
        return measured_classes(self.n_qubits)

    @property
    def measured_multiplicities(self) -> tuple[int, ...]:
        return tuple(multiplicity(idx) for idx in self.measured_classes)

    @property
    def settings(self) -> list[tuple[str, np.ndarray]]:
        return list(zip(self.setting_ids, self.directions))

    def coefficient_row(self, idx) -> np.ndarray:
        classes = self.measured_classes
        pos = {c: i for i, c in enumerate(classes)}
        return self.coefficients[pos[PiIndex(*idx)]]


def design_matrix(directions: np.ndarray, n_identity: int, n_qubits: int) -> np.ndarray:
    """Rows: classes with the given identity count; columns: settings.

    Entry (c, j) is the coefficient of class c in the expansion of setting
    j's symmetrized observable power, so V @ coeffs = target indicators.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    r = n_qubits - n_identity
    rows = []
    for k in range(r + 1):
        for l in range(r - k + 1):
            m = r - k - l
            w = factorial(r) // (factorial(k) * factorial(l) * factorial(m))
            rows.append(
                w
                * directions[:, 0] ** k
                * directions[:, 1] ** l
                * directions[:, 2] ** m
            )
    return np.array(rows)


def solve_coefficients(V: np.ndarray, weights: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Minimize sum_j (weights_j c_j)^2 subject to V c = target.

    weights are per-setting standard deviations; the closed form is
    c = E^-2 V^T (V E^-2 V^T)^-1 target with E = diag(weights).
    """
    V = np.asarray(V, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != V.shape[1]:
        raise ValueError("need one positive weight per column of V")
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")
    inv_w2 = 1.0 / (w * w)
    G = (V * inv_w2) @ V.T
    try:
        y = np.linalg.solve(G, target)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal equations are singular; the direction set is degenerate"
        ) from exc
    return inv_w2 * (V.T @ y)


def _solve_block(V: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Coefficient rows for every class of one identity count at once."""
    inv_w2 = 1.0 / (weights * weights)
    G = (V * inv_w2) @ V.T
    try:
        Y = np.linalg.solve(G, np.eye(G.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal equations are singular; the direction set is degenerate"
        ) from exc
    return ((V * inv_w2).T @ Y).T


def coefficient_table(directions: np.ndarray, model: VarianceModel, n_qubits: int) -> np.ndarray:
    """Optimal coefficient rows for all measured classes, canonical order."""
    d = directions.shape[0]
    blocks = []
    for n_id in range(n_qubits):
        weights = np.sqrt(
            [
                setting_variance(
                    directions[j], n_id, model, n_qubits=n_qubits, setting_index=j
                )
                for j in range(d)
            ]
        )
        V = design_matrix(directions, n_id, n_qubits)
        try:
            blocks.append((n_id, _solve_block(V, weights)))
        except SingularSystemError as exc:
            first = next(
                idx for idx in measured_classes(n_qubits) if idx.n == n_id
            )
            raise SingularSystemError(
                f"cannot isolate classes with {n_id} identities "
                f"(first affected: {tuple(first)}): {exc}"
            ) from exc
    # interleave block rows back into canonical class order
    rows = np.empty((len(measured_classes(n_qubits)), d))
    cursor = {n_id: 0 for n_id in range(n_qubits)}
    block_map = dict(blocks)
    for i, idx in enumerate(measured_classes(n_qubits)):
        rows[i] = block_map[idx.n][cursor[idx.n]]
        cursor[idx.n] += 1
    return rows


def frame_potential(directions: np.ndarray, order: int = 2) -> float:
    """Sum over all pairs of (v_i . v_j)^(2 order), diagonal included."""
    directions = np.asarray(directions, dtype=float)
    gram = directions @ directions.T
    return float(np.sum(gram ** (2 * order)))


def init_directions(count: int, seed: int, order: int = 2, iterations: int = 400) -> np.ndarray:
    """Well-spread unit vectors from frame-potential descent.

    Starts from seeded uniform sphere samples and never accepts a step that
    raises the potential, so the result is at least as spread as the start.
    """
    if count < 1:
        raise ValueError("need at least one direction")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    dirs = rng.normal(size=(count, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if count == 1:
        return dirs
    step = 0.1
    current = frame_potential(dirs, order)
    for _ in range(iterations):
        gram = dirs @ dirs.T
        np.fill_diagonal(gram, 0.0)
        grad = 4 * order * (gram ** (2 * order - 1)) @ dirs
        grad -= np.sum(grad * dirs, axis=1, keepdims=True) * dirs
        trial = dirs - step * grad
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        value = frame_potential(trial, order)
        if value < current:
            dirs, current = trial, value
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return dirs


def canonicalize_directions(directions: np.ndarray) -> np.ndarray:
    """Flip antipodal representatives into the az >= 0 hemisphere.

    Ties at az == 0 are broken by ay, then ax.  A setting and its antipode
    yield identical statistics, so this is purely a normal form.
    """
    out = np.array(directions, dtype=float)
    for j, (ax, ay, az) in enumerate(out):
        if az < 0 or (az == 0 and (ay < 0 or (ay == 0 and ax < 0))):
            out[j] = -out[j]
    return out


def scheme_from_directions(
    directions, model: VarianceModel, n_qubits: int, setting_ids=None
) -> Scheme:
    """Solve the coefficient table for a fixed direction set."""
    directions = np.asarray(
        [as_direction(v) for v in np.atleast_2d(directions)], dtype=float
    )
    if directions.shape[0] != num_settings(n_qubits):
        raise ValueError(
            f"{n_qubits} qubits need {num_settings(n_qubits)} settings, "
            f"got {directions.shape[0]}"
        )
    table = coefficient_table(directions, model, n_qubits)
    lam = float(np.mean(model.lam))
    return Scheme(n_qubits, directions, table, lam, list(setting_ids or []))


def _rotate(directions: np.ndarray, axes: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of each direction about its own random axis."""
    cos = np.cos(angles)[:, None]
    sin = np.sin(angles)[:, None]
    dot = np.sum(axes * directions, axis=1, keepdims=True)
    out = directions * cos + np.cross(axes, directions) * sin + axes * dot * (1 - cos)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def optimize_scheme(
    n_qubits: int,
    model: VarianceModel,
    objective: str = "all",
    seed: int = 0,
    budget: int = 5000,
    objective_trace: list | None = None,
) -> Scheme:
    """Search for a direction set with small total variance.

    Accept/reject descent with per-direction random rotations.  The step
    angle starts at 0.1 rad, halves after 200 consecutive rejections with a
    floor of 1e-4 rad, and the search stops early once the relative
    improvement over 500 accepted steps drops below 1e-6.  Deterministic
    for a given seed; objective_trace, when given, collects the objective
    value after every accepted step.
    """
    if objective not in ("all", "full"):
        raise ValueError(f"objective must be 'all' or 'full', got {objective!r}")
    if budget < 1:
        raise ValueError("budget must be positive")
    d = num_settings(n_qubits)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    dirs = init_directions(d, seed)

    def evaluate(cand):
        table = coefficient_table(cand, model, n_qubits)
        lam = float(np.mean(model.lam))
        sch = Scheme(n_qubits, cand, table, lam)
        return e_total(sch, model, objective), sch

    best = None
    spent = 0
    while best is None and spent < budget:
        try:
            best = evaluate(dirs)
        except SingularSystemError:
            spent += 1
            axes = rng.normal(size=(d, 3))
            axes /= np.linalg.norm(axes, axis=1, keepdims=True)
            dirs = _rotate(dirs, axes, rng.uniform(0.0, 0.1, size=d))
    if best is None:
        raise OptimizationFailedError(
            f"no solvable direction set found within {budget} attempts"
        )
    value, _ = best
    if objective_trace is not None:
        objective_trace.append(value)

    angle = 0.1
    rejects = 0
    accepted_marker = value
    accepted_count = 0
    for _ in range(spent, budget):
        axes = rng.normal(size=(d, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        cand = _rotate(dirs, axes, rng.uniform(0.0, angle, size=d))
        try:
            cand_value, cand_scheme = evaluate(cand)
        except SingularSystemError:
            cand_value = np.inf
        if cand_value < value:
            dirs = cand
            value = cand_value
            best = (cand_value, cand_scheme)
            rejects = 0
            if objective_trace is not None:
                objective_trace.append(value)
            accepted_count += 1
            if accepted_count >= 500:
                if (accepted_marker - value) < 1e-6 * accepted_marker:
                    break
                accepted_marker = value
                accepted_count = 0
        else:
            rejects += 1
            if rejects >= 200:
                rejects = 0
                angle = max(angle / 2.0, 1e-4)

    final_dirs = canonicalize_directions(dirs)
    table = coefficient_table(final_dirs, model, n_qubits)
    lam = float(np.mean(model.lam))
    return Scheme(n_qubits, final_dirs, table, lam)
