"""Synthetic experiments with Poissonian counting statistics.

Totals per setting are Poisson distributed and split multinomially over
outcomes, which is distribution-identical to independent per-outcome
Poisson counters but cheaper and exactly seedable.  Every setting draws
from its own substream derived from the master seed, so adding settings
never reshuffles earlier data.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .basis import BlochVector, bloch_from_dense, check_dense_size
from .measurement import class_probabilities, outcome_probabilities
from .reconstruction import CountData
from .states import noisy_dicke

# above this many bitstrings per Hamming class, split draws one subset at
# a time instead of allocating a full multinomial
_CLASS_SPLIT_LIMIT = 4096


@dataclass
class StateSpec:
    """Recipe for a target state.

    kind is one of "dicke" (optionally mixed with white noise), "mixed",
    "dense-file", or "bloch-file".
    """

    kind: str
    n_qubits: int | None = None
    excitations: int | None = None
    noise: float = 0.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("dicke", "mixed", "dense-file", "bloch-file"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise weight must be in [0, 1], got {self.noise}")
        if self.kind in ("dicke", "mixed") and self.n_qubits is None:
            raise ValueError(f"state kind {self.kind!r} needs a qubit count")
        if self.kind in ("dense-file", "bloch-file") and self.path is None:
            raise ValueError(f"state kind {self.kind!r} needs a file path")


def resolve_state(spec):
    """Turn a recipe into Bloch entries (fast path) or a dense matrix.

    BlochVector and dense inputs pass through untouched.
    """
    if isinstance(spec, BlochVector):
        return spec
    if isinstance(spec, np.ndarray):
        return spec
    if spec.kind == "mixed":
        values = BlochVector.from_entries(spec.n_qubits, {(0, 0, 0, spec.n_qubits): 1.0})
        return values
    if spec.kind == "dicke":
        check_dense_size(spec.n_qubits)
        rho = noisy_dicke(spec.n_qubits, spec.noise, spec.excitations)
        return bloch_from_dense(rho)
    from . import io

    if spec.kind == "dense-file":
        return io.read_dense_state(spec.path)
    return io.read_bloch(spec.path)


@dataclass
class OutcomeDistribution:
    """Exact outcome probabilities for one setting.

    kind "classes" indexes probabilities by Hamming class (enough for
    permutationally invariant states); kind "bitstrings" indexes by the
    integer value of the bitstring.
    """

    kind: str
    probabilities: np.ndarray
    n_qubits: int


def outcome_distribution(state, direction) -> OutcomeDistribution:
    """Probabilities of the counted outcomes for a state and setting."""
    state = resolve_state(state)
    if isinstance(state, BlochVector):
        probs = class_probabilities(state, direction)
        return OutcomeDistribution("classes", probs, state.n_qubits)
    n_qubits = int(np.log2(state.shape[0]))
    check_dense_size(n_qubits)
    probs = outcome_probabilities(state, direction)
    return OutcomeDistribution("bitstrings", probs, n_qubits)


def _split_class(count: int, weight: int, n_qubits: int, rng) -> dict:
    """Distribute count draws uniformly over the bitstrings of one class."""
    size = comb(n_qubits, weight)
    outcomes: dict[str, int] = {}
    if size == 1:
        bits = "1" * weight + "0" * (n_qubits - weight)  # weight 0 or N
        if weight == 0:
            bits = "0" * n_qubits
        outcomes[bits] = count
        return outcomes
    if size <= _CLASS_SPLIT_LIMIT:
        split = rng.multinomial(count, np.full(size, 1.0 / size))
        for positions, c in zip(combinations(range(n_qubits), weight), split):
            if c > 0:
                chars = ["0"] * n_qubits
                for pos in positions:
                    chars[pos] = "1"
                outcomes["".join(chars)] = int(c)
        return outcomes
    for _ in range(count):
        positions = rng.choice(n_qubits, size=weight, replace=False)
        chars = ["0"] * n_qubits
        for pos in positions:
            chars[pos] = "1"
        bits = "".join(chars)
        outcomes[bits] = outcomes.get(bits, 0) + 1
    return outcomes


def sample_counts(dist: OutcomeDistribution, lam: float, seed) -> dict:
    """One Poissonian shot record: bitstring -> count.

    seed may be an integer or an already constructed generator.
    """
    if lam <= 0:
        raise ValueError(f"expected counts must be positive, got {lam}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = int(rng.poisson(lam))
    if total == 0:
        return {}
    split = rng.multinomial(total, dist.probabilities)
    outcomes: dict[str, int] = {}
    if dist.kind == "bitstrings":
        for value, count in enumerate(split):
            if count > 0:
                outcomes[format(value, f"0{dist.n_qubits}b")] = int(count)
        return outcomes
    for weight, count in enumerate(split):
        if count > 0:
            outcomes.update(_split_class(int(count), weight, dist.n_qubits, rng))
    return outcomes


def run_experiment(state, scheme, lam: float, seed: int) -> CountData:
    """Simulate every setting of a scheme against one target state.

    scheme may also be a plain list of (id, direction) pairs.  Setting j
    uses the substream seeded by (seed, j).
    """
    if lam <= 0:
        raise ValueError(f"expected counts must be positive, got {lam}")
    settings = scheme.settings if hasattr(scheme, "settings") else list(scheme)
    state = resolve_state(state)
    if isinstance(state, BlochVector):
        n_qubits = state.n_qubits
    else:
        n_qubits = int(np.log2(state.shape[0]))
    if hasattr(scheme, "n_qubits") and scheme.n_qubits != n_qubits:
        raise ValueError(
            f"state is for {n_qubits} qubits, scheme for {scheme.n_qubits}"
        )
    records = []
    for j, (sid, direction) in enumerate(settings):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), j]))
        dist = outcome_distribution(state, direction)
        records.append((sid, sample_counts(dist, lam, rng)))
    return CountData(n_qubits, records)


def axis_settings() -> list:
    """The three coordinate settings used by the symmetry check."""
    return [
        ("X", np.array([1.0, 0.0, 0.0])),
        ("Y", np.array([0.0, 1.0, 0.0])),
        ("Z", np.array([0.0, 0.0, 1.0])),
    ]
