"""Render an analysis into delimited tables and static figures.

Everything lands in one directory as CSV plus PNG; rendering uses the
Agg backend so no display is ever required.
"""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .basis import BlochVector, DENSE_QUBIT_LIMIT, dense_from_bloch
from .analysis import SymmetryReport


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def bloch_table(b: BlochVector, path):
    """One row per class: indices, estimate, error bar."""
    rows = [
        (idx.k, idx.l, idx.m, idx.n, value, sigma)
        for idx, value, sigma in b.items()
    ]
    _write_rows(path, ("k", "l", "m", "n", "value", "sigma"), rows)


def dicke_table(fidelities: dict, path):
    rows = [
        (e, value, sigma) for e, (value, sigma) in sorted(fidelities.items())
    ]
    _write_rows(path, ("excitations", "value", "sigma"), rows)


def summary_table(report: SymmetryReport, path, extra: dict | None = None):
    """Key-value dump of the symmetry report plus any extra quantities."""
    doc = asdict(report)
    rows = [(key, doc[key]) for key in sorted(doc)]
    for key in sorted(extra or {}):
        rows.append((key, (extra or {})[key]))
    _write_rows(path, ("quantity", "value"), rows)


def _save(fig, path):
    fig.savefig(path, dpi=150)
    plt.close(fig)


def bloch_figure(b: BlochVector, path):
    """Every class estimate with its error bar, in canonical order."""
    labels = ["".join(map(str, idx)) for idx in b.classes]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(8.0, 0.28 * len(labels)), 4.0))
    sig = b.sigmas if b.sigmas is not None else None
    ax.errorbar(x, b.values, yerr=sig, fmt="o", markersize=3, capsize=2, lw=1)
    ax.axhline(0.0, color="0.7", lw=0.8, zorder=0)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("class expectation")
    ax.set_xlabel("class (klmn)")
    fig.tight_layout()
    _save(fig, path)


def dicke_figure(fidelities: dict, path):
    keys = sorted(fidelities)
    values = [fidelities[e][0] for e in keys]
    sigmas = [fidelities[e][1] for e in keys]
    if any(s is None for s in sigmas):
        sigmas = None
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(keys, values, yerr=sigmas, capsize=3, color="#4878a8")
    ax.set_xticks(list(keys))
    ax.set_xlabel("excitations")
    ax.set_ylabel("overlap")
    ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    _save(fig, path)


def density_figure(rho: np.ndarray, path):
    """Real and imaginary parts of a density matrix, shared color scale."""
    rho = np.asarray(rho)
    scale = max(np.abs(rho.real).max(), np.abs(rho.imag).max(), 1e-12)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for ax, part, title in (
        (axes[0], rho.real, "real part"),
        (axes[1], rho.imag, "imaginary part"),
    ):
        image = ax.imshow(part, vmin=-scale, vmax=scale, cmap="RdBu_r")
        ax.set_title(title)
        ax.set_xlabel("column")
        ax.set_ylabel("row")
    fig.colorbar(image, ax=axes, fraction=0.046)
    _save(fig, path)


def render_analysis(
    out_dir,
    b: BlochVector,
    report: SymmetryReport,
    fidelities: dict,
    extra: dict | None = None,
) -> list:
    """Write the full table/figure bundle for one reconstruction.

    Returns the list of written paths.  The density-matrix heatmap is
    skipped above the dense size limit.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, fn, *args):
        target = out / name
        fn(*args, target)
        written.append(target)

    emit("bloch_entries.csv", bloch_table, b)
    emit("dicke_fidelities.csv", dicke_table, fidelities)
    emit("summary.csv", lambda r, p: summary_table(r, p, extra), report)
    emit("bloch_entries.png", bloch_figure, b)
    emit("dicke_fidelities.png", dicke_figure, fidelities)
    if b.n_qubits <= DENSE_QUBIT_LIMIT:
        emit("density_matrix.png", density_figure, dense_from_bloch(b))
    return written
