"""Batch pipeline front end.

Five subcommands cover the full workflow: design a scheme, simulate
counts, reconstruct a state, analyze a reconstruction, and check the
symmetry of as-yet-unreconstructed data.  Data goes to files, duplicable
byte for byte given the same inputs and seed; diagnostics go to standard
error; exit status 0 means every requested output was written.
"""

from __future__ import annotations

import functools
import sys
from dataclasses import asdict

import click
import numpy as np

from . import io, report as report_mod
from .analysis import (
    dicke_fidelities,
    fidelity,
    symmetric_expectation,
    symmetry_report,
    symmetry_report_from_bloch,
    three_setting_witness,
)
from .basis import dense_from_bloch
from .error_model import VarianceModel, e_total, eps_max
from .exceptions import FileFormatError
from .reconstruction import physical_projection, reconstruct
from .scheme import optimize_scheme
from .simulate import StateSpec, axis_settings, resolve_state, run_experiment


def _command_errors(fn):
    """Turn domain failures into a diagnostic line and exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, RuntimeError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _load_config(path) -> dict:
    if path is None:
        return {}
    doc = io.read_json(path)
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: config must be a JSON object")
    return doc


def _pick(cli_value, config: dict, key: str, default=None):
    """Explicit flags win over the config file, which wins over defaults."""
    if cli_value is not None:
        return cli_value
    if key in config:
        return config[key]
    return default


def _require(value, flag: str):
    if value is None:
        raise click.UsageError(f"{flag} is required (flag or config file)")
    return value


config_option = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file with defaults for any flag; explicit flags override.",
)


@click.group()
def main():
    """Permutationally invariant multiqubit tomography toolkit."""


@main.command()
@config_option
@click.option("--n-qubits", type=int, default=None, help="Number of qubits.")
@click.option("--lambda", "lam", type=float, default=None,
              help="Expected total counts per setting (default 2050).")
@click.option("--objective", type=click.Choice(["all", "full"]), default=None,
              help="Minimize uncertainty over all classes or only identity-free ones.")
@click.option("--seed", type=int, default=None, help="Search seed (default 0).")
@click.option("--budget", type=int, default=None,
              help="Candidate evaluations for the search (default 5000).")
@click.option("--out", type=click.Path(writable=True), default=None,
              help="Scheme file to write.")
@_command_errors
def design(config, n_qubits, lam, objective, seed, budget, out):
    """Search for a measurement scheme with small statistical uncertainty."""
    cfg = _load_config(config)
    n_qubits = int(_require(_pick(n_qubits, cfg, "n_qubits"), "--n-qubits"))
    lam = float(_pick(lam, cfg, "lambda", 2050.0))
    objective = _pick(objective, cfg, "objective", "all")
    seed = int(_pick(seed, cfg, "seed", 0))
    budget = int(_pick(budget, cfg, "budget", 5000))
    out = _require(_pick(out, cfg, "out"), "--out")
    if lam <= 1.0:
        raise click.UsageError("--lambda must exceed 1")
    model = VarianceModel.white_noise(lam)
    scheme = optimize_scheme(
        n_qubits, model, objective=objective, seed=seed, budget=budget
    )
    io.write_scheme(scheme, out)
    click.echo(
        f"{scheme.num_settings} settings, e_total = "
        f"{e_total(scheme, model, objective):.6g}, eps_max = {eps_max(scheme, model):.6g}",
        err=True,
    )
    click.echo(f"wrote {out}", err=True)


_STATE_KINDS = {"dicke": "dicke", "mixed": "mixed",
                "dense": "dense-file", "bloch": "bloch-file"}


@main.command()
@config_option
@click.option("--scheme", "scheme_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Scheme whose settings are measured.")
@click.option("--axes", is_flag=True, default=False,
              help="Measure only the x, y, z settings (ids X, Y, Z).")
@click.option("--n-qubits", type=int, default=None,
              help="Qubit count (with --axes and a built-in state).")
@click.option("--state", "kind", type=click.Choice(sorted(_STATE_KINDS)), default=None,
              help="Target state family (default dicke).")
@click.option("--noise", type=float, default=None,
              help="White-noise weight mixed into a Dicke target (default 0).")
@click.option("--excitations", type=int, default=None,
              help="Dicke excitation number (default half of the qubits).")
@click.option("--state-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="State file for the dense/bloch kinds.")
@click.option("--lambda", "lam", type=float, default=None,
              help="Expected counts per setting (default: the scheme's value).")
@click.option("--seed", type=int, default=None, help="Master seed (default 0).")
@click.option("--out", type=click.Path(writable=True), default=None,
              help="Counts file to write.")
@_command_errors
def simulate(config, scheme_path, axes, n_qubits, kind, noise, excitations,
             state_file, lam, seed, out):
    """Generate Poissonian counts for a scheme and a target state."""
    cfg = _load_config(config)
    scheme_path = _pick(scheme_path, cfg, "scheme")
    axes = axes or bool(cfg.get("axes", False))
    n_qubits = _pick(n_qubits, cfg, "n_qubits")
    kind = _STATE_KINDS[_pick(kind, cfg, "state", "dicke")]
    noise = float(_pick(noise, cfg, "noise", 0.0))
    excitations = _pick(excitations, cfg, "excitations")
    state_file = _pick(state_file, cfg, "state_file")
    seed = int(_pick(seed, cfg, "seed", 0))
    out = _require(_pick(out, cfg, "out"), "--out")

    scheme = None
    if scheme_path is not None:
        scheme = io.read_scheme(scheme_path)
        if n_qubits is None:
            n_qubits = scheme.n_qubits
    elif not axes:
        raise click.UsageError("either --scheme or --axes is required")
    spec = StateSpec(
        kind,
        n_qubits=None if n_qubits is None else int(n_qubits),
        excitations=None if excitations is None else int(excitations),
        noise=noise,
        path=state_file,
    )
    state = resolve_state(spec)
    settings = axis_settings() if axes else scheme
    lam = _pick(lam, cfg, "lambda", scheme.lam if scheme is not None else None)
    if lam is None or float(lam) <= 0.0:
        raise click.UsageError("--lambda must be positive")
    lam = float(lam)
    counts = run_experiment(state, settings, lam, seed)
    io.write_counts(counts, out)
    click.echo(
        f"{len(counts.settings)} settings at lambda = {lam:g}, wrote {out}", err=True
    )


@main.command("reconstruct")
@config_option
@click.option("--scheme", "scheme_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Scheme the counts were taken with.")
@click.option("--counts", "counts_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Counts file to invert.")
@click.option("--out", type=click.Path(writable=True), default=None,
              help="Bloch file to write (estimates with error bars).")
@click.option("--dense-out", type=click.Path(writable=True), default=None,
              help="Optionally also write the projected physical density matrix.")
@_command_errors
def reconstruct_cmd(config, scheme_path, counts_path, out, dense_out):
    """Invert counts into Bloch estimates with error bars."""
    cfg = _load_config(config)
    scheme_path = _require(_pick(scheme_path, cfg, "scheme"), "--scheme")
    counts_path = _require(_pick(counts_path, cfg, "counts"), "--counts")
    out = _require(_pick(out, cfg, "out"), "--out")
    dense_out = _pick(dense_out, cfg, "dense_out")
    scheme = io.read_scheme(scheme_path)
    counts = io.read_counts(counts_path)
    b = reconstruct(scheme, counts)
    io.write_bloch(b, out)
    click.echo(
        f"reconstructed {len(b.values)} classes, largest error bar "
        f"{b.sigmas.max():.3g}, wrote {out}",
        err=True,
    )
    if dense_out is not None:
        rho = physical_projection(dense_from_bloch(b))
        io.write_dense_state(rho, dense_out)
        click.echo(f"wrote {dense_out}", err=True)


def _read_state_file(path) -> np.ndarray:
    """Dense matrix from either state format, by sniffing the payload."""
    doc = io.read_json(path)
    if isinstance(doc, dict) and "matrix" in doc:
        return io.read_dense_state(path)
    return dense_from_bloch(io.read_bloch(path))


@main.command()
@config_option
@click.option("--bloch", "bloch_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Reconstruction to analyze.")
@click.option("--reference", type=click.Path(exists=True, dir_okay=False), default=None,
              help="State file to compare against (dense or bloch).")
@click.option("--out", type=click.Path(writable=True), default=None,
              help="Analysis summary file to write.")
@click.option("--report-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for CSV tables and PNG figures.")
@_command_errors
def analyze(config, bloch_path, reference, out, report_dir):
    """Fidelities, witness bound, and symmetry diagnostics for a state."""
    cfg = _load_config(config)
    bloch_path = _require(_pick(bloch_path, cfg, "bloch"), "--bloch")
    reference = _pick(reference, cfg, "reference")
    out = _require(_pick(out, cfg, "out"), "--out")
    report_dir = _pick(report_dir, cfg, "report_dir")

    b = io.read_bloch(bloch_path)
    rep = symmetry_report_from_bloch(b)
    fidelities = dicke_fidelities(b)
    witness = None
    if b.n_qubits == 4:
        w_value, w_sigma = symmetric_expectation(b, three_setting_witness())
        witness = {
            "value": 2.0 / 3.0 - w_value / 3.0,
            "sigma": None if w_sigma is None else w_sigma / 3.0,
        }
    reference_fidelity = None
    if reference is not None:
        target = physical_projection(_read_state_file(reference))
        ours = physical_projection(dense_from_bloch(b))
        reference_fidelity = fidelity(ours, target)

    doc = {
        "version": io.FORMAT_VERSION,
        "N": b.n_qubits,
        "dicke_fidelities": {
            str(e): {"value": value, "sigma": sigma}
            for e, (value, sigma) in fidelities.items()
        },
        "witness_fidelity_bound": witness,
        "reference_fidelity": reference_fidelity,
        "report": {
            key: value for key, value in asdict(rep).items() if key != "n_qubits"
        },
    }
    io.write_json(doc, out)
    click.echo(f"wrote {out}", err=True)
    if rep.note:
        click.echo(f"note: {rep.note}", err=True)
    if report_dir is not None:
        extra = {}
        if witness is not None:
            extra["witness_fidelity_bound"] = witness["value"]
            extra["witness_fidelity_sigma"] = witness["sigma"]
        if reference_fidelity is not None:
            extra["reference_fidelity"] = reference_fidelity
        written = report_mod.render_analysis(report_dir, b, rep, fidelities, extra)
        click.echo(f"wrote {len(written)} report files to {report_dir}", err=True)


@main.command("check-symmetry")
@config_option
@click.option("--counts", "counts_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Counts with the X, Y, Z settings.")
@click.option("--out", type=click.Path(writable=True), default=None,
              help="Report file to write.")
@_command_errors
def check_symmetry(config, counts_path, out):
    """Bound the symmetric overlap and fidelity before reconstructing."""
    cfg = _load_config(config)
    counts_path = _require(_pick(counts_path, cfg, "counts"), "--counts")
    out = _require(_pick(out, cfg, "out"), "--out")
    counts = io.read_counts(counts_path)
    rep = symmetry_report(counts, counts.n_qubits)
    io.write_report(rep, out)
    if rep.ps_lower is not None:
        click.echo(
            f"ps_lower = {rep.ps_lower:.6g} +- {rep.ps_sigma:.3g}, "
            f"fidelity >= {rep.fidelity_lower_strong:.6g}",
            err=True,
        )
    if rep.note:
        click.echo(f"note: {rep.note}", err=True)
    click.echo(f"wrote {out}", err=True)


if __name__ == "__main__":
    main()
