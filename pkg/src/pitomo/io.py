"""Stable file formats: schemes, counts, Bloch vectors, dense states.

All files are JSON with a mandatory version field.  Writing is canonical
(sorted keys, fixed layout, floats at 17 significant digits), so the same
data always produces byte-identical files and every double survives a
round trip.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from math import isfinite

import numpy as np

from .analysis import SymmetryReport
from .basis import BlochVector, PiIndex, enumerate_basis
from .exceptions import FileFormatError
from .reconstruction import CountData
from .scheme import Scheme, measured_classes

FORMAT_VERSION = 1

BITSTRING_CONVENTION = "character i of a bitstring is qubit i; '0' records the +1 outcome"


def _fmt_float(x: float) -> str:
    if not isfinite(x):
        raise FileFormatError(f"cannot serialize non-finite number {x!r}")
    return format(float(x), ".17g")


def _is_number(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise FileFormatError(f"object keys must be strings, got {key!r}")
            items.append(f"{inner}{json.dumps(key)}: {_render(obj[key], indent + 1)}")
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(_is_number(x) for x in seq):
            return "[" + ", ".join(_render(x, 0) for x in seq) + "]"
        items = [f"{inner}{_render(x, indent + 1)}" for x in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise FileFormatError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    return _render(obj, 0) + "\n"


def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_canonical(obj))


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc})") from None


def _check_header(doc: dict, path, kind: str) -> int:
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: expected a JSON object for a {kind} file")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise FileFormatError(
            f"{path}: unsupported or missing version {version!r}, expected {FORMAT_VERSION}"
        )
    n = doc.get("N")
    if not isinstance(n, int) or n < 1:
        raise FileFormatError(f"{path}: field 'N' must be a positive integer")
    return n


def _class_key(idx: PiIndex) -> str:
    return f"{idx.k},{idx.l},{idx.m},{idx.n}"


def _parse_class_key(key: str, n_qubits: int, path) -> PiIndex:
    try:
        parts = tuple(int(p) for p in key.split(","))
    except ValueError:
        parts = ()
    if len(parts) != 4 or any(p < 0 for p in parts) or sum(parts) != n_qubits:
        raise FileFormatError(
            f"{path}: key {key!r} is not a class of {n_qubits} qubits"
        )
    return PiIndex(*parts)


def write_scheme(scheme: Scheme, path):
    coeffs = {
        _class_key(idx): scheme.coefficients[i]
        for i, idx in enumerate(scheme.measured_classes)
    }
    write_json(
        {
            "version": FORMAT_VERSION,
            "N": scheme.n_qubits,
            "lambda": scheme.lam,
            "settings": [
                {"id": sid, "direction": list(map(float, direction))}
                for sid, direction in scheme.settings
            ],
            "coefficients": coeffs,
        },
        path,
    )


def read_scheme(path) -> Scheme:
    doc = read_json(path)
    n = _check_header(doc, path, "scheme")
    try:
        lam = float(doc["lambda"])
        settings = doc["settings"]
        coeffs = doc["coefficients"]
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing field {exc}") from None
    ids, directions = [], []
    for entry in settings:
        ids.append(str(entry["id"]))
        directions.append([float(x) for x in entry["direction"]])
    classes = measured_classes(n)
    missing = [_class_key(idx) for idx in classes if _class_key(idx) not in coeffs]
    if missing:
        raise FileFormatError(f"{path}: coefficient rows missing for {missing}")
    rows = []
    for idx in classes:
        row = [float(x) for x in coeffs[_class_key(idx)]]
        if len(row) != len(ids):
            raise FileFormatError(
                f"{path}: coefficient row {_class_key(idx)} has {len(row)} entries, "
                f"expected {len(ids)}"
            )
        rows.append(row)
    try:
        return Scheme(n, np.array(directions), np.array(rows), lam, ids)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


def write_counts(data: CountData, path):
    write_json(
        {
            "version": FORMAT_VERSION,
            "N": data.n_qubits,
            "convention": BITSTRING_CONVENTION,
            "settings": [
                {"id": sid, "outcomes": {k: int(v) for k, v in outcomes.items()}}
                for sid, outcomes in data.settings
            ],
        },
        path,
    )


def read_counts(path) -> CountData:
    doc = read_json(path)
    n = _check_header(doc, path, "counts")
    records = []
    for entry in doc.get("settings", []):
        outcomes = {}
        for bits, count in entry["outcomes"].items():
            if not isinstance(count, int) or count < 0:
                raise FileFormatError(
                    f"{path}: count for outcome {bits!r} must be a non-negative integer"
                )
            outcomes[str(bits)] = count
        records.append((str(entry["id"]), outcomes))
    try:
        return CountData(n, records)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


def write_bloch(b: BlochVector, path):
    entries = {}
    for idx, value, sigma in b.items():
        record = {"value": float(value)}
        if sigma is not None:
            record["sigma"] = float(sigma)
        entries[_class_key(idx)] = record
    write_json(
        {"version": FORMAT_VERSION, "N": b.n_qubits, "entries": entries}, path
    )


def read_bloch(path) -> BlochVector:
    doc = read_json(path)
    n = _check_header(doc, path, "bloch")
    entries = doc.get("entries")
    if not isinstance(entries, dict):
        raise FileFormatError(f"{path}: field 'entries' must be an object")
    classes = enumerate_basis(n)
    seen = {}
    sigmas = {}
    for key, record in entries.items():
        idx = _parse_class_key(key, n, path)
        seen[idx] = float(record["value"])
        if "sigma" in record:
            sigmas[idx] = float(record["sigma"])
    missing = [_class_key(idx) for idx in classes if idx not in seen]
    if missing:
        raise FileFormatError(f"{path}: entries missing for classes {missing}")
    if sigmas and len(sigmas) != len(classes):
        raise FileFormatError(
            f"{path}: sigma must be present for all classes or none"
        )
    return BlochVector.from_entries(n, seen, sigmas or None)


def write_dense_state(rho: np.ndarray, path):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square matrix")
    n = int(np.log2(rho.shape[0]))
    if 2 ** n != rho.shape[0]:
        raise ValueError(f"matrix dimension {rho.shape[0]} is not a power of two")
    matrix = [
        [[float(x.real), float(x.imag)] for x in row]
        for row in rho
    ]
    write_json({"version": FORMAT_VERSION, "N": n, "matrix": matrix}, path)


def read_dense_state(path) -> np.ndarray:
    doc = read_json(path)
    n = _check_header(doc, path, "dense state")
    dim = 2 ** n
    matrix = doc.get("matrix")
    try:
        arr = np.array(matrix, dtype=float)
    except (TypeError, ValueError):
        raise FileFormatError(f"{path}: field 'matrix' is not a numeric array") from None
    if arr.shape != (dim, dim, 2):
        raise FileFormatError(
            f"{path}: expected a {dim}x{dim} matrix of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def write_report(report: SymmetryReport, path):
    doc = asdict(report)
    doc["N"] = doc.pop("n_qubits")
    doc["version"] = FORMAT_VERSION
    write_json(doc, path)


def read_report(path) -> SymmetryReport:
    doc = read_json(path)
    n = _check_header(doc, path, "report")
    fields = {
        key: doc.get(key)
        for key in (
            "ps_lower",
            "ps_sigma",
            "fidelity_lower_obs2",
            "fidelity_obs2_sigma",
            "fidelity_lower_strong",
            "fidelity_strong_sigma",
            "trace_bound",
            "trace_bound_sigma",
        )
    }
    try:
        n_ss = int(doc["n_ss"])
    except KeyError:
        raise FileFormatError(f"{path}: missing field 'n_ss'") from None
    return SymmetryReport(
        n_qubits=n, n_ss=n_ss, note=str(doc.get("note", "")), **fields
    )
