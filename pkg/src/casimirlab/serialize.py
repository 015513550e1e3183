"""CSV and JSON emission with deterministic formatting."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DomainError
from .spectrum import LD, Spectrum


def to_jsonable(obj):
    """Recursively convert results to plain JSON types.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if hasattr(obj, "to_dict") and not isinstance(obj, type):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.dtype != LD else \
            [to_jsonable(float(v)) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if dataclasses.is_dataclass(obj):
        return to_jsonable(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj):
    """Deterministic JSON: sorted keys, fixed indentation, no NaN literals."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _open(path, mode="w"):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_json(obj, path):
    with _open(path) as fh:
        fh.write(dumps(obj))
    return Path(path)


def _fmt(x):
    if isinstance(x, LD):
        return np.format_float_scientific(x, unique=True)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, columns, comments=()):
    """Columns of equal length; floats written with round-trip precision."""
    with _open(path) as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])
    return Path(path)


# -- spectra ------------------------------------------------------------------

def spectrum_to_csv(spec, path):
    """Eigenvalues (extended precision, shortest round-trip form) and multiplicities."""
    meta = [f"dim={spec.dim}", f"ceiling={_fmt(LD(spec.ceiling))}",
            f"weyl_constant={spec.weyl_constant!r}", f"has_zero_mode={spec.has_zero_mode}",
            f"negative_count={spec.negative_count}"]
    return write_csv(path, ["lambda", "multiplicity"],
                     [list(spec.values), spec.multiplicities.tolist()], meta)


def spectrum_from_csv(path):
    meta, lam, mult = {}, [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line and not line.startswith("lambda"):
                a, b = line.split(",")
                lam.append(LD(a))
                mult.append(int(b))
    try:
        return Spectrum(np.array(lam, dtype=LD), np.array(mult, dtype=np.int64),
                        dim=int(meta["dim"]), ceiling=float(LD(meta["ceiling"])),
                        weyl_constant=float(meta["weyl_constant"]),
                        has_zero_mode=meta["has_zero_mode"] == "True",
                        negative_count=int(meta["negative_count"]))
    except KeyError as exc:
        raise DomainError(f"{path}: missing metadata {exc}") from None


def spectrum_to_dict(spec):
    return {"dim": spec.dim, "ceiling": spec.ceiling, "weyl_constant": spec.weyl_constant,
            "has_zero_mode": spec.has_zero_mode, "negative_count": spec.negative_count,
            "lambda": [_fmt(v) for v in spec.values],
            "multiplicity": spec.multiplicities.tolist(), "digest": spec.digest()}


def spectrum_from_dict(data):
    return Spectrum(np.array([LD(v) for v in data["lambda"]], dtype=LD),
                    np.array(data["multiplicity"], dtype=np.int64), dim=data["dim"],
                    ceiling=data["ceiling"], weyl_constant=data["weyl_constant"],
                    has_zero_mode=data["has_zero_mode"], negative_count=data["negative_count"])


# -- plot data ----------------------------------------------------------------

def export_plot_data(result, path, name=None):
    """Write the curves of a result as CSV files (first column is t or x).

    ``path`` is a directory; returns the list of written files.
    """
    from .casimir import StudyResult, SurfaceDecomposition
    from .kernels import DensityProfile, TraceGrid
    from .riesz import RieszMean

    out = Path(path)
    files = []
    if isinstance(result, TraceGrid):
        files.append(write_csv(out / f"{name or 'trace_' + result.kind.value}.csv",
                               ["t", result.kind.value, "error"],
                               [result.t, list(result.values), result.errors]))
    elif isinstance(result, DensityProfile):
        files.append(write_csv(out / f"{name or 'density'}.csv", ["x", "value", "error"],
                               [result.x, result.values, result.errors],
                               [f"xi={result.xi!r}", f"t={result.t!r}"]))
    elif isinstance(result, StudyResult):
        files.append(write_csv(out / f"{name or 'study'}.csv",
                               ["t", "integral", "surface", "energy", "delta"],
                               [result.t, result.integral, result.surface, result.energy,
                                result.delta], [f"xi={result.xi!r}"]))
    elif isinstance(result, SurfaceDecomposition):
        files.append(write_csv(out / f"{name or 'surface'}.csv",
                               ["t", "E_vol", "E_surf", "phi2_wall"],
                               [result.t, result.volume, result.surface, result.phi2_wall]))
    elif isinstance(result, RieszMean):
        files.append(write_csv(out / f"{name or 'riesz_' + result.variable}.csv",
                               [result.variable, f"R{result.alpha}"],
                               [result.points, list(result.values)]))
    elif isinstance(result, Spectrum):
        files.append(spectrum_to_csv(result, out / f"{name or 'spectrum'}.csv"))
    else:
        raise DomainError(f"no plot data for {type(result).__name__}")
    return files


def read_csv(path):
    """Header and float columns of a CSV written here (comments skipped)."""
    with open(path, encoding="utf-8") as fh:
        text = "".join(line for line in fh if not line.startswith("#"))
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return header, [np.array([float(r[i]) for r in body]) for i in range(len(header))]


def default_output_dir():
    return Path(os.environ.get("CASIMIRLAB_OUTPUT_DIR", "."))
