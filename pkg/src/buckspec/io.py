"""Spectrum documents, CSV/plot emission, the content-addressed cache."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

from . import __version__
from .core import DomainSpec, ProblemSpec, Spectrum, validate_spectrum
from .errors import ValidationError

SCHEMA_VERSION = 1
PRODUCED_BY = f"buckspec {__version__}"


def fmt_float(x) -> str:
    """Shortest round-trip decimal; ``inf``/``-inf``/``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return fmt_float(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(obj) -> bytes:
    return (json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n").encode()


def canonical(obj) -> bytes:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def spectrum_document(spectrum: Spectrum) -> dict:
    res = spectrum.resolution
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": spectrum.problem.to_dict(),
        "solver": {
            "degrees": list(res.get("degrees", [])),
            "quadrature": list(res.get("quadrature", [])),
            "mode_cutoff": res.get("mode_cutoff"),
        },
        "values": [float(v) for v in spectrum.values],
        "convergence": [float(c) for c in spectrum.convergence],
        "converged": bool(spectrum.converged),
        "produced_by": PRODUCED_BY,
    }


def problem_from_dict(d: dict) -> ProblemSpec:
    dom = d["domain"]
    return ProblemSpec(int(d["l"]), d["kind"], DomainSpec(dom["kind"], tuple(dom["lengths"])))


def load_spectrum_file(path) -> tuple[ProblemSpec | None, list[float], dict]:
    """Read a spectrum document.

    A bare ``{"values": [...]}`` object (or a bare JSON list) is accepted as
    synthetic input with no attached problem.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError("FILE_NOT_FOUND", f"no such spectrum file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("BAD_SPECTRUM_FILE", f"{path}: {exc}") from exc
    if isinstance(doc, list):
        doc = {"values": doc}
    if "values" not in doc:
        raise ValidationError("BAD_SPECTRUM_FILE", f"{path}: missing 'values'")
    values = validate_spectrum([float(v) for v in doc["values"]])
    problem = problem_from_dict(doc["problem"]) if doc.get("problem") else None
    return problem, values, doc


def spectrum_from_document(doc: dict) -> Spectrum:
    solver = doc.get("solver", {})
    return Spectrum(
        problem_from_dict(doc["problem"]),
        tuple(float(v) for v in doc["values"]),
        tuple(float(v) for v in doc.get("convergence", [math.inf] * len(doc["values"]))),
        {"degrees": solver.get("degrees", []), "quadrature": solver.get("quadrature", []),
         "mode_cutoff": solver.get("mode_cutoff")},
        converged=bool(doc.get("converged", True)),
    )


def cache_key(problem: ProblemSpec, solver: dict, version: str = __version__) -> str:
    payload = {"problem": problem.to_dict(), "solver": solver, "version": version}
    return hashlib.sha256(canonical(payload)).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get("BUCKSPEC_CACHE")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "buckspec"


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def plot_data_bytes(blocks) -> bytes:
    """Whitespace-delimited blocks, two blank lines apart (gnuplot ``index`` layout).

    ``blocks`` is a sequence of ``(name, [(x, y), ...])``.
    """
    out = []
    for name, points in blocks:
        lines = [f"# {name}"]
        lines += [f"{fmt_float(x) if isinstance(x, float) else x} {fmt_float(y)}" for x, y in points]
        out.append("\n".join(lines))
    return ("\n\n\n".join(out) + "\n").encode()
