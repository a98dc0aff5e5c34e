"""CSV readers and writers for datasets, bands, risk curves and study tables.

Dataset files carry the domain bounds in leading ``# key=value`` comment
lines; node positions are never stored and are always rebuilt from the
bounds and the number of ``x_`` columns.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .band import ConfidenceBand, QuantileEstimate
from .cutoff import RiskCurve
from .grid import make_domain
from .regression import FplrDataset, FplrFit

TECATOR_RANGE = (850.0, 1050.0)
TECATOR_RECORD = 125
TECATOR_CHANNELS = 100
TECATOR_FAT = 123


class SchemaError(ValueError):
    """Malformed dataset file."""


def fmt(x) -> str:
    """Shortest string that round-trips the float exactly."""
    return repr(float(x))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(config: dict) -> dict:
    return {"version": __version__, "config_hash": config_hash(config), **config}


def _meta_lines(meta: dict) -> list[str]:
    return [f"# {k}={v}" for k, v in meta.items()]


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _split_meta(lines: list[str]) -> tuple[dict, list[str]]:
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            m = re.match(r"#\s*([^=]+?)\s*=\s*(.*)$", line.rstrip("\r\n"))
            if m:
                meta[m.group(1)] = m.group(2)
        elif line.strip():
            body.append(line)
    return meta, body


def write_dataset(data: FplrDataset, path, meta: dict | None = None) -> None:
    header = ["y"]
    d = 0 if data.covariates is None else data.covariates.shape[1]
    header += [f"z{k}" for k in range(1, d + 1)]
    header += [f"x_{k}" for k in range(1, data.domain.p + 1)]
    out = io.StringIO()
    lines = _meta_lines({"lower": fmt(data.domain.lower), "upper": fmt(data.domain.upper), **(meta or {})})
    out.write("\n".join(lines) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for i in range(data.n):
        row = [fmt(data.responses[i])]
        if d:
            row += [fmt(v) for v in data.covariates[i]]
        row += [fmt(v) for v in data.curves[i]]
        writer.writerow(row)
    _write_text(path, out.getvalue())


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise SchemaError(f"row {row}, column {col!r}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise SchemaError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return value


def read_dataset(path, lower: float | None = None, upper: float | None = None) -> FplrDataset:
    """Load a dataset CSV; ``lower``/``upper`` override the file's domain bounds."""
    with open(path, newline="", encoding="utf-8") as fh:
        meta, body = _split_meta(fh.readlines())
    rows = list(csv.reader(body))
    if not rows:
        raise SchemaError(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "y":
        raise SchemaError(f"{path}: first column must be 'y', got {header[:1]}")
    zcols = [h for h in header if re.fullmatch(r"z\d+", h)]
    xcols = [h for h in header if re.fullmatch(r"x_\d+", h)]
    expected = ["y"] + [f"z{k}" for k in range(1, len(zcols) + 1)] + [f"x_{k}" for k in range(1, len(xcols) + 1)]
    if header != expected:
        raise SchemaError(f"{path}: header must be y, z1..zd, x_1..x_p in order")
    if len(xcols) < 2:
        raise SchemaError(f"{path}: need at least 2 curve columns, got {len(xcols)}")
    values = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        values.append([_parse_float(c, r, h) for c, h in zip(row, header)])
    if not values:
        raise SchemaError(f"{path}: no data rows")
    A = np.array(values)
    d = len(zcols)
    Z = A[:, 1 : 1 + d] if d else None
    if d and not np.all(Z[:, 0] == 1.0):
        bad = int(np.flatnonzero(Z[:, 0] != 1.0)[0]) + 2
        raise SchemaError(f"{path}: column 'z1' must be all 1 (row {bad})")
    lo = lower if lower is not None else float(meta.get("lower", 0.0))
    hi = upper if upper is not None else float(meta.get("upper", 1.0))
    domain = make_domain(lo, hi, len(xcols))
    return FplrDataset(domain, A[:, 0], A[:, 1 + d :], Z)


def read_metadata(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        meta, _ = _split_meta(fh.readlines())
    return meta


def read_table(path) -> list[dict]:
    """Rows of a CSV written by this module, metadata lines skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        _, body = _split_meta(fh.readlines())
    return list(csv.DictReader(body))


def emit_band(band: ConfidenceBand, fit: FplrFit, path, quantile: QuantileEstimate | None = None, meta: dict | None = None) -> None:
    """Write a band as columns ``t, bhat, lower, upper`` with a metadata block."""
    info = {
        "kind": band.kind,
        "m": fit.m,
        "n": fit.n,
        "sigma2": fmt(fit.sigma2),
        "tau1": fmt(band.tau1),
        "tau2": "" if band.tau2 is None else fmt(band.tau2),
        "critical_value": fmt(band.critical_value),
        "lower_bound": fmt(band.domain.lower),
        "upper_bound": fmt(band.domain.upper),
    }
    if quantile is not None:
        info.update(c_n=fmt(quantile.value), B=quantile.draws, quantile_method=quantile.method, seed=_seed_text(quantile.seed))
    info.update(meta or {})
    out = io.StringIO()
    out.write("\n".join(_meta_lines(info)) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", "bhat", "lower", "upper"])
    for t, c, lo, hi in zip(band.domain.nodes, band.center.values, band.lower, band.upper):
        writer.writerow([fmt(t), fmt(c), fmt(lo), fmt(hi)])
    _write_text(path, out.getvalue())


def _seed_text(seed) -> str:
    if seed is None:
        return ""
    entropy, key = seed
    return f"{entropy}" + (f":{'/'.join(map(str, key))}" if key else "")


def write_risk_curve(curve: RiskCurve, path, meta: dict | None = None) -> None:
    out = io.StringIO()
    out.write("\n".join(_meta_lines({"argmin": curve.argmin, **(meta or {})})) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["m", "risk"])
    for m, v in zip(curve.candidates, curve.values):
        writer.writerow([m, fmt(v)])
    _write_text(path, out.getvalue())


def _table_text(rows: list[dict], meta: dict) -> str:
    out = io.StringIO()
    out.write("\n".join(_meta_lines(meta)) + "\n")
    if rows:
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: fmt(v) if isinstance(v, float) else v for k, v in r.items()})
    return out.getvalue()


def write_study(result, path, meta: dict | None = None) -> Path:
    """Write the coverage summary to ``path`` and per-cut-off RMSE next to it.

    Returns the path of the RMSE table (``<stem>_rmse.csv``).
    """
    path = Path(path)
    _write_text(path, _table_text(result.summary, meta or {}))
    risk_path = path.with_name(path.stem + "_rmse" + (path.suffix or ".csv"))
    _write_text(risk_path, _table_text(result.risk, meta or {}))
    return risk_path


def _numeric_lines(lines: list[str]) -> list[list[float]]:
    """Trailing block of lines whose tokens are all numbers."""
    block = []
    for line in reversed(lines):
        tokens = line.split()
        if not tokens:
            continue
        try:
            block.append([float(t) for t in tokens])
        except ValueError:
            break
    return block[::-1]


def read_tecator_export(path) -> FplrDataset:
    """Parse the whitespace-separated Tecator export.

    Each sample is 125 numbers: 100 absorbances (850-1050 nm), 22 principal
    component scores, then moisture, fat and protein contents.  The response
    is fat content.
    """
    with open(path, encoding="utf-8", errors="replace") as fh:
        tokens = [v for line in _numeric_lines(fh.readlines()) for v in line]
    if not tokens or len(tokens) % TECATOR_RECORD:
        raise SchemaError(f"{path}: expected a multiple of {TECATOR_RECORD} numbers, found {len(tokens)}")
    A = np.array(tokens).reshape(-1, TECATOR_RECORD)
    domain = make_domain(*TECATOR_RANGE, TECATOR_CHANNELS)
    return FplrDataset(domain, A[:, TECATOR_FAT], A[:, :TECATOR_CHANNELS])


def read_tecator_table(path) -> FplrDataset:
    """Parse a comma-separated Tecator table with columns ``x_001..x_100`` and ``fat``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty table")
    xcols = sorted((c for c in rows[0] if re.fullmatch(r"x_?\d+", c)), key=lambda c: int(c.lstrip("x_")))
    if len(xcols) != TECATOR_CHANNELS or "fat" not in rows[0]:
        raise SchemaError(f"{path}: need {TECATOR_CHANNELS} x columns and a 'fat' column")
    X = np.array([[_parse_float(r[c], i, c) for c in xcols] for i, r in enumerate(rows, start=2)])
    Y = np.array([_parse_float(r["fat"], i, "fat") for i, r in enumerate(rows, start=2)])
    return FplrDataset(make_domain(*TECATOR_RANGE, TECATOR_CHANNELS), Y, X)


def convert_tecator(src, dst) -> FplrDataset:
    """Convert either Tecator layout into the package's dataset CSV."""
    with open(src, encoding="utf-8", errors="replace") as fh:
        head = fh.readline()
    data = read_tecator_table(src) if "," in head else read_tecator_export(src)
    write_dataset(data, dst, meta={"source": Path(src).name, "response": "fat"})
    return data


def tecator_path() -> Path:
    return Path(str(resources.files("fpcaband").joinpath("data", "tecator.csv")))


def load_tecator() -> FplrDataset:
    """Bundled Tecator meat spectra: 215 samples, 100 channels on [850, 1050] nm, fat response."""
    return read_dataset(tecator_path())
