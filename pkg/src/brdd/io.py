"""CSV ingestion and artifact writers.

Input CSVs are comma-delimited UTF-8 with a header row; empty fields are
missing values.  Writers emit numbers exactly as stored on the estimate
objects (``repr`` round-trips every float).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .data import IDENTITY_RULE, AssignmentRule, BoundaryCurve, Dataset, RdEstimate, validate_and_normalize
from .errors import ConfigError, DataError

DEFAULT_COLUMNS = {"y": "y", "x1": "x1", "x2": "x2", "t": "t", "group": "group"}
REQUIRED = ("y", "x1", "x2")
OPTIONAL = ("t", "group")

CURVE_COLUMNS = (
    "boundary_id", "percentile", "location", "tau_conventional", "tau_bc", "se_robust",
    "ci_lower", "ci_upper", "h", "n_eff", "skipped_reason",
)


def resolve_columns(mapping: Mapping | None):
    """Merge a user mapping over the defaults.

    Returns ``(columns, explicit)`` where ``explicit`` names the optional
    fields the user mapped on purpose (those must then exist in the file).
    """
    mapping = dict(mapping or {})
    extra = set(mapping) - set(DEFAULT_COLUMNS)
    if extra:
        raise ConfigError(f"unknown column mapping key(s): {sorted(extra)}")
    cols = {**DEFAULT_COLUMNS, **mapping}
    explicit = {k for k in OPTIONAL if k in mapping and mapping[k] is not None}
    return cols, explicit


def _parse(cell: str, column: str, row: int) -> float:
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"row {row}: column {column!r} has non-numeric value {cell!r}") from None


def read_csv(path, mapping: Mapping | None = None) -> Dataset:
    """Read a raw (un-normalized) dataset.

    Row numbers in error messages count the header as row 1.
    """
    cols, explicit = resolve_columns(mapping)
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty (no header row)") from None
        pos = {}
        for field in REQUIRED + OPTIONAL:
            name = cols[field]
            if name is None:
                continue
            if name in header:
                pos[field] = header.index(name)
            elif field in REQUIRED or field in explicit:
                raise DataError(f"missing mapped column {name!r} for {field}")
        values = {f: [] for f in pos}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            for f, i in pos.items():
                if f == "group":
                    values[f].append(row[i].strip())
                else:
                    values[f].append(_parse(row[i], cols[f], lineno))
    return Dataset(
        y=values["y"], x1=values["x1"], x2=values["x2"],
        t=values.get("t"), group=values.get("group"),
    )


def load_csv(path, mapping: Mapping | None = None, rule: AssignmentRule = IDENTITY_RULE) -> Dataset:
    """Read a CSV and normalize it under ``rule``."""
    return validate_and_normalize(read_csv(path, mapping), rule)


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def write_csv(ds: Dataset, path) -> Path:
    """Write a dataset in the schema :func:`read_csv` reads."""
    path = Path(path)
    names = ["y", "x1", "x2"] + [c for c in ("t", "group") if getattr(ds, c) is not None]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        cols = [getattr(ds, c) for c in names]
        for i in range(ds.n):
            w.writerow([str(c[i]) if names[j] == "group" else _num(c[i]) for j, c in enumerate(cols)])
    return path


def curve_rows(curve: BoundaryCurve) -> list:
    """Long-format rows for one curve, estimated and skipped points, by percentile."""
    rows = []
    for gp, e in zip(curve.points, curve.estimates):
        rows.append((gp.percentile, [
            curve.boundary_id, gp.percentile, gp.location, e.tau_conventional, e.tau_bias_corrected,
            e.se_robust, e.ci_lower, e.ci_upper, e.h, e.n_eff, "",
        ]))
    for s in curve.skipped:
        rows.append((s.percentile, [curve.boundary_id, s.percentile, s.location] + [None] * 7 + [s.reason]))
    rows.sort(key=lambda r: r[0])
    return [r for _, r in rows]


def write_curves(curves: Iterable[BoundaryCurve], path) -> Path:
    """One CSV for several curves, sorted by ``(boundary_id, percentile)``."""
    path = Path(path)
    rows = []
    for c in sorted(curves, key=lambda c: c.boundary_id):
        rows.extend(curve_rows(c))
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([r[0], r[1]] + [_num(v) for v in r[2:10]] + [r[10]])
    return path


def read_curve_csv(path) -> list:
    """Rows of a curve CSV as dicts with floats (``nan`` for skipped points)."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rec = {"boundary_id": row["boundary_id"], "percentile": int(row["percentile"]),
                   "skipped_reason": row["skipped_reason"]}
            for k in CURVE_COLUMNS[2:10]:
                rec[k] = float(row[k]) if row[k] != "" else math.nan
            out.append(rec)
    return out


def _clean(obj):
    """JSON-safe copy: NaN and infinities become ``null``, numpy scalars plain."""
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def estimate_record(est: RdEstimate, method: str, **labels) -> dict:
    """One output record: the estimate's own fields plus identifying labels."""
    return {"method": method, **labels, **est.to_dict()}


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path
