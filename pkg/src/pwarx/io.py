"""Dataset CSV files, model files and line-delimited trace logs.

Floats are written with 17 significant digits, so every write/read pair
reproduces the in-memory values bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .core import Dataset, PwarxModel
from .exceptions import MalformedCsv, ModelFormatError, NonContiguousTime

DATA_HEADER = ("t", "u", "y")
MODEL_FORMAT = "pwarx-model"
MODEL_VERSION = 1


def fmt_float(v) -> str:
    return format(float(v), ".17g")


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        yield from csv.reader(f)


def _parse_float(text, line, name):
    try:
        v = float(text)
    except ValueError:
        raise MalformedCsv(f"column {name!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise MalformedCsv(f"column {name!r}: non-finite value {text!r}", line)
    return v


def read_table(path, columns):
    """Read the named numeric columns of a headed CSV file.

    Extra columns are ignored. Line numbers in errors are 1-based and count
    the header.
    """
    rows = _read_rows(path)
    try:
        header = next(rows)
    except StopIteration:
        raise MalformedCsv("file is empty", 1) from None
    header = [h.strip() for h in header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise MalformedCsv(f"header lacks column(s) {', '.join(missing)}", 1)
    idx = [header.index(c) for c in columns]
    out = [[] for _ in columns]
    for line, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"expected {len(header)} fields, got {len(row)}", line)
        for j, (i, name) in enumerate(zip(idx, columns)):
            out[j].append((_parse_float(row[i].strip(), line, name), line))
    return out


def load_csv(path) -> Dataset:
    """Read a ``t,u,y`` dataset; ``t`` must increase by exactly one per row."""
    t, u, y = read_table(path, DATA_HEADER)
    if not t:
        raise MalformedCsv("no data rows", 2)
    for (prev, _), (cur, line) in zip(t, t[1:]):
        if cur != prev + 1:
            raise NonContiguousTime(f"t jumps from {prev:g} to {cur:g}", line)
    return Dataset(u=[v for v, _ in u], y=[v for v, _ in y])


def write_table(path, header, columns):
    """Write equal-length columns under ``header``; floats at 17 digits."""
    columns = [np.asarray(c).ravel() for c in columns]
    n = {c.size for c in columns}
    if len(n) > 1:
        raise ValueError("columns must have equal length")
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow(
                [str(int(v)) if np.issubdtype(type(v), np.integer) else fmt_float(v) for v in row]
            )


def write_csv(path, data: Dataset, t0: int = 0):
    """Write ``data`` as ``t,u,y`` with ``t`` counting from ``t0``."""
    write_table(path, DATA_HEADER, [np.arange(t0, t0 + data.T), data.u, data.y])


def model_to_dict(model: PwarxModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "K": model.K,
        "n_a": model.n_a,
        "n_b": model.n_b,
        "theta_y": model.theta_y.tolist(),
        "theta_x": model.theta_x.tolist(),
    }


def model_from_dict(d) -> PwarxModel:
    if not isinstance(d, dict):
        raise ModelFormatError("model file must hold a JSON object")
    if d.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"format tag must be {MODEL_FORMAT!r}, got {d.get('format')!r}")
    if d.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model file version {d.get('version')!r}")
    try:
        model = PwarxModel(
            int(d["n_a"]),
            int(d["n_b"]),
            np.array(d["theta_y"], dtype=float),
            np.array(d["theta_x"], dtype=float),
        )
        K = int(d["K"])
    except KeyError as exc:
        raise ModelFormatError(f"model file lacks key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid model file: {exc}") from None
    if model.K != K:
        raise ModelFormatError(f"K = {K} but {model.K} parameter vectors are stored")
    return model


def save_model(path, model: PwarxModel):
    """Store ``model`` as versioned, indented JSON text."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, indent=2)
        f.write("\n")


def load_model(path) -> PwarxModel:
    with open(path, encoding="utf-8") as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"line {exc.lineno}: {exc.msg}") from None
    return model_from_dict(d)


def write_trace(path, records):
    """One JSON object per line, one line per outer iteration."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, default=_json_default))
            f.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, (np.ndarray, set)):
        return sorted(o) if isinstance(o, set) else o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")
