"""Reading input CSVs and writing draw, summary and score tables.

Draw files carry 17 significant digits so that a re-read reproduces every
float exactly; summary tables are rounded to 4 significant digits. The
optional binary draw format is::

    b"TVPDRAW1" | uint32 LE header length | JSON header | float64 LE data

with the header holding ``columns`` and ``shape`` (rows, columns).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import DEFAULT_QUANTILES, inefficiency_factor, posterior_summary

BIN_MAGIC = b"TVPDRAW1"
INDEX_NAMES = ("", "t", "time", "date", "index", "period")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    values: np.ndarray  # (n, k) float
    index: tuple[str, ...] | None = None

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise DataError(f"no column named {name!r}; have {list(self.columns)}") from None


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_table(path: str | Path) -> Table:
    """Numeric CSV with a header row; a first column named like a time index is kept aside.

    Every other cell must parse as a finite float. Errors name the 1-based
    file line and the column header.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"data file not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        has_index = header[0].lower() in INDEX_NAMES
        cols = header[1:] if has_index else header
        if not cols:
            raise DataError(f"{path}: no data columns")
        if len(set(cols)) != len(cols):
            raise DataError(f"{path}: duplicate column names")
        rows, index = [], []
        for line, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: line {line} has {len(rec)} fields, expected {len(header)}")
            if has_index:
                index.append(rec[0].strip())
                rec = rec[1:]
            vals = []
            for name, cell in zip(cols, rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell.strip()!r} at line {line}, column {name!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: missing or non-finite value at line {line}, column {name!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Table(tuple(cols), np.array(rows, dtype=float), tuple(index) if has_index else None)


def fmt17(x: float) -> str:
    return "%.17g" % x


def fmt4(x: float) -> str:
    return "%.4g" % x


def write_csv(path: str | Path, columns, rows, fmt=fmt17) -> None:
    """Rows of mixed str/float cells; floats go through ``fmt``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def write_matrix(path: str | Path, columns, values: np.ndarray, fmt: str = "csv") -> Path:
    """Write a float matrix as CSV (17 digits) or framed binary; returns the path written."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(columns):
        raise ValueError("values must be (n, len(columns))")
    if fmt == "csv":
        path = path.with_suffix(".csv")
        write_csv(path, list(columns), values.tolist())
    elif fmt == "bin":
        path = path.with_suffix(".bin")
        header = json.dumps({"columns": list(columns), "shape": list(values.shape)}).encode()
        with path.open("wb") as fh:
            fh.write(BIN_MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_matrix(path: str | Path) -> Table:
    path = Path(path)
    if path.suffix == ".bin":
        with path.open("rb") as fh:
            if fh.read(len(BIN_MAGIC)) != BIN_MAGIC:
                raise DataError(f"{path}: not a draw file")
            (n,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(n))
            data = np.frombuffer(fh.read(), dtype="<f8")
        shape = tuple(header["shape"])
        if data.size != shape[0] * shape[1]:
            raise DataError(f"{path}: truncated data")
        return Table(tuple(header["columns"]), data.reshape(shape).astype(float))
    return read_table(path)


# ---------------------------------------------------------------------------
# summaries

SUMMARY_COLUMNS = ("parameter", "mean", "sd") + tuple(f"q{100 * q:g}" for q in DEFAULT_QUANTILES)


def summary_rows(table: Table, derived_abs: tuple[str, ...] = ("sqrt_theta",)) -> list[list]:
    """One row per column; columns starting with a name in ``derived_abs``
    are summarized in absolute value under an ``abs_`` prefix."""
    rows = []
    for j, name in enumerate(table.columns):
        x = table.values[:, j]
        label = name
        # multivariate columns are prefixed "row:"
        head, _, tail = name.rpartition(":")
        if any(tail == p or tail.startswith(p + "_") for p in derived_abs):
            x = np.abs(x)
            label = f"{head}:abs_{tail}" if head else f"abs_{tail}"
        s = posterior_summary(x)
        rows.append([label, s.mean, s.sd] + [s.quantiles[q] for q in DEFAULT_QUANTILES])
    return rows


def inefficiency_rows(table: Table) -> list[list]:
    rows = []
    for j, name in enumerate(table.columns):
        try:
            f = inefficiency_factor(table.values[:, j])
            rows.append([name, f.value, f.ess])
        except ValueError:
            rows.append([name, math.nan, math.nan])
    return rows
