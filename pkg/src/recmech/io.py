"""Flat-file formats: CSV readers with row-numbered errors, CSV / JSON writers."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .core import DataError, DomainError
from .facility import FacilityInstance
from .house import Normalization, ValuationMatrix
from .scheduling import SchedulingInstance
from .auctions import MultiUnitInstance

_POINT_HEADERS = {("x", "y"): (0, 1), ("y", "x"): (1, 0), ("lon", "lat"): (0, 1), ("lat", "lon"): (1, 0)}


def _read_rows(path) -> list[list[str]]:
    path = os.fspath(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh)]
    except FileNotFoundError:
        raise DataError("file not found", path) from None
    except OSError as exc:
        raise DataError(f"cannot read file ({exc.strerror})", path) from None
    except (UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"not a readable CSV file ({exc})", path) from None
    return rows


def _real(text: str, path, row: int, *, allow_inf: bool = False) -> float:
    t = text.strip()
    try:
        x = float(t)
    except ValueError:
        raise DataError(f"cannot parse {t!r} as a number", path, row) from None
    if math.isnan(x) or (math.isinf(x) and not (allow_inf and x > 0)):
        raise DataError(f"non-finite value {t!r}", path, row)
    return x


def _int(text: str, path, row: int) -> int:
    t = text.strip()
    try:
        return int(t)
    except ValueError:
        raise DataError(f"cannot parse {t!r} as an integer", path, row) from None


def _nonblank(rows: list[list[str]]) -> list[tuple[int, list[str]]]:
    return [(k + 1, r) for k, r in enumerate(rows) if any(c.strip() for c in r)]


def ingest_points_csv(path) -> FacilityInstance:
    """Points from a CSV with header ``x,y`` (or ``lon,lat``); errors name the 1-based file row."""
    rows = _nonblank(_read_rows(path))
    if not rows:
        raise DataError("empty file", os.fspath(path))
    hrow, header = rows[0]
    key = tuple(c.strip().lower() for c in header)
    if key not in _POINT_HEADERS:
        raise DataError(f"expected header 'x,y' or 'lon,lat', got {','.join(header)!r}", os.fspath(path), hrow)
    ix, iy = _POINT_HEADERS[key]
    pts = []
    for rownum, r in rows[1:]:
        if len(r) != 2:
            raise DataError(f"expected 2 columns, got {len(r)}", os.fspath(path), rownum)
        vals = [_real(c, os.fspath(path), rownum) for c in r]
        pts.append((vals[ix], vals[iy]))
    if not pts:
        raise DataError("no data rows after the header", os.fspath(path))
    return FacilityInstance(pts)


def _sized_matrix(path, cols_extra: int, allow_inf: bool) -> tuple[np.ndarray, list[int]]:
    p = os.fspath(path)
    rows = _nonblank(_read_rows(path))
    if not rows:
        raise DataError("empty file", p)
    hrow, head = rows[0]
    if len(head) != 2:
        raise DataError("first row must be 'n,m'", p, hrow)
    n, m = _int(head[0], p, hrow), _int(head[1], p, hrow)
    if n < 1 or m < 0:
        raise DataError(f"need n >= 1 and m >= 0, got n={n}, m={m}", p, hrow)
    body = rows[1:]
    if len(body) != n:
        raise DataError(f"expected {n} data rows, found {len(body)}", p)
    width = m + cols_extra
    mat = np.zeros((n, width))
    for k, (rownum, r) in enumerate(body):
        if len(r) != width:
            raise DataError(f"expected {width} columns, got {len(r)}", p, rownum)
        mat[k] = [_real(c, p, rownum, allow_inf=allow_inf) for c in r]
        if (mat[k] < 0).any():
            raise DataError("values must be nonnegative", p, rownum)
    return mat, [rownum for rownum, _ in body]


def read_scheduling_csv(path) -> SchedulingInstance:
    mat, _ = _sized_matrix(path, 0, allow_inf=True)
    return SchedulingInstance(mat)


def read_multiunit_csv(path) -> MultiUnitInstance:
    p = os.fspath(path)
    mat, rownums = _sized_matrix(path, 1, allow_inf=False)
    for row, rownum in zip(mat, rownums):
        if row[0] != 0:
            raise DataError("curve must start at value 0 for 0 items", p, rownum)
        if (np.diff(row) < 0).any():
            raise DataError("curve must be nondecreasing", p, rownum)
    return MultiUnitInstance(mat)


def read_valuations_csv(path, normalization: Normalization | str = Normalization.NONE) -> ValuationMatrix:
    p = os.fspath(path)
    rows = _nonblank(_read_rows(path))
    if not rows:
        raise DataError("empty file", p)
    n = len(rows)
    mat = np.zeros((n, n))
    for k, (rownum, r) in enumerate(rows):
        if len(r) != n:
            raise DataError(f"expected {n} columns in an {n}x{n} matrix, got {len(r)}", p, rownum)
        mat[k] = [_real(c, p, rownum) for c in r]
        if (mat[k] < 0).any():
            raise DataError("valuations must be nonnegative", p, rownum)
    try:
        return ValuationMatrix(mat, Normalization(normalization))
    except DomainError as exc:
        # the message names a 1-based matrix row
        msg = str(exc)
        row = None
        if msg.startswith("row "):
            row = rows[int(msg.split()[1]) - 1][0]
        raise DataError(msg, p, row) from None


def parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip() != "")
    except ValueError:
        raise DataError(f"{what}: expected comma-separated integers, got {text!r}") from None


def parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise DataError(f"expected 'x,y', got {text!r}")
    vals = [_real(t, None, None) for t in parts]
    return vals[0], vals[1]


def read_advice_file(path) -> list[str]:
    """First nonblank row of a CSV, as raw fields."""
    rows = _nonblank(_read_rows(path))
    if not rows:
        raise DataError("empty file", os.fspath(path))
    return [c.strip() for c in rows[0][1]]


# --- writers --------------------------------------------------------------


def json_value(x: Any) -> Any:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, (np.floating,)):
        return json_value(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_value(v) for v in x]
    return x


def dumps(obj: Any, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(json_value(obj), indent=2, sort_keys=True)
    return json.dumps(json_value(obj), sort_keys=True, separators=(",", ":"))


def _cell(x: Optional[float]) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf"
    return repr(float(x))


SWEEP_HEADER = ("idx", "param", "rho_hat", "eta", "ratio")


def sweep_csv(rows: Iterable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r.idx, _cell(r.param), _cell(r.rho_hat), _cell(r.eta), _cell(r.ratio)])
    return buf.getvalue()


def sweep_jsonl(rows: Iterable) -> str:
    return "".join(dumps(r.to_dict()) + "\n" for r in rows)


def matrix_csv(mat: np.ndarray, header: Optional[Sequence] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in np.asarray(mat, dtype=float):
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()
