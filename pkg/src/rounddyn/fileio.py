"""Plain-text and binary output formats.

All CSV files carry '#'-prefixed ``key=value`` metadata lines before the
column header.  Floats are written with 17 significant digits, which
round-trips IEEE binary64 exactly; ``-inf`` is the written form of the
log-of-zero sentinel.
"""

from __future__ import annotations

import json
import numpy as np

__all__ = [
    "fmt",
    "write_series_csv",
    "write_variance_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_pgm",
    "read_pgm",
    "write_json_meta",
    "read_config",
]


def fmt(x) -> str:
    return "%.17g" % float(x)


def _meta_lines(meta: dict) -> list:
    out = []
    for k, v in meta.items():
        if isinstance(v, (dict, list, tuple)):
            v = json.dumps(v)
        out.append(f"# {k}={v}")
    return out


def write_series_csv(path, ns, values, meta: dict, extra_columns=None):
    """Series file: columns n,value (plus optional named extra columns)."""
    extra_columns = extra_columns or {}
    header = "n,value" + "".join("," + k for k in extra_columns)
    cols = [np.asarray(values)] + [np.asarray(v) for v in extra_columns.values()]
    lines = _meta_lines(meta) + [header]
    for i, n in enumerate(ns):
        lines.append(str(int(n)) + "".join("," + fmt(c[i]) for c in cols))
    _write_text(path, lines)


def write_variance_csv(path, series, meta: dict, fits=()):
    """Ensemble variances: columns n,sigma2_x,sigma2_y[,...]; power-law fit
    summaries are appended as '#' lines."""
    names = series.coord_names
    header = "n," + ",".join(f"sigma2_{c}" for c in names)
    lines = _meta_lines(meta) + [header]
    for i, n in enumerate(series.ns):
        lines.append(str(int(n)) + "".join("," + fmt(v) for v in series.sigma2[i]))
    for name, fit in fits:
        lines.append(f"# fit coordinate={name} exponent={fmt(fit.exponent)} "
                     f"intercept={fmt(fit.intercept)} r_squared={fmt(fit.r_squared)} "
                     f"window={fit.window[0]}:{fit.window[1]}")
    _write_text(path, lines)


def write_matrix_csv(path, matrix: np.ndarray, meta: dict):
    """Scan matrix, one CSV row per second-axis index."""
    lines = _meta_lines(meta)
    for row in np.asarray(matrix):
        lines.append(",".join(fmt(v) for v in row))
    _write_text(path, lines)


def read_matrix_csv(path):
    """Returns (matrix, meta). Inverse of :func:`write_matrix_csv`."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            rows.append([float(tok) for tok in line.split(",")])
    return np.array(rows), meta


def write_pgm(path, matrix: np.ndarray):
    """8-bit binary PGM with linear min-max scaling of the finite values.

    Non-finite cells (the log-of-zero sentinel) map to 0, as does everything
    when the finite values are all equal (degenerate scaling).
    """
    a = np.asarray(matrix, dtype=np.float64)
    finite = np.isfinite(a)
    pix = np.zeros(a.shape, dtype=np.uint8)
    if finite.any():
        lo = a[finite].min()
        hi = a[finite].max()
        if hi > lo:
            scaled = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
            pix[finite] = np.rint(scaled[finite] * 255).astype(np.uint8)
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def write_json_meta(path, meta: dict):
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return str(o)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, default=default)
        fh.write("\n")


def read_config(path) -> dict:
    """key=value config file; '#' starts a comment, blank lines ignored."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: malformed config line {raw.rstrip()!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _write_text(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
