"""Grid scans of indicators over initial-condition space, plus sections.

Grid nodes use the cell-center convention: coordinate = min + (i + 0.5) *
(max - min) / res.  Stored values are the natural log of the absolute value
for reversibility error, orbit divergence, averaged MEGNO and SALI, and the
raw value for the finite-time mLCE.  SALI is floored at 1e-16 before the
log; an exactly zero error is stored as the -inf sentinel.

Cells are independent, so the scan may be chunked over threads; numpy
ufuncs are elementwise deterministic, which makes the assembled matrix
bit-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .backends import backend_for
from .indicators import (SALI_FLOOR, NormSpec, _norm_spec, _resolve_spec,
                         divergence_final_batch, megno_final_batch,
                         mlce_final_batch, reversibility_final_batch,
                         sali_final_batch)
from .maps import Map, NotInvertibleError, make_map
from .precision import DOUBLE, EXTENDED113, SINGLE, PrecisionSpec
from . import fileio

__all__ = [
    "AxisSpec",
    "GridSpec",
    "ScanResult",
    "SectionProfile",
    "grid_scan",
    "extract_section",
    "write_outputs",
    "read_scan",
    "INDICATOR_KINDS",
]

INDICATOR_KINDS = ("rev", "div", "mlce", "megno", "sali")


def spec_name(spec) -> str:
    if spec is None:
        return "exact"
    if spec == SINGLE:
        return "single"
    if spec == DOUBLE:
        return "double"
    if spec == EXTENDED113:
        return "extended113"
    return f"p{spec.significand_bits}"


@dataclass(frozen=True)
class AxisSpec:
    name: str
    lo: float
    hi: float
    res: int

    def __post_init__(self):
        if self.res < 1:
            raise ValueError("axis resolution must be >= 1")
        if not self.lo < self.hi:
            raise ValueError("axis range must be nonempty")

    def centers(self) -> np.ndarray:
        step = (self.hi - self.lo) / self.res
        return self.lo + (np.arange(self.res) + 0.5) * step

    def encode(self) -> str:
        return f"{self.name}:{fileio.fmt(self.lo)}:{fileio.fmt(self.hi)}:{self.res}"

    @classmethod
    def decode(cls, text: str) -> "AxisSpec":
        name, lo, hi, res = text.split(":")
        return cls(name, float(lo), float(hi), int(res))


@dataclass(frozen=True)
class GridSpec:
    axes: tuple                       # (AxisSpec, AxisSpec)
    fixed: dict
    n_steps: int
    indicator: str
    spec: PrecisionSpec = SINGLE
    ref_spec: PrecisionSpec = DOUBLE  # high-precision side for "div"
    norm: str = "full"
    sali_floor: float = SALI_FLOOR

    def __post_init__(self):
        if self.indicator not in INDICATOR_KINDS:
            raise ValueError(f"indicator must be one of {INDICATOR_KINDS}")


@dataclass
class ScanResult:
    matrix: np.ndarray                # shape (axes[1].res, axes[0].res)
    grid: GridSpec
    meta: dict = field(default_factory=dict)


@dataclass
class SectionProfile:
    coordinates: np.ndarray
    values: np.ndarray
    axis: str                         # the axis held fixed
    value: float                      # exact cell-center coordinate used
    meta: dict = field(default_factory=dict)


def _cell_coordinates(m: Map, grid: GridSpec) -> list:
    a1, a2 = grid.axes
    names = set(m.coord_names)
    for ax in grid.axes:
        if ax.name not in names:
            raise ValueError(f"axis {ax.name!r} is not a coordinate of {m.family}")
    scanned = {a1.name, a2.name}
    missing = [c for c in m.coord_names if c not in scanned and c not in grid.fixed]
    if missing:
        raise ValueError(f"fixed values required for coordinates {missing}")
    c1 = np.tile(a1.centers(), a2.res)
    c2 = np.repeat(a2.centers(), a1.res)
    cols = []
    for name in m.coord_names:
        if name == a1.name:
            cols.append(c1)
        elif name == a2.name:
            cols.append(c2)
        else:
            cols.append(np.full(a1.res * a2.res, float(grid.fixed[name])))
    return cols


def _eval_cells(m: Map, grid: GridSpec, cols64: list) -> np.ndarray:
    kind = grid.indicator
    n = grid.n_steps
    if kind == "rev":
        B = backend_for(grid.spec)
        cols = [B.array(list(c)) for c in cols64]
        r = reversibility_final_batch(m, cols, n, B, NormSpec(grid.norm))
        with np.errstate(divide="ignore"):
            return np.log(r)
    if kind == "div":
        Bl, Bh = backend_for(grid.spec), backend_for(grid.ref_spec)
        lo = [Bl.array(list(c)) for c in cols64]   # each orbit seeds at its
        hi = [Bh.array(list(c)) for c in cols64]   # own precision
        d = divergence_final_batch(m, lo, hi, n, Bl, Bh, NormSpec(grid.norm))
        with np.errstate(divide="ignore"):
            return np.log(d)
    B = backend_for(DOUBLE)
    cols = [np.asarray(c, np.float64) for c in cols64]
    if kind == "mlce":
        nb = len(cols[0])
        v0 = np.broadcast_to(np.eye(m.dim)[0], (nb, m.dim)).copy()
        return mlce_final_batch(m, cols, v0, n)
    if kind == "megno":
        y = megno_final_batch(m, cols, n)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(y))
    # sali
    s = sali_final_batch(m, cols, n)
    return np.log(np.maximum(s, grid.sali_floor))


def grid_scan(m: Map, grid: GridSpec, workers: int = 1) -> ScanResult:
    """Evaluate the indicator at iteration N on every grid cell."""
    if grid.indicator == "rev" and not m.invertible:
        raise NotInvertibleError(f"{m.family} has no inverse")
    t0 = time.perf_counter()
    cols = _cell_coordinates(m, grid)
    total = len(cols[0])
    if workers <= 1:
        flat = _eval_cells(m, grid, cols)
    else:
        bounds = np.linspace(0, total, workers + 1).astype(int)
        chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        flat = np.empty(total)
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            futs = {ex.submit(_eval_cells, m, grid,
                              [c[a:b] for c in cols]): (a, b)
                    for a, b in chunks}
            for fut, (a, b) in futs.items():
                flat[a:b] = fut.result()
    a1, a2 = grid.axes
    matrix = flat.reshape(a2.res, a1.res)
    meta = {
        "format": "rounddyn-scan",
        "version": __version__,
        "map": m.family,
        "params": m.params(),
        "axis1": a1.encode(),
        "axis2": a2.encode(),
        "fixed": {k: float(v) for k, v in grid.fixed.items()},
        "n": grid.n_steps,
        "indicator": grid.indicator,
        "spec": spec_name(_resolve_spec(grid.spec)),
        "ref_spec": spec_name(_resolve_spec(grid.ref_spec)),
        "norm": _norm_spec(grid.norm).mode,
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    return ScanResult(matrix, grid, meta)


def extract_section(result: ScanResult, axis: str, value: float) -> SectionProfile:
    """Profile along one axis at the grid line nearest to ``value``.

    Equidistant values resolve to the lower index.
    """
    a1, a2 = result.grid.axes
    if axis == a2.name:
        fixed_ax, run_ax, take = a2, a1, "row"
    elif axis == a1.name:
        fixed_ax, run_ax, take = a1, a2, "col"
    else:
        raise ValueError(f"axis {axis!r} is not a scanned axis "
                         f"({a1.name!r}, {a2.name!r})")
    if not fixed_ax.lo <= value <= fixed_ax.hi:
        raise ValueError(f"value {value} outside axis range "
                         f"[{fixed_ax.lo}, {fixed_ax.hi}]")
    centers = fixed_ax.centers()
    idx = int(np.argmin(np.abs(centers - value)))
    vals = result.matrix[idx, :] if take == "row" else result.matrix[:, idx]
    return SectionProfile(run_ax.centers(), np.array(vals), axis,
                          float(centers[idx]),
                          meta=dict(result.meta, section_axis=axis,
                                    section_value=float(centers[idx])))


def write_outputs(result: ScanResult, prefix: str) -> dict:
    """Write prefix.csv, prefix.pgm and prefix.json; returns the paths."""
    paths = {"csv": f"{prefix}.csv", "pgm": f"{prefix}.pgm",
             "json": f"{prefix}.json"}
    fileio.write_matrix_csv(paths["csv"], result.matrix, result.meta)
    fileio.write_pgm(paths["pgm"], result.matrix)
    fileio.write_json_meta(paths["json"], result.meta)
    return paths


def read_scan(csv_path: str) -> ScanResult:
    """Rebuild a ScanResult (matrix + grid geometry) from a scan CSV."""
    import json

    matrix, meta = fileio.read_matrix_csv(csv_path)
    a1 = AxisSpec.decode(meta["axis1"])
    a2 = AxisSpec.decode(meta["axis2"])
    fixed = json.loads(meta.get("fixed", "{}"))
    grid = GridSpec((a1, a2), fixed, int(meta.get("n", 0)),
                    meta.get("indicator", "rev"))
    if matrix.shape != (a2.res, a1.res):
        raise ValueError(f"{csv_path}: matrix shape {matrix.shape} does not "
                         f"match grid {(a2.res, a1.res)}")
    return ScanResult(matrix, grid, meta)
