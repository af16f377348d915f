"""Ensemble statistics of reversibility fluctuations.

An ensemble of initial conditions is iterated forward and backward, either
at a reduced precision (round-off perturbation) or at double precision with
uniform uncorrelated noise added to every coordinate on both legs.  The
per-iteration population variances of the per-coordinate displacement are
the observable; power-law exponents are fitted on a log-log window.

Randomness is counter based (Philox).  The counter words encode what the
draw is for -- initial conditions, forward step k, or backward step t of the
leg ending at n -- so results are reproducible bit for bit regardless of
scheduling, and the member/coordinate layout inside one draw is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import backend_for
from .indicators import _column_diffs
from .maps import Map, NotInvertibleError
from .precision import DOUBLE, PrecisionSpec, spec_from_name

__all__ = [
    "EnsembleSpec",
    "PerturbationMode",
    "Roundoff",
    "Noise",
    "VarianceSeries",
    "PowerLawFit",
    "run_ensemble",
    "fit_power_law",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """Axis-aligned seeding box, member count and RNG seed."""

    region: tuple          # ((lo, hi), ...) one pair per coordinate
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("ensemble count must be >= 2")
        for lo, hi in self.region:
            if not lo < hi:
                raise ValueError("ensemble region must be nonempty")


@dataclass(frozen=True)
class PerturbationMode:
    kind: str                      # "roundoff" or "noise"
    spec: PrecisionSpec = DOUBLE
    amplitude: float = 0.0

    def __post_init__(self):
        if self.kind not in ("roundoff", "noise"):
            raise ValueError("mode kind must be 'roundoff' or 'noise'")
        if self.kind == "noise" and not self.amplitude > 0:
            raise ValueError("noise amplitude must be > 0")


def Roundoff(spec) -> PerturbationMode:
    spec = spec_from_name(spec) if isinstance(spec, str) else spec
    return PerturbationMode("roundoff", spec=spec)


def Noise(amplitude: float, spec: PrecisionSpec = DOUBLE) -> PerturbationMode:
    spec = spec_from_name(spec) if isinstance(spec, str) else spec
    return PerturbationMode("noise", spec=spec, amplitude=amplitude)


@dataclass
class VarianceSeries:
    ns: np.ndarray                 # includes n = 0 with zero variance
    sigma2: np.ndarray             # shape (len(ns), dim)
    coord_names: tuple
    meta: dict = field(default_factory=dict)

    @property
    def sigma2_x(self) -> np.ndarray:
        return self.sigma2[:, 0]

    @property
    def sigma2_y(self) -> np.ndarray:
        return self.sigma2[:, 1]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple


_TAG_FORWARD = 1
_TAG_BACKWARD = 2
_TAG_SEED = 3


def _philox_uniform(seed: int, idx: int, tag: int, shape, lo, hi) -> np.ndarray:
    bitgen = np.random.Philox(key=seed, counter=[0, 0, idx, tag])
    return np.random.Generator(bitgen).uniform(lo, hi, shape)


def _draw_members(m: Map, ens: EnsembleSpec) -> np.ndarray:
    if len(ens.region) != m.dim:
        raise ValueError(f"region needs {m.dim} coordinate intervals")
    u = _philox_uniform(ens.seed, 0, _TAG_SEED, (ens.count, m.dim), 0.0, 1.0)
    lows = np.array([lo for lo, _ in ens.region])
    highs = np.array([hi for _, hi in ens.region])
    return lows + u * (highs - lows)


def _sample_ns(n_steps: int, ns) -> np.ndarray:
    if ns is None:
        return np.arange(1, n_steps + 1)
    out = np.asarray(sorted(set(int(n) for n in ns if n > 0)))
    if len(out) == 0 or out[-1] > n_steps:
        raise ValueError("sample iterations must lie in [1, n_steps]")
    return out


def _noisy_step(m, cols, B, C, pconsts, draws, inverse=False):
    stepper = m.step_back if inverse else m.step
    cols = stepper(cols, B, C)
    out = []
    for k in range(m.dim):
        v = np.add(cols[k], draws[k], dtype=np.float64)
        if pconsts[k] is not None:
            v = B.mod(v, pconsts[k])
        out.append(v)
    return out


def run_ensemble(m: Map, ens: EnsembleSpec, mode: PerturbationMode,
                 n_steps: int, ns=None) -> VarianceSeries:
    """Per-iteration variances of the reversibility displacement.

    Roundoff mode iterates each member n forward and n backward steps at the
    mode's precision.  Noise mode iterates at double precision and adds an
    independent uniform draw in [-a, +a] to every coordinate after every
    step, with fresh draws on the backward legs.  Variances are population
    variances about the ensemble mean, per coordinate, per sampled n; the
    forward trajectory (one realization) is shared by all backward legs.
    """
    if not m.invertible:
        raise NotInvertibleError(f"{m.family} has no inverse")
    ns = _sample_ns(n_steps, ns)
    members = _draw_members(m, ens)

    if mode.kind == "roundoff":
        B = backend_for(mode.spec)
        noise = None
    else:
        B = backend_for(DOUBLE)
        noise = mode.amplitude
    start = [B.array(list(members[:, k])) for k in range(m.dim)]
    C = m.prepared(B)
    pconsts = [B.const(P) if P is not None else None for P in m.periods]

    # forward pass with snapshots at the sampled n
    want = set(int(n) for n in ns)
    snaps = {}
    cols = [np.copy(c) for c in start]
    for k in range(1, int(ns[-1]) + 1):
        if noise is None:
            cols = m.step(cols, B, C)
        else:
            d = _philox_uniform(ens.seed, k, _TAG_FORWARD,
                                (m.dim, ens.count), -noise, noise)
            cols = _noisy_step(m, cols, B, C, pconsts, d)
        if k in want:
            snaps[k] = [np.copy(c) for c in cols]

    sig = np.zeros((len(ns) + 1, m.dim))
    for i, n in enumerate(ns):
        leg = snaps[int(n)]
        for t in range(1, int(n) + 1):
            if noise is None:
                leg = m.step_back(leg, B, C)
            else:
                d = _philox_uniform(ens.seed, int(n) * (2 ** 32) + t,
                                    _TAG_BACKWARD, (m.dim, ens.count),
                                    -noise, noise)
                leg = _noisy_step(m, leg, B, C, pconsts, d, inverse=True)
        diffs = _column_diffs(m, leg, start, tuple(range(m.dim)))
        sig[i + 1] = np.var(diffs, axis=1)

    all_ns = np.concatenate([[0], ns])
    return VarianceSeries(all_ns, sig, m.coord_names,
                          meta={"map": repr(m), "mode": mode.kind,
                                "spec": mode.spec, "amplitude": mode.amplitude,
                                "count": ens.count, "seed": ens.seed})


def fit_power_law(series: VarianceSeries, coordinate, window) -> PowerLawFit:
    """Least-squares line on (ln n, ln sigma^2) inside the window."""
    if isinstance(coordinate, str):
        coordinate = series.coord_names.index(coordinate)
    lo, hi = window
    if not lo < hi:
        raise ValueError("fit window must satisfy lo < hi")
    mask = (series.ns >= lo) & (series.ns <= hi) & (series.ns > 0)
    if mask.sum() < 2:
        raise ValueError("fit window selects fewer than two samples")
    n = series.ns[mask].astype(np.float64)
    v = series.sigma2[mask, coordinate]
    if np.any(v <= 0):
        raise ValueError("fit window contains non-positive variances")
    lx, ly = np.log(n), np.log(v)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid ** 2) / ss_tot) if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2, (lo, hi))
