"""Per-orbit dynamical indicators.

Round-off based: reversibility error R_n (n forward then n backward steps at
the working precision), orbit divergence Delta_n (same orbit iterated at two
precisions), and the global error of the torus translation against its
analytic orbit.

Variational: finite-time maximum Lyapunov exponent (log-stretch average with
per-step renormalization), the MEGNO family Y_{m,j} with its running time
average, and the smaller alignment index SALI.  Variational runs iterate the
orbit at double precision; the tangent algebra is plain double throughout.

Error series are stored raw; logarithms (and the SALI presentation floor)
are applied by the scan layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .backends import backend_for
from .maps import Map, NotInvertibleError, run_steps
from .precision import DOUBLE, round_nearest, spec_from_name

__all__ = [
    "NormSpec",
    "ErrorSeries",
    "IndicatorSeries",
    "reversibility_error",
    "orbit_divergence",
    "global_error_translation",
    "mlce",
    "megno",
    "sali",
    "default_deviation_vectors",
    "SALI_FLOOR",
]

#: presentation cutoff applied to SALI in scan output
SALI_FLOOR = 1e-16


@dataclass(frozen=True)
class NormSpec:
    """Which coordinates enter the Euclidean error norm."""

    mode: str = "full"  # "full" or "action"

    def __post_init__(self):
        if self.mode not in ("full", "action"):
            raise ValueError("norm mode must be 'full' or 'action'")

    def indices(self, m: Map) -> tuple:
        if self.mode == "full":
            return tuple(range(m.dim))
        if not m.action_indices:
            raise ValueError(
                f"{m.family} has no action coordinates for an action-only norm")
        return m.action_indices


@dataclass
class ErrorSeries:
    ns: np.ndarray
    values: np.ndarray
    kind: str               # "R", "Delta" or "G"
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


@dataclass
class IndicatorSeries:
    ns: np.ndarray
    values: np.ndarray
    kind: str               # "mlce", "megno", "megno_avg" or "sali"
    meta: dict = field(default_factory=dict)


def _norm_spec(norm) -> NormSpec:
    return norm if isinstance(norm, NormSpec) else NormSpec(norm)


def _resolve_spec(spec):
    if spec == "exact" or spec is None:
        return None  # no rounding layer
    return spec_from_name(spec) if isinstance(spec, str) else spec


def _wrap_float(diff: np.ndarray, period) -> np.ndarray:
    if period is None:
        return diff
    L = float(period)
    return diff - np.round(diff / L) * L


def _column_diffs(m: Map, a_cols, b_cols, indices) -> np.ndarray:
    """Signed minimal-image differences, shape (len(indices), B), float64."""
    rows = []
    for k in indices:
        a, b = np.asarray(a_cols[k]), np.asarray(b_cols[k])
        if a.dtype == object or b.dtype == object:
            period = m.periods[k]
            out = np.empty(a.shape, dtype=np.float64)
            for i, (av, bv) in enumerate(zip(a.ravel(), b.ravel())):
                fa = av if isinstance(av, Fraction) else Fraction(float(av))
                fb = bv if isinstance(bv, Fraction) else Fraction(float(bv))
                d = fa - fb
                if period is not None:
                    P = Fraction(period)
                    d -= ((d / P) + Fraction(1, 2)).__floor__() * P
                out[i] = float(d)
            rows.append(out)
        else:
            d = np.asarray(a, np.float64) - np.asarray(b, np.float64)
            rows.append(_wrap_float(d, m.periods[k]))
    return np.stack(rows)


def distance(m: Map, a_cols, b_cols, norm="full") -> np.ndarray:
    """Euclidean distance per batch element under the chosen norm,
    with periodic coordinates measured by minimal torus image."""
    idx = _norm_spec(norm).indices(m)
    d = _column_diffs(m, a_cols, b_cols, idx)
    return np.sqrt(np.sum(d * d, axis=0))


def _seed_columns(m: Map, x0, backend):
    x0 = list(x0)
    if len(x0) != m.dim:
        raise ValueError(f"{m.family} expects {m.dim} coordinates, got {len(x0)}")
    return [backend.array([v]) for v in x0]


def _default_ns(n_steps, ns):
    if ns is None:
        return np.arange(1, n_steps + 1)
    out = np.asarray(sorted(set(int(n) for n in ns)))
    if len(out) == 0 or out[0] < 1 or out[-1] > n_steps:
        raise ValueError("sample iterations must lie in [1, n_steps]")
    return out


# -- round-off indicators ---------------------------------------------------

def reversibility_error(m: Map, x0, n_steps: int, spec="single",
                        norm="full", ns=None) -> ErrorSeries:
    """R_n = || M^-n ( M^n (x0) ) - x0 || at the working precision.

    The forward orbit is computed once; each sampled n gets its own
    backward leg of n inverse steps (the legs start from different forward
    points, so they are distinct computations).  With the default dense
    sampling the total cost is O(N^2) map steps; pass a sparse ``ns`` for
    large N.
    """
    if not m.invertible:
        raise NotInvertibleError(f"{m.family} has no inverse")
    spec = _resolve_spec(spec)
    B = backend_for(spec)
    ns = _default_ns(n_steps, ns)
    seed = _seed_columns(m, x0, B)
    _, snaps = run_steps(m, [np.copy(c) for c in seed], int(ns[-1]), B,
                         record_ns=ns)
    # all backward legs advance together; leg i finishes after ns[i] steps
    legs = [np.concatenate([snaps[n][k] for n in ns]) for k in range(m.dim)]
    done = {}
    C = m.prepared(B)
    cur = legs
    for t in range(1, int(ns[-1]) + 1):
        cur = m.step_back(cur, B, C)
        if t in snaps:  # ns values
            j = int(np.searchsorted(ns, t))
            done[t] = [np.asarray(c)[j:j + 1] for c in cur]
    seeds_rep = seed
    vals = np.empty(len(ns))
    for i, n in enumerate(ns):
        vals[i] = distance(m, done[int(n)], seeds_rep, norm)[0]
    return ErrorSeries(ns, vals, "R",
                       meta={"map": repr(m), "spec": spec, "norm": _norm_spec(norm).mode})


def reversibility_final_batch(m: Map, coords, n_steps: int, backend,
                              norm="full") -> np.ndarray:
    """R_{n_steps} for a whole batch of initial conditions."""
    start = [np.copy(c) for c in coords]
    cur, _ = run_steps(m, coords, n_steps, backend)
    cur, _ = run_steps(m, cur, n_steps, backend, inverse=True)
    return distance(m, cur, start, norm)


def orbit_divergence(m: Map, x0, n_steps: int, spec_low="single",
                     spec_high="double", norm="full", ns=None) -> ErrorSeries:
    """Delta_n between the same orbit iterated at two precisions.

    Each orbit starts from the seed rounded into its own precision, so the
    higher-precision orbit is a proxy for the exact orbit of the given seed
    (initial offset <= eps_low * |x0| is part of the divergence).
    """
    spec_low = _resolve_spec(spec_low)
    spec_high = _resolve_spec(spec_high)
    if spec_high is not None and spec_low is not None:
        if spec_low.significand_bits > spec_high.significand_bits:
            raise ValueError("spec_low must not be wider than spec_high")
    Bl, Bh = backend_for(spec_low), backend_for(spec_high)
    ns = _default_ns(n_steps, ns)
    lo = _seed_columns(m, list(x0), Bl)
    hi = _seed_columns(m, list(x0), Bh)
    Cl, Ch = m.prepared(Bl), m.prepared(Bh)
    vals = np.empty(len(ns))
    want = set(int(n) for n in ns)
    i = 0
    for k in range(1, int(ns[-1]) + 1):
        lo = m.step(lo, Bl, Cl)
        hi = m.step(hi, Bh, Ch)
        if k in want:
            vals[i] = distance(m, lo, hi, norm)[0]
            i += 1
    return ErrorSeries(ns, vals, "Delta",
                       meta={"map": repr(m), "spec_low": spec_low,
                             "spec_high": spec_high, "norm": _norm_spec(norm).mode})


def divergence_final_batch(m: Map, coords_low, coords_high, n_steps: int,
                           backend_low, backend_high, norm="full") -> np.ndarray:
    lo, _ = run_steps(m, coords_low, n_steps, backend_low)
    hi, _ = run_steps(m, coords_high, n_steps, backend_high)
    return distance(m, lo, hi, norm)


def global_error_translation(omega, x0, n_steps: int, spec="single",
                             ns=None) -> ErrorSeries:
    """Global error of the torus translation against its analytic orbit.

    The numeric orbit runs at ``spec`` from the rounded seed; the analytic
    orbit is x0 + n*omega mod 1 in exact rational arithmetic (seed and omega
    taken at their full input precision, so the initial rounding of the seed
    is part of the error).  The fluctuation w_n = (G_n - n*drift)/eps is
    reported in ``extras`` with drift estimated as G_N / N.
    """
    from .maps import TorusTranslation

    spec = _resolve_spec(spec)
    m = TorusTranslation(omega)
    B = backend_for(spec)
    ns = _default_ns(n_steps, ns)
    seed = round_nearest(x0, spec) if spec is not None else Fraction(x0)
    x0F = Fraction(x0)
    wF = Fraction(omega)
    cols = [B.array([seed])]
    C = m.prepared(B)
    want = set(int(n) for n in ns)
    vals = np.empty(len(ns))
    i = 0
    for k in range(1, int(ns[-1]) + 1):
        cols = m.step(cols, B, C)
        if k in want:
            exact = (x0F + k * wF) % 1
            raw = np.asarray(cols[0]).ravel()[0]
            num = Fraction(raw) if isinstance(raw, Fraction) else Fraction(float(raw))
            d = num - exact
            d -= ((d + Fraction(1, 2)).__floor__())  # minimal image on T^1
            vals[i] = abs(float(d))
            i += 1
    eps = spec.epsilon
    drift = vals[-1] / float(ns[-1])
    w = (vals - ns * drift) / eps
    return ErrorSeries(ns, vals, "G",
                       meta={"map": repr(m), "spec": spec, "norm": "full"},
                       extras={"fluctuation": w, "drift": drift})


# -- variational indicators -------------------------------------------------

def default_deviation_vectors(dim: int, count: int = 2, seed=None) -> np.ndarray:
    """Initial deviation vectors: unit axes by default, or a seeded random
    orthonormal pair."""
    if seed is None:
        return np.eye(dim)[:count]
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, count)))
    return q.T[:count]


def _tangent_prepare(m: Map, x0, vectors):
    B = backend_for(DOUBLE)
    cols = _seed_columns(m, [float(v) for v in x0], B)
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != m.dim:
        raise ValueError("deviation vectors must have shape (k, dim)")
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero deviation vector")
    if v.shape[0] == 2 and np.linalg.matrix_rank(v, tol=1e-12) < 2:
        raise ValueError("deviation vectors are collinear")
    return B, cols, v / norms[:, None]


def _propagate(m: Map, cols, vecs, backend):
    """One orbit step plus tangent update; returns stretch factors.

    vecs has shape (B, k, dim) with unit rows; the return is the new cols,
    renormalized vecs and the per-vector stretch array (B, k).
    """
    pts = np.stack([backend.to_float64(c) for c in cols])
    J = m.jacobian64(pts)
    w = np.einsum("bij,bkj->bki", J, vecs)
    s = np.linalg.norm(w, axis=2)
    cols = m.step(cols, backend, m.prepared(backend))
    return cols, w / s[:, :, None], s


def mlce(m: Map, x0, v0=None, n_steps: int = 1000) -> IndicatorSeries:
    """Finite-time maximum Lyapunov exponent series.

    mLCE(n) is the running mean of the per-step log stretch of one deviation
    vector, renormalized to unit length every step (Benettin style).
    """
    if v0 is None:
        v0 = default_deviation_vectors(m.dim, 1)[0]
    B, cols, v = _tangent_prepare(m, x0, np.atleast_2d(v0))
    vecs = v[None, :, :]
    acc = 0.0
    out = np.empty(n_steps)
    for k in range(1, n_steps + 1):
        cols, vecs, s = _propagate(m, cols, vecs, B)
        acc += math.log(float(s[0, 0]))
        out[k - 1] = acc / k
    return IndicatorSeries(np.arange(1, n_steps + 1), out, "mlce",
                           meta={"map": repr(m)})


def mlce_final_batch(m: Map, coords, vecs, n_steps: int) -> np.ndarray:
    """mLCE(n_steps) for a batch; coords are float64 columns,
    vecs has shape (B, dim)."""
    B = backend_for(DOUBLE)
    v = np.asarray(vecs, np.float64)
    v = (v / np.linalg.norm(v, axis=1)[:, None])[:, None, :]
    acc = np.zeros(v.shape[0])
    for _ in range(n_steps):
        coords, v, s = _propagate(m, coords, v, B)
        acc += np.log(s[:, 0])
    return acc / n_steps


def megno(m: Map, x0, v0=None, u0=None, n_steps: int = 1000,
          m_exp: int = 1, j_exp: int = -1):
    """MEGNO Y_{m,j}(n) and its running time average.

    Two deviation vectors are propagated; every step the log stretch of the
    one that stretched more enters the sums (ties resolved toward v).
    Returns (Y series, averaged series).
    """
    if m.dim < 2:
        raise ValueError("two deviation vectors require a map of dim >= 2")
    if v0 is None or u0 is None:
        v0, u0 = default_deviation_vectors(m.dim, 2)
    B, cols, v = _tangent_prepare(m, x0, np.stack([v0, u0]))
    vecs = v[None, :, :]
    S = 0.0
    ybar_acc = 0.0
    ys = np.empty(n_steps)
    ybars = np.empty(n_steps)
    for k in range(1, n_steps + 1):
        cols, vecs, s = _propagate(m, cols, vecs, B)
        sv, su = float(s[0, 0]), float(s[0, 1])
        S += (k ** m_exp) * math.log(su if su > sv else sv)
        y = (m_exp + 1) * (k ** j_exp) * S
        ybar_acc += y
        ys[k - 1] = y
        ybars[k - 1] = ybar_acc / k
    ns = np.arange(1, n_steps + 1)
    meta = {"map": repr(m), "m": m_exp, "j": j_exp}
    return (IndicatorSeries(ns, ys, "megno", meta=meta),
            IndicatorSeries(ns, ybars, "megno_avg", meta=meta))


def megno_final_batch(m: Map, coords, n_steps: int,
                      m_exp: int = 1, j_exp: int = -1) -> np.ndarray:
    """Averaged MEGNO at n_steps for a batch (axis-vector seeds)."""
    B = backend_for(DOUBLE)
    nb = len(np.asarray(coords[0]))
    vecs = np.broadcast_to(np.eye(m.dim)[:2], (nb, 2, m.dim)).copy()
    S = np.zeros(nb)
    ybar = np.zeros(nb)
    for k in range(1, n_steps + 1):
        coords, vecs, s = _propagate(m, coords, vecs, B)
        S += (k ** m_exp) * np.log(np.max(s, axis=1))
        ybar += (m_exp + 1) * (k ** j_exp) * S
    return ybar / n_steps


def sali(m: Map, x0, v0=None, u0=None, n_steps: int = 1000) -> IndicatorSeries:
    """Smaller alignment index of two unit deviation vectors.

    Raw values are returned; the 1e-16 presentation floor is applied only
    by the scan layer.
    """
    if m.dim < 2:
        raise ValueError("two deviation vectors require a map of dim >= 2")
    if v0 is None or u0 is None:
        v0, u0 = default_deviation_vectors(m.dim, 2)
    B, cols, v = _tangent_prepare(m, x0, np.stack([v0, u0]))
    vecs = v[None, :, :]
    out = np.empty(n_steps)
    for k in range(1, n_steps + 1):
        cols, vecs, _ = _propagate(m, cols, vecs, B)
        vv, uu = vecs[0, 0], vecs[0, 1]
        out[k - 1] = min(np.linalg.norm(vv + uu), np.linalg.norm(vv - uu))
    return IndicatorSeries(np.arange(1, n_steps + 1), out, "sali",
                           meta={"map": repr(m)})


def sali_final_batch(m: Map, coords, n_steps: int) -> np.ndarray:
    B = backend_for(DOUBLE)
    nb = len(np.asarray(coords[0]))
    vecs = np.broadcast_to(np.eye(m.dim)[:2], (nb, 2, m.dim)).copy()
    for _ in range(n_steps):
        coords, vecs, _ = _propagate(m, coords, vecs, B)
    plus = np.linalg.norm(vecs[:, 0] + vecs[:, 1], axis=1)
    minus = np.linalg.norm(vecs[:, 0] - vecs[:, 1], axis=1)
    return np.minimum(plus, minus)
