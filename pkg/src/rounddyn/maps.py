"""Discrete-time map families with forward step, analytic inverse, Jacobian.

Every family iterates through an :class:`~rounddyn.backends.ArrayBackend`,
so the same step definition runs at single, double, emulated p=113 or exact
arithmetic.  Map parameters (omega, lambda, mu, c, and the period 2*pi) are
rounded once into the active precision before iteration.

Jacobians are always evaluated at host double precision: the variational
indicators are ordinary double-precision computations, only the orbit itself
is precision controlled.

Conventions: angles live in [0, 2*pi) for the standard and 4D maps, torus
coordinates in [0, 1) for translation/skew/Bernoulli; the circle rotation
uses the (cos 2*pi*x, sin 2*pi*x) embedding.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

from .backends import ArrayBackend, backend_for
from .precision import round_nearest

__all__ = [
    "Map",
    "TorusTranslation",
    "CircleRotation",
    "Bernoulli",
    "StandardMap",
    "SkewMap",
    "Froeschle4D",
    "make_map",
    "forward",
    "inverse",
    "jacobian",
    "forward_with_tangent",
    "NotInvertibleError",
    "TWO_PI",
]


class NotInvertibleError(RuntimeError):
    """Raised when an inverse is requested from a non-invertible family."""


def _mpf_to_fraction(v) -> Fraction:
    sign_, man, exp, _ = v._mpf_
    man, exp = int(man), int(exp)  # mpmath may hand back gmpy2 integers
    if man == 0:
        return Fraction(0)
    f = Fraction(man, 1 << -exp) if exp < 0 else Fraction(man << exp)
    return -f if sign_ else f


def _exact_two_pi() -> Fraction:
    with mpmath.workprec(300):
        return _mpf_to_fraction(2 * mpmath.pi)


#: 300-bit dyadic stand-in for 2*pi; each backend rounds it to its width.
TWO_PI = _exact_two_pi()


class Map:
    """Base class: immutable map instance usable from any backend."""

    family: str
    coord_names: tuple
    periods: tuple          # exact period per coordinate, or None (unbounded)
    action_indices: tuple
    invertible: bool

    def __init__(self):
        self._prep_cache = {}

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def params(self) -> dict:
        return {}

    def prepared(self, backend: ArrayBackend) -> dict:
        key = id(backend)
        got = self._prep_cache.get(key)
        if got is None:
            got = self._prepare(backend)
            self._prep_cache[key] = got
        return got

    def _prepare(self, backend: ArrayBackend) -> dict:
        raise NotImplementedError

    def step(self, coords, backend, consts):
        raise NotImplementedError

    def step_back(self, coords, backend, consts):
        raise NotImplementedError(
            f"{self.family} has no analytic inverse"
            if not self.invertible else "missing step_back")

    def jacobian64(self, pts: np.ndarray) -> np.ndarray:
        """Analytic Jacobian at double precision.

        pts has shape (dim, B); the result has shape (B, dim, dim).
        """
        raise NotImplementedError

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({ps})"


class TorusTranslation(Map):
    """x -> x + omega (mod 1) on the unit torus."""

    family = "translation"
    coord_names = ("x",)
    periods = (Fraction(1),)
    action_indices = ()
    invertible = True

    def __init__(self, omega: float):
        super().__init__()
        self.omega = omega

    def params(self):
        return {"omega": self.omega}

    def _prepare(self, B):
        return {"w": B.const(self.omega), "P": B.const(1)}

    def step(self, c, B, C):
        return [B.mod(B.add(c[0], C["w"]), C["P"])]

    def step_back(self, c, B, C):
        return [B.mod(B.sub(c[0], C["w"]), C["P"])]

    def jacobian64(self, pts):
        return np.ones((pts.shape[1], 1, 1))


class CircleRotation(Map):
    """Rigid rotation of the unit circle, embedded as (cos, sin) pairs."""

    family = "rotation"
    coord_names = ("x", "y")
    periods = (None, None)
    action_indices = ()
    invertible = True

    def __init__(self, omega: float):
        super().__init__()
        self.omega = omega
        w = Fraction(omega)
        with mpmath.workprec(300):
            a = 2 * mpmath.pi * w.numerator / w.denominator
            self._cos = _mpf_to_fraction(mpmath.cos(a))
            self._sin = _mpf_to_fraction(mpmath.sin(a))

    def params(self):
        return {"omega": self.omega}

    @staticmethod
    def embed(x: float) -> np.ndarray:
        """Unit-circle embedding of a torus coordinate."""
        return np.array([math.cos(2 * math.pi * x),
                         math.sin(2 * math.pi * x)])

    def _prepare(self, B):
        return {"c": B.const(self._cos), "s": B.const(self._sin)}

    def step(self, c, B, C):
        x, y = c
        return [B.sub(B.mul(C["c"], x), B.mul(C["s"], y)),
                B.add(B.mul(C["s"], x), B.mul(C["c"], y))]

    def step_back(self, c, B, C):
        x, y = c
        return [B.add(B.mul(C["c"], x), B.mul(C["s"], y)),
                B.sub(B.mul(C["c"], y), B.mul(C["s"], x))]

    def jacobian64(self, pts):
        n = pts.shape[1]
        c, s = float(self._cos), float(self._sin)
        J = np.empty((n, 2, 2))
        J[:, 0, 0] = c
        J[:, 0, 1] = -s
        J[:, 1, 0] = s
        J[:, 1, 1] = c
        return J


class Bernoulli(Map):
    """x -> q*x (mod 1); expanding and not invertible."""

    family = "bernoulli"
    coord_names = ("x",)
    periods = (Fraction(1),)
    action_indices = ()
    invertible = False

    def __init__(self, q: int):
        super().__init__()
        if int(q) != q or q < 2:
            raise ValueError("Bernoulli factor q must be an integer >= 2")
        self.q = int(q)

    def params(self):
        return {"q": self.q}

    def _prepare(self, B):
        return {"q": B.const(self.q), "P": B.const(1)}

    def step(self, c, B, C):
        return [B.mod(B.mul(C["q"], c[0]), C["P"])]

    def step_back(self, c, B, C):
        raise NotInvertibleError("the Bernoulli map is not invertible")

    def jacobian64(self, pts):
        return np.full((pts.shape[1], 1, 1), float(self.q))


class StandardMap(Map):
    """Chirikov standard map on the 2*pi torus; y is the action."""

    family = "standard"
    coord_names = ("x", "y")
    periods = (TWO_PI, TWO_PI)
    action_indices = (1,)
    invertible = True

    def __init__(self, lam: float):
        super().__init__()
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        self.lam = lam

    def params(self):
        return {"lambda": self.lam}

    def _prepare(self, B):
        return {"lam": B.const(self.lam), "P": B.const(TWO_PI)}

    def step(self, c, B, C):
        x, y = c
        y1 = B.mod(B.add(y, B.mul(C["lam"], B.sin(x))), C["P"])
        x1 = B.mod(B.add(x, y1), C["P"])
        return [x1, y1]

    def step_back(self, c, B, C):
        x1, y1 = c
        x = B.mod(B.sub(x1, y1), C["P"])
        y = B.mod(B.sub(y1, B.mul(C["lam"], B.sin(x))), C["P"])
        return [x, y]

    def jacobian64(self, pts):
        x = pts[0]
        lc = self.lam * np.cos(x)
        n = pts.shape[1]
        J = np.empty((n, 2, 2))
        J[:, 0, 0] = 1.0 + lc
        J[:, 0, 1] = 1.0
        J[:, 1, 0] = lc
        J[:, 1, 1] = 1.0
        return J


class SkewMap(Map):
    """Integrable shear on the unit torus (standard map with lambda = 0)."""

    family = "skew"
    coord_names = ("x", "y")
    periods = (Fraction(1), Fraction(1))
    action_indices = (1,)
    invertible = True

    def _prepare(self, B):
        return {"P": B.const(1)}

    def step(self, c, B, C):
        x, y = c
        y1 = B.mod(y, C["P"])
        x1 = B.mod(B.add(x, y1), C["P"])
        return [x1, y1]

    def step_back(self, c, B, C):
        x1, y1 = c
        return [B.mod(B.sub(x1, y1), C["P"]), y1]

    def jacobian64(self, pts):
        n = pts.shape[1]
        J = np.zeros((n, 2, 2))
        J[:, 0, 0] = 1.0
        J[:, 0, 1] = 1.0
        J[:, 1, 1] = 1.0
        return J


class Froeschle4D(Map):
    """Nearly integrable 4D symplectic map with coupling potential
    V = 1 / (cos(theta) + cos(phi) + 2 + c).
    """

    family = "froeschle4d"
    coord_names = ("theta", "phi", "I", "J")
    periods = (TWO_PI, TWO_PI, None, None)
    action_indices = (2, 3)
    invertible = True

    def __init__(self, c: float, mu: float):
        super().__init__()
        if c <= 0:
            raise ValueError("c must be > 0")
        self.c = c
        self.mu = mu

    def params(self):
        return {"c": self.c, "mu": self.mu}

    def _prepare(self, B):
        return {"mu": B.const(self.mu), "c2": B.const(2 + Fraction(self.c)),
                "one": B.const(1), "P": B.const(TWO_PI)}

    def _v2(self, th, ph, B, C):
        den = B.add(B.add(B.cos(th), B.cos(ph)), C["c2"])
        v = B.div(C["one"], den)
        return B.mul(v, v)

    def step(self, c, B, C):
        th, ph, I, J = c
        th1 = B.mod(B.add(th, I), C["P"])
        ph1 = B.mod(B.add(ph, J), C["P"])
        v2 = self._v2(th1, ph1, B, C)
        # dV/dtheta = sin(theta) * V**2
        I1 = B.sub(I, B.mul(C["mu"], B.mul(B.sin(th1), v2)))
        J1 = B.sub(J, B.mul(C["mu"], B.mul(B.sin(ph1), v2)))
        return [th1, ph1, I1, J1]

    def step_back(self, c, B, C):
        th1, ph1, I1, J1 = c
        v2 = self._v2(th1, ph1, B, C)
        I = B.add(I1, B.mul(C["mu"], B.mul(B.sin(th1), v2)))
        J = B.add(J1, B.mul(C["mu"], B.mul(B.sin(ph1), v2)))
        th = B.mod(B.sub(th1, I), C["P"])
        ph = B.mod(B.sub(ph1, J), C["P"])
        return [th, ph, I, J]

    def jacobian64(self, pts):
        th, ph, I, J = pts
        mu = self.mu
        t1 = th + I
        p1 = ph + J
        st, ct = np.sin(t1), np.cos(t1)
        sp, cp = np.sin(p1), np.cos(p1)
        v = 1.0 / (ct + cp + 2.0 + self.c)
        v2 = v * v
        v3 = v2 * v
        g1t = mu * (ct * v2 + 2.0 * st * st * v3)      # d(mu dV/dth)/dth
        g1p = 2.0 * mu * st * sp * v3                  # mixed derivative
        g2p = mu * (cp * v2 + 2.0 * sp * sp * v3)
        n = pts.shape[1]
        Jm = np.zeros((n, 4, 4))
        Jm[:, 0, 0] = 1.0
        Jm[:, 0, 2] = 1.0
        Jm[:, 1, 1] = 1.0
        Jm[:, 1, 3] = 1.0
        Jm[:, 2, 0] = -g1t
        Jm[:, 2, 1] = -g1p
        Jm[:, 2, 2] = 1.0 - g1t
        Jm[:, 2, 3] = -g1p
        Jm[:, 3, 0] = -g1p
        Jm[:, 3, 1] = -g2p
        Jm[:, 3, 2] = -g1p
        Jm[:, 3, 3] = 1.0 - g2p
        return Jm


_FAMILIES = {
    "translation": (TorusTranslation, ("omega",)),
    "rotation": (CircleRotation, ("omega",)),
    "bernoulli": (Bernoulli, ("q",)),
    "standard": (StandardMap, ("lambda",)),
    "skew": (SkewMap, ()),
    "froeschle4d": (Froeschle4D, ("c", "mu")),
}

_PARAM_ATTR = {"lambda": "lam"}


def make_map(family: str, **params) -> Map:
    """Construct a map from its family name and keyword parameters.

    Accepted names: translation, rotation, bernoulli, standard, skew,
    froeschle4d.  The standard-map coupling is passed as ``lambda`` (the
    keyword ``lam`` is accepted too).
    """
    try:
        cls, names = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown map family {family!r}; "
                         f"expected one of {sorted(_FAMILIES)}") from None
    if "lam" in params and "lambda" not in params:
        params["lambda"] = params.pop("lam")
    missing = [n for n in names if n not in params]
    extra = [n for n in params if n not in names]
    if missing or extra:
        raise ValueError(f"{family} expects parameters {list(names)}; "
                         f"missing={missing} unexpected={extra}")
    kwargs = {_PARAM_ATTR.get(n, n): params[n] for n in names}
    return cls(**kwargs)


# -- batch iteration engine -------------------------------------------------

def coords_from_states(states, backend) -> list:
    """Column arrays (one per coordinate) from a (B, dim) array of seeds."""
    states = np.atleast_2d(np.asarray(states, dtype=object))
    return [backend.array(list(states[:, k])) for k in range(states.shape[1])]


def run_steps(m: Map, coords, n: int, backend, inverse=False, record_ns=None):
    """Advance every column n steps; optionally snapshot at given counts.

    Returns (coords, snapshots) where snapshots maps n -> list of copied
    coordinate arrays.
    """
    C = m.prepared(backend)
    stepper = m.step_back if inverse else m.step
    if inverse and not m.invertible:
        raise NotInvertibleError(f"{m.family} has no inverse")
    want = set(int(k) for k in record_ns) if record_ns is not None else set()
    snaps = {}
    if 0 in want:
        snaps[0] = [np.copy(a) for a in coords]
    for k in range(1, n + 1):
        coords = stepper(coords, backend, C)
        if k in want:
            snaps[k] = [np.copy(a) for a in coords]
    return coords, snaps


# -- single-state functional interface --------------------------------------

def _state_in(m: Map, state, backend):
    state = list(state)
    if len(state) != m.dim:
        raise ValueError(f"{m.family} expects {m.dim} coordinates")
    return [backend.array([v]) for v in state]


def _state_out(cols, backend):
    vals = [np.asarray(c).ravel()[0] for c in cols]
    if all(isinstance(v, (np.floating, float)) for v in vals):
        return np.array(vals, dtype=np.float64)
    return [Fraction(v) for v in vals]


def forward(m: Map, state, spec="double"):
    """One forward iteration at the given precision."""
    B = backend_for(spec)
    out = m.step(_state_in(m, state, B), B, m.prepared(B))
    return _state_out(out, B)


def inverse(m: Map, state, spec="double"):
    """One analytic inverse iteration at the given precision."""
    if not m.invertible:
        raise NotInvertibleError(f"{m.family} has no inverse")
    B = backend_for(spec)
    out = m.step_back(_state_in(m, state, B), B, m.prepared(B))
    return _state_out(out, B)


def jacobian(m: Map, state) -> np.ndarray:
    """Analytic Jacobian at the state, evaluated at double precision."""
    pts = np.asarray(state, dtype=np.float64).reshape(m.dim, 1)
    return m.jacobian64(pts)[0]


def forward_with_tangent(m: Map, state, vectors, spec="double"):
    """Advance the state and 1..2 deviation vectors one step.

    The orbit advances at the requested precision; the tangent algebra runs
    at double using the Jacobian at the pre-step state.
    """
    vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not 1 <= len(vecs) <= 2:
        raise ValueError("expected one or two deviation vectors")
    J = jacobian(m, [float(v) for v in np.asarray(state, dtype=np.float64)])
    new_state = forward(m, state, spec)
    return new_state, [J @ v for v in vecs]
