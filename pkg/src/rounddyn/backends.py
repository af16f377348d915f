"""Array arithmetic backends that execute map steps at a chosen precision.

A backend operates elementwise on one-dimensional coordinate arrays.  Three
implementations exist:

* ``Float32Backend`` / ``Float64Backend`` -- host IEEE 754 binary32/binary64
  through numpy ufuncs.  Host arithmetic is correctly rounded, so these are
  exact fast paths for the (24, -126, 127) and (53, -1022, 1023) specs.
* ``EmulatedBackend`` -- exact-then-rounded arithmetic on Fraction values
  for any other :class:`~rounddyn.precision.PrecisionSpec` (notably the
  p=113 reference width).
* ``ExactBackend`` -- no rounding at all; add/sub/mul/div are exact rational
  arithmetic.  Useful to verify that reversibility error vanishes without a
  rounding layer.

Elementwise numpy ufuncs produce the same bits for an element regardless of
how the array is chunked, which is what makes scan results independent of
the worker count.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .precision import (DOUBLE, EXTENDED113, SINGLE, PrecisionSpec,
                        _as_ratio, round_nearest, rounded_eval)

__all__ = [
    "ArrayBackend",
    "Float32Backend",
    "Float64Backend",
    "EmulatedBackend",
    "ExactBackend",
    "backend_for",
]


class ArrayBackend:
    """Interface shared by all precision backends."""

    spec: PrecisionSpec | None

    def const(self, x):
        """Round a scalar into the backend precision (native scalar)."""
        raise NotImplementedError

    def array(self, values):
        """Native 1-D coordinate array from a sequence of exact values."""
        raise NotImplementedError

    def to_float64(self, arr) -> np.ndarray:
        raise NotImplementedError

    def to_fractions(self, arr) -> list[Fraction]:
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def div(self, a, b):
        raise NotImplementedError

    def sin(self, a):
        raise NotImplementedError

    def cos(self, a):
        raise NotImplementedError

    def mod(self, a, period):
        """Reduce into [0, period); period is a backend constant."""
        raise NotImplementedError


class _FloatBackend(ArrayBackend):
    dtype: type

    def const(self, x):
        return self.dtype(float(round_nearest(x, self.spec)))

    def array(self, values):
        return np.array([float(Fraction(*_as_ratio(v))) for v in values],
                        dtype=self.dtype)

    def to_float64(self, arr):
        return np.asarray(arr, dtype=np.float64)

    def to_fractions(self, arr):
        return [Fraction(float(v)) for v in np.asarray(arr).ravel()]

    def add(self, a, b):
        return np.add(a, b, dtype=self.dtype)

    def sub(self, a, b):
        return np.subtract(a, b, dtype=self.dtype)

    def mul(self, a, b):
        return np.multiply(a, b, dtype=self.dtype)

    def div(self, a, b):
        return np.divide(a, b, dtype=self.dtype)

    def mod(self, a, period):
        # fmod is exact per IEEE 754, so remainder = exact subtraction of a
        # period multiple followed by at most one rounded add: exactly the
        # exact-then-rounded reduction semantics.  The rounded add can land
        # on the period itself, which wraps to 0.
        r = np.remainder(np.asarray(a, dtype=self.dtype), period)
        return np.where(r >= period, self.dtype(0.0), r)


class Float32Backend(_FloatBackend):
    """Host IEEE binary32 arithmetic."""

    dtype = np.float32
    spec = SINGLE

    def sin(self, a):
        # evaluate at 53 bits, round once to 24: faithful within 1 ulp
        return np.sin(np.asarray(a, dtype=np.float64)).astype(np.float32)

    def cos(self, a):
        return np.cos(np.asarray(a, dtype=np.float64)).astype(np.float32)


class Float64Backend(_FloatBackend):
    """Host IEEE binary64 arithmetic."""

    dtype = np.float64
    spec = DOUBLE

    def sin(self, a):
        return np.sin(np.asarray(a, dtype=np.float64))

    def cos(self, a):
        return np.cos(np.asarray(a, dtype=np.float64))


def _lift(fn):
    """Elementwise object-array wrapper."""
    ufn = np.frompyfunc(fn, 2, 1)
    return ufn


class EmulatedBackend(ArrayBackend):
    """Exact-then-rounded arithmetic on Fractions at an arbitrary spec."""

    def __init__(self, spec: PrecisionSpec):
        self.spec = spec
        s = spec
        self._add = np.frompyfunc(lambda a, b: rounded_eval("add", (a, b), s), 2, 1)
        self._sub = np.frompyfunc(lambda a, b: rounded_eval("sub", (a, b), s), 2, 1)
        self._mul = np.frompyfunc(lambda a, b: rounded_eval("mul", (a, b), s), 2, 1)
        self._div = np.frompyfunc(lambda a, b: rounded_eval("div", (a, b), s), 2, 1)
        self._sin = np.frompyfunc(lambda a: rounded_eval("sin", (a,), s), 1, 1)
        self._cos = np.frompyfunc(lambda a: rounded_eval("cos", (a,), s), 1, 1)
        self._mod = np.frompyfunc(lambda a, p: rounded_eval("mod", (a, p), s), 2, 1)

    def const(self, x):
        return round_nearest(x, self.spec)

    def array(self, values):
        out = np.empty(len(values), dtype=object)
        out[:] = [round_nearest(v, self.spec) for v in values]
        return out

    def to_float64(self, arr):
        return np.array([float(v) for v in np.asarray(arr).ravel()],
                        dtype=np.float64)

    def to_fractions(self, arr):
        return [Fraction(v) for v in np.asarray(arr).ravel()]

    def add(self, a, b):
        return self._add(a, b)

    def sub(self, a, b):
        return self._sub(a, b)

    def mul(self, a, b):
        return self._mul(a, b)

    def div(self, a, b):
        return self._div(a, b)

    def sin(self, a):
        return self._sin(a)

    def cos(self, a):
        return self._cos(a)

    def mod(self, a, period):
        return self._mod(a, period)


_EXACT_TRIG_BITS = 300


class ExactBackend(ArrayBackend):
    """Rational arithmetic with no rounding layer.

    sin/cos are deterministic 300-bit approximations; the ring operations
    are exact, which is all the reversibility identity needs.
    """

    spec = None

    def __init__(self):
        def _trig(fn):
            def ev(a):
                n, d = _as_ratio(a)
                with mpmath.workprec(_EXACT_TRIG_BITS):
                    v = fn(mpmath.mpf(n) / mpmath.mpf(d))
                    sign_, man, exp, _ = v._mpf_
                man, exp = int(man), int(exp)
                if man == 0:
                    return Fraction(0)
                f = Fraction(man, 1 << -exp) if exp < 0 else Fraction(man << exp)
                return -f if sign_ else f
            return np.frompyfunc(ev, 1, 1)

        self._sin = _trig(mpmath.sin)
        self._cos = _trig(mpmath.cos)
        self._addf = np.frompyfunc(lambda a, b: a + b, 2, 1)
        self._subf = np.frompyfunc(lambda a, b: a - b, 2, 1)
        self._mulf = np.frompyfunc(lambda a, b: a * b, 2, 1)
        self._divf = np.frompyfunc(lambda a, b: a / b, 2, 1)
        self._modf = np.frompyfunc(lambda a, p: a - (a // p) * p, 2, 1)

    def const(self, x):
        if isinstance(x, Fraction):
            return x
        n, d = _as_ratio(x)
        return Fraction(n, d)

    def array(self, values):
        out = np.empty(len(values), dtype=object)
        out[:] = [self.const(v) for v in values]
        return out

    def to_float64(self, arr):
        return np.array([float(v) for v in np.asarray(arr).ravel()],
                        dtype=np.float64)

    def to_fractions(self, arr):
        return [Fraction(v) for v in np.asarray(arr).ravel()]

    def add(self, a, b):
        return self._addf(a, b)

    def sub(self, a, b):
        return self._subf(a, b)

    def mul(self, a, b):
        return self._mulf(a, b)

    def div(self, a, b):
        return self._divf(a, b)

    def sin(self, a):
        return self._sin(a)

    def cos(self, a):
        return self._cos(a)

    def mod(self, a, period):
        return self._modf(a, period)


@lru_cache(maxsize=None)
def _cached_backend(spec: PrecisionSpec):
    if spec == SINGLE:
        return Float32Backend()
    if spec == DOUBLE:
        return Float64Backend()
    return EmulatedBackend(spec)


_EXACT = ExactBackend()


def backend_for(spec) -> ArrayBackend:
    """Backend for a PrecisionSpec, a preset name, or "exact"."""
    if isinstance(spec, ArrayBackend):
        return spec
    if spec == "exact" or spec is None:
        return _EXACT
    if isinstance(spec, str):
        from .precision import spec_from_name
        spec = spec_from_name(spec)
    return _cached_backend(spec)
