"""Deterministic rounded binary floating-point arithmetic at configurable width.

A :class:`PrecisionSpec` fixes a significand width ``p`` and an exponent
range.  All rounding is round-to-nearest with ties to even, which makes
every result machine independent.  Values are represented exactly as
:class:`fractions.Fraction` (always dyadic rationals), so arithmetic at any
width, including ``p=113`` reference orbits, is exact-then-rounded.

Transcendentals (sin, cos) are evaluated at >= 2p working bits with mpmath
and rounded once.  This is faithful rounding: the result is within 1 ulp of
the correctly rounded value, which is far below the error magnitudes these
computations study.

Subnormal values are supported.  Inputs whose magnitude falls below half of
the smallest subnormal round to zero; there is no silent flush above that
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

__all__ = [
    "PrecisionSpec",
    "SINGLE",
    "DOUBLE",
    "EXTENDED113",
    "spec_from_name",
    "machine_epsilon",
    "round_nearest",
    "rounded_eval",
    "RangeOverflowError",
]


class RangeOverflowError(ArithmeticError):
    """Magnitude exceeds the largest finite value of the precision spec."""


@dataclass(frozen=True)
class PrecisionSpec:
    """Significand width and exponent bounds of a rounded arithmetic."""

    significand_bits: int
    exponent_min: int
    exponent_max: int

    def __post_init__(self):
        if self.significand_bits < 2:
            raise ValueError("significand_bits must be >= 2")
        if self.exponent_min >= self.exponent_max:
            raise ValueError("exponent_min must be < exponent_max")

    @property
    def epsilon(self) -> float:
        return 2.0 ** -self.significand_bits

    @property
    def max_value(self) -> Fraction:
        """Largest finite representable magnitude."""
        p = self.significand_bits
        return (2 - Fraction(1, 2 ** (p - 1))) * Fraction(2) ** self.exponent_max

    @property
    def min_subnormal(self) -> Fraction:
        return Fraction(1, 2 ** (self.significand_bits - 1 - self.exponent_min))


SINGLE = PrecisionSpec(24, -126, 127)
DOUBLE = PrecisionSpec(53, -1022, 1023)
EXTENDED113 = PrecisionSpec(113, -16382, 16383)

_PRESETS = {
    "single": SINGLE,
    "double": DOUBLE,
    "extended113": EXTENDED113,
}


def spec_from_name(name: str) -> PrecisionSpec:
    """Resolve a preset name ("single", "double", "extended113")."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown precision spec {name!r}; "
                         f"expected one of {sorted(_PRESETS)}") from None


def machine_epsilon(spec: PrecisionSpec) -> float:
    """Relative rounding bound 2**-p."""
    return spec.epsilon


def _div_nearest_even(a: int, b: int) -> int:
    """Round a/b (a, b > 0) to the nearest integer, ties to even."""
    q, r = divmod(a, b)
    r2 = r * 2
    if r2 > b or (r2 == b and q & 1):
        q += 1
    return q


def _round_ratio(num: int, den: int, spec: PrecisionSpec):
    """Round the exact rational num/den (den > 0) to spec.

    Returns (m, t) with value == m * 2**t and m == 0 or |m| < 2**p.
    """
    if num == 0:
        return 0, 0
    sign = -1 if num < 0 else 1
    n, d = abs(num), den
    p = spec.significand_bits
    e = n.bit_length() - d.bit_length()
    # ensure 2**e <= n/d < 2**(e+1)
    below = n < (d << e) if e >= 0 else (n << -e) < d
    if below:
        e -= 1
    if e < spec.exponent_min:
        # subnormal range: fixed quantum 2**(emin - p + 1)
        t = spec.exponent_min - p + 1
        m = (_div_nearest_even(n << -t, d) if t <= 0
             else _div_nearest_even(n, d << t))
        return sign * m, t
    shift = p - 1 - e
    m = (_div_nearest_even(n << shift, d) if shift >= 0
         else _div_nearest_even(n, d << -shift))
    if m == (1 << p):
        m >>= 1
        e += 1
    if e > spec.exponent_max:
        raise RangeOverflowError(
            f"magnitude 2**{e} exceeds exponent_max={spec.exponent_max}")
    return sign * m, e - p + 1


def _as_ratio(x):
    """Exact (num, den) of an int, float or Fraction; den > 0."""
    if isinstance(x, Fraction):
        return x.numerator, x.denominator
    if isinstance(x, int):
        return x, 1
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite input {x!r}")
        return x.as_integer_ratio()
    if isinstance(x, mpmath.mpf):
        sign_, man, exp, _ = x._mpf_
        man, exp = int(man), int(exp)  # mpmath may hand back gmpy2 integers
        if man == 0:
            return 0, 1
        num = -man if sign_ else man
        return (num << exp, 1) if exp >= 0 else (num, 1 << -exp)
    # numpy scalars and anything float-like
    return float(x).as_integer_ratio()


def _to_fraction(m: int, t: int) -> Fraction:
    if t >= 0:
        return Fraction(m << t) if m >= 0 else -Fraction((-m) << t)
    return Fraction(m, 1 << -t)


def round_nearest(x, spec: PrecisionSpec) -> Fraction:
    """Nearest representable value under spec, ties to even significand.

    Accepts int, float or Fraction.  Raises :class:`RangeOverflowError` when
    |x| rounds beyond the largest finite value.
    """
    num, den = _as_ratio(x)
    m, t = _round_ratio(num, den, spec)
    return _to_fraction(m, t)


def round_nearest_float(x, spec: PrecisionSpec) -> float:
    """Like :func:`round_nearest` but returns a host float.

    Exact only when the spec fits inside IEEE binary64 (p <= 53 and the
    exponent range within [-1022, 1023]); intended for the fast paths.
    """
    num, den = _as_ratio(x)
    m, t = _round_ratio(num, den, spec)
    return math.ldexp(m, t)


def _trig_fraction(fn, x, spec: PrecisionSpec) -> Fraction:
    """Evaluate sin/cos at >= 2p bits and return the exact dyadic result."""
    num, den = _as_ratio(x)
    work = max(2 * spec.significand_bits, 64)
    with mpmath.workprec(work + 10):
        v = fn(mpmath.mpf(num) / mpmath.mpf(den))
        sign_, man, exp, _ = mpmath.mpf(v)._mpf_
    man, exp = int(man), int(exp)
    if man == 0:
        return Fraction(0)
    frac = Fraction(man, 1 << -exp) if exp < 0 else Fraction(man << exp)
    return -frac if sign_ else frac


def mod_reduce(x, period, spec: PrecisionSpec) -> Fraction:
    """Reduce x into [0, period*) where period* = round_nearest(period).

    The representable multiple k*period* is subtracted exactly, then the
    result is rounded once.  A result that rounds up to period* wraps to 0.
    """
    pstar = round_nearest(period, spec)
    if pstar <= 0:
        raise ValueError("period must round to a positive value")
    xf = Fraction(*_as_ratio(x))
    k = xf // pstar
    r = round_nearest(xf - k * pstar, spec)
    if r == pstar:
        r = Fraction(0)
    return r


_BINARY = {"add", "sub", "mul", "div", "mod"}
_UNARY = {"sin", "cos"}


def rounded_eval(op: str, args, spec: PrecisionSpec) -> Fraction:
    """Exact reference evaluation of ``op`` followed by one rounding.

    Supported ops: add, sub, mul, div, sin, cos, mod (reduction of
    ``args[0]`` into ``[0, args[1])``).
    """
    if op in _BINARY:
        a, b = args
        if op == "mod":
            return mod_reduce(a, b, spec)
        n1, d1 = _as_ratio(a)
        n2, d2 = _as_ratio(b)
        if op == "add":
            num, den = n1 * d2 + n2 * d1, d1 * d2
        elif op == "sub":
            num, den = n1 * d2 - n2 * d1, d1 * d2
        elif op == "mul":
            num, den = n1 * n2, d1 * d2
        else:  # div
            if n2 == 0:
                raise ZeroDivisionError("rounded division by zero")
            num, den = n1 * d2, d1 * n2
            if den < 0:
                num, den = -num, -den
        return _to_fraction(*_round_ratio(num, den, spec))
    if op in _UNARY:
        (a,) = args
        fn = mpmath.sin if op == "sin" else mpmath.cos
        exact = _trig_fraction(fn, a, spec)
        return round_nearest(exact, spec)
    raise ValueError(f"unsupported operation {op!r}")
