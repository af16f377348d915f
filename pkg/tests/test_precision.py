"""Rounded-arithmetic core: round_nearest, rounded_eval, presets."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rounddyn.precision import (DOUBLE, EXTENDED113, SINGLE, PrecisionSpec,
                                RangeOverflowError, machine_epsilon,
                                mod_reduce, round_nearest, round_nearest_float,
                                rounded_eval, spec_from_name)


class TestPresets:
    def test_single(self):
        assert SINGLE == PrecisionSpec(24, -126, 127)

    def test_double(self):
        assert DOUBLE == PrecisionSpec(53, -1022, 1023)

    def test_extended113(self):
        assert EXTENDED113 == PrecisionSpec(113, -16382, 16383)

    def test_spec_from_name(self):
        assert spec_from_name("single") is SINGLE
        assert spec_from_name("double") is DOUBLE
        assert spec_from_name("extended113") is EXTENDED113
        with pytest.raises(ValueError):
            spec_from_name("quad")

    def test_machine_epsilon(self):
        assert machine_epsilon(SINGLE) == 2.0 ** -24
        assert machine_epsilon(DOUBLE) == 2.0 ** -53
        assert machine_epsilon(PrecisionSpec(10, -14, 15)) == 2.0 ** -10

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            PrecisionSpec(1, -126, 127)
        with pytest.raises(ValueError):
            PrecisionSpec(24, 10, 10)


class TestRoundNearest:
    def test_representable_fixed_point(self):
        assert round_nearest(1.0, SINGLE) == 1

    def test_below_half_ulp_rounds_down(self):
        assert round_nearest(1 + Fraction(1, 2 ** 25), SINGLE) == 1

    def test_tenth_single(self):
        assert round_nearest(Fraction(1, 10), SINGLE) == Fraction(13421773, 2 ** 27)

    def test_ties_to_even(self):
        # midpoint between 1 and 1 + 2^-23: even significand wins
        assert round_nearest(1 + Fraction(1, 2 ** 24), SINGLE) == 1
        # midpoint between 1 + 2^-23 and 1 + 2^-22 rounds up to even
        lo = 1 + Fraction(1, 2 ** 23)
        mid = lo + Fraction(1, 2 ** 24)
        assert round_nearest(mid, SINGLE) == 1 + Fraction(1, 2 ** 22)

    def test_overflow_raises(self):
        with pytest.raises(RangeOverflowError):
            round_nearest(Fraction(2) ** 128, SINGLE)
        # largest finite value itself is fine
        assert round_nearest(SINGLE.max_value, SINGLE) == SINGLE.max_value

    def test_subnormals_supported(self):
        tiny = SINGLE.min_subnormal
        assert round_nearest(tiny, SINGLE) == tiny
        assert round_nearest(tiny / 3, SINGLE) == 0
        assert round_nearest(tiny * Fraction(3, 2), SINGLE) == 2 * tiny

    def test_matches_host_float32(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(-1e30, 1e30, 2000)
        for x in xs:
            assert round_nearest_float(float(x), SINGLE) == float(np.float32(x))

    def test_matches_host_float64(self):
        rng = np.random.default_rng(8)
        for x in rng.uniform(-1e300, 1e300, 200):
            assert round_nearest_float(float(x), DOUBLE) == float(x)


# stay inside the single-precision finite range used by the properties
_finite = st.floats(allow_nan=False, allow_infinity=False,
                    min_value=-1e38, max_value=1e38)


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(_finite)
    def test_idempotent(self, x):
        once = round_nearest(x, SINGLE)
        assert round_nearest(once, SINGLE) == once

    @settings(max_examples=300, deadline=None)
    @given(_finite, _finite)
    def test_monotone(self, x, y):
        if x > y:
            x, y = y, x
        assert round_nearest(x, SINGLE) <= round_nearest(y, SINGLE)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False,
                     min_value=1e-30, max_value=1e30))
    def test_relative_error_bound(self, x):
        r = round_nearest(x, SINGLE)
        assert abs(r - Fraction(x)) <= Fraction(x) * Fraction(1, 2 ** 24)


class TestRoundedEval:
    def test_dyadic_add_exact(self):
        assert rounded_eval("add", (0.25, 0.5), SINGLE) == Fraction(3, 4)

    def test_mod_dyadic_exact(self):
        assert rounded_eval("mod", (1.75, 1), SINGLE) == Fraction(3, 4)

    def test_sin_correctly_rounded(self):
        import mpmath
        got = rounded_eval("sin", (0.7,), SINGLE)
        with mpmath.workprec(80):
            ref = mpmath.sin(mpmath.mpf(0.7))
            n, d = ref._mpf_[1], ref._mpf_[2]
        exact = Fraction(int(n), 1 << -int(d))
        assert got == round_nearest(exact, SINGLE)

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            rounded_eval("div", (1.0, 0.0), SINGLE)

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            rounded_eval("exp", (1.0,), SINGLE)

    def test_mod_result_in_range(self):
        rng = np.random.default_rng(9)
        P = round_nearest(Fraction(355, 113) * 2, SINGLE)  # non-dyadic period
        for x in rng.uniform(-50, 50, 500):
            r = mod_reduce(float(x), P, SINGLE)
            assert 0 <= r < P

    def test_mod_wrap_to_zero(self):
        # a reduction result that rounds onto the period itself wraps to 0
        P = round_nearest(1 - Fraction(1, 2 ** 30), SINGLE)
        x = P - Fraction(1, 2 ** 60)
        assert mod_reduce(x, P, SINGLE) == 0

    def test_exact_then_rounded_vs_two_step(self):
        # one rounding of the exact product, not rounding of rounded factors
        a = round_nearest(Fraction(1, 3), SINGLE)
        b = round_nearest(Fraction(1, 7), SINGLE)
        exact = a * b
        assert rounded_eval("mul", (a, b), SINGLE) == round_nearest(exact, SINGLE)
