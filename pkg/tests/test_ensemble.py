"""Ensemble variance statistics and power-law fitting."""

import numpy as np
import pytest

from rounddyn.ensemble import (EnsembleSpec, Noise, PerturbationMode,
                               Roundoff, VarianceSeries, fit_power_law,
                               run_ensemble)
from rounddyn.maps import Bernoulli, SkewMap, StandardMap, make_map

SKEW_REGION = ((0.3, 0.3 + 1e-3), (0.6, 0.6 + 1e-3))


def _synthetic(exponent, c=2.5, n=200):
    ns = np.arange(0, n + 1)
    v = np.zeros((n + 1, 2))
    v[1:, 0] = c * ns[1:].astype(float) ** exponent
    v[1:, 1] = c * ns[1:].astype(float) ** exponent
    return VarianceSeries(ns, v, ("x", "y"))


class TestSpecs:
    def test_count_validation(self):
        with pytest.raises(ValueError):
            EnsembleSpec(SKEW_REGION, 1)

    def test_region_validation(self):
        with pytest.raises(ValueError):
            EnsembleSpec(((0.5, 0.5), (0.0, 1.0)), 10)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            Noise(0.0)
        with pytest.raises(ValueError):
            PerturbationMode("gaussian")
        assert Roundoff("single").spec.significand_bits == 24

    def test_region_dimension_checked(self):
        with pytest.raises(ValueError):
            run_ensemble(SkewMap(), EnsembleSpec(((0, 1),), 10),
                         Noise(1e-7), 5)

    def test_non_invertible_rejected(self):
        from rounddyn.maps import NotInvertibleError
        with pytest.raises(NotInvertibleError):
            run_ensemble(Bernoulli(2), EnsembleSpec(((0, 1),), 10),
                         Noise(1e-7), 5)


class TestRunEnsemble:
    def test_zero_at_n0_and_nonnegative(self):
        ens = EnsembleSpec(SKEW_REGION, 50, seed=1)
        s = run_ensemble(SkewMap(), ens, Roundoff("single"), 20)
        assert s.ns[0] == 0
        assert np.array_equal(s.sigma2[0], np.zeros(2))
        assert np.all(s.sigma2 >= 0)

    def test_seed_determinism(self):
        ens = EnsembleSpec(SKEW_REGION, 64, seed=42)
        a = run_ensemble(SkewMap(), ens, Noise(1e-7), 30)
        b = run_ensemble(SkewMap(), ens, Noise(1e-7), 30)
        assert np.array_equal(a.sigma2, b.sigma2)

    def test_different_seeds_differ(self):
        a = run_ensemble(SkewMap(), EnsembleSpec(SKEW_REGION, 64, seed=1),
                         Noise(1e-7), 10)
        b = run_ensemble(SkewMap(), EnsembleSpec(SKEW_REGION, 64, seed=2),
                         Noise(1e-7), 10)
        assert not np.array_equal(a.sigma2, b.sigma2)

    def test_sampled_ns(self):
        ens = EnsembleSpec(SKEW_REGION, 32, seed=3)
        full = run_ensemble(SkewMap(), ens, Noise(1e-7), 40)
        part = run_ensemble(SkewMap(), ens, Noise(1e-7), 40, ns=[10, 40])
        assert np.array_equal(part.ns, [0, 10, 40])
        # a sampled run reproduces the dense run's values at shared n
        assert np.array_equal(part.sigma2[1], full.sigma2[10])
        assert np.array_equal(part.sigma2[2], full.sigma2[40])

    def test_amplitude_scaling(self):
        # multiplying the noise amplitude by s scales sigma^2 by s^2 (5%)
        ens = EnsembleSpec(SKEW_REGION, 10000, seed=5)
        ns = [10, 30, 100]
        a = run_ensemble(SkewMap(), ens, Noise(1e-7), 100, ns=ns)
        b = run_ensemble(SkewMap(), ens, Noise(3e-7), 100, ns=ns)
        ratio = b.sigma2[1:] / a.sigma2[1:]
        assert np.max(np.abs(ratio / 9.0 - 1.0)) <= 0.05

    def test_roundoff_single_grows(self):
        ens = EnsembleSpec(SKEW_REGION, 200, seed=7)
        s = run_ensemble(SkewMap(), ens, Roundoff("single"), 50)
        assert s.sigma2[-1, 0] > 0


class TestFitPowerLaw:
    def test_synthetic_cubic(self):
        fit = fit_power_law(_synthetic(3.0), "x", (10, 200))
        assert abs(fit.exponent - 3.0) <= 1e-9
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_synthetic_linear(self):
        fit = fit_power_law(_synthetic(1.0), 1, (10, 200))
        assert abs(fit.exponent - 1.0) <= 1e-9

    def test_window_validation(self):
        s = _synthetic(2.0)
        with pytest.raises(ValueError):
            fit_power_law(s, "x", (50, 50))
        with pytest.raises(ValueError):
            fit_power_law(s, "x", (199.5, 200.5))  # fewer than two samples

    def test_nonpositive_values_rejected(self):
        s = _synthetic(2.0)
        s.sigma2[20, 0] = 0.0
        with pytest.raises(ValueError):
            fit_power_law(s, "x", (10, 100))

    def test_member_count_convergence(self):
        # doubling the ensemble leaves fitted exponents within tolerance
        ns = np.unique(np.rint(np.geomspace(1, 400, 25)).astype(int))
        fits = []
        for count in (2000, 4000):
            ens = EnsembleSpec(SKEW_REGION, count, seed=11)
            s = run_ensemble(SkewMap(), ens, Noise(1e-7), 400, ns=ns)
            fits.append((fit_power_law(s, "x", (40, 400)).exponent,
                         fit_power_law(s, "y", (40, 400)).exponent))
        assert abs(fits[0][0] - fits[1][0]) <= 0.15
        assert abs(fits[0][1] - fits[1][1]) <= 0.1
