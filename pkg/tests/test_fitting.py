"""Scaling-exponent fits on synthetic series with known answers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowvol.fitting import (
    EXPONENT_INFINITY,
    ScalingFit,
    SeriesTooShort,
    cumulative_trapezoid,
    fit_scaling,
    trailing_window,
)


def geometric_times(start, stop, count):
    ratio = (stop / start) ** (1.0 / (count - 1))
    return [start * ratio**k for k in range(count)]


class TestPowerLaws:
    def test_exact_power_law_recovered(self):
        xs = geometric_times(1.0, 1024.0, 21)
        ys = [3.7 * x**2.5 for x in xs]
        fit = fit_scaling(xs, ys)
        assert fit.classification == "polynomial"
        assert fit.exponent == pytest.approx(2.5, abs=1e-9)
        assert fit.residual < 1e-9

    def test_constant_series_has_zero_exponent(self):
        xs = geometric_times(1.0, 100.0, 12)
        fit = fit_scaling(xs, [42.0] * 12)
        assert fit.classification == "polynomial"
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)

    def test_window_bounds_are_in_time_units(self):
        xs = geometric_times(1.0, 1024.0, 11)
        ys = [x**2 for x in xs]
        fit = fit_scaling(xs, ys, window_fraction=0.5)
        lo, hi = fit.window
        assert hi == pytest.approx(xs[-1])
        assert xs[0] < lo < hi

    def test_trailing_window_sees_late_regime(self):
        # slope 1 early, slope 3 late; a half-window fit must report the
        # late slope, not an average
        xs = geometric_times(1.0, 4096.0, 25)
        knee = xs[12]
        ys = [x if x <= knee else knee * (x / knee) ** 3 for x in xs]
        fit = fit_scaling(xs, ys, window_fraction=0.4)
        assert fit.exponent == pytest.approx(3.0, abs=0.05)

    @given(
        exponent=st.floats(min_value=0.1, max_value=5.0),
        scale=st.floats(min_value=1e-3, max_value=1e3),
    )
    @settings(max_examples=60, deadline=None)
    def test_noise_free_recovery_property(self, exponent, scale):
        xs = geometric_times(1.0, 512.0, 16)
        ys = [scale * x**exponent for x in xs]
        fit = fit_scaling(xs, ys)
        assert fit.exponent == pytest.approx(exponent, abs=1e-6)

    @given(scale=st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=40, deadline=None)
    def test_exponent_invariant_under_y_rescaling(self, scale):
        xs = geometric_times(1.0, 512.0, 16)
        ys = [x**1.7 for x in xs]
        base = fit_scaling(xs, ys).exponent
        scaled = fit_scaling(xs, [scale * y for y in ys]).exponent
        assert scaled == pytest.approx(base, abs=1e-9)


class TestClassification:
    def test_exponential_series_flagged(self):
        xs = geometric_times(1.0, 64.0, 16)
        ys = [math.exp(x) for x in xs]
        fit = fit_scaling(xs, ys)
        assert fit.classification == "exponential"
        assert fit.exponent == EXPONENT_INFINITY
        assert math.isinf(fit.exponent)

    def test_oscillating_series_is_inconclusive(self):
        xs = geometric_times(1.0, 512.0, 20)
        ys = [10.0 if k % 2 else 1.0 for k in range(20)]
        fit = fit_scaling(xs, ys)
        assert fit.classification == "inconclusive"

    def test_mild_oscillation_stays_polynomial(self):
        # bounded 5% wobble around t^2 must not destroy the verdict
        xs = geometric_times(1.0, 512.0, 20)
        ys = [x**2 * (1 + 0.05 * math.sin(3 * k)) for k, x in enumerate(xs)]
        fit = fit_scaling(xs, ys)
        assert fit.classification == "polynomial"
        assert fit.exponent == pytest.approx(2.0, abs=0.1)


class TestValidation:
    def test_too_few_samples_rejected(self):
        xs = geometric_times(1.0, 64.0, 7)
        with pytest.raises(SeriesTooShort):
            fit_scaling(xs, [x**2 for x in xs])

    def test_min_samples_override(self):
        xs = geometric_times(1.0, 64.0, 5)
        fit = fit_scaling(xs, [x**2 for x in xs], min_samples=4)
        assert fit.exponent == pytest.approx(2.0, abs=1e-6)

    def test_trailing_window_floor_is_two(self):
        assert trailing_window(10, 0.01) == 2
        assert trailing_window(10, 0.5) == 5
        assert trailing_window(11, 0.5) == 6

    def test_result_is_frozen(self):
        fit = ScalingFit(1.0, (1.0, 2.0), 0.0, "polynomial")
        with pytest.raises(AttributeError):
            fit.exponent = 2.0


class TestCumulativeTrapezoid:
    def test_matches_numpy_on_quadratic(self):
        xs = np.linspace(1.0, 9.0, 33)
        ys = xs**2
        ours = cumulative_trapezoid(xs, ys)
        ref = np.concatenate([[0.0], np.cumsum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2)])
        assert np.allclose(ours, ref, rtol=0, atol=1e-12)
        assert len(ours) == len(xs)

    def test_exact_for_linear_integrand(self):
        xs = np.array([1.0, 2.0, 4.0, 8.0])
        ys = 3.0 * xs
        out = cumulative_trapezoid(xs, ys)
        # trapezoid rule integrates linear functions exactly
        expect = 1.5 * (xs**2 - 1.0)
        assert np.allclose(out, expect, atol=1e-12)
