import math

import numpy as np
import pytest

from hconvex.limitcurve import (
    adaptive_gk15,
    arc_integrand,
    curve_length,
    curve_length_midpoint,
    curve_metrics,
    curve_value,
    expanded_integrand,
    golden_section_max,
    height_max,
    inclination,
)

S_VALUES = (0.1, 0.25, 0.5, 0.75, 0.9)


class TestCurveValue:
    def test_examples(self):
        assert curve_value(0.5, 0.5, 1, 1) == pytest.approx(math.sqrt(2), abs=1e-15)
        assert curve_value(1.0, 0.3, 2, 4) == pytest.approx(3.4, abs=1e-15)

    @pytest.mark.parametrize("s", S_VALUES)
    def test_endpoints(self, s):
        assert curve_value(s, 0.0, 3.0, 7.0) == 7.0
        assert curve_value(s, 1.0, 3.0, 7.0) == 3.0

    def test_vectorised(self):
        v = curve_value(0.5, np.linspace(0, 1, 5), 1, 1)
        assert v.shape == (5,)

    def test_rejects(self):
        with pytest.raises(ValueError):
            curve_value(0.0, 0.5, 1, 1)
        with pytest.raises(ValueError):
            curve_value(0.5, 1.5, 1, 1)


class TestHeight:
    @pytest.mark.parametrize("s", S_VALUES)
    def test_closed_form(self, s):
        value, arg = height_max(s, 1, 1)
        assert abs(value - 2 ** (1 - s)) <= 1e-9
        assert abs(arg - 0.5) <= 1e-6

    def test_flat_at_s_one(self):
        value, _ = height_max(1.0, 1, 1)
        assert value == pytest.approx(1.0, abs=1e-15)

    def test_asymmetric_against_grid_oracle(self):
        value, arg = height_max(0.5, 4, 1)
        lam = np.linspace(0, 1, 200001)
        v = np.sqrt(lam) * 4 + np.sqrt(1 - lam)
        k = int(np.argmax(v))
        assert abs(arg - 0.5) > 0.1
        assert arg == pytest.approx(lam[k], abs=1e-5)
        assert value == pytest.approx(v[k], abs=1e-9)
        # stationarity s lam^(s-1) X = s (1-lam)^(s-1) Y  gives lam = 16/17 here
        assert arg == pytest.approx(16 / 17, abs=1e-6)

    def test_dominates_sampled_points(self):
        for s in S_VALUES:
            value, _ = height_max(s, 2.0, 0.5)
            assert all(value >= curve_value(s, l, 2.0, 0.5) for l in (0.0, 0.5, 1.0))

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            height_max(0.5, -1, 1)


class TestGoldenSection:
    def test_quadratic(self):
        x, v = golden_section_max(lambda u: -(u - 0.3) ** 2 + 2, 0, 1)
        assert x == pytest.approx(0.3, abs=1e-7) and v == pytest.approx(2.0, abs=1e-14)


class TestQuadrature:
    def test_polynomial_exact(self):
        r = adaptive_gk15(lambda x: x ** 5 - 2 * x, 0.0, 2.0)
        assert r.value == pytest.approx(64 / 6 - 4, abs=1e-13) and r.converged

    def test_needs_subdivision(self):
        r = adaptive_gk15(lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, tol=1e-10)
        exact = (2 / 3) * (0.3 ** 1.5 + 0.7 ** 1.5)
        assert r.intervals > 1
        assert r.value == pytest.approx(exact, abs=1e-9)

    def test_budget_exhaustion_reported(self):
        r = adaptive_gk15(lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, tol=1e-30, max_intervals=4)
        assert not r.converged and r.error_estimate > 1e-30


class TestLength:
    def test_straight_segments(self):
        assert abs(curve_length(1, 1, 1).length - 1) <= 1e-10
        assert curve_length(1, 2, 0).length == pytest.approx(math.sqrt(5), abs=1e-12)

    @pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75])
    def test_midpoint_oracle(self, s):
        fast = curve_length(s, 1, 1, tol=1e-8)
        assert fast.converged and fast.error_estimate <= 1e-8
        assert abs(fast.length - curve_length_midpoint(s, 1, 1)) <= 1e-6

    def test_general_weights_oracle(self):
        fast = curve_length(0.5, 3.0, 0.5)
        assert fast.length == pytest.approx(curve_length_midpoint(0.5, 3.0, 0.5), abs=1e-6)

    def test_decreases_to_chord(self):
        lengths = [curve_length(s).length for s in (0.5, 0.7, 0.9, 1.0)]
        assert lengths == sorted(lengths, reverse=True)
        assert lengths[-1] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("s,X,Y", [(0.5, 1, 1), (0.3, 2, 0.5), (0.8, 0, 3)])
    def test_lower_bounds(self, s, X, Y):
        m = curve_metrics(s, X, Y)
        assert m.length >= math.sqrt(1 + (X - Y) ** 2) - 1e-12
        assert m.length >= 2 * (m.height_max - max(X, Y)) - 1e-12

    def test_expanded_form_matches_general(self):
        lam = np.linspace(0.01, 0.99, 99)
        for s in S_VALUES:
            assert np.allclose(arc_integrand(s, lam), expanded_integrand(s, lam), rtol=1e-12, atol=0)

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            curve_length(0.5, tol=0.0)


class TestInclination:
    def test_examples(self):
        assert inclination(0.5, 0.5, 1, 1) == 0.0
        assert inclination(1.0, 0.37, 2, 4) == -2.0
        assert inclination(0.5, 0.25, 1, 1) == pytest.approx(1 - 1 / math.sqrt(3), abs=1e-15)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.0])
    def test_finite_differences(self, s):
        d = 1e-6
        for lam in np.linspace(0, 1, 52)[1:-1]:
            fd = (curve_value(s, lam + d, 1.3, 0.7) - curve_value(s, lam - d, 1.3, 0.7)) / (2 * d)
            exact = inclination(s, float(lam), 1.3, 0.7)
            assert fd == pytest.approx(exact, rel=1e-4, abs=1e-8)

    def test_endpoint_sentinels(self):
        assert inclination(0.5, 0.0, 1, 1) == math.inf
        assert inclination(0.5, 1.0, 1, 1) == -math.inf
        assert inclination(0.5, 0.0, 0, 1) == pytest.approx(-0.5)
        assert inclination(1.0, 0.0, 2, 4) == -2.0

    def test_metrics_dict(self):
        d = curve_metrics(0.5).to_dict()
        assert set(d) == {"s", "X", "Y", "height_max", "height_argmax", "length",
                          "quadrature_error_estimate", "converged"}
