import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from stmc import models as M

TWO_PI = 2 * math.pi
P = M.ModelPoint


def circle(warp, window=(0.0, 1.0), **params):
    return M.warped(M.Spatial("circle", {"L": TWO_PI}), M.Warp(warp, params), window)


@pytest.fixture
def const():
    return circle("const", c=1.0)


@pytest.fixture
def linear():
    return circle("linear", (0.0, 1.3))


@pytest.fixture
def cone():
    return M.minkowski(1, (0.2, 0.9), M.Region("past_of_point", {"apex": [1.0, 0.0]}))


class TestTau:
    def test_product(self, const):
        assert M.eval_tau(const, P(0.7, (1.0,))) == pytest.approx(0.7)
        assert M.eval_tau(const, P(0.0, (0.0,))) == 0.0

    def test_shifted_region(self, cone):
        assert M.eval_tau(cone, P(0.5, (0.1,))) == pytest.approx(0.3)
        assert M.eval_tau(cone, P(0.2, (0.0,))) == 0.0

    def test_outside_domain(self, const, linear):
        with pytest.raises(M.ModelError):
            M.eval_tau(const, P(1.5, (0.0,)))
        with pytest.raises(M.ModelError):
            M.eval_tau(linear, P(0.0, (0.0,)))


class TestCausal:
    def test_linear_warp_cone(self, linear):
        assert M.is_causal(linear, P(1.0, (0.0,)), P(0.5, (0.6,)))
        assert not M.is_causal(linear, P(1.0, (0.0,)), P(0.56, (0.6,)))

    def test_reflexive(self, const):
        p = P(0.3, (2.0,))
        assert M.is_causal(const, p, p)

    def test_minkowski_outside_cone(self):
        mk = M.minkowski(1, (0.0, 1.0))
        assert not M.is_causal(mk, P(0.5, (0.0,)), P(0.2, (0.4,)))
        assert M.is_causal(mk, P(0.5, (0.0,)), P(0.2, (0.3,)))

    def test_circle_wraps(self, const):
        assert M.is_causal(const, P(0.9, (0.1,)), P(0.6, (TWO_PI - 0.1,)))

    @pytest.mark.parametrize("warp,window,params", [
        ("const", (0.0, 1.0), {"c": 1.0}),
        ("linear", (0.0, 1.3), {}),
        ("one_minus_t", (0.0, 0.9), {}),
        ("sinusoidal", (0.0, 1.0), {"a": 0.5, "omega": TWO_PI}),
    ])
    def test_partial_order_on_random_triples(self, warp, window, params):
        model = circle(warp, window, **params)
        rng = np.random.default_rng(3)
        lo, hi = window
        n = 300
        t = rng.uniform(lo + 0.01, hi - 0.01, (n, 3))
        x = rng.uniform(0, TWO_PI, (n, 3, 1))

        def rel(a, b):
            return M.causal_mask(model, t[:, a], x[:, a], t[:, b], x[:, b])

        ab, bc, ac, ba = rel(0, 1), rel(1, 2), rel(0, 2), rel(1, 0)
        assert not np.any(ab & bc & ~ac)
        assert not np.any(ab & ba)


class TestLightCone:
    @given(st.floats(-0.95, 0.95), st.floats(0.5, 20), st.floats(0, 2), st.floats(0, 2))
    @settings(max_examples=80, deadline=None)
    def test_sinusoidal_integral_matches_quadrature(self, a, w, t0, dt):
        warp = M.Warp("sinusoidal", {"a": a, "omega": w})
        got = float(warp.light_cone_radius(t0, t0 + dt))
        ref = quad(lambda s: 1 / (1 + a * math.sin(w * s)), t0, t0 + dt, limit=400)[0]
        assert got == pytest.approx(ref, rel=1e-7, abs=1e-9)

    def test_unit_amplitude(self):
        warp = M.Warp("sinusoidal", {"a": 1.0, "omega": TWO_PI})
        # zero of 1 + sin(2 pi t) at t = 3/4
        assert math.isinf(float(warp.light_cone_radius(0.5, 0.9)))
        ref = quad(lambda s: 1 / (1 + math.sin(TWO_PI * s)), 0.0, 0.5)[0]
        assert float(warp.light_cone_radius(0.0, 0.5)) == pytest.approx(ref, rel=1e-8)

    def test_closed_forms(self):
        assert float(M.Warp("linear").light_cone_radius(0.5, 1.0)) == pytest.approx(math.log(2))
        assert float(M.Warp("one_minus_t").light_cone_radius(0.0, 0.5)) == pytest.approx(math.log(2))
        assert float(M.Warp("const", {"c": 2.0}).light_cone_radius(0.0, 0.5)) == pytest.approx(0.25)


class TestOracle:
    def test_product_formula(self, const):
        assert M.null_dist_oracle(const, P(0.2, (0.0,)), P(0.7, (math.pi / 2,))) == pytest.approx(math.pi / 2)

    def test_causal_pair_is_time_difference(self, linear):
        p, q = P(1.0, (0.0,)), P(0.5, (0.3,))
        assert M.null_dist_oracle(linear, p, q) == pytest.approx(0.5)

    def test_level_formula_against_brute_minimization(self):
        # best two-leg route: down from both ends to level s, across, up again
        tau0, sep = 1.0, math.pi

        def route(s):
            th = math.log(tau0 / s)
            return 2 * (tau0 - s) + s * max(sep - 2 * th, 0.0)

        grid = np.linspace(1e-4, tau0, 200001)
        brute = min(route(s) for s in grid)
        assert M.linear_warp_level_distance(tau0, sep) == pytest.approx(brute, abs=1e-6)
        floor = 0.5
        brute_strip = min(route(s) for s in grid if s >= floor)
        assert M.linear_warp_level_distance(tau0, sep, floor) == pytest.approx(brute_strip, abs=1e-6)

    def test_strip_exceeds_ambient(self):
        s_star = math.exp(-math.pi / 2)
        for s in (s_star + 0.01, 0.5, 0.9):
            assert M.linear_warp_level_distance(1.0, math.pi, s) > M.linear_warp_level_distance(1.0, math.pi)

    def test_unknown_case_is_absent(self):
        m = circle("one_minus_t", (0.0, 0.9))
        assert M.null_dist_oracle(m, P(0.5, (0.0,)), P(0.5, (math.pi,))) is None

    @given(st.floats(0, 1), st.floats(0, TWO_PI), st.floats(0, 1), st.floats(0, TWO_PI))
    @settings(max_examples=60, deadline=None)
    def test_oracle_properties(self, t1, x1, t2, x2):
        m = circle("const", c=1.0)
        p, q = P(t1, (x1,)), P(t2, (x2,))
        d = M.null_dist_oracle(m, p, q)
        assert d >= abs(t1 - t2) - 1e-12
        assert d == pytest.approx(M.null_dist_oracle(m, q, p))
        if M.is_causal(m, p, q):
            assert d == pytest.approx(t1 - t2, abs=1e-12)


class TestProperTime:
    def test_comoving(self, linear):
        assert M.proper_time_segment(linear, P(1.0, (0.4,)), P(0.5, (0.4,))) == pytest.approx(0.5)

    def test_null_segment(self, const):
        assert M.proper_time_segment(const, P(0.7, (0.5,)), P(0.2, (0.0,))) == pytest.approx(0.0, abs=1e-6)

    def test_constant_integrand(self, const):
        assert M.proper_time_segment(const, P(0.7, (0.3,)), P(0.2, (0.0,))) == pytest.approx(0.4)

    def test_requires_causal(self, const):
        with pytest.raises(M.ModelError):
            M.proper_time_segment(const, P(0.7, (2.0,)), P(0.2, (0.0,)))

    @given(st.floats(0.05, 1.25), st.floats(0.01, 1.0), st.floats(-1, 1))
    @settings(max_examples=60, deadline=None)
    def test_bounded_by_time_difference(self, tq, dt, frac):
        m = circle("linear", (0.0, 1.3))
        tp = min(tq + dt, 1.3)
        assume(tp > tq)
        dx = frac * math.log(tp / tq)
        p, q = P(tp, (dx % TWO_PI,)), P(tq, (0.0,))
        assume(M.is_causal(m, p, q))
        assert M.proper_time_segment(m, p, q) <= M.eval_tau(m, p) - M.eval_tau(m, q) + 1e-12


class TestRegions:
    def test_past_of_point_membership(self, cone):
        assert M.region_contains(cone, P(0.5, (0.4,)))
        assert not M.region_contains(cone, P(0.5, (0.6,)))

    def test_past_of_point_diameter(self, cone):
        assert M.region_diameter_bound(cone) == pytest.approx(2.3)

    def test_past_of_ring(self):
        ring = M.minkowski(2, (0.0, 1.0), M.Region("past_of_ring", {"R": 10, "tau_max": 1}), extent=12)
        assert M.region_contains(ring, P(0.5, (10.2, 0.0)))
        assert not M.region_contains(ring, P(0.5, (12.6, 0.0)))
        assert math.isfinite(M.region_diameter_bound(ring))

    def test_wrong_kind(self, const):
        with pytest.raises(M.ModelError):
            M.region_contains(const, P(0.5, (0.0,)))

    def test_region_needs_euclidean(self):
        with pytest.raises(M.ModelError):
            M.SpacetimeModel("minkowski_region", M.Spatial("circle", {"L": 1.0}))


class TestModelDoc:
    @pytest.mark.parametrize("model", [
        circle("const", c=1.0),
        circle("sinusoidal", a=0.3, omega=5.0),
        M.minkowski(1, (0.2, 0.9), M.Region("past_of_point", {"apex": [1.0, 0.0]})),
        M.warped(M.Spatial("flat_torus", {"L1": 1.0, "L2": 2.0}), M.Warp("one_minus_t"), (0.0, 0.5)),
    ])
    def test_round_trip(self, model):
        assert M.model_from_json(model.to_json()) == model

    def test_catalog_is_closed(self):
        with pytest.raises(M.ModelError):
            M.Warp("exp")
        with pytest.raises(M.ModelError):
            M.Warp("sinusoidal", {"a": 1.5})
        with pytest.raises(M.ModelError):
            # 1 - t vanishes inside the window
            M.warped(M.Spatial("circle", {"L": 1.0}), M.Warp("one_minus_t"), (0.0, 2.0))

    def test_open_below(self, linear, const):
        assert linear.open_below and not const.open_below
