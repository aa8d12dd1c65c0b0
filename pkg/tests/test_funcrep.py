import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rikit.asymptotics import Divergence
from rikit.funcrep import (HALF_LINE, IntervalDomain, PowerOf, PowerPiecewise,
                           RepresentationError, StepFunction, dilate, function_from_json,
                           indicator, integrate, rearrange, step, truncate)

from conftest import step_functions


def sf(breaks, values, domain=HALF_LINE):
    return StepFunction(breaks, values, domain)


class TestRearrange:
    def test_sort_by_value(self):
        f = step([(2.0, 1, 3), (5.0, 0, 1)])
        assert rearrange(f) == sf([0, 1, 3], [5, 2])

    def test_gap_closes(self):
        f = step([(1.0, 0, 1), (3.0, 2, 3)])
        assert rearrange(f) == sf([0, 1, 2], [3, 1])

    def test_zero(self):
        z = sf([0, 1], [0.0])
        assert all(v == 0 for v in rearrange(z).values)

    def test_unsorted_breaks_rejected(self):
        with pytest.raises(RepresentationError):
            StepFunction([0, 2, 1], [1, 2])

    def test_infinite_last_piece_must_vanish(self):
        with pytest.raises(RepresentationError):
            StepFunction([0, 1, math.inf], [1, 2])

    def test_canonical_merge(self):
        f = sf([0, 1, 2, 3], [4, 4, 1])
        assert f.breaks == (0.0, 2.0, 3.0) and f.values == (4.0, 1.0)

    def test_finite_domain(self):
        d = IntervalDomain.finite(1.0)
        f = sf([0, 0.25, 0.5, 1.0], [1, -3, 2], d)
        assert rearrange(f) == sf([0, 0.25, 0.75, 1.0], [3, 2, 1], d)

    @given(step_functions())
    def test_equimeasurable(self, f):
        fs = rearrange(f)
        vals = np.abs(np.array(f.values))
        for lam in np.linspace(0, vals.max(), 64, endpoint=False):
            direct = float(np.sum(f.lengths[vals > lam]))
            assert fs.level_measure(lam) == pytest.approx(direct, rel=1e-12, abs=0)

    @given(step_functions())
    def test_idempotent_and_nonincreasing(self, f):
        fs = rearrange(f)
        assert rearrange(fs) == fs
        assert fs.is_nonincreasing() and fs.is_nonnegative()


class TestIntegrate:
    def test_inverse_sqrt(self):
        g = PowerPiecewise.monomial(1.0, -0.5)
        assert integrate(g, 0, 1) == pytest.approx(2.0, rel=1e-14)

    def test_indicator(self):
        assert integrate(indicator(1.0), 0, math.inf) == 1.0

    def test_log_tail_diverges(self):
        with pytest.raises(Divergence):
            integrate(PowerPiecewise.monomial(1.0, -1.0), 1, math.inf)

    def test_log_terms(self):
        # int_0^1 x^2 ln(x)^2 dx = 2/27
        g = PowerPiecewise([0, 1, math.inf], [[(1.0, 2.0, 2)], [(0.0, 0.0, 0)]])
        assert integrate(g, 0, 1) == pytest.approx(2 / 27, rel=1e-12)

    def test_quadrature_path(self):
        g = PowerOf(PowerPiecewise([0, 1, math.inf], [[(1.0, 0.0, 0)], [(1.0, -2.0, 0)]]), 1.5)
        assert integrate(g, 0, math.inf) == pytest.approx(1.5, rel=1e-12)

    @given(st.floats(-0.9, 3.0), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10))
    def test_additive(self, beta, a, b, c):
        g = PowerPiecewise([0, 1.3, math.inf], [[(2.0, beta, 0)], [(1.0, beta, 1), (0.5, -3.0, 0)]])
        x0, x1, x2 = sorted([a, a + b, a + b + c])
        whole = g.integrate(x0, x2)
        parts = g.integrate(x0, x1) + g.integrate(x1, x2)
        assert parts == pytest.approx(whole, rel=1e-12, abs=1e-300)


class TestTruncate:
    def test_simple(self):
        lo, hi = truncate(sf([0, 1], [3]), 2)
        assert lo == sf([0, 1], [2]) and hi == sf([0, 1], [1])

    def test_zero_level(self):
        f = sf([0, 1, 2], [3, 1])
        lo, hi = truncate(f, 0)
        assert all(v == 0 for v in lo.values) and hi == f

    def test_clip(self):
        lo, hi = truncate(sf([0, 1, 3], [5, 2]), 2)
        assert lo == sf([0, 3], [2]) and hi == sf([0, 1], [3])

    @given(step_functions(), st.floats(0, 60))
    def test_reconstruction(self, f, s):
        lo, hi = truncate(f, s)
        pts = np.array(f.breaks[:-1] + tuple(0.5 * (a + b) for a, b in zip(f.breaks, f.breaks[1:])
                                              if math.isfinite(b)))
        assert np.allclose(lo(pts) + hi(pts), f(pts), rtol=0, atol=1e-12)
        assert lo.sup_abs() <= s


class TestDilate:
    def test_indicator(self):
        assert dilate(indicator(1.0), 2.0) == indicator(2.0)

    def test_power(self):
        g = dilate(PowerPiecewise.monomial(1.0, -0.5), 4.0)
        x = np.array([0.1, 1.0, 7.0])
        assert np.allclose(g(x), 2.0 * x**-0.5, rtol=1e-14)

    def test_identity(self):
        f = sf([0, 1, 2], [3, 1])
        assert dilate(f, 1.0) is f

    def test_finite_domain_clips(self):
        d = IntervalDomain.finite(1.0)
        g = dilate(sf([0, 0.25, 0.75], [2, 1], d), 2.0)
        assert g == sf([0, 0.5, 1.0], [2, 1], d)


class TestJson:
    @given(step_functions())
    def test_step_roundtrip(self, f):
        assert function_from_json(json.loads(json.dumps(f.to_json()))) == f

    def test_power_roundtrip(self):
        g = PowerPiecewise([0, 1, math.inf], [[(1.0, 0.5, 0)], [(2.0, -1.0, 1), (1.0, 0.0, 0)]])
        assert function_from_json(json.loads(json.dumps(g.to_json()))) == g

    def test_documented_shape(self):
        obj = {"domain": {"finite": 1}, "pieces": [{"from": 0, "to": 1,
                                                    "terms": [{"c": 2, "alpha": 1, "logk": 0}]}]}
        g = function_from_json(obj)
        assert g.domain.end == 1.0 and g(np.array([0.5]))[0] == 1.0

    def test_pieces_must_chain(self):
        obj = {"pieces": [{"from": 0, "to": 1, "terms": []}, {"from": 2, "to": "inf", "terms": []}]}
        with pytest.raises(RepresentationError):
            function_from_json(obj)
