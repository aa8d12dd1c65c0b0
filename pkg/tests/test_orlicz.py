import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as spi, optimize as spo

from rikit.funcrep import IntervalDomain, PowerPiecewise, StepFunction
from rikit.harness import random_convex_orlicz
from rikit.orlicz import (OrliczFunction, check_a_phi, check_prop11_iii, decide_prop9,
                          decide_prop10, hardy_luxemburg, hardy_modular, lemma3_improve,
                          lemma3_interval, luxemburg_norm, modular, modular_hardy_check,
                          phi_bar, simonenko)
from rikit.spaces import FundamentalFunction, SpaceDescriptor as S, norm, random_nonincreasing
from rikit.weights import Grid, Weight, check_am_q, check_cond22

from conftest import nonincreasing_steps, step_functions

SPLICE = OrliczFunction.spliced([(2.0,), (1.0, 3.0)])
FAST = Grid(points=64)


def chi(a, c=1.0):
    return StepFunction([0.0, a], [c])


def hardy_pointwise(f, x):
    return f.integrate(0, x) / x


def quad_hardy_modular(w, phi, f, scale=1.0):
    """Quadrature in ``u = ln x`` of int phi(Hf/scale) w, split where Hf/scale meets a break of phi."""
    g = lambda u: (phi.phi.value_at(hardy_pointwise(f, math.exp(u)) / scale)
                   * w.w.value_at(math.exp(u)) * math.exp(u))
    pts = {b for b in f.breaks if 0 < b < math.inf} | {b for b in w.w.breaks if 0 < b < math.inf}
    for tau in (b for b in phi.phi.breaks if 0 < b < math.inf):
        h = lambda u: hardy_pointwise(f, math.exp(u)) / scale - tau
        us = np.linspace(-40, 40, 801)
        hs = [h(u) for u in us]
        pts |= {math.exp(spo.brentq(h, a, b, xtol=1e-15)) for a, b, ha, hb in
                zip(us, us[1:], hs, hs[1:]) if ha * hb < 0}
    us = [-300.0] + sorted(math.log(x) for x in pts) + [300.0]
    return sum(spi.quad(g, a, b, limit=400, epsabs=0, epsrel=1e-13)[0] for a, b in zip(us, us[1:]))


def ratio_fd(phi, t, h=1e-6):
    d = (phi.phi.value_at(t * (1 + h)) - phi.phi.value_at(t * (1 - h))) / (2 * h * t)
    return t * d / phi.phi.value_at(t)


class TestOrliczFunction:
    def test_power(self):
        assert OrliczFunction.power(2.0)(np.array([3.0]))[0] == 9.0

    def test_splice_continuous(self):
        assert SPLICE.phi.value_at(2.0) == pytest.approx(8.0)

    @pytest.mark.parametrize("pp", [PowerPiecewise.monomial(1.0, 0.5),
                                    PowerPiecewise.constant(1.0),
                                    PowerPiecewise([0, 1, math.inf], [[(1, 2, 0)], [(1, 1, 0)]])],
                             ids=["concave", "nonvanishing", "convexity_breaks"])
    def test_rejects(self, pp):
        with pytest.raises(ValueError):
            OrliczFunction(pp)

    def test_inverse(self):
        assert SPLICE.inverse(8.0) == pytest.approx(2.0, rel=1e-14)

    def test_json_roundtrip(self):
        d = json.loads(json.dumps(SPLICE.to_json()))
        assert d["convex"] is True
        back = OrliczFunction.from_json(d)
        assert back.phi == SPLICE.phi and back.convex

    def test_json_non_convex_flag(self):
        psi = OrliczFunction(SPLICE.phi.compose_monomial(1.0, 0.6), validate=False)
        back = OrliczFunction.from_json(json.dumps(psi.to_json()))
        assert back.convex is None


class TestSimonenko:
    @pytest.mark.parametrize("p", [1.0, 1.5, 4.0])
    def test_power(self, p):
        ix = simonenko(OrliczFunction.power(p), 3.0)
        assert {ix.p_T, ix.q_T, ix.p_0, ix.q_0, ix.p_liminf, ix.q_limsup} == {p}

    def test_splice(self):
        ix = simonenko(SPLICE, 0.5)
        assert (ix.p_0, ix.q_0, ix.p_T, ix.q_T, ix.p_liminf) == (2.0, 3.0, 2.0, 3.0, 3.0)

    def test_T_beyond_breaks(self):
        ix = simonenko(SPLICE, 5.0)
        assert ix.p_T == ix.q_T == 3.0

    def test_positive_T(self):
        with pytest.raises(ValueError):
            simonenko(SPLICE, 0.0)

    @given(st.integers(0, 10_000), st.floats(-3, 3))
    def test_sandwich_and_fd_oracle(self, seed, lt):
        phi = random_convex_orlicz(np.random.default_rng(seed))
        T = math.exp(lt)
        ix = simonenko(phi, T)
        e = 1e-9
        assert 1 - e <= ix.p_0 <= ix.p_T + e and ix.p_T <= ix.q_T + e and ix.q_T <= ix.q_0 + e
        xs = [x for x in T * np.geomspace(1, 1e4, 60) if all(abs(x / b - 1) > 1e-4 for b in phi.phi.breaks[1:-1])]
        r = [ratio_fd(phi, x) for x in xs]
        assert min(r) >= ix.p_T - 1e-6 and max(r) <= ix.q_T + 1e-6


class TestPhiBar:
    def test_below_T(self):
        pb = phi_bar(SPLICE, 2.0)
        assert pb.phi.value_at(1.0) == pytest.approx(8.0 * 0.5**3)
        assert pb.phi.value_at(5.0) == pytest.approx(SPLICE.phi.value_at(5.0))

    @given(st.integers(0, 10_000), st.floats(-2, 2))
    def test_indices_and_agreement(self, seed, lt):
        phi = random_convex_orlicz(np.random.default_rng(seed))
        T = math.exp(lt)
        pb = phi_bar(phi, T)
        ix, ib = simonenko(phi, T), simonenko(pb)
        assert ib.p_0 == pytest.approx(ix.p_T, rel=1e-9)
        assert ib.q_0 == pytest.approx(ix.q_T, rel=1e-9)
        for x in (T, 2 * T, 50 * T):
            assert pb.phi.value_at(x) == pytest.approx(phi.phi.value_at(x), rel=1e-12)


class TestAPhi:
    def test_power_is_amq(self, rng):
        for _ in range(50):
            beta = float(rng.uniform(-0.9, 3.0))
            q = float(rng.uniform(1.0, 4.0))
            w = Weight.power(beta, float(np.exp(rng.uniform(-2, 2))))
            a = check_a_phi(w, OrliczFunction.power(q), FAST)
            b = check_am_q(w, q, FAST)
            assert a.holds == b.holds
            if a.holds:
                assert a.constant == pytest.approx(b.constant, rel=1e-12)

    def test_unit_weight_square(self):
        r = check_a_phi(Weight.power(0.0), OrliczFunction.power(2.0))
        assert r.holds and r.constant == pytest.approx(1.0)

    def test_linear_weight_fails(self):
        assert not check_a_phi(Weight.power(1.0), OrliczFunction.power(1.0)).holds

    def test_splice_routes(self):
        ok = check_a_phi(Weight.power(0.5), SPLICE, FAST)
        assert ok.holds and ok.details["route"] == "sufficient AM_p0"
        assert ok.constant <= ok.details["upper_bound"] * (1 + 1e-9)
        bad = check_a_phi(Weight.power(2.5), SPLICE, FAST)
        assert not bad.holds and bad.details["route"] == "necessary"

    def test_splice_ratio_by_quadrature(self):
        w = Weight.power(0.5)
        r = check_a_phi(w, SPLICE, FAST)
        t, a = r.witness_t, r.details["witness_a"]
        num = spi.quad(lambda x: SPLICE.phi.value_at(a * t / x) * x**0.5, t, math.inf,
                       points=None, limit=400, epsrel=1e-12)[0]
        direct = num / (SPLICE.phi.value_at(a) * w.W.value_at(t))
        assert r.constant >= direct * (1 - 1e-8)


class TestExponentImprovement:
    def test_interval_and_alpha(self):
        lo, hi = lemma3_interval(0.5, 1.0)
        assert lo == pytest.approx(math.log2(4 / 3)) and hi == 1.0
        r = lemma3_improve(Weight.power(0.0), OrliczFunction.power(1.0), 0.5)
        assert r.alpha == pytest.approx(0.5 * (1 + math.log2(4 / 3)), abs=1e-12)

    def test_narrow_interval(self):
        with pytest.raises(ValueError):
            lemma3_improve(Weight.power(0.0), OrliczFunction.power(2.0), 1e9)

    def test_power_passes(self):
        w, phi = Weight.power(-0.5), OrliczFunction.power(2.0)
        B = check_am_q(w, 2.0).constant
        r = lemma3_improve(w, phi, B, FAST)
        assert r.passes and r.interval[0] < r.alpha < 1
        # psi = t^(2 alpha): a pure power again, so (A_psi) is AM_{2 alpha}
        ref = check_am_q(w, 2 * r.alpha, FAST)
        assert r.report.constant == pytest.approx(ref.constant, rel=1e-9)


class TestModular:
    def test_unit_weight_indicator(self):
        w, phi, f = Weight.power(0.0), OrliczFunction.power(2.0), chi(1.0)
        assert hardy_modular(w, phi, f) / modular(w, phi, f) == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("beta", [-0.5, 0.0, 0.7])
    def test_hardy_modular_by_quadrature(self, rng, beta):
        w = Weight.power(beta)
        for _ in range(3):
            f = random_nonincreasing(rng, max_pieces=5)
            got = hardy_modular(w, SPLICE, f, 1.3)
            assert got == pytest.approx(quad_hardy_modular(w, SPLICE, f, 1.3), rel=1e-8)

    @given(step_functions(max_pieces=8))
    def test_modular_is_rearrangement_invariant(self, f):
        w = Weight.power(0.0)
        direct = sum(SPLICE.phi.value_at(abs(v)) * L for v, L in zip(f.values, f.lengths))
        assert modular(w, SPLICE, f) == pytest.approx(direct, rel=1e-12)

    def test_check_bounded(self):
        r = modular_hardy_check(Weight.power(-0.5), OrliczFunction.power(2.0), 100, seed=4)
        assert r.bounded and r.sup_ratio <= r.certified_constant * (1 + 1e-9)

    def test_check_counterexample(self):
        r = modular_hardy_check(Weight.power(1.0), OrliczFunction.power(1.0), 50, seed=4)
        assert r.verdict == "counterexample" and r.witness is not None


class TestLuxemburg:
    @given(nonincreasing_steps(), st.sampled_from([1.0, 2.0, 3.5]))
    def test_power_is_lq(self, f, q):
        got = luxemburg_norm(Weight.power(0.0), OrliczFunction.power(q), f, True)
        assert got == pytest.approx(norm(S.Lp(q), f), rel=1e-10)

    def test_zero(self):
        assert luxemburg_norm(Weight.power(0.0), SPLICE, chi(1.0, 0.0)) == 0.0

    @given(nonincreasing_steps(), st.floats(0.01, 100))
    def test_homogeneous(self, f, lam):
        w = Weight.power(0.5)
        scaled = StepFunction(f.breaks, [lam * v for v in f.values])
        assert luxemburg_norm(w, SPLICE, scaled) == pytest.approx(lam * luxemburg_norm(w, SPLICE, f),
                                                                  rel=1e-9)

    @given(nonincreasing_steps(), st.floats(0.0, 1.0))
    def test_monotone(self, f, lam):
        g = StepFunction(f.breaks, [lam * v for v in f.values])
        w = Weight.power(-0.3)
        assert luxemburg_norm(w, SPLICE, g) <= luxemburg_norm(w, SPLICE, f) * (1 + 1e-12)

    def test_splice_by_root_finding(self, rng):
        w = Weight.power(0.0)
        f = random_nonincreasing(rng, max_pieces=5)
        m = lambda r: sum(SPLICE.phi.value_at(v / r) * L for v, L in zip(f.values, f.lengths))
        ref = spo.brentq(lambda r: m(r) - 1, 1e-6, 1e6, xtol=1e-15, rtol=1e-14)
        assert luxemburg_norm(w, SPLICE, f) == pytest.approx(ref, rel=1e-11)

    def test_hardy_luxemburg_power(self):
        # ||H chi||_2 on the unit weight: int_0^1 1 + int_1^inf x^-2 = 2
        v = hardy_luxemburg(Weight.power(0.0), OrliczFunction.power(2.0),
                            StepFunction([0.0, 1.0], [1.0], monotone="nonincreasing"))
        assert v == pytest.approx(math.sqrt(2.0), rel=1e-11)


class TestImplications:
    def test_prop9_holds(self):
        r = decide_prop9(Weight.power(0.5), OrliczFunction.power(2.0), 10, seed=1)
        assert r.consistent and r.predicted_bounded and r.sampled["verdict"] == "bounded_on_sample"

    def test_prop9_fails(self):
        r = decide_prop9(Weight.power(1.5), OrliczFunction.power(2.0), 10, seed=1)
        assert r.consistent and r.predicted_bounded is False
        assert r.sampled["verdict"] == "counterexample"

    def test_prop10_sharper(self):
        dom = IntervalDomain.finite(1.0)
        phi = OrliczFunction(PowerPiecewise([0, 1, math.inf],
                                            [[(1, 1, 0)], [(0.5, 2, 0), (0.5, 1, 0)]]))
        r = decide_prop10(Weight.power(0.5, domain=dom), phi, samples=10, seed=1)
        assert r.consistent and r.predicted_bounded and not r.indices["AM_p0"]

    def test_prop10_needs_finite(self):
        with pytest.raises(ValueError):
            decide_prop10(Weight.power(0.5), SPLICE)

    def test_prop10_restricts_weight(self):
        r = decide_prop10(Weight.power(0.0), OrliczFunction.power(2.0), l=2.0, samples=5)
        assert r.predicted_bounded

    @pytest.mark.parametrize("beta,a", [(-0.5, 0.5), (0.0, 0.25), (0.5, 1.0)])
    def test_prop11_power_is_22(self, beta, a):
        w, ph = Weight.power(beta), FundamentalFunction.power(a)
        r = check_prop11_iii(w, OrliczFunction.power(2.0), ph)
        c = check_cond22(w, 2.0, ph, Grid(points=128))
        assert r.holds == c.holds == (beta + 1 < 2 * a)

    def test_prop11_direct_ratio(self):
        # w = x^-1/2, phi = t^2, phi_X = t^1/2: the tail is 2 t^1/2 = W(t)
        r = check_prop11_iii(Weight.power(-0.5), OrliczFunction.power(2.0),
                             FundamentalFunction.power(0.5))
        assert r.holds and r.constant == pytest.approx(1.0, rel=1e-9)

    def test_prop11_only_unit_interval_matters(self):
        w, ph = Weight.power(-0.5), FundamentalFunction.power(0.5)
        r = check_prop11_iii(w, SPLICE, ph)
        ref = check_prop11_iii(w, OrliczFunction.power(2.0), ph)
        assert r.holds and r.constant == pytest.approx(ref.constant, rel=1e-9)
