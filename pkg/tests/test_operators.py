import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as spi

from rikit.funcrep import IntervalDomain, PowerPiecewise, StepFunction, function_from_json, truncate
from rikit.harness import random_concave_phi
from rikit.operators import (HypothesisError, boyd_upper_index, couple_operator, hardy,
                             k_functional, q_lambda, q_lambda_conjugation, q_p_apply,
                             q_p_iterate, q_x, s_lorentz_form, s_operator, s_series,
                             test_membership)
from rikit.spaces import (CoupleDescriptor, FundamentalFunction, SpaceDescriptor as S,
                          fundamental_function, norm, random_nonincreasing)
from rikit.weights import Weight

from conftest import nonincreasing_steps

T = np.array([0.01, 0.3, 0.999, 1.0, 1.7, 40.0])


def chi(a, c=1.0, domain=None):
    return StepFunction([0.0, a], [c], domain) if domain else StepFunction([0.0, a], [c])


def iterate_oracle(f, p, n, t):
    """Direct quadrature of the kernel form of the n-fold iterate."""
    kern = lambda x: f(np.array([t * x]))[0] ** p * math.log(1 / x) ** (n - 1) / math.factorial(n - 1)
    pts = sorted({b / t for b in f.breaks if 0 < b / t < 1})
    return spi.quad(kern, 0, 1, points=pts or None, limit=200, epsabs=0, epsrel=1e-12)[0] ** (1 / p)


def s_oracle(f, p, eps, t):
    kern = lambda x: f(np.array([t * x]))[0] ** p * x ** (-eps)
    pts = sorted({b / t for b in f.breaks if 0 < b / t < 1})
    return spi.quad(kern, 0, 1, points=pts or None, limit=200, epsabs=0, epsrel=1e-12)[0] ** (1 / p)


class TestHardy:
    def test_indicator(self):
        assert np.allclose(hardy(chi(1.0))(T), np.minimum(1, 1 / T), rtol=1e-15)

    def test_two_steps(self):
        assert hardy(StepFunction([0, 1, 2], [2.0, 1.0]))(np.array([2.0]))[0] == pytest.approx(1.5)

    def test_constant(self):
        d = IntervalDomain.finite(1.0)
        assert np.allclose(hardy(chi(1.0, 3.0, d))(np.array([0.2, 0.9])), 3.0)

    @given(nonincreasing_steps())
    def test_dominates_and_decreases(self, f):
        x = np.geomspace(1e-3, 1e3, 200)
        h = np.asarray(hardy(f)(x))
        assert np.all(h >= np.asarray(f(x)) * (1 - 1e-12))
        assert np.all(np.diff(h) <= 1e-12 * h[:-1])


class TestQLambda:
    def test_identity_phi_is_hardy(self, rng):
        f = random_nonincreasing(rng)
        assert np.allclose(q_lambda(FundamentalFunction.power(1.0), f)(T), hardy(f)(T), rtol=1e-12)

    def test_sqrt(self):
        got = q_lambda(FundamentalFunction.power(0.5), chi(1.0))(T)
        assert np.allclose(got, np.where(T <= 1, 1.0, T**-0.5), rtol=1e-12)

    def test_zero(self):
        assert np.all(q_lambda(FundamentalFunction.power(0.5), chi(1.0, 0.0))(T) == 0)

    def test_flat_phi_skips_conjugation(self):
        flat = FundamentalFunction(PowerPiecewise([0, 1, 2, math.inf],
                                                  [[(1, 1, 0)], [(1, 0, 0)], [(0.5, 1, 0)]]))
        assert q_lambda_conjugation(flat, StepFunction([0, 1, 2, 3], [3.0, 2.0, 1.0])) is None

    @given(nonincreasing_steps(), st.integers(0, 10_000))
    def test_conjugation_identity(self, f, seed):
        phi = random_concave_phi(np.random.default_rng(seed))
        a = np.asarray(q_lambda(phi, f)(T))
        b = np.asarray(q_lambda_conjugation(phi, f)(T))
        assert np.allclose(a, b, rtol=1e-9, atol=0)


class TestQX:
    @pytest.mark.parametrize("sp", [S.Lp(3), S.LorentzPQ(2, 1), S.MOf(FundamentalFunction.power(0.4)),
                                    S.ClassicalLambda(Weight.power(-0.5), 2)], ids=lambda s: s.kind)
    def test_indicator_formula(self, sp):
        ph = fundamental_function(sp).phi
        s = 2.0
        want = np.where(T < s, 1.0, ph.value_at(s) / np.asarray(ph(T)))
        assert np.allclose(q_x(sp, chi(s))(T), want, rtol=1e-9)

    def test_lp_indicator(self):
        assert np.allclose(q_x(S.Lp(2), chi(1.0))(T), np.minimum(1, T**-0.5), rtol=1e-12)

    def test_zero(self):
        assert np.all(q_x(S.Lp(2), chi(1.0, 0.0))(T) == 0)

    def test_below_q_lambda(self, rng):
        for _ in range(100):
            phi = random_concave_phi(rng)
            f = random_nonincreasing(rng)
            sp = S.MOf(phi) if rng.random() < 0.5 else S.Lp(float(rng.uniform(1, 4)))
            ph = fundamental_function(sp)
            a = np.asarray(q_x(sp, f)(T))
            b = np.asarray(q_lambda(ph, f)(T))
            assert np.all(a <= b * (1 + 1e-9))

    @given(nonincreasing_steps(), nonincreasing_steps(), st.floats(0.01, 100))
    def test_quasilinear(self, f, g, lam):
        sp = S.LorentzPQ(3, 2)
        scaled = StepFunction(f.breaks, [lam * v for v in f.values])
        assert np.allclose(q_x(sp, scaled)(T), lam * np.asarray(q_x(sp, f)(T)), rtol=1e-12)
        br = sorted(set(f.breaks) | set(g.breaks))
        mid = np.array([0.5 * (a + b) for a, b in zip(br, br[1:])])
        s = StepFunction(br, list(f(mid) + g(mid)))
        lhs = np.asarray(q_x(sp, s)(T))
        rhs = np.asarray(q_x(sp, f)(T)) + np.asarray(q_x(sp, g)(T))
        assert np.all(lhs <= rhs * (1 + 1e-12))


class TestIterates:
    def test_n1_p1(self):
        assert np.allclose(q_p_iterate(1, 1, chi(1.0))(T), np.minimum(1, 1 / T), rtol=1e-12)

    def test_n0(self):
        f = chi(1.0)
        assert q_p_iterate(2, 0, f) is f

    def test_gamma_integral(self):
        assert q_p_iterate(1, 2, chi(1.0))(np.array([1.0]))[0] == pytest.approx(1.0, rel=1e-12)

    def test_n1_matches_qx(self, rng):
        f = random_nonincreasing(rng)
        assert np.allclose(q_p_iterate(2, 1, f)(T), q_x(S.Lp(2), f)(T), rtol=1e-9)

    @pytest.mark.parametrize("p,n", [(1, 1), (1, 3), (2, 2), (2.5, 4)])
    def test_against_quadrature(self, rng, p, n):
        f = random_nonincreasing(rng, max_pieces=6)
        got = np.asarray(q_p_iterate(p, n, f)(T))
        want = [iterate_oracle(f, p, n, t) for t in T]
        assert np.allclose(got, want, rtol=1e-8)

    def test_against_repeated(self, rng):
        f = random_nonincreasing(rng)
        for n in range(1, 5):
            assert np.allclose(q_p_iterate(2, n, f)(T), q_p_apply(2, n, f)(T), rtol=1e-6)


class TestSOperator:
    def test_indicator(self):
        eps = 0.3
        v = s_operator(2, eps, chi(1.0))(np.array([0.2, 1.0]))
        assert np.allclose(v, (1 / (1 - eps)) ** 0.5, rtol=1e-12)

    def test_small_eps_limit(self, rng):
        f = random_nonincreasing(rng)
        assert np.allclose(s_operator(2, 1e-10, f)(T), q_p_iterate(2, 1, f)(T), rtol=1e-8)

    def test_series_monotone_and_bounded(self, rng):
        f = random_nonincreasing(rng)
        t = np.geomspace(1e-2, 1e2, 10)
        closed = np.asarray(s_operator(1.5, 0.4, f)(t))
        prev = np.zeros_like(t)
        for N in (1, 2, 5, 10, 30):
            r = s_series(1.5, 0.4, f, N)
            cur = np.asarray(r(t))
            assert np.all(cur >= prev) and np.all(cur <= closed * (1 + 1e-12))
            assert np.all(closed**1.5 - cur**1.5 <= r.tail_bound * (1 + 1e-9) + 1e-12)
            prev = cur

    @pytest.mark.parametrize("p,eps", [(1, 0.2), (2, 0.5), (3, 0.05)])
    def test_forms_agree(self, rng, p, eps):
        f = random_nonincreasing(rng, max_pieces=6)
        closed = np.asarray(s_operator(p, eps, f)(T))
        assert np.allclose(closed, s_lorentz_form(p, eps, f)(T), rtol=1e-6)
        assert np.allclose(closed, [s_oracle(f, p, eps, t) for t in T], rtol=1e-8)

    def test_eps_range(self):
        with pytest.raises(ValueError):
            s_operator(2, 1.0, chi(1.0))


class TestKFunctional:
    def test_l1_classical(self, rng):
        for _ in range(10):
            f = random_nonincreasing(rng)
            t = float(np.exp(rng.uniform(-3, 3)))
            assert k_functional(S.Lp(1), t, f).value == pytest.approx(f.integrate(0, t), rel=1e-12)

    def test_two_value(self):
        f = chi(2.0, 3.0)
        r = k_functional(S.Lp(2), 0.5, f)
        assert r.value == pytest.approx(min(norm(S.Lp(2), f), 0.5 * 3.0), rel=1e-12)

    @given(nonincreasing_steps(max_pieces=8), st.floats(-3, 3))
    def test_brute_force_and_bounds(self, f, lt):
        t = math.exp(lt)
        sp = S.LorentzPQ(2, 1)
        r = k_functional(sp, t, f)
        grid = np.concatenate([np.linspace(0, max(f.values), 400), list(f.values)])
        brute = min(norm(sp, truncate(f, s)[1]) + t * s for s in grid)
        assert r.value <= brute * (1 + 1e-12)
        assert r.value <= norm(sp, f) * (1 + 1e-12) and r.value <= t * max(f.values) * (1 + 1e-12)

    @given(nonincreasing_steps(max_pieces=8), st.floats(-3, 3), st.sampled_from([1.0, 2.0, 3.5]))
    def test_sandwich(self, f, lt, p):
        t = math.exp(lt)
        sp = S.Lp(p)
        ph = t ** (1 / p)
        r = k_functional(sp, ph, f).value / (ph * q_x(sp, f)(np.array([t]))[0])
        assert 1 - 1e-9 <= r <= 2 + 1e-9


class TestBoyd:
    @pytest.mark.parametrize("sp,expect", [(S.Lp(2), 0.5), (S.Lp(4), 0.25), (S.LorentzPQ(1.5, 3), 2 / 3)])
    def test_index(self, sp, expect):
        b = boyd_upper_index(sp, samples=12, seed=1)
        assert abs(b - expect) <= 0.05 and b.heuristic

    def test_phi_one_rejected(self):
        with pytest.raises(ValueError):
            FundamentalFunction(PowerPiecewise.constant(1.0))


class TestMembership:
    def test_lambda_couple(self):
        ph = FundamentalFunction.power(0.5)
        c = CoupleDescriptor(S.LambdaOf(ph), S.MStarOf(ph))
        cand = S.ClassicalLambda(Weight.power(0.0), 4)
        r = test_membership(c, (cand, cand), 60, seed=2)
        assert r.bounded and r.sup_ratio <= r.certified_constant * (1 + 1e-9)

    def test_counterexample_replays(self):
        c = CoupleDescriptor(S.LorentzPQ(2, 1), S.LorentzPQ(2, math.inf))
        cand = S.ClassicalLambda(Weight.power(0.75), math.inf)
        r = test_membership(c, (cand, cand), 20, seed=2)
        assert r.verdict == "counterexample"
        f = function_from_json(r.witness)
        f.monotone = "nonincreasing"
        replay = norm(cand, couple_operator(c, f), True) / norm(cand, f, True)
        assert replay == pytest.approx(r.sup_ratio, rel=1e-9) and replay > r.threshold

    def test_couple_itself(self):
        c = CoupleDescriptor(S.Lp(2), S.LorentzPQ(2, math.inf))
        r = test_membership(c, (c.A0, c.A1), 40, seed=5)
        assert r.bounded and r.sup_ratio == pytest.approx(1.0, rel=1e-9)

    def test_refuses(self):
        c = CoupleDescriptor(S.Lp(1), S.Lp(math.inf))
        with pytest.raises(HypothesisError):
            test_membership(c, (c.A0, c.A1), 5)

    def test_deterministic(self):
        c = CoupleDescriptor(S.Lp(2), S.LorentzPQ(2, math.inf))
        cand = S.ClassicalLambda(Weight.power(-0.5), 2)
        a = test_membership(c, (cand, cand), 20, seed=9).to_json()
        b = test_membership(c, (cand, cand), 20, seed=9).to_json()
        assert a == b
