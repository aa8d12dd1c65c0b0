"""Hardy transform, the Q operators, iterates, the S operator and K-functionals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo
from scipy import special as _sps

from .asymptotics import Divergence
from .funcrep import (Evaluable, IntervalDomain, Pointwise, PowerPiecewise, StepFunction, as_exact,
                      cumulative, dilate, divide, function_to_json, multiply, power,
                      rearrange, truncate)
from .spaces import (CoupleDescriptor, SpaceDescriptor, _ff, fundamental_function, hardy_transform, norm,
                     partial_norm, random_nonincreasing)
from .weights import Grid, check_cond22


class HypothesisError(ValueError):
    """The hypotheses of the characterisation are not met."""


def _zero(f: Evaluable) -> PowerPiecewise:
    return PowerPiecewise.constant(0.0, f.domain)


def _is_zero(f: Evaluable) -> bool:
    return isinstance(f, StepFunction) and all(v == 0 for v in f.values)


def _nonincreasing(f: Evaluable) -> Evaluable:
    if isinstance(f, StepFunction):
        if not f.is_nonincreasing():
            raise ValueError("expected a nonincreasing function; rearrange it first")
        return f
    return f


# ---------------------------------------------------------------------------
# Hardy and the Q family
# ---------------------------------------------------------------------------

def hardy(f: Evaluable) -> Evaluable:
    """``H f(t) = (1/t) int_0^t f``; pieces ``A + B/t`` for step input."""
    f = _nonincreasing(f)
    out = hardy_transform(as_exact(f))
    out.monotone = "nonincreasing"
    return out


def q_lambda(phi, f: Evaluable) -> Evaluable:
    """``(1/phi(t)) int_0^t f dphi``."""
    phi = _ff(phi)
    f = _nonincreasing(f)
    if _is_zero(f):
        return _zero(f)
    num = cumulative(multiply(as_exact(f), phi.derivative()))
    out = divide(num, phi.phi)
    out.monotone = "nonincreasing"
    return out


def q_lambda_conjugation(phi, f: StepFunction) -> Evaluable | None:
    """``H(f o phi^-1) o phi`` for step ``f``; ``None`` when ``phi`` has a flat piece."""
    phi = _ff(phi)
    f = _nonincreasing(f)
    if not isinstance(f, StepFunction):
        return None
    br = [float(phi.phi.value_at(b)) if b > 0 else 0.0 for b in f.breaks]
    if math.isinf(f.breaks[-1]):
        br[-1] = math.inf
    if any(b1 <= b0 for b0, b1 in zip(br[:-1], br[1:])):
        return None
    dom = f.domain if f.domain.is_half_line else IntervalDomain.finite(br[-1])
    moved = StepFunction(br, f.values, dom)
    Hm = hardy_transform(moved.to_power_piecewise())

    def g(t, _H=Hm, _phi=phi.phi):
        return _H(np.asarray(_phi(t), dtype=float))
    return Pointwise(g, f.breaks, f.domain, monotone="nonincreasing")


def q_x(space: SpaceDescriptor, f: Evaluable) -> Evaluable:
    """``(1/phi_X(t)) ||f chi_[0,t]||_X``."""
    f = _nonincreasing(f)
    if _is_zero(f):
        return _zero(f)
    if space.kind == "lambda_of":
        return q_lambda(space.phi, f)
    if space.kind == "lp" and not math.isinf(space.p):
        # (H f^p)^(1/p) keeps the exact family closed under iteration
        p = space.p
        out = power(hardy_transform(as_exact(power(f, p))), 1.0 / p)
        out.monotone = "nonincreasing"
        return out
    phi = fundamental_function(space).phi
    return divide(partial_norm(space, f), phi)


def couple_operator(couple: CoupleDescriptor, f: Evaluable) -> Evaluable:
    """``Q f(t) = ||f chi_[0,t]||_A0 / phi_A1(t)``."""
    kappa = _phi_ratio_constant(couple)
    if kappa is not None:
        base = q_x(couple.A0, f)
        if kappa == 1.0:
            return base
        out = multiply(base, PowerPiecewise.constant(kappa, f.domain))
        out.monotone = base.monotone
        return out
    return divide(partial_norm(couple.A0, f), fundamental_function(couple.A1).phi)


def _phi_ratio_constant(couple: CoupleDescriptor) -> float | None:
    p0 = fundamental_function(couple.A0).phi
    p1 = fundamental_function(couple.A1).phi
    r = divide(p0, p1)
    if isinstance(r, PowerPiecewise) and r.n == 1 and r.is_single_term:
        (c, a, k), = r.pieces[0]
        if abs(a) < 1e-14 and k == 0:
            return float(c)
    return None


# ---------------------------------------------------------------------------
# iterates and the S operator
# ---------------------------------------------------------------------------

def _step_closed_form(f: StepFunction, p: float, t: np.ndarray, kernel) -> np.ndarray:
    """``int_0^1 f(tx)^p k(x) dx`` for step ``f`` from a kernel antiderivative.

    ``kernel(x)`` returns ``int_0^x k`` on ``[0, 1]``.
    """
    br = np.asarray(f.breaks, dtype=float)
    vp = np.abs(np.asarray(f.values, dtype=float)) ** p
    out = np.zeros_like(t)
    for i, ti in enumerate(t):
        xs = np.minimum(br / ti, 1.0)
        out[i] = float(np.sum(vp * (kernel(xs[1:]) - kernel(xs[:-1]))))
    return out


def _quad_closed_form(f: Evaluable, p: float, t: np.ndarray, weight) -> np.ndarray:
    out = np.zeros_like(t)
    for i, ti in enumerate(t):
        cuts = sorted({0.0, 1.0} | {b / ti for b in f.breaks if 0 < b / ti < 1})
        tot = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = _spi.quad(lambda x: abs(f.value_at(ti * x)) ** p * weight(x), a, b,
                               limit=200, epsabs=0.0, epsrel=1e-12)
            tot += val
        out[i] = tot
    return out


def q_p_iterate(p: float, n: int, f: Evaluable) -> Evaluable:
    """``n``-fold ``Q_p`` from the closed form.

    For ``n >= 1``: ``(int_0^1 f(tx)^p log(1/x)^(n-1)/(n-1)! dx)^(1/p)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    f = _nonincreasing(f)
    if n == 0:
        return f
    m = int(n) - 1

    if isinstance(f, StepFunction):
        # int_0^x log(1/u)^m/m! du = Gamma_upper(m+1, log(1/x)) / m!
        def kern(x):
            with np.errstate(divide="ignore"):
                y = -np.log(x)
            return np.where(x <= 0, 0.0, _sps.gammaincc(m + 1, y))

        def ev(t, _f=f):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return _step_closed_form(_f, p, t, kern) ** (1.0 / p)
    else:
        fact = math.factorial(m)

        def ev(t, _f=f):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            w = (lambda x: math.log(1.0 / x) ** m / fact if x > 0 else 0.0)
            return _quad_closed_form(_f, p, t, w) ** (1.0 / p)
    return Pointwise(ev, f.breaks, f.domain, monotone="nonincreasing")


def q_p_apply(p: float, n: int, f: Evaluable) -> Evaluable:
    """``Q_p`` applied ``n`` times through :func:`q_x`."""
    g = f
    Lp = SpaceDescriptor.Lp(p, f.domain)
    for _ in range(n):
        g = q_x(Lp, g)
    return g


def s_operator(p: float, epsilon: float, f: Evaluable) -> Evaluable:
    """``(int_0^1 f(tx)^p x^-eps dx)^(1/p)``."""
    _check_eps(epsilon)
    f = _nonincreasing(f)
    e = float(epsilon)
    if isinstance(f, StepFunction):
        def kern(x):
            return x ** (1.0 - e) / (1.0 - e)

        def ev(t, _f=f):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return _step_closed_form(_f, p, t, kern) ** (1.0 / p)
    else:
        def ev(t, _f=f):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return _quad_closed_form(_f, p, t, lambda x: x ** (-e)) ** (1.0 / p)
    return Pointwise(ev, f.breaks, f.domain, monotone="nonincreasing")


@dataclass
class SeriesResult:
    value: Evaluable
    terms: int
    tail_bound: float

    def __call__(self, t):
        return self.value(t)


def s_series(p: float, epsilon: float, f: Evaluable, N: int = 30) -> SeriesResult:
    """Partial sum ``(sum_{n<N} eps^n (Q_p^(n+1) f)^p)^(1/p)`` and its tail bound.

    Each iterate is bounded by ``f(0+)``, so the neglected part of ``S^p`` is at
    most ``f(0+)^p eps^N / (1 - eps)``.
    """
    _check_eps(epsilon)
    f = _nonincreasing(f)
    g = as_exact(power(f, p))
    total = None
    for n in range(N):
        g = hardy_transform(g)
        term = g.scale(epsilon**n) if isinstance(g, PowerPiecewise) else \
            multiply(g, PowerPiecewise.constant(epsilon**n, f.domain))
        total = term if total is None else total + term
    top = float(f.values[0]) if isinstance(f, StepFunction) else float(f.left_limit(1e-300))
    out = power(total, 1.0 / p)
    out.monotone = "nonincreasing"
    return SeriesResult(out, N, abs(top) ** p * epsilon**N / (1.0 - epsilon))


def s_lorentz_form(p: float, epsilon: float, f: Evaluable) -> Evaluable:
    """``t^(-(1-eps)/p) ||f chi_[0,t]||_{L^(p/(1-eps), p)}``."""
    _check_eps(epsilon)
    f = _nonincreasing(f)
    sp = SpaceDescriptor.LorentzPQ(p / (1.0 - epsilon), p, f.domain)
    N = partial_norm(sp, f)
    return multiply(N, PowerPiecewise.monomial(1.0, -(1.0 - epsilon) / p, f.domain))


def _check_eps(epsilon: float):
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")


def estimate_qp_bound(p: float, space: SpaceDescriptor, samples: int = 64,
                      seed: int = 0) -> float:
    """Sampled ``sup ||Q_p f||_Y / ||f||_Y`` over random nonincreasing steps."""
    rng = np.random.default_rng(seed)
    best = 1.0
    Lp = SpaceDescriptor.Lp(p, space.domain)
    for _ in range(samples):
        f = random_nonincreasing(rng, space.domain)
        a = norm(space, q_x(Lp, f), assume_nonincreasing=True)
        b = norm(space, f, assume_nonincreasing=True)
        if b > 0:
            best = max(best, a / b)
    return best


def default_epsilon(p: float, space: SpaceDescriptor, samples: int = 64, seed: int = 0) -> float:
    return 1.0 / (2.0 * estimate_qp_bound(p, space, samples, seed))


# ---------------------------------------------------------------------------
# K-functional
# ---------------------------------------------------------------------------

@dataclass
class KFunctionalResult:
    value: float
    optimal_s: float
    t: float
    kind: str = "truncation"

    def to_json(self) -> dict:
        return {"value": self.value, "optimal_s": self.optimal_s, "t": self.t, "kind": self.kind}


def k_functional(space: SpaceDescriptor, t: float, f: StepFunction) -> KFunctionalResult:
    """``inf_s ||(f* - s)_+||_X + t s`` over truncation levels ``s``.

    The objective is convex between consecutive values of ``f*``; every value
    (and 0) is tried and each gap is searched with a bounded scalar minimiser.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    fs = f if (f.is_nonincreasing() and f.is_nonnegative()) else rearrange(f)

    def J(s):
        high = truncate(fs, s)[1]
        return norm(space, high, assume_nonincreasing=True) + t * s

    vals = sorted({0.0} | {float(v) for v in fs.values})
    best_s, best = 0.0, J(0.0)
    for s in vals[1:]:
        v = J(s)
        if v < best:
            best, best_s = v, s
    for lo, hi in zip(vals[:-1], vals[1:]):
        res = _spo.minimize_scalar(J, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12 * max(1.0, hi)})
        if res.fun < best:
            best, best_s = float(res.fun), float(res.x)
    return KFunctionalResult(float(best), float(best_s), float(t))


# ---------------------------------------------------------------------------
# Boyd index
# ---------------------------------------------------------------------------

class BoydIndex(float):
    """Fitted slope of ``log h(s)`` against ``log s``; a sampled heuristic."""

    heuristic = True

    def __new__(cls, value, h):
        obj = super().__new__(cls, value)
        obj.h = h
        return obj


def boyd_upper_index(space: SpaceDescriptor, samples: int = 48, seed: int = 0,
                     kmax: int = 10) -> BoydIndex:
    rng = np.random.default_rng(seed)
    fam = [random_nonincreasing(rng, space.domain) for _ in range(samples)]
    base = [norm(space, f, assume_nonincreasing=True) for f in fam]
    ss = [2.0**k for k in range(1, kmax + 1)]
    h = []
    for s in ss:
        h.append(max(norm(space, dilate(f, s), assume_nonincreasing=True) / b
                     for f, b in zip(fam, base) if b > 0))
    x, y = np.log(ss), np.log(h)
    slope = float(np.polyfit(x, y, 1)[0])
    return BoydIndex(slope, dict(zip(ss, h)))


# ---------------------------------------------------------------------------
# membership testing
# ---------------------------------------------------------------------------

@dataclass
class BoundednessReport:
    operator: str
    source: SpaceDescriptor
    target: SpaceDescriptor
    sup_ratio: float
    samples: int
    verdict: str
    witness: dict | None = None
    certified_constant: float | None = None
    threshold: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded_on_sample"

    def to_json(self) -> dict:
        inf = lambda v: "inf" if isinstance(v, float) and math.isinf(v) else v
        return {"operator": self.operator, "source": self.source.to_json(),
                "target": self.target.to_json(), "sup_ratio": inf(self.sup_ratio),
                "samples": self.samples, "verdict": self.verdict, "witness": self.witness,
                "certified_constant": inf(self.certified_constant),
                "threshold": inf(self.threshold), "details": self.details}


def _single_power(phi) -> tuple[float, float] | None:
    pp = getattr(phi, "phi", phi)
    if isinstance(pp, PowerPiecewise) and pp.n == 1 and pp.is_single_term:
        (c, a, k), = pp.pieces[0]
        if k == 0:
            return float(c), float(a)
    return None


def certified_constant(couple: CoupleDescriptor, X0: SpaceDescriptor,
                       X1: SpaceDescriptor) -> float | None:
    """A proven bound for ``||Q f||_X1 / ||f||_X0`` where one is available.

    Uses ``Q <= kappa Q_Lambda`` (Lambda(X) embeds in X with constant 1) and the
    sharp power-weight Hardy constants after the change of variables
    ``y = phi(t)``.
    """
    kappa = _phi_ratio_constant(couple)
    if kappa is None:
        return None
    weak = couple.A1.kind == "mstar_of" or (couple.A1.kind == "lorentz_pq"
                                            and math.isinf(couple.A1.q))
    if X0 is couple.A0 and X1 is couple.A1 and weak:
        return kappa
    if not (X0 is X1 or X0.to_json() == X1.to_json()) or X1.kind != "classical_lambda":
        return None
    ph = _single_power(fundamental_function(couple.A0))
    wp = _single_power(X1.weight.w)
    if ph is None or wp is None or not X1.domain.is_half_line:
        return None
    a, beta = ph[1], wp[1]
    if math.isinf(X1.q):
        return kappa * a / (a - beta) if beta < a else None
    q = X1.q
    B = check_cond22(X1.weight, q, fundamental_function(couple.A0), Grid(points=64))
    if not B.holds:
        return None
    return kappa * q / (q - (beta + 1.0) / a)


def _structured_family(couple, X0, X1):
    dom = X0.domain
    fam = []
    for s in np.geomspace(1e-4, 1e4, 9):
        s = float(min(s, dom.end))
        fam.append(StepFunction([0.0, s], [1.0], dom, monotone="nonincreasing"))
    if X0.kind == "classical_lambda" and math.isinf(X0.q):
        inv = power(X0.weight.w, -1.0)
        for t in np.geomspace(1e-3, 1e3, 7):
            if t < dom.end:
                g = as_exact(inv).restrict(float(t)) if isinstance(as_exact(inv), PowerPiecewise) \
                    else None
                if g is not None:
                    g.monotone = "nonincreasing"
                    fam.append(g)
    return fam


def test_membership(couple: CoupleDescriptor, candidate, family_size: int = 200,
                    seed: int = 0, threshold: float | None = None,
                    enforce_hypotheses: bool = True) -> BoundednessReport:
    """Sample ``||Q f||_X1 / ||f||_X0`` over nonincreasing step functions."""
    X0, X1 = candidate
    if enforce_hypotheses and not couple.theorem1_hypotheses:
        bad = [k for k, v in couple.flags.items() if not v]
        raise HypothesisError("couple fails the hypotheses: " + ", ".join(bad))
    cert = certified_constant(couple, X0, X1)
    thr = threshold if threshold is not None else (10.0 * cert if cert else 1e3)
    rng = np.random.default_rng(seed)
    fam = _structured_family(couple, X0, X1)
    fam += [random_nonincreasing(rng, X0.domain) for _ in range(family_size)]
    worst, arg = 0.0, None
    mono_ok = True
    for f in fam:
        den = norm(X0, f, assume_nonincreasing=True)
        if not den > 0 or math.isinf(den):
            continue
        try:
            Qf = couple_operator(couple, f)
            if Qf.monotone is None:
                mono_ok &= Qf.is_nonincreasing()
            num = norm(X1, Qf, assume_nonincreasing=True)
        except Divergence:
            num = math.inf
        r = num / den
        if r > worst:
            worst, arg = r, f
    verdict = "counterexample" if worst > thr else "bounded_on_sample"
    wit = None
    if verdict == "counterexample" and arg is not None:
        try:
            wit = function_to_json(arg)
        except Exception:
            wit = {"repr": repr(arg)}
    return BoundednessReport("Q", X0, X1, float(worst), len(fam), verdict, wit, cert, thr,
                             details={"Qf_nonincreasing_on_samples": bool(mono_ok),
                                      "seed": seed})


test_membership.__test__ = False

__all__ = ["hardy", "q_lambda", "q_lambda_conjugation", "q_x", "couple_operator",
           "q_p_iterate", "q_p_apply", "s_operator", "s_series", "s_lorentz_form",
           "estimate_qp_bound", "default_epsilon", "k_functional", "KFunctionalResult",
           "boyd_upper_index", "BoydIndex", "test_membership", "BoundednessReport",
           "certified_constant", "HypothesisError"]
