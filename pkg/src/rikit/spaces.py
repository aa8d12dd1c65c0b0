"""Space descriptors, fundamental functions and the r.i. norm engine."""
from __future__ import annotations

import json
import math

import numpy as np

from .asymptotics import INF, ZERO, Divergence, Indeterminate, Lead
from .funcrep import (HALF_LINE, Evaluable, IntervalDomain, Pointwise,
                      PowerPiecewise, RepresentationError, StepFunction, as_exact,
                      cumulative, divide, function_from_json, function_to_json,
                      multiply, power, rearrange, supremum)
from .weights import ConditionReport, Grid, Weight, check_a1, check_am_q, decide_ratio


class CapabilityError(TypeError):
    """The requested norm cannot be evaluated on this carrier."""


class FundamentalFunction:
    """``phi_X(t) = ||chi_[0,t]||_X``.

    Validation enforces ``phi(0+) = 0``, positivity, monotonicity and
    quasi-concavity (``phi(t)/t`` nonincreasing).
    """

    def __init__(self, phi, validate: bool = True):
        if isinstance(phi, StepFunction):
            phi = phi.to_power_piecewise()
        self.phi = phi
        self.domain = phi.domain
        if validate:
            self._validate()

    def _validate(self):
        ph = self.phi
        ld = ph.lead(ZERO)
        if ld is not None and ld.behaviour() != "zero":
            raise ValueError("fundamental function must vanish at 0")
        if not ph.is_nondecreasing():
            raise ValueError("fundamental function must be nondecreasing")
        if not ph.is_nonnegative():
            raise ValueError("fundamental function must be positive")
        over_t = divide(ph, PowerPiecewise.monomial(1.0, 1.0, ph.domain))
        if not over_t.is_nonincreasing():
            raise ValueError("fundamental function must be quasi-concave (phi(t)/t nonincreasing)")

    @property
    def exact(self) -> bool:
        return isinstance(self.phi, PowerPiecewise)

    @classmethod
    def power(cls, a: float, c: float = 1.0, domain: IntervalDomain = HALF_LINE):
        return cls(PowerPiecewise.monomial(c, a, domain))

    def __call__(self, t):
        return self.phi(t)

    def derivative(self) -> PowerPiecewise:
        if not self.exact:
            raise CapabilityError("derivative needs a PowerPiecewise fundamental function")
        return self.phi.derivative()

    def inverse(self, y):
        """``phi^{-1}(y)`` by monotone root finding on each piece."""
        from scipy.optimize import brentq
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        for i, v in enumerate(y):
            if v <= 0:
                out[i] = 0.0
                continue
            hi = 1.0
            while self.phi.value_at(hi) < v:
                hi *= 2.0
                if hi > 1e300:
                    raise ValueError("phi is bounded below the requested level")
            lo = hi / 2.0
            while lo > 1e-300 and self.phi.value_at(lo) >= v:
                lo /= 2.0
            out[i] = brentq(lambda t: self.phi.value_at(t) - v, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        return out

    def to_json(self):
        return function_to_json(self.phi)

    def __repr__(self):
        return f"FundamentalFunction({self.phi!r})"


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

KINDS = ("lp", "lorentz_pq", "classical_lambda", "lambda_of", "m_of", "mstar_of",
         "lorentz_orlicz")


class SpaceDescriptor:
    """Symbolic description of an r.i. (quasi-)normed space."""

    def __init__(self, kind: str, domain: IntervalDomain = HALF_LINE, *, p=None, q=None,
                 weight: Weight | None = None, phi: FundamentalFunction | None = None,
                 orlicz=None):
        if kind not in KINDS:
            raise ValueError(f"unknown space type {kind!r}")
        self.kind = kind
        self.domain = domain
        self.p = None if p is None else float(p)
        self.q = None if q is None else float(q)
        self.weight = weight
        self.phi = phi
        self.orlicz = orlicz
        self._banach = None
        self._check()

    def _check(self):
        k = self.kind
        if k in ("lp", "lorentz_pq") and not (self.p is not None and self.p > 0):
            raise ValueError("p must be positive")
        if k == "lorentz_pq" and not (self.q is not None and self.q > 0):
            raise ValueError("q must be positive")
        if k == "classical_lambda":
            if self.weight is None or self.q is None or not self.q > 0:
                raise ValueError("classical_lambda needs a weight and q > 0")
            if math.isinf(self.q) and not self.weight.is_nondecreasing():
                raise ValueError("q = inf only accepts nondecreasing weights")
        if k in ("lambda_of", "m_of", "mstar_of") and self.phi is None:
            raise ValueError(f"{k} needs a fundamental function")
        if k == "lorentz_orlicz" and (self.weight is None or self.orlicz is None):
            raise ValueError("lorentz_orlicz needs a weight and an Orlicz function")

    # factories ------------------------------------------------------------
    @classmethod
    def Lp(cls, p, domain=HALF_LINE):
        return cls("lp", domain, p=p)

    @classmethod
    def LorentzPQ(cls, p, q, domain=HALF_LINE):
        return cls("lorentz_pq", domain, p=p, q=q)

    @classmethod
    def ClassicalLambda(cls, w, q):
        w = w if isinstance(w, Weight) else Weight(w)
        return cls("classical_lambda", w.domain, q=q, weight=w)

    @classmethod
    def LambdaOf(cls, phi):
        phi = _ff(phi)
        return cls("lambda_of", phi.domain, phi=phi)

    @classmethod
    def MOf(cls, phi):
        phi = _ff(phi)
        return cls("m_of", phi.domain, phi=phi)

    @classmethod
    def MStarOf(cls, phi):
        phi = _ff(phi)
        return cls("mstar_of", phi.domain, phi=phi)

    @classmethod
    def LorentzOrlicz(cls, w, orlicz):
        w = w if isinstance(w, Weight) else Weight(w)
        return cls("lorentz_orlicz", w.domain, weight=w, orlicz=orlicz)

    @property
    def banach(self) -> bool | None:
        """For classical Lambda(w, q): the (AM_q) / (A_1) verdict."""
        if self.kind != "classical_lambda":
            return None
        if self._banach is None:
            rep = check_a1(self.weight) if math.isinf(self.q) else check_am_q(self.weight, self.q)
            self._banach = rep.holds
        return self._banach

    def __repr__(self):
        bits = [f"{k}={v:g}" for k, v in (("p", self.p), ("q", self.q)) if v is not None]
        return f"SpaceDescriptor({self.kind}{', ' if bits else ''}{', '.join(bits)})"

    def to_json(self) -> dict:
        d: dict = {"type": self.kind}
        if not self.domain.is_half_line:
            d["domain"] = self.domain.to_json()
        for key in ("p", "q"):
            v = getattr(self, key)
            if v is not None:
                d[key] = "inf" if math.isinf(v) else v
        if self.weight is not None:
            d["weight"] = self.weight.to_json()
        if self.phi is not None:
            d["phi"] = self.phi.to_json()
        if self.orlicz is not None:
            d["orlicz"] = self.orlicz.to_json()
        return d

    @classmethod
    def from_json(cls, obj) -> "SpaceDescriptor":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            kind = obj["type"]
        except (KeyError, TypeError):
            raise RepresentationError("space JSON needs a 'type'") from None
        dom = IntervalDomain.from_json(obj.get("domain"))
        num = lambda v: math.inf if v in ("inf", None) else float(v)
        if kind == "lp":
            return cls.Lp(num(obj["p"]), dom)
        if kind == "lorentz_pq":
            return cls.LorentzPQ(num(obj["p"]), num(obj["q"]), dom)
        if kind == "classical_lambda":
            return cls.ClassicalLambda(Weight(function_from_json(obj["weight"])), num(obj["q"]))
        if kind in ("lambda_of", "m_of", "mstar_of"):
            phi = FundamentalFunction(function_from_json(obj["phi"]))
            return {"lambda_of": cls.LambdaOf, "m_of": cls.MOf, "mstar_of": cls.MStarOf}[kind](phi)
        if kind == "lorentz_orlicz":
            from .orlicz import OrliczFunction
            return cls.LorentzOrlicz(Weight(function_from_json(obj["weight"])),
                                     OrliczFunction.from_json(obj["orlicz"]))
        raise RepresentationError(f"unknown space type {kind!r}")


def _ff(phi) -> FundamentalFunction:
    return phi if isinstance(phi, FundamentalFunction) else FundamentalFunction(phi)


# ---------------------------------------------------------------------------
# fundamental functions
# ---------------------------------------------------------------------------

def fundamental_function(space: SpaceDescriptor) -> FundamentalFunction:
    k, dom = space.kind, space.domain
    if k == "lp":
        if math.isinf(space.p):
            return FundamentalFunction(PowerPiecewise.constant(1.0, dom), validate=False)
        return FundamentalFunction.power(1.0 / space.p, 1.0, dom)
    if k == "lorentz_pq":
        c = 1.0 if math.isinf(space.q) else (space.p / space.q) ** (1.0 / space.q)
        return FundamentalFunction.power(1.0 / space.p, c, dom)
    if k == "classical_lambda":
        if math.isinf(space.q):
            return FundamentalFunction(space.weight.w, validate=False)
        return FundamentalFunction(power(space.weight.W, 1.0 / space.q), validate=False)
    if k in ("lambda_of", "m_of", "mstar_of"):
        return space.phi
    if k == "lorentz_orlicz":
        phi_o, W = space.orlicz, space.weight.W

        def f(t):
            Wt = np.asarray(W(t), dtype=float)
            return np.array([0.0 if v <= 0 else 1.0 / phi_o.inverse(1.0 / v) for v in Wt])
        return FundamentalFunction(Pointwise(f, W.breaks, dom, monotone="nondecreasing"),
                                   validate=False)
    raise ValueError(k)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _x(a, dom):
    return PowerPiecewise.monomial(1.0, a, dom)


def _integral(g: Evaluable) -> float:
    try:
        return g.integrate(0.0, g.domain.end)
    except Divergence:
        return math.inf


def _prepare(f, assume_nonincreasing: bool) -> Evaluable:
    if isinstance(f, StepFunction):
        if assume_nonincreasing and f.is_nonincreasing() and f.is_nonnegative():
            return f
        return rearrange(f)
    if not (assume_nonincreasing or f.monotone == "nonincreasing"):
        raise CapabilityError("non-step functions are accepted only when asserted nonincreasing")
    return f


def _step_norm(space: SpaceDescriptor, f: StepFunction) -> float | None:
    """Closed forms for a nonincreasing nonnegative step function."""
    v = np.array(f.values)
    br = np.array(f.breaks)
    a, b = br[:-1], br[1:]
    nz = v > 0
    if not nz.any():
        return 0.0
    v, a, b = v[nz], a[nz], b[nz]
    k = space.kind
    if k == "lp":
        if math.isinf(space.p):
            return float(v.max())
        return float(np.sum(v**space.p * (b - a)) ** (1.0 / space.p))
    if k == "lorentz_pq":
        p, q = space.p, space.q
        if math.isinf(q):
            return float(np.max(v * b ** (1.0 / p)))
        return float((np.sum(v**q * (p / q) * (b ** (q / p) - a ** (q / p)))) ** (1.0 / q))
    if k == "classical_lambda":
        w = space.weight
        if math.isinf(space.q):
            return float(max(vi * w.w.left_limit(bi) for vi, bi in zip(v, b)))
        W = w.W
        return float(np.sum(v**space.q * (W(b) - W(a))) ** (1.0 / space.q))
    if k == "lambda_of":
        ph = space.phi.phi
        return float(np.sum(v * (ph(b) - ph(a))))
    if k == "mstar_of":
        ph = space.phi.phi
        return float(max(vi * ph.left_limit(bi) for vi, bi in zip(v, b)))
    if k == "m_of":
        return _m_of_step(space.phi.phi, np.array(f.values), np.array(f.breaks))
    return None


def _m_of_step(ph: PowerPiecewise, v, br) -> float | None:
    """``sup phi f**`` for a step ``f``.

    On a piece where ``phi = c t^alpha`` with ``0 <= alpha <= 1`` the product is
    ``c((F_a - v a) t^(alpha-1) + v t^alpha)``, which falls then rises, so the
    supremum sits at a breakpoint; beyond the support ``phi(t)/t`` decreases.
    """
    if not all(len(tm) == 1 and tm[0][2] == 0 and 0.0 <= tm[0][1] <= 1.0 for tm in ph.pieces):
        return None
    if math.isinf(br[-1]):
        v, br = v[:-1], br[:-1]
    F = np.concatenate([[0.0], np.cumsum(v * np.diff(br))])
    cuts = np.unique(np.concatenate([br, [b for b in ph.breaks if br[0] < b < br[-1]]]))
    cuts = cuts[cuts > 0]
    idx = np.clip(np.searchsorted(br, cuts, side="right") - 1, 0, len(v) - 1)
    Fc = F[idx] + v[idx] * (cuts - br[idx])
    vals_r = np.asarray(ph(cuts)) * Fc / cuts
    vals_l = np.array([ph.left_limit(float(c)) for c in cuts]) * Fc / cuts
    return float(max(vals_r.max(), vals_l.max()))


def hardy_transform(f: Evaluable) -> Evaluable:
    """``t -> (1/t) int_0^t f``."""
    F = cumulative(f)
    out = divide(F, _x(1.0, f.domain))
    out.monotone = "nonincreasing" if f.monotone == "nonincreasing" or (
        isinstance(f, StepFunction) and f.is_nonincreasing()) else None
    return out


def norm(space: SpaceDescriptor, f: Evaluable, assume_nonincreasing: bool = False) -> float:
    """The (quasi-)norm of ``f`` in ``space``; ``inf`` when it diverges."""
    g = _prepare(f, assume_nonincreasing)
    if isinstance(g, StepFunction):
        val = _step_norm(space, g)
        if val is not None:
            return val
    k, dom = space.kind, space.domain
    try:
        if k == "lp":
            if math.isinf(space.p):
                return supremum(as_exact(g))[0]
            return _integral(power(g, space.p)) ** (1.0 / space.p)
        if k == "lorentz_pq":
            p, q = space.p, space.q
            if math.isinf(q):
                return supremum(multiply(g, _x(1.0 / p, dom)))[0]
            return _integral(multiply(power(g, q), _x(q / p - 1.0, dom))) ** (1.0 / q)
        if k == "classical_lambda":
            if math.isinf(space.q):
                return supremum(multiply(g, space.weight.w))[0]
            return _integral(multiply(power(g, space.q), space.weight.w)) ** (1.0 / space.q)
        if k == "lambda_of":
            return _integral(multiply(g, space.phi.derivative()))
        if k == "m_of":
            return supremum(multiply(space.phi.phi, hardy_transform(g)))[0]
        if k == "mstar_of":
            return supremum(multiply(space.phi.phi, g))[0]
        if k == "lorentz_orlicz":
            from .orlicz import luxemburg_norm
            return luxemburg_norm(space.weight, space.orlicz, g, assume_nonincreasing=True)
    except Divergence:
        return math.inf
    raise CapabilityError(f"no norm for {k}")


def partial_norm(space: SpaceDescriptor, f: Evaluable) -> Evaluable:
    """``t -> ||f chi_[0,t]||_X`` for nonincreasing nonnegative ``f``.

    Integral-type norms give ``(int_0^t k)^(1/r)`` (exact when ``k`` is);
    sup-type norms give a running supremum.  Analytic leads are attached.
    Raises :class:`Divergence` when the value is infinite for every ``t``.
    """
    if isinstance(f, StepFunction):
        f = _prepare(f, True)
    k, dom = space.kind, space.domain
    g = as_exact(f)
    integrand = None
    if k == "lp" and not math.isinf(space.p):
        integrand, r = power(g, space.p), space.p
    elif k == "lorentz_pq" and not math.isinf(space.q):
        integrand, r = multiply(power(g, space.q), _x(space.q / space.p - 1.0, dom)), space.q
    elif k == "classical_lambda" and not math.isinf(space.q):
        integrand, r = multiply(power(g, space.q), space.weight.w), space.q
    elif k == "lambda_of":
        integrand, r = multiply(g, space.phi.derivative()), 1.0
    if integrand is not None:
        out = power(cumulative(integrand), 1.0 / r)
        out.monotone = "nondecreasing"
        return out
    if k == "lp":
        h = g
    elif k == "lorentz_pq":
        h = multiply(g, _x(1.0 / space.p, dom))
    elif k == "classical_lambda":
        h = multiply(g, space.weight.w)
    elif k == "mstar_of":
        h = multiply(space.phi.phi, g)
    elif k == "m_of":
        h = multiply(space.phi.phi, hardy_transform(g))
    else:
        def lux(t, _f=f):
            from .funcrep import restrict
            return np.array([norm(space, restrict(_f, float(s)), assume_nonincreasing=True)
                             for s in np.atleast_1d(t)])
        return Pointwise(lux, f.breaks, dom, monotone="nondecreasing")
    return running_sup(h)


def running_sup(h: Evaluable) -> Evaluable:
    """``t -> sup_{0 < x < t} h(x)`` with leads."""
    leads = {}
    try:
        l0 = h.lead(ZERO)
    except Indeterminate:
        l0 = None
    if l0 is not None:
        if l0.behaviour() == "inf":
            raise Divergence("running supremum is infinite near 0")
        leads[ZERO] = l0
    try:
        li = h.lead(INF)
    except Indeterminate:
        li = None
    if li is not None and h.domain.is_half_line:
        leads[INF] = li if li.behaviour() == "inf" else Lead.const(supremum(h)[0], INF)

    def f(t, _h=h):
        return np.array([supremum(_h, 0.0, float(s))[0] if s > 0 else 0.0
                         for s in np.atleast_1d(t)])
    return Pointwise(f, h.breaks, h.domain, leads, monotone="nondecreasing")


# ---------------------------------------------------------------------------
# fundamental-function conditions and phi pairs
# ---------------------------------------------------------------------------

def _staircase(phi: FundamentalFunction, n: int, ratio: float = 2.0) -> StepFunction:
    """Step approximation of ``1/phi`` on a dyadic range of ``n`` steps."""
    lo = ratio ** (-n // 2)
    br = [0.0] + [lo * ratio**i for i in range(1, n + 1)]
    vals = [1.0 / float(phi.phi.value_at(b)) for b in br[1:]]
    return StepFunction(br, vals, phi.domain)


def random_nonincreasing(rng: np.random.Generator, domain: IntervalDomain = HALF_LINE,
                         max_pieces: int = 20, span=(1e-4, 1e4),
                         value_span=(1e-3, 1e3)) -> StepFunction:
    """Random nonincreasing step function, log-uniform breaks and values."""
    n = int(rng.integers(1, max_pieces + 1))
    hi = min(span[1], domain.end)
    lb = rng.uniform(math.log(span[0]), math.log(hi), size=n)
    br = np.unique(np.exp(lb))
    if not domain.is_half_line:
        br = np.minimum(br, domain.end)
        br = np.unique(br)
    vals = np.sort(np.exp(rng.uniform(math.log(value_span[0]), math.log(value_span[1]),
                                      size=len(br))))[::-1]
    return StepFunction([0.0] + list(br), list(vals), domain, monotone="nonincreasing")


def lemma2_check(phi, which: str, samples: int = 200, seed: int = 0,
                 grid: Grid | None = None, threshold: float = 50.0) -> ConditionReport:
    """Conditions (b)-(e) on a fundamental function.

    (c) and (d) are decided analytically; (b) and (e) are sampled two-sided
    comparisons of the M and M* norms and are labelled as such.
    """
    phi = _ff(phi)
    grid = grid or Grid.default()
    dom = phi.domain
    if which == "d":
        try:
            N = cumulative(power(phi.phi, -1.0))
        except Divergence as e:
            return ConditionReport("lemma2_d", False, math.inf, None, "closed_form_tail",
                                   grid.to_json(), divergence=f"int_0^t ds/phi diverges ({e.where})")
        R = multiply(divide(phi.phi, _x(1.0, dom)), N)
        rep = decide_ratio("lemma2_d", R, grid, extra=phi.phi.breaks)
        return rep
    if which == "c":
        inv = power(phi.phi, -1.0)
        inv.monotone = "nonincreasing"
        val = norm(SpaceDescriptor.MOf(phi), inv, assume_nonincreasing=True)
        div = None if math.isfinite(val) else "||1/phi||_M(phi) is infinite"
        return ConditionReport("lemma2_c", math.isfinite(val), val, None, "closed_form_tail",
                               grid.to_json(), divergence=div, lower_bound=False)
    if which in ("b", "e"):
        rng = np.random.default_rng(seed)
        M, Ms = SpaceDescriptor.MOf(phi), SpaceDescriptor.MStarOf(phi)
        fam = [random_nonincreasing(rng, dom) for _ in range(samples)]
        fam += [_staircase(phi, n) for n in (8, 32, 200)]
        worst, arg = 0.0, None
        for f in fam:
            a, b = norm(M, f, True), norm(Ms, f, True)
            r = a / b
            if r > worst:
                worst, arg = r, f
        holds = worst <= threshold
        return ConditionReport(f"lemma2_{which}", holds, worst, None, "sampled", grid.to_json(),
                               divergence=None if holds else "sampled M/M* ratio exceeds threshold",
                               details={"samples": len(fam), "threshold": threshold,
                                        "empirical": True,
                                        "worst_function": arg.to_json() if arg else None})
    raise ValueError("which must be one of b, c, d, e")


def validate_phi_pair(phiX, phiXp, grid: Grid | None = None, tol: float = 1e-12) -> ConditionReport:
    """Check ``phi_X(t) phi_X'(t) = t`` on the probe set."""
    phiX, phiXp = _ff(phiX), _ff(phiXp)
    grid = grid or Grid.default()
    t = grid.probes(phiX.domain, list(phiX.phi.breaks) + list(phiXp.phi.breaks))
    dev = np.abs(np.asarray(phiX(t)) * np.asarray(phiXp(t)) / t - 1.0)
    j = int(np.argmax(dev))
    holds = bool(dev[j] <= tol)
    return ConditionReport("phi_pair", holds, float(dev[j]), float(t[j]), "grid", grid.to_json(),
                           divergence=None if holds else f"phi_X phi_X' != t at t = {t[j]:g}",
                           lower_bound=False)


# ---------------------------------------------------------------------------
# couples
# ---------------------------------------------------------------------------

class CoupleDescriptor:
    """A couple ``(A0, A1)`` with the hypothesis flags for the Q-operator theory."""

    def __init__(self, A0: SpaceDescriptor, A1: SpaceDescriptor, grid: Grid | None = None):
        self.A0, self.A1 = A0, A1
        grid = grid or Grid(points=128)
        p0 = fundamental_function(A0).phi
        p1 = fundamental_function(A1).phi
        self.phi_a1_le_c_phi_a0 = decide_ratio("phi_A1/phi_A0", divide(p1, p0), grid)
        self.phi_a0_le_c_phi_a1 = decide_ratio("phi_A0/phi_A1", divide(p0, p1), grid)
        inv = power(p1, -1.0)
        inv.monotone = "nonincreasing"
        try:
            val = norm(A1, inv, assume_nonincreasing=True)
        except CapabilityError:
            val = math.inf
        self.inv_phi_a1_norm = val

    @property
    def inv_phi_a1_in_a1(self) -> bool:
        return math.isfinite(self.inv_phi_a1_norm)

    @property
    def flags(self) -> dict:
        return {"phi_A1_le_C_phi_A0": self.phi_a1_le_c_phi_a0.holds,
                "phi_A0_le_C_phi_A1": self.phi_a0_le_c_phi_a1.holds,
                "inv_phi_A1_in_A1": self.inv_phi_a1_in_a1}

    @property
    def theorem1_hypotheses(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> dict:
        return {"A0": self.A0.to_json(), "A1": self.A1.to_json()}

    @classmethod
    def from_json(cls, obj) -> "CoupleDescriptor":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(SpaceDescriptor.from_json(obj["A0"]), SpaceDescriptor.from_json(obj["A1"]))


__all__ = ["FundamentalFunction", "SpaceDescriptor", "CoupleDescriptor", "CapabilityError",
           "fundamental_function", "norm", "partial_norm", "hardy_transform", "running_sup",
           "lemma2_check", "validate_phi_pair", "random_nonincreasing"]
