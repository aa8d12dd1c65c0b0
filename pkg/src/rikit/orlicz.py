"""Orlicz functions, Simonenko indices, condition (A_phi) and Lorentz-Orlicz modulars."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _spo

from .asymptotics import INF, ZERO, Divergence
from .funcrep import (_GL48, _GL96, Evaluable, IntervalDomain, PowerPiecewise, StepFunction,
                      _gl_log, divide, function_from_json, multiply, rearrange, supremum)
from .weights import ConditionReport, Grid, Weight, check_am_q, check_cond22

A_GRID = np.geomspace(1e-4, 1e4, 33)


class OrliczFunction:
    """Convex nondecreasing ``phi`` with ``phi(0) = 0``, ``phi(inf) = inf`` and Delta_2.

    ``validate=False`` admits non-convex substitutes such as ``phi(t**alpha)``;
    the modular checks only use the local exponent ``t phi'(t) / phi(t)``.
    """

    def __init__(self, phi, validate: bool = True):
        if isinstance(phi, StepFunction):
            raise TypeError("Orlicz functions are continuous PowerPiecewise functions")
        if not isinstance(phi, PowerPiecewise):
            raise TypeError("Orlicz functions are PowerPiecewise functions")
        if not phi.domain.is_half_line:
            raise ValueError("Orlicz functions live on [0, inf)")
        self.phi = phi
        self.phi_prime = phi.derivative()
        self.convex = None
        if validate:
            self._validate()
        self._ratio = divide(multiply(PowerPiecewise.monomial(1.0, 1.0), self.phi_prime), phi)
        self.delta2_q = self._sup_ratio(0.0)
        if validate and not math.isfinite(self.delta2_q):
            raise ValueError("Delta_2 fails: t phi'/phi is unbounded")

    def _validate(self):
        ph = self.phi
        if ph.lead(ZERO).behaviour() != "zero":
            raise ValueError("Orlicz function must vanish at 0")
        if ph.lead(INF).behaviour() != "inf":
            raise ValueError("Orlicz function must tend to infinity")
        for b in ph.breaks[1:-1]:
            l, r = ph.left_limit(b), ph.value_at(b)
            if abs(l - r) > 1e-10 * max(1.0, abs(r)):
                raise ValueError(f"Orlicz function jumps at {b:g}")
        if not ph.is_nonnegative() or not ph.is_nondecreasing():
            raise ValueError("Orlicz function must be nonnegative and nondecreasing")
        if not self.phi_prime.is_nondecreasing():
            raise ValueError("Orlicz function must be convex (right derivative nondecreasing)")
        self.convex = True

    # ------------------------------------------------------------------
    @classmethod
    def power(cls, p: float, c: float = 1.0) -> "OrliczFunction":
        return cls(PowerPiecewise.monomial(c, p))

    @classmethod
    def spliced(cls, pieces) -> "OrliczFunction":
        """Continuous splice of powers: ``pieces = [(p0,), (b1, p1), (b2, p2), ...]``.

        On ``[b_i, b_{i+1})`` the function is ``phi(b_i) (t/b_i)**p_i``.
        """
        breaks = [0.0]
        terms = [[(1.0, float(pieces[0][0]), 0)]]
        val = 1.0
        prev_p = float(pieces[0][0])
        for b, p in pieces[1:]:
            b = float(b)
            val = val * (b / breaks[-1]) ** prev_p if breaks[-1] > 0 else b**prev_p
            breaks.append(b)
            terms.append([(val * b ** (-float(p)), float(p), 0)])
            prev_p = float(p)
        breaks.append(math.inf)
        return cls(PowerPiecewise(breaks, terms))

    def __call__(self, t):
        return self.phi(t)

    @property
    def is_pure_power(self) -> bool:
        p = self.phi
        return p.n == 1 and p.is_single_term and p.pieces[0][0][2] == 0

    def exponent_ratio(self) -> Evaluable:
        """``t -> t phi'(t) / phi(t)``."""
        return self._ratio

    def _sup_ratio(self, lo: float, hi: float | None = None) -> float:
        return supremum(self._ratio, lo, hi)[0]

    def _inf_ratio(self, lo: float, hi: float | None = None) -> float:
        neg = multiply(self._ratio, PowerPiecewise.constant(-1.0))
        return -supremum(neg, lo, hi)[0]

    def inverse(self, y: float) -> float:
        if y <= 0:
            return 0.0
        hi = 1.0
        while self.phi.value_at(hi) < y:
            hi *= 2.0
        lo = hi / 2.0
        while lo > 1e-300 and self.phi.value_at(lo) >= y:
            lo /= 2.0
        return _spo.brentq(lambda t: self.phi.value_at(t) - y, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)

    def to_json(self) -> dict:
        d = self.phi.to_json()
        d["convex"] = bool(self.convex)
        return d

    @classmethod
    def from_json(cls, obj) -> "OrliczFunction":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(function_from_json(obj), validate=bool(obj.get("convex", True)))

    def __repr__(self):
        return f"OrliczFunction({self.phi!r})"


def _orlicz(phi) -> OrliczFunction:
    return phi if isinstance(phi, OrliczFunction) else OrliczFunction(phi)


# ---------------------------------------------------------------------------
# Simonenko indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimonenkoIndices:
    T: float
    p_T: float
    q_T: float
    p_0: float
    q_0: float
    p_liminf: float
    q_limsup: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def simonenko(phi, T: float = 1.0) -> SimonenkoIndices:
    """Infimum and supremum of ``t phi'(t) / phi(t)`` over ``[T, inf)`` and ``(0, inf)``."""
    if not T > 0:
        raise ValueError("T must be positive")
    phi = _orlicz(phi)
    pT, qT = phi._inf_ratio(T), phi._sup_ratio(T)
    p0, q0 = phi._inf_ratio(0.0), phi.delta2_q
    # the outermost piece fixes the limit of the ratio at infinity
    lim = phi.phi.lead(INF).power
    return SimonenkoIndices(float(T), pT, qT, p0, q0, float(lim), float(lim))


def phi_bar(phi, T: float) -> OrliczFunction:
    """``phi`` on ``[T, inf)`` and ``phi(T) (t/T)**p_T`` below ``T``."""
    phi = _orlicz(phi)
    pT = simonenko(phi, T).p_T
    if pT < 1:
        raise ValueError("p_T < 1 contradicts convexity")
    ph = phi.phi
    vT = ph.value_at(T)
    breaks = [0.0, float(T)]
    terms = [[(vT * T ** (-pT), pT, 0)]]
    for lo, hi, p in zip(ph.breaks[:-1], ph.breaks[1:], ph.pieces):
        if hi <= T:
            continue
        breaks.append(hi)
        terms.append(list(p))
    return OrliczFunction(PowerPiecewise(breaks, terms), validate=phi.convex is not None)


# ---------------------------------------------------------------------------
# condition (A_phi)
# ---------------------------------------------------------------------------

def _tail_modular(phi_pp: PowerPiecewise, w: PowerPiecewise, K: float, e: float,
                  t: float) -> float:
    """``int_t^end phi(K x**e) w(x) dx`` in closed form."""
    g = phi_pp.compose_monomial(K, e, w.domain) * w
    return g.integrate(t, w.domain.end)


def _a_phi_ratio(w: Weight, phi: OrliczFunction, t: float, a: float) -> float:
    try:
        num = _tail_modular(phi.phi, w.w, a * t, -1.0, t)
    except Divergence:
        return math.inf
    return num / (phi.phi.value_at(a) * w.W.value_at(t))


def check_a_phi(w, phi, grid: Grid | None = None, a_grid=A_GRID) -> ConditionReport:
    """``int_t^inf phi(a t/x) w(x) dx <= B phi(a) int_0^t w`` for all ``t, a``.

    Pure powers reduce to (AM_q).  Otherwise (AM_{p_0}) is sufficient, while
    (AM) at the exponents of ``phi`` at 0 and infinity and (AM_{q_0}) are
    necessary; only when none of these decides does the grid verdict stand.
    """
    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    grid = grid or Grid(points=96)
    if phi.is_pure_power:
        q = phi.phi.pieces[0][0][1]
        rep = check_am_q(w, q, grid)
        rep.condition = "A_phi"
        rep.details = dict(rep.details, route="pure power reduces to AM_q")
        return rep
    idx = simonenko(phi)
    e0 = phi.phi.lead(ZERO).power
    einf = phi.phi.lead(INF).power
    suff = check_am_q(w, idx.p_0, grid)
    nec = {f"AM_{e:g}": check_am_q(w, e, grid) for e in (e0, einf, idx.q_0)}
    failing = [k for k, r in nec.items() if not r.holds]
    details = {"p_0": idx.p_0, "q_0": idx.q_0, "end_exponents": [e0, einf],
               "sufficient": {suff.condition: suff.holds},
               "necessary": {k: r.holds for k, r in nec.items()}}
    if failing:
        r = nec[failing[0]]
        return ConditionReport("A_phi", False, math.inf, r.witness_t, "closed_form_tail",
                               grid.to_json(), divergence=f"necessary {failing[0]} fails: "
                               f"{r.divergence}", details=dict(details, route="necessary"))
    ts = grid.probes(w.domain, w.w.breaks)
    best, arg = 0.0, (None, None)
    for a in a_grid:
        for t in ts:
            v = _a_phi_ratio(w, phi, float(t), float(a))
            if v > best:
                best, arg = v, (float(t), float(a))
    ends = [r.constant for k, r in nec.items() if k != f"AM_{idx.q_0:g}"]
    const = max([best] + ends)
    if suff.holds:
        upper = suff.constant
        return ConditionReport("A_phi", True, const, arg[0], "closed_form_tail", grid.to_json(),
                               details=dict(details, route="sufficient AM_p0", witness_a=arg[1],
                                            upper_bound=upper))
    holds = math.isfinite(best) and best < 1e6
    return ConditionReport("A_phi", holds, const if holds else math.inf, arg[0], "grid",
                           grid.to_json(), divergence=None if holds else "grid ratio unbounded",
                           details=dict(details, route="grid", witness_a=arg[1]))


def a_phi_upper_bound(w, phi) -> float | None:
    """Certified ``B`` for (A_phi): the (AM_{p_0}) constant, or ``None``."""
    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    q = phi.phi.pieces[0][0][1] if phi.is_pure_power else simonenko(phi).p_0
    rep = check_am_q(w, q)
    return rep.constant if rep.holds else None


# ---------------------------------------------------------------------------
# exponent improvement psi(t) = phi(t**alpha)
# ---------------------------------------------------------------------------

@dataclass
class Lemma3Result:
    alpha: float
    D_estimate: float
    interval: tuple
    psi: OrliczFunction
    report: ConditionReport
    psi_convex: bool

    @property
    def passes(self) -> bool:
        return self.report.holds


def lemma3_interval(B: float, q: float) -> tuple[float, float]:
    S = (2.0 * B + 1.0) / (2.0 * B + 2.0)
    return 1.0 + math.log2(S) / q, 1.0


def lemma3_improve(w, phi, B: float, grid: Grid | None = None) -> Lemma3Result:
    """Pick ``alpha`` in the admissible interval and re-check ``psi(t) = phi(t**alpha)``."""
    phi = _orlicz(phi)
    if not B > 0:
        raise ValueError("B must be positive")
    lo, hi = lemma3_interval(B, phi.delta2_q)
    if hi - lo < 1e-6:
        raise ValueError("admissible alpha interval is narrower than 1e-6")
    alpha = 0.5 * (lo + hi)
    psi_pp = phi.phi.compose_monomial(1.0, alpha)
    psi = OrliczFunction(psi_pp, validate=False)
    convex = bool(psi.phi_prime.is_nondecreasing())
    rep = check_a_phi(w, psi, grid)
    return Lemma3Result(alpha, rep.constant, (lo, hi), psi, rep, convex)


# ---------------------------------------------------------------------------
# modular Hardy inequality
# ---------------------------------------------------------------------------

def _gl_integral(func, lo: float, hi: float, depth: int = 0) -> float:
    """Gauss-Legendre in ``u = ln x``; bisect until 48 and 96 nodes agree to 1e-13."""
    if lo <= 0:
        raise ValueError("log-variable quadrature needs lo > 0")
    with np.errstate(all="ignore"):
        a, b = _gl_log(func, lo, hi, _GL48), _gl_log(func, lo, hi, _GL96)
    if abs(a - b) <= 1e-13 * abs(b) or depth > 30:
        return b
    mid = math.sqrt(lo * hi)
    return _gl_integral(func, lo, mid, depth + 1) + _gl_integral(func, mid, hi, depth + 1)


def modular(w: Weight, phi: OrliczFunction, f: Evaluable, scale: float = 1.0) -> float:
    """``int phi(f*/scale) w`` (exact for steps)."""
    if isinstance(f, StepFunction):
        fs = f if f.is_nonincreasing() and f.is_nonnegative() else rearrange(f)
        br = np.asarray(fs.breaks)
        W = w.W(br)
        vals = np.asarray(phi.phi(np.asarray(fs.values) / scale))
        return float(np.sum(vals * np.diff(W)))
    g = multiply(_compose(phi, f, scale), w.w)
    try:
        return g.integrate(0.0, w.domain.end)
    except Divergence:
        return math.inf


def _compose(phi, f, scale):
    from .funcrep import Pointwise
    return Pointwise(lambda x: phi.phi(np.asarray(f(x)) / scale), f.breaks, f.domain)


def hardy_modular(w: Weight, phi: OrliczFunction, f: StepFunction, scale: float = 1.0) -> float:
    """``int phi(H f / scale) w`` for a nonincreasing step ``f``.

    ``Hf`` is constant on the first piece and ``F/x`` beyond the support; both
    parts are exact.  The middle pieces ``v + C/x`` are split where they cross
    breakpoints of ``phi`` or ``w`` and integrated by Gauss-Legendre in ``ln x``.
    """
    fs = f if f.is_nonincreasing() and f.is_nonnegative() else rearrange(f)
    br = list(fs.breaks)
    vals = [v / scale for v in fs.values]
    end = w.domain.end
    if not vals:
        return 0.0
    total = phi.phi.value_at(vals[0]) * w.W.value_at(min(br[1], end))
    acc = vals[0] * br[1]
    tau = [b for b in phi.phi.breaks if 0 < b < math.inf]
    wbr = [b for b in w.w.breaks if 0 < b < math.inf]
    for i in range(1, len(vals)):
        lo, hi = br[i], min(br[i + 1], end)
        if lo >= end:
            break
        v = vals[i]
        C = acc - v * lo            # Hf(x) = v + C/x on [lo, hi)
        cuts = {lo, hi}
        for tj in tau:
            if tj > v and C > 0:
                x = C / (tj - v)
                if lo < x < hi:
                    cuts.add(x)
        cuts |= {b for b in wbr if lo < b < hi}
        cuts = sorted(cuts)
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += _gl_integral(lambda x, _v=v, _C=C: phi.phi(_v + _C / x) * w.w(x), a, b)
        acc += v * (br[i + 1] - lo)
    last = br[-1]
    if last < end:
        try:
            total += _tail_modular(phi.phi, w.w, acc, -1.0, last)
        except Divergence:
            return math.inf
    return float(total)


def certified_modular_constant(w: Weight, phi: OrliczFunction) -> float | None:
    """Proven ``B'`` for power weights: sharp Hardy for pure powers, Jensen for ``-1 < beta < 0``."""
    wp = w.w
    if not (wp.n == 1 and wp.is_single_term and wp.pieces[0][0][2] == 0):
        return None
    beta = wp.pieces[0][0][1]
    out = []
    if phi.is_pure_power:
        q = phi.phi.pieces[0][0][1]
        if beta + 1 < q:
            out.append((q / (q - 1.0 - beta)) ** q)
    if -1.0 < beta < 0.0 and phi.convex:
        out.append(1.0 / abs(beta))
    return min(out) if out else None


@dataclass
class ModularReport:
    sup_ratio: float
    samples: int
    verdict: str
    certified_constant: float | None
    witness: dict | None = None
    a_phi: ConditionReport | None = None
    details: dict = field(default_factory=dict)

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded_on_sample"

    def to_json(self) -> dict:
        inf = lambda v: "inf" if isinstance(v, float) and math.isinf(v) else v
        return {"sup_ratio": inf(self.sup_ratio), "samples": self.samples,
                "verdict": self.verdict, "certified_constant": inf(self.certified_constant),
                "witness": self.witness, "details": self.details,
                "a_phi": None if self.a_phi is None else self.a_phi.to_json()}


def indicator_witness(w: Weight, phi: OrliczFunction, bound: float = 1e3):
    """Search ``c chi_[0,t]`` for a modular ratio above ``bound``."""
    best, arg = 0.0, None
    for t in np.geomspace(1e-12, 1e12, 49):
        if t >= w.domain.end:
            continue
        for c in (1e-3, 1.0, 1e3):
            f = StepFunction([0.0, float(t)], [c], w.domain, monotone="nonincreasing")
            r = hardy_modular(w, phi, f) / modular(w, phi, f)
            if r > best:
                best, arg = r, f
            if best > bound:
                return best, arg
    return best, arg


def modular_hardy_check(w, phi, samples: int = 500, seed: int = 0,
                        threshold: float = 1e3) -> ModularReport:
    """Sample ``int phi(Hf) w / int phi(f) w`` over nonincreasing step functions."""
    from .spaces import random_nonincreasing

    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    rng = np.random.default_rng(seed)
    cert = certified_modular_constant(w, phi)
    worst, arg = 0.0, None
    for _ in range(samples):
        f = random_nonincreasing(rng, w.domain)
        den = modular(w, phi, f)
        if not den > 0:
            continue
        r = hardy_modular(w, phi, f) / den
        if r > worst:
            worst, arg = r, f
        if math.isinf(r):
            break
    aphi = check_a_phi(w, phi)
    details = {"seed": seed}
    if not aphi.holds or worst > threshold:
        wv, wf = indicator_witness(w, phi, threshold)
        details["indicator_ratio"] = wv
        if wv > worst:
            worst, arg = wv, wf
    verdict = "counterexample" if worst > threshold else "bounded_on_sample"
    wit = arg.to_json() if (verdict == "counterexample" and arg is not None) else None
    return ModularReport(float(worst), samples, verdict, cert, wit, aphi, details)


# ---------------------------------------------------------------------------
# Luxemburg norm
# ---------------------------------------------------------------------------

def luxemburg_norm(w, phi, f: Evaluable, assume_nonincreasing: bool = False,
                   rtol: float = 1e-12, _modular=None) -> float:
    """``inf{rho : int phi(f*/rho) w <= 1}``: bracket by powers of 4, then Brent in ``log rho``."""
    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    if isinstance(f, StepFunction):
        if all(v == 0 for v in f.values):
            return 0.0
        if not (assume_nonincreasing and f.is_nonincreasing() and f.is_nonnegative()):
            f = rearrange(f)
    elif not (assume_nonincreasing or f.monotone == "nonincreasing"):
        raise TypeError("non-step functions must be asserted nonincreasing")
    m = _modular
    if m is None and isinstance(f, StepFunction):
        # w-masses of the pieces do not depend on rho
        vals, dW = np.asarray(f.values), np.diff(w.W(np.asarray(f.breaks)))
        m = lambda rho: float(np.sum(np.asarray(phi.phi(vals / rho)) * dW))
    elif m is None:
        m = lambda rho: modular(w, phi, f, rho)
    hi = 1.0
    mv = m(hi)
    k = 0
    while not mv <= 1.0:
        if math.isinf(mv) or k > 250:
            # Delta_2: an infinite modular stays infinite under scaling
            return math.inf
        hi *= 4.0
        mv = m(hi)
        k += 1
    lo = hi
    while m(lo) <= 1.0:
        lo /= 4.0
        if lo < 1e-300:
            return 0.0
    if hi / lo - 1.0 <= rtol:
        return hi
    # the modular is continuous and decreasing in rho
    u = _spo.brentq(lambda u: m(math.exp(u)) - 1.0, math.log(lo), math.log(hi),
                    xtol=0.5 * rtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(u)


def hardy_luxemburg(w: Weight, phi: OrliczFunction, f: StepFunction) -> float:
    """``||H f||_{Lambda(w, phi)}`` for nonincreasing step ``f``."""
    return luxemburg_norm(w, phi, f, True, _modular=lambda rho: hardy_modular(w, phi, f, rho))


# ---------------------------------------------------------------------------
# Hardy boundedness on Lorentz-Orlicz spaces
# ---------------------------------------------------------------------------

@dataclass
class ImplicationReport:
    proposition: str
    indices: dict
    sufficient: dict
    necessary: dict
    sampled: dict
    consistent: bool
    predicted_bounded: bool | None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sampled_hardy_norm(w: Weight, phi: OrliczFunction, samples: int, seed: int,
                        threshold: float = 1e3) -> dict:
    from .spaces import random_nonincreasing

    rng = np.random.default_rng(seed)
    fam = []
    for t in np.geomspace(1e-6, 1e6, 13):
        if t < w.domain.end:
            fam.append(StepFunction([0.0, float(t)], [1.0], w.domain, monotone="nonincreasing"))
    fam += [random_nonincreasing(rng, w.domain) for _ in range(samples)]
    worst, arg = 0.0, None
    for f in fam:
        den = luxemburg_norm(w, phi, f, True)
        if not den > 0:
            continue
        r = hardy_luxemburg(w, phi, f) / den
        if r > worst:
            worst, arg = r, f
        if math.isinf(r):
            break
    bounded = worst <= threshold
    return {"sup_ratio": worst if math.isfinite(worst) else "inf", "samples": len(fam),
            "verdict": "bounded_on_sample" if bounded else "counterexample",
            "witness": None if bounded or arg is None else arg.to_json()}


def _am(w: Weight, q: float) -> dict:
    r = check_am_q(w, q, Grid(points=128))
    return {"condition": f"AM_{q:g}", "holds": r.holds,
            "constant": r.constant if math.isfinite(r.constant) else "inf"}


def decide_prop9(w, phi, samples: int = 40, seed: int = 0) -> ImplicationReport:
    """(AM_{p_0}) => Hardy bounded on Lambda(w, phi) => (AM_{q_0})."""
    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    idx = simonenko(phi)
    suff = _am(w, idx.p_0)
    nec = _am(w, idx.q_0)
    sampled = _sampled_hardy_norm(w, phi, samples, seed)
    observed = sampled["verdict"] == "bounded_on_sample"
    notes = []
    ok = True
    if suff["holds"] and not observed:
        ok = False
        notes.append("sufficient condition holds but a sampled counterexample exists")
    if observed and not nec["holds"]:
        ok = False
        notes.append("sampled boundedness contradicts the necessary condition")
    return ImplicationReport("prop9", {"p_0": idx.p_0, "q_0": idx.q_0}, suff, nec, sampled, ok,
                             True if suff["holds"] else (False if not nec["holds"] else None),
                             notes)


def decide_prop10(w, phi, l: float | None = None, samples: int = 40,
                  seed: int = 0) -> ImplicationReport:
    """Finite-interval version with the exponents of ``phi`` at infinity."""
    w = w if isinstance(w, Weight) else Weight(w)
    if l is not None and (w.domain.is_half_line or w.domain.end != l):
        w = Weight(_on_domain(w.w, IntervalDomain.finite(l)))
    if w.domain.is_half_line:
        raise ValueError("the finite-interval criterion needs a finite interval")
    phi = _orlicz(phi)
    idx = simonenko(phi)
    p, q = idx.p_liminf, idx.q_limsup
    suff = _am(w, p)
    nec = {f"eps={e:g}": _am(w, q + e) for e in (0.5, 0.1, 0.02)}
    sampled = _sampled_hardy_norm(w, phi, samples, seed)
    observed = sampled["verdict"] == "bounded_on_sample"
    nec_ok = all(r["holds"] for r in nec.values())
    notes = []
    ok = True
    if suff["holds"] and not observed:
        ok = False
        notes.append("sufficient condition holds but a sampled counterexample exists")
    if observed and not nec_ok:
        ok = False
        notes.append("sampled boundedness contradicts the necessary condition")
    p9 = _am(w, idx.p_0)
    if suff["holds"] and not p9["holds"]:
        notes.append("sharper than the half-line criterion: AM_p0 fails, AM_p holds")
    return ImplicationReport("prop10", {"p_liminf": p, "q_limsup": q, "p_0": idx.p_0,
                                        "q_0": idx.q_0, "AM_p0": p9["holds"]},
                             suff, nec, sampled, ok,
                             True if suff["holds"] else (False if not nec_ok else None), notes)


def _on_domain(pp: PowerPiecewise, dom: IntervalDomain) -> PowerPiecewise:
    br = [b for b in pp.breaks if b < dom.end] + [dom.end]
    return PowerPiecewise(br, [pp.pieces[pp.piece_index(0.5 * (a + b))]
                               for a, b in zip(br[:-1], br[1:])], dom)


def check_prop11_iii(w, phi, phiX, grid: Grid | None = None) -> ConditionReport:
    """``int_t^inf phi(phi_X(t)/phi_X(x)) w(x) dx <= D int_0^t w``.

    Only ``phi`` on ``(0, 1]`` enters.  With ``p', q'`` the extreme exponents
    there, cond22 with ``p'`` is sufficient and cond22 with ``q'`` necessary.
    """
    from .spaces import _ff

    w = w if isinstance(w, Weight) else Weight(w)
    phi = _orlicz(phi)
    phiX = _ff(phiX)
    grid = grid or Grid(points=128)
    p1 = phi._inf_ratio(0.0, 1.0)
    q1 = phi._sup_ratio(0.0, 1.0)
    c1 = phi.phi.value_at(1.0)
    details = {"p_unit": p1, "q_unit": q1}
    if abs(q1 - p1) < 1e-12:
        rep = check_cond22(w, p1, phiX, grid)
        rep.condition = "prop11_iii"
        if rep.holds:
            rep.constant *= c1
        rep.details = dict(rep.details, **details, route="power on (0,1] reduces to cond22")
        return rep
    suff = check_cond22(w, p1, phiX, grid)
    nec = check_cond22(w, q1, phiX, grid)
    details.update(sufficient=suff.holds, necessary=nec.holds)
    if not nec.holds:
        return ConditionReport("prop11_iii", False, math.inf, nec.witness_t, nec.method,
                               grid.to_json(), divergence=f"necessary cond22 with q={q1:g} "
                               f"fails: {nec.divergence}", details=details)
    mono = _single_power_phi(phiX)
    ts = grid.probes(w.domain, w.w.breaks)
    vals = []
    for t in ts:
        t = float(t)
        try:
            if mono is not None:
                num = _tail_modular(phi.phi, w.w, t ** mono, -mono, t)
            else:
                from .funcrep import Pointwise
                pt = phiX.phi.value_at(t)
                g = Pointwise(lambda x, _pt=pt: phi.phi(_pt / np.asarray(phiX.phi(x))) *
                              w.w(x), w.w.breaks, w.domain)
                num = g.integrate(t, w.domain.end)
        except Divergence:
            num = math.inf
        vals.append(num / w.W.value_at(t))
    j = int(np.argmax(vals))
    best = float(vals[j])
    if suff.holds:
        return ConditionReport("prop11_iii", True, max(best, nec.constant * c1), float(ts[j]),
                               "closed_form_tail", grid.to_json(),
                               details=dict(details, route="sufficient cond22",
                                            upper_bound=suff.constant * c1))
    holds = math.isfinite(best) and best < 1e6
    return ConditionReport("prop11_iii", holds, best if holds else math.inf, float(ts[j]), "grid",
                           grid.to_json(), details=dict(details, route="grid"))


def _single_power_phi(phiX) -> float | None:
    pp = phiX.phi
    if isinstance(pp, PowerPiecewise) and pp.n == 1 and pp.is_single_term:
        c, a, k = pp.pieces[0][0]
        if k == 0 and a > 0:
            return a
    return None


__all__ = ["OrliczFunction", "SimonenkoIndices", "simonenko", "phi_bar", "check_a_phi",
           "a_phi_upper_bound", "lemma3_improve", "lemma3_interval", "Lemma3Result",
           "modular", "hardy_modular", "modular_hardy_check", "certified_modular_constant",
           "ModularReport", "indicator_witness", "luxemburg_norm", "hardy_luxemburg",
           "decide_prop9", "decide_prop10", "check_prop11_iii", "ImplicationReport"]
