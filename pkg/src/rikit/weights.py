"""Weights and the decision procedures for the weight conditions.

Every checker builds the ratio ``R(t)`` whose uniform boundedness is the
condition, then

* decides boundedness near 0 and infinity from the exact asymptotic lead of
  ``R`` (power-log antiderivatives of the outer pieces), and
* estimates the best constant as the supremum over a probe set: all
  breakpoints plus a log grid, refined locally, together with the finite
  limits at the ends.

The reported constant is a lower bound for the true best constant.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize as _spo

from .asymptotics import INF, ZERO, Divergence
from .funcrep import (Evaluable, IntervalDomain, PowerPiecewise, StepFunction,
                      cumulative, divide, multiply, power, tail)

WITNESS_RATIO = 1e6


@dataclass(frozen=True)
class Grid:
    """Log-spaced probe grid ``[min, max]`` with ``points`` nodes."""

    min: float = 1e-6
    max: float = 1e6
    points: int = 512

    @classmethod
    def default(cls) -> "Grid":
        pts = int(os.environ.get("RIKIT_GRID_POINTS", "512"))
        return cls(points=pts)

    def probes(self, domain: IntervalDomain, extra=()) -> np.ndarray:
        hi = min(self.max, domain.end)
        pts = list(np.geomspace(self.min, hi, self.points))
        pts += [t for t in extra if 0 < t < math.inf and t <= domain.end]
        if not domain.is_half_line:
            pts.append(domain.end)
        return np.unique(np.array(pts, dtype=float))

    def to_json(self) -> dict:
        return {"min": self.min, "max": self.max, "points": self.points}


class Weight:
    """An a.e. positive weight ``w`` with cached ``W(t) = int_0^t w``."""

    def __init__(self, w, domain: IntervalDomain | None = None, validate: bool = True):
        if isinstance(w, StepFunction):
            w = w.to_power_piecewise()
        if not isinstance(w, PowerPiecewise):
            raise TypeError("weights are PowerPiecewise functions")
        self.w = w
        self.domain = w.domain
        if validate:
            self._validate()
        self.W = w.cumulative()

    def _validate(self):
        if any(not p for p in self.w.pieces):
            raise ValueError("weight vanishes on a piece")
        if not self.w.is_nonnegative():
            raise ValueError("weight must be positive")
        try:
            self.w.integrate(0.0, min(1.0, self.domain.end))
        except Divergence:
            raise ValueError("weight is not locally integrable at 0") from None
        if self.domain.is_half_line:
            ld = self.w.lead(INF)
            if ld.power < -1 or (ld.power == -1 and ld.logpow < -1):
                raise ValueError("weight must have infinite total mass on the half line")

    @classmethod
    def power(cls, beta: float, c: float = 1.0,
              domain: IntervalDomain = IntervalDomain.half_line(), **kw) -> "Weight":
        return cls(PowerPiecewise.monomial(c, beta, domain), **kw)

    def __call__(self, x):
        return self.w(x)

    def is_nondecreasing(self) -> bool:
        return self.w.is_nondecreasing()

    def to_json(self) -> dict:
        return self.w.to_json()

    def __repr__(self):
        return f"Weight({self.w!r})"


@dataclass
class ConditionReport:
    condition: str
    holds: bool
    constant: float
    witness_t: float | None
    method: str
    grid: dict
    divergence: str | None = None
    lower_bound: bool = True
    tail_limits: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    curve: tuple = field(default=(), repr=False, compare=False)

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("curve")
        for k in ("constant", "witness_t"):
            v = d[k]
            if isinstance(v, float) and math.isinf(v):
                d[k] = "inf"
        d["tail_limits"] = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                            for k, v in d["tail_limits"].items()}
        return d


def _phi_pp(phi) -> PowerPiecewise:
    pp = getattr(phi, "phi", phi)
    if isinstance(pp, StepFunction):
        pp = pp.to_power_piecewise()
    return pp


def _weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(w)


def diverged(condition: str, where: str, grid: Grid, method="closed_form_tail",
             **details) -> ConditionReport:
    return ConditionReport(condition, False, math.inf, None, method, grid.to_json(),
                           divergence=where, details=details)


def decide_ratio(condition: str, R: Evaluable, grid: Grid, extra=(),
                 details: dict | None = None) -> ConditionReport:
    """Decide ``sup_t R(t) < inf`` and estimate the supremum."""
    domain = R.domain
    probes = grid.probes(domain, list(extra) + [b for b in R.breaks])
    with np.errstate(all="ignore"):
        vals = np.asarray(R(probes), dtype=float)
    vals = np.where(np.isnan(vals), -math.inf, vals)
    curve = (tuple(float(t) for t in probes), tuple(float(v) for v in vals))
    ends = [ZERO] + ([INF] if domain.is_half_line else [])
    limits = {}
    analytic = True
    unbounded = []
    for end in ends:
        ld = R.lead(end)
        if ld is None:
            analytic = False
            continue
        lim = ld.limit()
        limits[end] = lim
        if lim == math.inf:
            unbounded.append(end)
    j = int(np.argmax(vals))
    sup, arg = float(vals[j]), float(probes[j])
    if math.isfinite(sup) and 0 < j < len(probes) - 1:
        u0, u1 = math.log(probes[j - 1]), math.log(probes[j + 1])
        res = _spo.minimize_scalar(lambda u: -float(R(np.array([math.exp(u)]))[0]),
                                   bounds=(u0, u1), method="bounded",
                                   options={"xatol": 1e-10})
        if math.isfinite(res.fun) and -res.fun > sup:
            sup, arg = float(-res.fun), float(math.exp(res.x))
    method = "closed_form_tail" if analytic else "grid"
    if not math.isfinite(sup) or unbounded:
        witness, wval = arg, sup
        if unbounded:
            witness, wval = _walk_out(R, unbounded[0], probes, vals)
        where = (f"ratio unbounded as t -> {'0' if unbounded[0] == ZERO else 'inf'}"
                 if unbounded else f"ratio infinite at t = {arg}")
        return ConditionReport(condition, False, math.inf, witness, method, grid.to_json(),
                               divergence=where, tail_limits=limits,
                               details=dict(details or {}, witness_ratio=wval), curve=curve)
    const = max([sup] + [v for v in limits.values() if math.isfinite(v)])
    if not analytic:
        holds = const < WITNESS_RATIO
    else:
        holds = True
    return ConditionReport(condition, holds, const if holds else math.inf, arg, method,
                           grid.to_json(), tail_limits=limits, details=details or {},
                           curve=curve)


def _walk_out(R: Evaluable, end: str, probes, vals):
    """Push ``t`` toward the unbounded end until the ratio exceeds the witness level."""
    t = float(probes[0] if end == ZERO else probes[-1])
    best_t, best = t, float(vals[0] if end == ZERO else vals[-1])
    step = 0.1 if end == ZERO else 10.0
    for _ in range(600):
        t *= step
        if t == 0.0 or math.isinf(t) or t < 1e-300 or t > 1e300:
            break
        with np.errstate(all="ignore"):
            v = float(R(np.array([t]))[0])
        if math.isnan(v):
            break
        if v > best:
            best_t, best = t, v
        if best > WITNESS_RATIO:
            break
    return best_t, best


# ---------------------------------------------------------------------------
# the conditions
# ---------------------------------------------------------------------------

def check_am_q(w, q: float, grid: Grid | None = None) -> ConditionReport:
    """``int_t^inf w(x)/x^q dx <= B t^-q int_0^t w`` for all t."""
    if not q > 0:
        raise ValueError("q must be positive")
    grid = grid or Grid.default()
    w = _weight(w)
    name = f"AM_{q:g}"
    try:
        N = tail(w.w.shift_power(-q))
    except Divergence as e:
        return diverged(name, f"int_t^inf w/x^q diverges ({e.where})", grid)
    R = divide(N.shift_power(q) if isinstance(N, PowerPiecewise) else
               multiply(N, PowerPiecewise.monomial(1.0, q, w.domain)), w.W)
    return decide_ratio(name, R, grid, details={"q": q})


def check_a1(w, grid: Grid | None = None) -> ConditionReport:
    """``(w(t)/t) int_0^t dx/w(x) <= C`` for nondecreasing ``w``."""
    grid = grid or Grid.default()
    w = _weight(w)
    if not w.is_nondecreasing():
        raise ValueError("A_1 is only defined for nondecreasing weights")
    try:
        N = cumulative(power(w.w, -1.0))
    except Divergence as e:
        return diverged("A_1", f"int_0^t dx/w diverges ({e.where})", grid)
    R = multiply(divide(w.w, PowerPiecewise.monomial(1.0, 1.0, w.domain)), N)
    return decide_ratio("A_1", R, grid)


def check_cond22(w, q: float, phi, grid: Grid | None = None) -> ConditionReport:
    """``int_t^inf w/phi^q <= B phi(t)^-q int_0^t w`` for all t."""
    if q < 1:
        raise ValueError("q must be >= 1")
    grid = grid or Grid.default()
    w = _weight(w)
    ph = _phi_pp(phi)
    phq = power(ph, q)
    try:
        N = tail(divide(w.w, phq))
    except Divergence as e:
        return diverged("cond22", f"int_t^inf w/phi^q diverges ({e.where})", grid)
    R = divide(multiply(phq, N), w.W)
    return decide_ratio("cond22", R, grid, extra=ph.breaks, details={"q": q})


def check_cond23(w, phi, grid: Grid | None = None) -> ConditionReport:
    """``int_0^t dphi/w <= C phi(t)/w(t)`` for nondecreasing ``w``."""
    grid = grid or Grid.default()
    w = _weight(w)
    if not w.is_nondecreasing():
        raise ValueError("cond23 needs a nondecreasing weight")
    ph = _phi_pp(phi)
    try:
        N = cumulative(divide(ph.derivative(), w.w))
    except Divergence as e:
        return diverged("cond23", f"int_0^t dphi/w diverges ({e.where})", grid)
    R = multiply(divide(w.w, ph), N)
    return decide_ratio("cond23", R, grid, extra=ph.breaks)


def check_cond24(w, space, grid: Grid | None = None) -> ConditionReport:
    """``(w(t)/phi_X(t)) ||chi_[0,t]/w||_X <= C`` for nondecreasing ``w``."""
    from .spaces import fundamental_function, partial_norm

    grid = grid or Grid.default()
    w = _weight(w)
    if not w.is_nondecreasing():
        raise ValueError("cond24 needs a nondecreasing weight")
    inv = power(w.w, -1.0)
    inv.monotone = "nonincreasing"
    ph = fundamental_function(space).phi
    try:
        N = partial_norm(space, inv)
    except Divergence as e:
        return diverged("cond24", f"||chi_[0,t]/w||_X is infinite for every t ({e.where})",
                        grid)
    R = multiply(divide(w.w, ph), N)
    return decide_ratio("cond24", R, grid, extra=ph.breaks)


__all__ = ["Grid", "Weight", "ConditionReport", "check_am_q", "check_a1", "check_cond22",
           "check_cond23", "check_cond24", "decide_ratio"]
