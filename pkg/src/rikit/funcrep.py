"""Exact piecewise functions on ``[0, l]`` or ``[0, inf)``.

Two carriers are exact: :class:`StepFunction` (constant pieces) and
:class:`PowerPiecewise` (pieces that are finite sums ``c * x**alpha *
(ln x)**k``).  The family is closed under products, antiderivatives and
composition with monomials, which covers every transform used downstream.
:class:`PowerOf` and :class:`Pointwise` wrap what falls outside the family;
they carry their asymptotic leads so tail decisions stay analytic.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from functools import cached_property
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo

from .asymptotics import (INF, ZERO, Divergence, Indeterminate, Lead,
                          converges_at, dominant, growing_integral,
                          integral_at_inf, integral_at_zero)

Term = tuple  # (coeff, alpha, logk)

_MONO_TOL = 1e-10


class RepresentationError(ValueError):
    """Malformed piecewise data (unsorted breakpoints, bad lengths...)."""


# ---------------------------------------------------------------------------
# domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalDomain:
    """``[0, length]``; ``length == inf`` is the half line."""

    length: float = math.inf

    def __post_init__(self):
        if not self.length > 0:
            raise RepresentationError("domain length must be positive")

    @classmethod
    def finite(cls, l: float) -> "IntervalDomain":
        return cls(float(l))

    @classmethod
    def half_line(cls) -> "IntervalDomain":
        return cls(math.inf)

    @property
    def is_half_line(self) -> bool:
        return math.isinf(self.length)

    @property
    def end(self) -> float:
        return self.length

    def to_json(self):
        return "half_line" if self.is_half_line else {"finite": self.length}

    @classmethod
    def from_json(cls, obj) -> "IntervalDomain":
        if obj is None or obj == "half_line":
            return cls.half_line()
        if isinstance(obj, dict) and "finite" in obj:
            return cls.finite(float(obj["finite"]))
        raise RepresentationError(f"bad domain {obj!r}")


HALF_LINE = IntervalDomain.half_line()


def _f(x) -> float:
    if isinstance(x, str):
        if x in ("inf", "Infinity", "+inf"):
            return math.inf
        raise RepresentationError(f"bad number {x!r}")
    if x is None:
        return math.inf
    return float(x)


def _num_json(x: float):
    return "inf" if math.isinf(x) else x


# ---------------------------------------------------------------------------
# term algebra
# ---------------------------------------------------------------------------

def _key(alpha: float, k: int):
    return (round(alpha, 12) + 0.0, int(k))


def merge_terms(terms: Sequence[Term]) -> list[Term]:
    """Combine equal (alpha, k) terms and drop zero coefficients."""
    acc: dict = {}
    scale: dict = {}
    rep: dict = {}
    for c, a, k in terms:
        key = _key(a, k)
        # keep the exact exponent; snap only float noise around the rounded key
        if key not in rep:
            rep[key] = key[0] if abs(a - key[0]) <= 4e-16 * max(1.0, abs(a)) else float(a)
        acc[key] = acc.get(key, 0.0) + c
        scale[key] = max(scale.get(key, 0.0), abs(c))
    out = []
    for key in sorted(acc):
        c = acc[key]
        if c == 0.0 or abs(c) <= 1e-14 * scale[key]:
            continue
        out.append((c, rep[key], key[1]))
    return out


def eval_terms(terms: Sequence[Term], x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if not terms:
        return out
    pos = x > 0
    xp = x[pos]
    if xp.size:
        lx = np.log(xp)
        acc = np.zeros_like(xp)
        for c, a, k in terms:
            v = c * xp**a
            if k:
                v = v * lx**k
            acc = acc + v
        out[pos] = acc
    if (~pos).any():
        out[~pos] = terms_limit(terms, ZERO, strict=False)
    return out


def terms_lead(terms: Sequence[Term], end: str) -> Lead:
    if end == ZERO:
        leads = [Lead(c * (-1) ** k, a, k, ZERO) for c, a, k in terms]
    else:
        leads = [Lead(c, a, k, INF) for c, a, k in terms]
    return dominant(leads, end)


def terms_limit(terms: Sequence[Term], end: str, strict: bool = True) -> float:
    """Limit of a term sum at 0 or infinity.

    With ``strict`` a nonzero divergent limit raises :class:`Divergence`;
    otherwise it is returned as a signed infinity.
    """
    if not terms:
        return 0.0
    ld = terms_lead(terms, end)
    b = ld.behaviour()
    if b == "inf":
        if strict:
            raise Divergence(f"unbounded at {end}")
        return math.copysign(math.inf, ld.coef)
    return ld.coef if b == "finite" else 0.0


def antiderivative_terms(terms: Sequence[Term]) -> list[Term]:
    out = []
    for c, a, k in terms:
        if abs(a + 1.0) <= 1e-14:
            out.append((c / (k + 1), 0.0, k + 1))
            continue
        for j in range(k + 1):
            coef = c * (-1) ** j * factorial(k) / factorial(k - j) / (a + 1.0) ** (j + 1)
            out.append((coef, a + 1.0, k - j))
    return merge_terms(out)


def derivative_terms(terms: Sequence[Term]) -> list[Term]:
    out = []
    for c, a, k in terms:
        if a != 0.0:
            out.append((c * a, a - 1.0, k))
        if k:
            out.append((c * k, a - 1.0, k - 1))
    return merge_terms(out)


def mul_terms(t1: Sequence[Term], t2: Sequence[Term]) -> list[Term]:
    return merge_terms([(c1 * c2, a1 + a2, k1 + k2)
                        for c1, a1, k1 in t1 for c2, a2, k2 in t2])


def _antider_value(F: Sequence[Term], x: float) -> float:
    if x == 0.0:
        return terms_limit(F, ZERO)
    if math.isinf(x):
        return terms_limit(F, INF)
    return float(eval_terms(F, np.array([x]))[0])


# ---------------------------------------------------------------------------
# Evaluable interface
# ---------------------------------------------------------------------------

class Evaluable:
    """Something that can be evaluated a.e. on its domain.

    Subclasses provide ``domain``, ``breaks`` (0, interior breakpoints,
    domain end), vectorised ``__call__`` and ``lead(end)``.  ``monotone``
    may be declared as ``"nonincreasing"`` or ``"nondecreasing"``.
    """

    domain: IntervalDomain
    monotone: str | None = None

    def __call__(self, x):
        raise NotImplementedError

    @property
    def breaks(self) -> tuple:
        raise NotImplementedError

    def lead(self, end: str) -> Lead | None:
        return None

    def left_limit(self, x: float) -> float:
        return float(self(np.array([x * (1 - 1e-13)]))[0])

    def value_at(self, x: float) -> float:
        return float(self(np.array([x], dtype=float))[0])

    def integrate(self, a: float, b: float) -> float:
        return _quad_integrate(self, a, b)

    # monotonicity is checked by sampling unless declared
    def _sample_points(self):
        pts = []
        br = list(self.breaks)
        for lo, hi in zip(br[:-1], br[1:]):
            lo2 = lo if lo > 0 else (min(1e-8, hi * 1e-8) if math.isfinite(hi) else 1e-8)
            hi2 = hi if math.isfinite(hi) else max(lo2, 1.0) * 1e8
            if hi2 <= lo2:
                continue
            seg = np.geomspace(lo2, hi2, 48)
            pts.append(seg[:-1])
            pts.append(np.array([hi2 * (1 - 1e-12)]) if math.isfinite(hi) else seg[-1:])
        return np.unique(np.concatenate(pts)) if pts else np.array([1.0])

    @cached_property
    def _sampled(self):
        x = self._sample_points()
        return x, np.asarray(self(x), dtype=float)

    def is_nonincreasing(self) -> bool:
        if self.monotone == "nonincreasing":
            return True
        _, y = self._sampled
        return bool(np.all(np.diff(y) <= _MONO_TOL * (1 + np.abs(y[:-1]))))

    def is_nondecreasing(self) -> bool:
        if self.monotone == "nondecreasing":
            return True
        _, y = self._sampled
        return bool(np.all(np.diff(y) >= -_MONO_TOL * (1 + np.abs(y[:-1]))))

    def is_nonnegative(self) -> bool:
        _, y = self._sampled
        return bool(np.all(y >= -1e-14))


_GL48 = np.polynomial.legendre.leggauss(48)
_GL96 = np.polynomial.legendre.leggauss(96)


def _gl_log(g: Evaluable, lo: float, hi: float, rule) -> float:
    xs, ws = rule
    u0, u1 = math.log(lo), math.log(hi)
    x = np.exp(0.5 * (u1 - u0) * xs + 0.5 * (u1 + u0))
    return float(0.5 * (u1 - u0) * np.sum(ws * np.asarray(g(x), dtype=float) * x))


def _gl_checked(g: Evaluable, lo: float, hi: float) -> float | None:
    """Gauss-Legendre in ``ln x`` when 48 and 96 nodes agree to 1e-13."""
    with np.errstate(all="ignore"):
        a = _gl_log(g, lo, hi, _GL48)
        b = _gl_log(g, lo, hi, _GL96)
    if math.isfinite(b) and abs(a - b) <= 1e-13 * abs(b):
        return b
    return None


def _gl_end(g: Evaluable, lo: float, hi: float, block: float = 4.0) -> float | None:
    """End pieces ``[0, hi)`` or ``[lo, inf)`` in ``u = |ln(x/x0)|``, blockwise.

    Stops once the geometric decay of the block sums bounds the remainder
    below ``1e-14`` of the total; returns ``None`` when decay is too slow.
    """
    x0, sign = (lo, 1.0) if math.isinf(hi) else (hi, -1.0)
    total, prev, u = 0.0, None, 0.0
    with np.errstate(all="ignore"):
        while True:
            xa, xb = x0 * math.exp(sign * u), x0 * math.exp(sign * (u + block))
            if not (1e-300 < min(xa, xb) and max(xa, xb) < 1e300):
                return None
            a, b = (xa, xb) if xa < xb else (xb, xa)
            v48, v96 = _gl_log(g, a, b, _GL48), _gl_log(g, a, b, _GL96)
            if not (math.isfinite(v96) and abs(v48 - v96) <= 1e-13 * abs(v96) + 1e-300):
                return None
            total += v96
            u += block
            if prev is not None and abs(prev) > 0:
                r = abs(v96) / abs(prev)
                if v96 == 0.0 or (r < 0.9 and abs(v96) * r / (1 - r) <= 1e-14 * abs(total)):
                    return total
            prev = v96
            if u > 2000:
                return None


def _quad_integrate(g: Evaluable, a: float, b: float) -> float:
    if not a < b:
        if a == b:
            return 0.0
        raise ValueError("integrate requires a < b")
    if a == 0.0:
        ld = g.lead(ZERO)
        if ld is not None and not converges_at(ld):
            raise Divergence("integrand not integrable at 0")
    if math.isinf(b):
        ld = g.lead(INF)
        if ld is not None and not converges_at(ld):
            raise Divergence("integrand not integrable at infinity")
    cuts = [a] + [t for t in g.breaks if a < t < b] + [b]
    total = 0.0
    fn = lambda x: float(g(np.array([x]))[0])
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if (math.isinf(hi) or lo == 0.0) and (v := _gl_end(g, lo, hi)) is not None:
            val = v
        elif math.isinf(hi):
            # split so the infinite transform does not swallow the bulk
            mid = max(lo * 2.0, lo + 1.0)
            val = _spi.quad(fn, lo, mid, epsabs=0.0, epsrel=1e-11, limit=400)[0]
            val += _spi.quad(fn, mid, math.inf, epsabs=0.0, epsrel=1e-11, limit=400)[0]
        elif lo > 0.0 and (v := _gl_checked(g, lo, hi)) is not None:
            val = v
        elif lo == 0.0 or hi / lo > 1e3:
            # log-spaced sub-cuts resolve endpoint singularities and wide pieces
            if lo == 0.0:
                sub = [0.0] + list(np.geomspace(hi * 1e-12, hi, 7))
            else:
                sub = list(np.geomspace(lo, hi, int(math.log10(hi / lo)) + 2))
            val = 0.0
            for s0, s1 in zip(sub[:-1], sub[1:]):
                val += _spi.quad(fn, s0, s1, epsabs=0.0, epsrel=1e-11, limit=400)[0]
        else:
            val = _spi.quad(fn, lo, hi, epsabs=0.0, epsrel=1e-11, limit=400)[0]
        total += val
    if not math.isfinite(total):
        raise Divergence("quadrature did not converge")
    return total


# ---------------------------------------------------------------------------
# StepFunction
# ---------------------------------------------------------------------------

class StepFunction(Evaluable):
    """Right-continuous step function, zero beyond its last breakpoint.

    ``values[i]`` is the value on ``[breaks[i], breaks[i+1])``.
    """

    def __init__(self, breaks: Sequence[float], values: Sequence[float],
                 domain: IntervalDomain = HALF_LINE, monotone: str | None = None):
        br = [float(b) for b in breaks]
        vals = [float(v) for v in values]
        if len(br) != len(vals) + 1 or not vals:
            raise RepresentationError("need len(breaks) == len(values) + 1 >= 2")
        if br[0] != 0.0:
            raise RepresentationError("first breakpoint must be 0")
        if any(not b1 > b0 for b0, b1 in zip(br[:-1], br[1:])):
            raise RepresentationError("breakpoints must be strictly increasing")
        if br[-1] > domain.end:
            raise RepresentationError("breakpoints exceed the domain")
        if any(not math.isfinite(v) for v in vals):
            raise RepresentationError("values must be finite")
        if math.isinf(br[-1]) and vals[-1] != 0.0:
            raise RepresentationError("an infinite last piece must have value 0")
        # canonical form: merge equal neighbours, drop trailing zeros
        cb, cv = [br[0]], []
        for i, v in enumerate(vals):
            if cv and cv[-1] == v:
                cb[-1] = br[i + 1]
            else:
                cv.append(v)
                cb.append(br[i + 1])
        while len(cv) > 1 and cv[-1] == 0.0:
            cv.pop()
            cb.pop()
        if len(cv) == 1 and cv[0] == 0.0:
            cb = [0.0, domain.end]
        self._breaks = tuple(cb)
        self.values = tuple(cv)
        self.domain = domain
        self.monotone = monotone

    @property
    def breaks(self) -> tuple:
        return self._breaks

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.array(self._breaks))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.array(self._breaks), x, side="right") - 1
        vals = np.append(np.array(self.values), 0.0)
        idx = np.where((idx < 0) | (idx >= self.n), self.n, idx)
        return vals[idx]

    def left_limit(self, x: float) -> float:
        i = bisect.bisect_left(self._breaks, x) - 1
        if i < 0:
            return self.values[0]
        return self.values[i] if i < self.n else 0.0

    def lead(self, end: str) -> Lead:
        if end == ZERO:
            return Lead.const(self.values[0], ZERO)
        if math.isinf(self._breaks[-1]) or self.domain.is_half_line:
            return Lead(0.0, 0.0, 0.0, INF)
        return Lead.const(self.values[-1], INF)

    def is_nonincreasing(self) -> bool:
        v = self.values
        tail_ok = v[-1] >= 0 if self._breaks[-1] < self.domain.end else True
        return all(a >= b for a, b in zip(v[:-1], v[1:])) and tail_ok

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.values)

    def abs(self) -> "StepFunction":
        return StepFunction(self._breaks, [abs(v) for v in self.values], self.domain)

    def scale(self, c: float) -> "StepFunction":
        return StepFunction(self._breaks, [c * v for v in self.values], self.domain)

    def integrate(self, a: float, b: float) -> float:
        if not a <= b:
            raise ValueError("integrate requires a <= b")
        total = 0.0
        for (lo, hi), v in zip(zip(self._breaks[:-1], self._breaks[1:]), self.values):
            lo2, hi2 = max(lo, a), min(hi, b)
            if hi2 > lo2 and v != 0.0:
                if math.isinf(hi2):
                    raise Divergence(f"nonzero value {v} on an infinite piece")
                total += v * (hi2 - lo2)
        return total

    def level_measure(self, lam: float) -> float:
        """Measure of ``{|f| > lam}``."""
        return float(sum(l for l, v in zip(self.lengths, self.values) if abs(v) > lam))

    def sup_abs(self) -> float:
        return max(abs(v) for v in self.values)

    def to_power_piecewise(self) -> "PowerPiecewise":
        br = list(self._breaks)
        terms = [[(v, 0.0, 0)] if v else [] for v in self.values]
        if br[-1] < self.domain.end:
            br.append(self.domain.end)
            terms.append([])
        return PowerPiecewise(br, terms, self.domain, monotone=self.monotone)

    def __eq__(self, other):
        return (isinstance(other, StepFunction) and self._breaks == other._breaks
                and self.values == other.values and self.domain == other.domain)

    def __hash__(self):
        return hash((self._breaks, self.values))

    def __repr__(self):
        return f"StepFunction(breaks={list(self._breaks)}, values={list(self.values)})"

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(),
                "breaks": [_num_json(b) for b in self._breaks],
                "values": list(self.values)}


def step(pieces: Sequence[tuple], domain: IntervalDomain = HALF_LINE) -> StepFunction:
    """Build a step function from ``(value, a, b)`` triples of disjoint intervals."""
    pts = sorted({0.0} | {float(a) for _, a, _ in pieces} | {float(b) for _, _, b in pieces})
    vals = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        v = 0.0
        for val, a, b in pieces:
            if a <= lo and hi <= b:
                v += val
        vals.append(v)
    return StepFunction(pts, vals, domain)


def indicator(a: float, domain: IntervalDomain = HALF_LINE, c: float = 1.0) -> StepFunction:
    """``c * chi_[0, a)``."""
    return StepFunction([0.0, a], [c], domain)


# ---------------------------------------------------------------------------
# PowerPiecewise
# ---------------------------------------------------------------------------

class PowerPiecewise(Evaluable):
    """Pieces ``[breaks[i], breaks[i+1])`` carrying term sums ``sum c x^a (ln x)^k``.

    The pieces partition the whole domain; the last break equals its end.
    """

    def __init__(self, breaks: Sequence[float], terms: Sequence[Sequence[Term]],
                 domain: IntervalDomain = HALF_LINE, monotone: str | None = None):
        br = [float(b) for b in breaks]
        if len(br) != len(terms) + 1 or not terms:
            raise RepresentationError("need len(breaks) == len(pieces) + 1 >= 2")
        if br[0] != 0.0 or br[-1] != domain.end:
            raise RepresentationError("pieces must partition the domain")
        if any(not b1 > b0 for b0, b1 in zip(br[:-1], br[1:])):
            raise RepresentationError("breakpoints must be strictly increasing")
        pieces = []
        for tl in terms:
            for t in tl:
                if len(t) != 3 or int(t[2]) != t[2] or t[2] < 0:
                    raise RepresentationError(f"bad term {t!r}")
            pieces.append(merge_terms([(float(c), float(a), int(k)) for c, a, k in tl]))
        # merge identical neighbours
        cb, cp = [br[0]], []
        for i, p in enumerate(pieces):
            if cp and cp[-1] == p:
                cb[-1] = br[i + 1]
            else:
                cp.append(p)
                cb.append(br[i + 1])
        self._breaks = tuple(cb)
        self.pieces = tuple(tuple(p) for p in cp)
        self.domain = domain
        self.monotone = monotone

    # construction helpers -------------------------------------------------
    @classmethod
    def monomial(cls, c: float, alpha: float, domain: IntervalDomain = HALF_LINE,
                 logk: int = 0) -> "PowerPiecewise":
        return cls([0.0, domain.end], [[(c, alpha, logk)]], domain)

    @classmethod
    def constant(cls, c: float, domain: IntervalDomain = HALF_LINE) -> "PowerPiecewise":
        return cls.monomial(c, 0.0, domain)

    @property
    def breaks(self) -> tuple:
        return self._breaks

    @property
    def n(self) -> int:
        return len(self.pieces)

    def piece_index(self, x: float) -> int:
        i = bisect.bisect_right(self._breaks, x) - 1
        return min(max(i, 0), self.n - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        idx = np.searchsorted(np.array(self._breaks), x, side="right") - 1
        idx = np.clip(idx, 0, self.n - 1)
        for i in np.unique(idx):
            m = idx == i
            out[m] = eval_terms(self.pieces[i], x[m])
        out[x > self.domain.end] = 0.0
        return out[0] if scalar else out

    def left_limit(self, x: float) -> float:
        i = bisect.bisect_left(self._breaks, x) - 1
        i = min(max(i, 0), self.n - 1)
        return float(eval_terms(self.pieces[i], np.array([x]))[0])

    def lead(self, end: str) -> Lead:
        if end == ZERO:
            return terms_lead(self.pieces[0], ZERO)
        if not self.domain.is_half_line:
            return Lead.const(self.left_limit(self.domain.end), INF)
        return terms_lead(self.pieces[-1], INF)

    @property
    def is_single_term(self) -> bool:
        return all(len(p) <= 1 for p in self.pieces)

    # algebra ---------------------------------------------------------------
    def _refine(self, other: "PowerPiecewise"):
        if self.domain != other.domain:
            raise RepresentationError("domain mismatch")
        br = sorted(set(self._breaks) | set(other._breaks))
        out = []
        for lo, hi in zip(br[:-1], br[1:]):
            mid = lo + 1.0 if math.isinf(hi) else 0.5 * (lo + hi)
            out.append((self.pieces[self.piece_index(mid)],
                        other.pieces[other.piece_index(mid)]))
        return br, out

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        if isinstance(other, StepFunction):
            other = other.to_power_piecewise()
        if not isinstance(other, PowerPiecewise):
            return multiply(self, other)
        br, pairs = self._refine(other)
        return PowerPiecewise(br, [mul_terms(a, b) for a, b in pairs], self.domain)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, StepFunction):
            other = other.to_power_piecewise()
        br, pairs = self._refine(other)
        return PowerPiecewise(br, [merge_terms(list(a) + list(b)) for a, b in pairs],
                              self.domain)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: float) -> "PowerPiecewise":
        return PowerPiecewise(self._breaks, [[(c * a, b, k) for a, b, k in p]
                                             for p in self.pieces], self.domain,
                              monotone=self.monotone if c > 0 else None)

    def shift_power(self, alpha: float) -> "PowerPiecewise":
        """Multiply by ``x**alpha``."""
        return PowerPiecewise(self._breaks, [[(c, a + alpha, k) for c, a, k in p]
                                             for p in self.pieces], self.domain)

    def derivative(self) -> "PowerPiecewise":
        return PowerPiecewise(self._breaks, [derivative_terms(p) for p in self.pieces],
                              self.domain)

    def exact_power(self, r: float) -> "PowerPiecewise | None":
        """``self**r`` inside the family, or ``None`` when not representable."""
        if r == 1.0:
            return self
        if float(r).is_integer() and r >= 0:
            out = PowerPiecewise.constant(1.0, self.domain)
            for _ in range(int(r)):
                out = out * self
            return out
        new = []
        for p in self.pieces:
            if not p:
                if r <= 0:
                    return None
                new.append([])
                continue
            if len(p) != 1:
                return None
            c, a, k = p[0]
            if k or c <= 0:
                return None
            new.append([(c**r, a * r, 0)])
        return PowerPiecewise(self._breaks, new, self.domain)

    def restrict(self, t: float) -> "PowerPiecewise":
        """Multiply by ``chi_[0, t)``."""
        if t >= self.domain.end:
            return self
        br = [b for b in self._breaks if b < t] + [t, self.domain.end]
        terms = [self.pieces[self.piece_index(0.5 * (lo + hi))]
                 for lo, hi in zip(br[:-2], br[1:-1])] + [[]]
        return PowerPiecewise(br, terms, self.domain, monotone=None)

    # integration -----------------------------------------------------------
    def integrate(self, a: float, b: float) -> float:
        if not a <= b:
            raise ValueError("integrate requires a <= b")
        total = 0.0
        for (lo, hi), p in zip(zip(self._breaks[:-1], self._breaks[1:]), self.pieces):
            lo2, hi2 = max(lo, a), min(hi, b)
            if not hi2 > lo2 or not p:
                continue
            F = antiderivative_terms(p)
            try:
                total += _antider_value(F, hi2) - _antider_value(F, lo2)
            except Divergence:
                raise Divergence(f"piece [{lo}, {hi}) with terms {list(p)}") from None
        return total

    def cumulative(self) -> "PowerPiecewise":
        """``t -> int_0^t self`` as a PowerPiecewise."""
        acc = 0.0
        out = []
        for (lo, hi), p in zip(zip(self._breaks[:-1], self._breaks[1:]), self.pieces):
            F = antiderivative_terms(p)
            try:
                c0 = acc - _antider_value(F, lo)
            except Divergence:
                raise Divergence(f"not integrable at 0 (terms {list(p)})") from None
            out.append(merge_terms(F + [(c0, 0.0, 0)]))
            if math.isfinite(hi):
                acc = acc + (_antider_value(F, hi) - _antider_value(F, lo))
        return PowerPiecewise(self._breaks, out, self.domain)

    def tail(self) -> "PowerPiecewise":
        """``t -> int_t^end self`` as a PowerPiecewise."""
        acc = 0.0
        out = []
        segs = list(zip(zip(self._breaks[:-1], self._breaks[1:]), self.pieces))
        for (lo, hi), p in reversed(segs):
            F = antiderivative_terms(p)
            try:
                c0 = acc + _antider_value(F, hi)
            except Divergence:
                raise Divergence(f"not integrable at infinity (terms {list(p)})") from None
            out.append(merge_terms([(-c, a, k) for c, a, k in F] + [(c0, 0.0, 0)]))
            if lo > 0:
                acc = acc + (_antider_value(F, hi) - _antider_value(F, lo))
        return PowerPiecewise(self._breaks, out[::-1], self.domain)

    # composition -----------------------------------------------------------
    def compose_monomial(self, K: float, e: float,
                         domain: IntervalDomain = HALF_LINE) -> "PowerPiecewise":
        """``x -> self(K * x**e)`` on ``domain`` (K > 0, e != 0).

        Values of ``K x**e`` beyond this function's domain map to 0.
        """
        if not K > 0 or e == 0:
            raise ValueError("need K > 0 and e != 0")
        lnK = math.log(K)

        def inv(y):
            if y == 0.0:
                return 0.0 if e > 0 else math.inf
            if math.isinf(y):
                return math.inf if e > 0 else 0.0
            return math.exp((math.log(y) - lnK) / e)

        segs = []
        for (lo, hi), p in zip(zip(self._breaks[:-1], self._breaks[1:]), self.pieces):
            x0, x1 = sorted((inv(lo), inv(hi)))
            new = []
            for c, a, k in p:
                base = c * K**a
                for j in range(k + 1):
                    coef = base * comb(k, j) * lnK ** (k - j) * e**j
                    new.append((coef, e * a, j))
            segs.append((x0, x1, merge_terms(new)))
        if not self.domain.is_half_line:
            y = self.domain.end
            if e > 0:
                segs.append((inv(y), math.inf, []))
            else:
                segs.append((0.0, inv(y), []))
        segs.sort(key=lambda s: s[0])
        br = [0.0]
        terms = []
        L = domain.end
        for x0, x1, t in segs:
            x0, x1 = max(x0, 0.0), min(x1, L)
            if not x1 > x0:
                continue
            if x0 > br[-1]:
                br.append(x0)
                terms.append([])
            br.append(x1)
            terms.append(t)
        if br[-1] < L:
            br.append(L)
            terms.append([])
        mono = self.monotone
        if mono and e < 0:
            mono = "nondecreasing" if mono == "nonincreasing" else "nonincreasing"
        return PowerPiecewise(br, terms, domain, monotone=mono)

    # serialisation ---------------------------------------------------------
    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(),
                "pieces": [{"from": _num_json(lo), "to": _num_json(hi),
                            "terms": [{"c": c, "alpha": a, "logk": k} for c, a, k in p]}
                           for (lo, hi), p in zip(zip(self._breaks[:-1], self._breaks[1:]),
                                                  self.pieces)]}

    def __eq__(self, other):
        return (isinstance(other, PowerPiecewise) and self._breaks == other._breaks
                and self.pieces == other.pieces and self.domain == other.domain)

    def __hash__(self):
        return hash((self._breaks, self.pieces))

    def __repr__(self):
        return f"PowerPiecewise(breaks={list(self._breaks)}, pieces={[list(p) for p in self.pieces]})"


# ---------------------------------------------------------------------------
# wrappers outside the exact family
# ---------------------------------------------------------------------------

class Pointwise(Evaluable):
    """A vectorised callable with breakpoints and optional asymptotic leads."""

    def __init__(self, func: Callable, breaks: Sequence[float], domain: IntervalDomain,
                 leads: dict | None = None, monotone: str | None = None):
        self.func = func
        self._breaks = tuple(float(b) for b in breaks)
        self.domain = domain
        self._leads = leads or {}
        self.monotone = monotone

    @property
    def breaks(self) -> tuple:
        return self._breaks

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        out = np.asarray(self.func(np.atleast_1d(x)), dtype=float)
        return out[0] if scalar else out

    def lead(self, end: str) -> Lead | None:
        return self._leads.get(end)


class PowerOf(Pointwise):
    """``base(x) ** r`` for a nonnegative PowerPiecewise ``base``."""

    def __init__(self, base: Evaluable, r: float):
        self.base = base
        self.r = float(r)
        leads = {}
        for end in (ZERO, INF):
            ld = base.lead(end)
            if ld is not None:
                try:
                    leads[end] = ld.pow(r)
                except (Divergence, ValueError):
                    leads[end] = Lead(math.inf, 0.0, 0.0, end) if r < 0 else None
        mono = base.monotone
        if mono and r < 0:
            mono = "nondecreasing" if mono == "nonincreasing" else "nonincreasing"

        def f(x, _b=base, _r=self.r):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.asarray(_b(x), dtype=float)
                return np.where(v > 0, np.abs(v) ** _r, 0.0 if _r > 0 else math.inf)

        super().__init__(f, base.breaks, base.domain, leads, mono)

    def left_limit(self, x: float) -> float:
        v = self.base.left_limit(x)
        return v**self.r if v > 0 else (0.0 if self.r > 0 else math.inf)


def as_exact(f: Evaluable) -> Evaluable:
    return f.to_power_piecewise() if isinstance(f, StepFunction) else f


def power(f: Evaluable, r: float) -> Evaluable:
    """``|f| ** r``, exact when the family allows it."""
    if r == 1.0:
        return f
    if isinstance(f, StepFunction):
        if r <= 0:
            return PowerOf(f.to_power_piecewise(), r)
        return StepFunction(f.breaks, [abs(v) ** r for v in f.values], f.domain)
    if isinstance(f, PowerPiecewise):
        ex = f.exact_power(r)
        if ex is not None:
            return ex
        return PowerOf(f, r)
    if isinstance(f, PowerOf):
        rr = f.r * r
        return power(f.base, rr) if abs(rr - 1.0) > 1e-15 else f.base
    return PowerOf(f, r)


def _merge_breaks(*fs) -> list:
    return sorted(set().union(*[set(f.breaks) for f in fs]))


def multiply(f: Evaluable, g: Evaluable) -> Evaluable:
    f, g = as_exact(f), as_exact(g)
    if isinstance(f, PowerPiecewise) and isinstance(g, PowerPiecewise):
        return f * g
    leads = {}
    for end in (ZERO, INF):
        try:
            lf, lg = f.lead(end), g.lead(end)
            if lf is not None and lg is not None:
                leads[end] = lf * lg
        except (Indeterminate, Divergence, ValueError):
            pass
    return Pointwise(lambda x, _f=f, _g=g: np.asarray(_f(x)) * np.asarray(_g(x)),
                     _merge_breaks(f, g), f.domain, leads)


def restrict(f: Evaluable, t: float) -> Evaluable:
    """``f * chi_[0, t)``."""
    if t >= f.domain.end:
        return f
    if isinstance(f, StepFunction):
        br = [b for b in f.breaks if b < t] + [t]
        return StepFunction(br, [f.value_at(0.5 * (lo + hi)) if math.isfinite(hi) else f.value_at(lo)
                                 for lo, hi in zip(br[:-1], br[1:])], f.domain)
    if isinstance(f, PowerPiecewise):
        return f.restrict(t)
    leads = {ZERO: f.lead(ZERO), INF: Lead(0.0, 0.0, 0.0, INF)}
    br = [b for b in f.breaks if b < t] + [t, f.domain.end]
    return Pointwise(lambda x, _f=f, _t=t: np.where(np.asarray(x) < _t, _f(x), 0.0),
                     br, f.domain, leads, monotone=f.monotone)


def divide(f: Evaluable, g: Evaluable) -> Evaluable:
    """``f / g``; exact only when ``g`` has single-term pieces."""
    f, g = as_exact(f), as_exact(g)
    if isinstance(g, PowerPiecewise):
        inv = g.exact_power(-1.0)
        if inv is not None and isinstance(f, PowerPiecewise):
            return f * inv
    leads = {}
    for end in (ZERO, INF):
        try:
            lf, lg = f.lead(end), g.lead(end)
            if lf is not None and lg is not None:
                leads[end] = lf / lg
        except (Indeterminate, Divergence, ValueError):
            pass

    def q(x, _f=f, _g=g):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(_f(x)) / np.asarray(_g(x))
    return Pointwise(q, _merge_breaks(f, g), f.domain, leads)


def _vectorise(func):
    return lambda x: np.array([func(float(t)) for t in np.atleast_1d(x)])


def cumulative(g: Evaluable) -> Evaluable:
    """``t -> int_0^t g``.  Raises :class:`Divergence` if ``g`` is not integrable at 0."""
    g = as_exact(g)
    if isinstance(g, PowerPiecewise):
        return g.cumulative()
    l0 = g.lead(ZERO)
    leads = {}
    if l0 is not None:
        leads[ZERO] = integral_at_zero(l0)
    li = g.lead(INF)
    if li is not None and g.domain.is_half_line:
        if converges_at(li):
            leads[INF] = Lead.const(_quad_integrate(g, 0.0, math.inf), INF)
        else:
            leads[INF] = growing_integral(li)

    def F(t, _g=g):
        return 0.0 if t <= 0 else _quad_integrate(_g, 0.0, min(t, _g.domain.end))
    return Pointwise(_vectorise(F), g.breaks, g.domain, leads)


def tail(g: Evaluable) -> Evaluable:
    """``t -> int_t^end g``.  Raises :class:`Divergence` if the tail is infinite."""
    g = as_exact(g)
    if isinstance(g, PowerPiecewise):
        return g.tail()
    end = g.domain.end
    leads = {}
    li = g.lead(INF)
    if g.domain.is_half_line and li is not None:
        leads[INF] = integral_at_inf(li)
    l0 = g.lead(ZERO)
    if l0 is not None:
        if converges_at(l0):
            leads[ZERO] = Lead.const(_quad_integrate(g, 0.0, end), ZERO)
        else:
            leads[ZERO] = growing_integral(l0)

    def T(t, _g=g, _e=end):
        return 0.0 if t >= _e else _quad_integrate(_g, t, _e)
    return Pointwise(_vectorise(T), g.breaks, g.domain, leads)


# ---------------------------------------------------------------------------
# rearrangement, truncation and dilation
# ---------------------------------------------------------------------------

def rearrange(f: StepFunction) -> StepFunction:
    """Nonincreasing rearrangement ``f*`` of a step function."""
    if not isinstance(f, StepFunction):
        raise RepresentationError("rearrange expects a StepFunction")
    pieces = [(abs(v), l) for v, l in zip(f.values, f.lengths) if v != 0.0]
    if not pieces:
        return StepFunction([0.0, f.domain.end], [0.0], f.domain, monotone="nonincreasing")
    for v, l in pieces:
        if math.isinf(l):
            raise Divergence("nonzero value on a piece of infinite measure")
    pieces.sort(key=lambda p: -p[0])
    br = [0.0]
    vals = []
    for v, l in pieces:
        nxt = br[-1] + l
        if nxt <= br[-1]:
            continue  # measure below the resolution of the running position
        if vals and vals[-1] == v:
            br[-1] = nxt
        else:
            br.append(nxt)
            vals.append(v)
    # guard against rounding past a finite domain end
    if br[-1] > f.domain.end:
        br[-1] = f.domain.end
    return StepFunction(br, vals, f.domain, monotone="nonincreasing")


def integrate(g: Evaluable, a: float, b: float) -> float:
    """``int_a^b g``; exact for step and power-log pieces.

    Raises :class:`Divergence` when the integral is infinite.
    """
    if not a < b:
        raise ValueError("integrate requires a < b")
    if b > g.domain.end:
        b = g.domain.end
    return g.integrate(a, b)


def truncate(f: StepFunction, s: float) -> tuple[StepFunction, StepFunction]:
    """Split ``f = f_low + f_high`` with ``f_low`` clipped to ``[-s, s]``."""
    if s < 0:
        raise ValueError("truncation level must be nonnegative")
    low = [min(max(v, -s), s) for v in f.values]
    high = [v - l for v, l in zip(f.values, low)]
    return (StepFunction(f.breaks, low, f.domain),
            StepFunction(f.breaks, high, f.domain))


def dilate(f: Evaluable, s: float) -> Evaluable:
    """``x -> f(x / s)``, restricted to the domain."""
    if not s > 0:
        raise ValueError("dilation factor must be positive")
    if s == 1.0:
        return f
    if isinstance(f, StepFunction):
        L = f.domain.end
        br = [b * s for b in f.breaks]
        vals = list(f.values)
        while br[-2] >= L:
            br.pop()
            vals.pop()
        br[-1] = min(br[-1], L)
        return StepFunction(br, vals, f.domain, monotone=f.monotone)
    if isinstance(f, PowerPiecewise):
        return f.compose_monomial(1.0 / s, 1.0, f.domain)
    leads = {}
    for end in (ZERO, INF):
        ld = f.lead(end)
        if ld is not None and ld.logpow == 0:
            leads[end] = Lead(ld.coef * s ** (-ld.power), ld.power, 0.0, end)
    return Pointwise(lambda x, _f=f, _s=s: _f(np.asarray(x) / _s),
                     [b * s for b in f.breaks if b * s < f.domain.end] + [f.domain.end],
                     f.domain, leads, monotone=f.monotone)


# ---------------------------------------------------------------------------
# suprema
# ---------------------------------------------------------------------------

def supremum(h: Evaluable, lo: float = 0.0, hi: float | None = None,
             per_segment: int = 40) -> tuple[float, float]:
    """``sup_{lo < t < hi} h(t)`` and a near-maximising ``t``.

    Every segment between breakpoints is sampled on a log grid, including
    left limits at segment ends; the best sample is refined with a bounded
    scalar search.  Limits at 0 / infinity come from ``h.lead``.
    """
    if hi is None:
        hi = h.domain.end
    cuts = [lo] + [b for b in h.breaks if lo < b < hi] + [hi]
    best, arg = -math.inf, None
    for end, at in ((ZERO, 0.0), (INF, math.inf)):
        if (end == ZERO and lo == 0.0) or (end == INF and math.isinf(hi)):
            ld = h.lead(end)
            if ld is not None:
                val = ld.limit()
                if val == math.inf:
                    return math.inf, at
                if val > best:
                    best, arg = val, at
    cands = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        a2 = a if a > 0 else (b * 1e-9 if math.isfinite(b) else 1e-9)
        b2 = b if math.isfinite(b) else max(a2, 1.0) * 1e9
        if not b2 > a2:
            continue
        xs = np.geomspace(a2, b2, per_segment)
        ys = np.asarray(h(xs[:-1]), dtype=float)
        right = h.left_limit(b2) if math.isfinite(b) else float(h(np.array([b2]))[0])
        xs_all = xs
        ys_all = np.append(ys, right)
        if np.any(np.isinf(ys_all) & (ys_all > 0)):
            j = int(np.argmax(ys_all))
            return math.inf, float(xs_all[j])
        j = int(np.nanargmax(ys_all))
        cands.append((ys_all[j], xs_all[j], xs_all, j))
        if ys_all[j] > best:
            best, arg = float(ys_all[j]), float(xs_all[j])
    # refine the best interior sample
    for yv, xv, xs, j in sorted(cands, key=lambda c: -c[0])[:3]:
        # endpoint samples get a one-sided bracket: the extremum may sit just inside
        u0, u1 = math.log(xs[max(j - 1, 0)]), math.log(xs[min(j + 1, len(xs) - 1)])
        if u1 > u0:
            res = _spo.minimize_scalar(lambda u: -float(h(np.array([math.exp(u)]))[0]),
                                       bounds=(u0, u1), method="bounded",
                                       options={"xatol": 1e-12})
            if -res.fun > best:
                best, arg = float(-res.fun), float(math.exp(res.x))
    return best, arg


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def function_from_json(obj) -> Evaluable:
    """Parse the documented function shapes (step or power-piecewise)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise RepresentationError("function JSON must be an object")
    domain = IntervalDomain.from_json(obj.get("domain"))
    if "breaks" in obj:
        return StepFunction([_f(b) for b in obj["breaks"]], [float(v) for v in obj["values"]],
                            domain)
    if "pieces" in obj:
        br = []
        terms = []
        for i, p in enumerate(obj["pieces"]):
            lo, hi = _f(p["from"]), _f(p["to"])
            if i == 0:
                br.append(lo)
            elif lo != br[-1]:
                raise RepresentationError(f"piece {i} does not start where piece {i-1} ends")
            br.append(hi)
            terms.append([(float(t["c"]), float(t.get("alpha", 0.0)), int(t.get("logk", 0)))
                          for t in p["terms"]])
        return PowerPiecewise(br, terms, domain, monotone=obj.get("monotone"))
    raise RepresentationError("function JSON needs 'breaks'/'values' or 'pieces'")


def function_to_json(f: Evaluable) -> dict:
    if isinstance(f, (StepFunction, PowerPiecewise)):
        return f.to_json()
    raise RepresentationError(f"{type(f).__name__} has no JSON form")


__all__ = [
    "IntervalDomain", "HALF_LINE", "StepFunction", "PowerPiecewise", "Pointwise", "PowerOf",
    "Evaluable", "RepresentationError", "Divergence", "Indeterminate",
    "rearrange", "integrate", "truncate", "dilate", "power", "multiply", "restrict",
    "supremum", "cumulative", "tail", "divide", "step", "indicator", "function_from_json", "function_to_json", "merge_terms",
]
