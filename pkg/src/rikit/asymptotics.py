"""Leading-order behaviour of power-log expressions at 0+ and at infinity.

A :class:`Lead` stands for ``coef * t**power * |ln t|**logpow`` near one end
of ``(0, inf)``.  Weight conditions are decided from these leads: a ratio of
integrals is bounded near an end exactly when its lead is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

ZERO = "zero"
INF = "inf"

_EPS = 1e-12


class Divergence(ArithmeticError):
    """An integral (or norm) is infinite.

    ``where`` describes the offending piece or endpoint.
    """

    def __init__(self, where: str):
        super().__init__(where)
        self.where = where


class Indeterminate(ArithmeticError):
    """The asymptotic order is outside the power-log family (e.g. ``ln ln t``)."""


@dataclass(frozen=True)
class Lead:
    coef: float
    power: float
    logpow: float
    end: str

    @classmethod
    def const(cls, c: float, end: str) -> "Lead":
        return cls(float(c), 0.0, 0.0, end)

    @property
    def is_zero(self) -> bool:
        return self.coef == 0.0

    def __call__(self, t):
        return self.coef * t**self.power * abs(math.log(t)) ** self.logpow

    def __mul__(self, other: "Lead") -> "Lead":
        _same_end(self, other)
        if self.is_zero or other.is_zero:
            return Lead(0.0, 0.0, 0.0, self.end)
        return Lead(self.coef * other.coef, self.power + other.power,
                    self.logpow + other.logpow, self.end)

    def __truediv__(self, other: "Lead") -> "Lead":
        return self * other.pow(-1.0)

    def scale(self, c: float) -> "Lead":
        return Lead(self.coef * c, self.power, self.logpow, self.end)

    def shift(self, power: float) -> "Lead":
        """Multiply by ``t**power``."""
        return Lead(self.coef, self.power + power, self.logpow, self.end)

    def pow(self, r: float) -> "Lead":
        if self.is_zero:
            if r <= 0:
                raise Divergence("power of a vanishing lead")
            return self
        if self.coef < 0:
            raise ValueError("power of a negative lead")
        return Lead(self.coef**r, self.power * r, self.logpow * r, self.end)

    def order(self) -> tuple[float, float]:
        """Sort key: larger means dominant at this end."""
        if self.end == INF:
            return (self.power, self.logpow)
        return (-self.power, self.logpow)

    def behaviour(self) -> str:
        """'inf', 'zero' or 'finite' for the limit of the lead at its end."""
        if self.is_zero:
            return "zero"
        a, k = self.power, self.logpow
        if abs(a) <= _EPS:
            if abs(k) <= _EPS:
                return "finite"
            return "inf" if k > 0 else "zero"
        grows = a > 0 if self.end == INF else a < 0
        return "inf" if grows else "zero"

    def limit(self) -> float:
        b = self.behaviour()
        if b == "inf":
            return math.inf
        if b == "zero":
            return 0.0
        return self.coef


def _same_end(a: Lead, b: Lead) -> None:
    if a.end != b.end:
        raise ValueError("leads at different ends")


def dominant(leads, end: str) -> Lead:
    """Leading lead of a sum; equal orders are merged."""
    best: Lead | None = None
    for ld in leads:
        if ld.is_zero:
            continue
        if best is None:
            best = ld
            continue
        ob, ol = best.order(), ld.order()
        if abs(ob[0] - ol[0]) <= _EPS and abs(ob[1] - ol[1]) <= _EPS:
            c = best.coef + ld.coef
            scale = max(abs(best.coef), abs(ld.coef))
            if abs(c) <= 1e-13 * scale:
                raise Indeterminate("leading terms cancel")
            best = Lead(c, best.power, best.logpow, end)
        elif ol > ob:
            best = ld
    return best if best is not None else Lead(0.0, 0.0, 0.0, end)


def integral_at_zero(g: Lead) -> Lead:
    """Lead at 0 of ``t -> int_0^t g``; raises if the integral diverges."""
    a, k = g.power, g.logpow
    if g.is_zero:
        return g
    if a > -1 + _EPS:
        return Lead(g.coef / (a + 1), a + 1, k, ZERO)
    if abs(a + 1) <= _EPS and k < -1 - _EPS:
        return Lead(g.coef / (-(k + 1)), 0.0, k + 1, ZERO)
    raise Divergence("integral diverges at 0")


def integral_at_inf(g: Lead) -> Lead:
    """Lead at infinity of ``t -> int_t^inf g``; raises if it diverges."""
    a, k = g.power, g.logpow
    if g.is_zero:
        return g
    if a < -1 - _EPS:
        return Lead(g.coef / (-(a + 1)), a + 1, k, INF)
    if abs(a + 1) <= _EPS and k < -1 - _EPS:
        return Lead(g.coef / (-(k + 1)), 0.0, k + 1, INF)
    raise Divergence("integral diverges at infinity")


def converges_at(g: Lead) -> bool:
    try:
        if g.end == ZERO:
            integral_at_zero(g)
        else:
            integral_at_inf(g)
    except Divergence:
        return False
    return True


def growing_integral(g: Lead) -> Lead:
    """Lead of a divergent integral taken toward the end of ``g``.

    At 0 this is ``int_t^b g`` as ``t -> 0``; at infinity ``int_a^t g``.
    """
    a, k = g.power, g.logpow
    toward_inf = g.end == INF
    if abs(a + 1) <= _EPS:
        if abs(k + 1) <= _EPS:
            raise Indeterminate("iterated logarithm")
        return Lead(g.coef / (k + 1), 0.0, k + 1, g.end)
    if (a > -1) == toward_inf:
        c = g.coef / abs(a + 1)
        return Lead(c, a + 1, k, g.end)
    raise ValueError("integral converges; use the convergent constant")
