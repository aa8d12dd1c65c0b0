"""Scenario runner: verification suites and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .funcrep import HALF_LINE, IntervalDomain, PowerPiecewise, StepFunction, rearrange
from .operators import (HypothesisError, boyd_upper_index, couple_operator, default_epsilon,
                        k_functional, q_lambda, q_lambda_conjugation, q_p_apply, q_p_iterate,
                        q_x, s_lorentz_form, s_operator, s_series, test_membership)
from .orlicz import (OrliczFunction, a_phi_upper_bound, certified_modular_constant,
                     check_prop11_iii, decide_prop9, decide_prop10, hardy_modular,
                     indicator_witness, lemma3_improve, lemma3_interval, modular, simonenko)
from .spaces import (CoupleDescriptor, FundamentalFunction, SpaceDescriptor,
                     fundamental_function, lemma2_check, norm, partial_norm,
                     random_nonincreasing)
from .weights import Grid, Weight, check_am_q, check_cond22, check_cond23, check_cond24

S = SpaceDescriptor


class ScenarioError(ValueError):
    """Malformed scenario input."""


@dataclass
class Expectation:
    name: str
    passed: bool
    measured: object = None
    tolerance: object = None
    witness: object = None

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": _clean(self.measured),
                "tolerance": _clean(self.tolerance), "witness": _clean(self.witness)}


@dataclass
class Scenario:
    id: str
    seed: int = 42
    config: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj) -> "Scenario":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as e:
                raise ScenarioError(f"scenario JSON line {e.lineno} column {e.colno}: {e.msg}")
        if not isinstance(obj, dict) or "id" not in obj:
            raise ScenarioError("scenario needs an 'id'")
        return cls(obj["id"], int(obj.get("seed", 42)), dict(obj.get("config", {})))


@dataclass
class RunReport:
    scenario: str
    seed: int
    config: dict
    expectations: list
    constants: dict = field(default_factory=dict)
    version: str = __version__
    timing: float | None = None
    curves: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.expectations)

    @property
    def failures(self) -> list:
        return [e for e in self.expectations if not e.passed]

    def to_json(self) -> dict:
        d = {"scenario": self.scenario, "seed": self.seed, "passed": self.passed,
             "version": self.version, "config": _clean(self.config),
             "expectations": [e.to_json() for e in self.expectations],
             "constants": _clean(self.constants)}
        if self.timing is not None:
            d["timing_s"] = self.timing
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RunReport":
        exps = [Expectation(e["name"], e["passed"], e["measured"], e["tolerance"], e["witness"])
                for e in d["expectations"]]
        return cls(d["scenario"], d["seed"], d["config"], exps, d["constants"], d["version"],
                   d.get("timing_s"))


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    den = max(abs(a), abs(b))
    return abs(a - b) / den if den > 0 else 0.0


def _grid(cfg) -> Grid:
    g = Grid.default()
    return Grid(float(cfg.get("grid_min", g.min)), float(cfg.get("grid_max", g.max)),
                int(cfg.get("grid_points", g.points)))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def random_step(rng: np.random.Generator, max_pieces: int = 20,
                domain: IntervalDomain = HALF_LINE) -> StepFunction:
    """Random step function with signed values and some zero pieces."""
    n = int(rng.integers(1, max_pieces + 1))
    br = np.unique(np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=n)))
    vals = rng.normal(size=len(br)) * np.exp(rng.uniform(-3, 3, size=len(br)))
    vals[rng.random(len(br)) < 0.15] = 0.0
    return StepFunction([0.0] + list(br), list(vals), domain)


def random_concave_phi(rng) -> FundamentalFunction:
    """Concave splice of powers with exponents decreasing in ``(0, 1]``."""
    k = int(rng.integers(1, 4))
    exps = sorted(rng.uniform(0.1, 1.0, size=k), reverse=True)
    bks = sorted(np.exp(rng.uniform(-3, 3, size=k - 1)))
    breaks, terms, prev = [0.0], [[(1.0, float(exps[0]), 0)]], float(exps[0])
    cur = lambda t: 1.0 * t**prev
    for b, a in zip(bks, exps[1:]):
        v = cur(b)
        breaks.append(float(b))
        terms.append([(v * b ** (-a), float(a), 0)])
        prev_v, prev_b, prev = v, b, float(a)
        cur = (lambda t, _v=prev_v, _b=prev_b, _a=prev: _v * (t / _b) ** _a)
    breaks.append(math.inf)
    return FundamentalFunction(PowerPiecewise(breaks, terms))


def random_convex_orlicz(rng) -> OrliczFunction:
    """Sum of powers ``>= 1`` with convex kinks ``kappa (t^a - b^a)_+`` added at random breaks."""
    k = int(rng.integers(1, 4))
    base = [(float(rng.uniform(0.2, 2.0)), float(rng.uniform(1.0, 3.5)), 0) for _ in range(k)]
    bks = sorted(np.exp(rng.uniform(-2, 2, size=int(rng.integers(0, 3)))))
    breaks = [0.0] + [float(b) for b in bks] + [math.inf]
    terms = [list(base)]
    cur = list(base)
    for b in bks:
        a = float(rng.uniform(1.0, 3.5))
        kap = float(rng.uniform(0.1, 2.0))
        cur = cur + [(kap, a, 0), (-kap * b**a, 0.0, 0)]
        terms.append(list(cur))
    return OrliczFunction(PowerPiecewise(breaks, terms))


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _norm_spaces():
    ph = FundamentalFunction.power(0.5)
    ph3 = FundamentalFunction(PowerPiecewise([0.0, 1.0, math.inf],
                                             [[(1.0, 0.75, 0)], [(1.0, 0.25, 0)]]))
    return [S.Lp(1), S.Lp(2.5), S.Lp(math.inf), S.LorentzPQ(2, 1), S.LorentzPQ(3, 4),
            S.LorentzPQ(2, math.inf), S.ClassicalLambda(Weight.power(-0.5), 1),
            S.ClassicalLambda(Weight.power(0.5), 3), S.ClassicalLambda(Weight.power(0.5), math.inf),
            S.LambdaOf(ph3), S.MOf(ph), S.MOf(ph3), S.MStarOf(ph3),
            S.LorentzOrlicz(Weight.power(0.0), OrliczFunction.power(2.0))]


def sc_rearrangement(seed, cfg):
    """Equimeasurability and rearrangement invariance of every norm."""
    rng = np.random.default_rng(seed)
    n = int(cfg.get("functions", 1000))
    levels = int(cfg.get("levels", 64))
    tol = float(cfg.get("tol", 1e-9))
    spaces = _norm_spaces()
    worst_eq, worst_norm, wit = 0.0, 0.0, None
    for _ in range(n):
        f = random_step(rng)
        fs = rearrange(f)
        perm = rng.permutation(len(f.values))
        lens = f.lengths
        br = np.concatenate([[0.0], np.cumsum(lens[perm])])
        g = StepFunction(list(br), [f.values[i] for i in perm], f.domain)
        mx = max(abs(v) for v in f.values) if f.values else 0.0
        for lam in np.linspace(0.0, mx, levels, endpoint=False):
            direct = float(sum(l for v, l in zip(f.values, lens) if abs(v) > lam))
            d = abs(direct - fs.level_measure(lam)) / max(direct, 1e-300)
            worst_eq = max(worst_eq, d)
        for sp in spaces:
            a, b, c = norm(sp, f), norm(sp, fs, assume_nonincreasing=True), norm(sp, g)
            d = max(_rel(a, b), _rel(a, c))
            if d > worst_norm:
                worst_norm, wit = d, {"space": sp.to_json(), "f": f.to_json()}
    return [Expectation("equimeasurable", worst_eq <= tol, worst_eq, tol),
            Expectation("norm_invariance", worst_norm <= tol, worst_norm, tol,
                        wit if worst_norm > tol else None)], {"functions": n}


def sc_amq(seed, cfg):
    """(AM_q) for pure powers against the closed form."""
    rng = np.random.default_rng(seed)
    n = int(cfg.get("weights", 200))
    tol = float(cfg.get("tol", 1e-6))
    grid = _grid(cfg)
    bad_verdict, worst, wit = 0, 0.0, None
    for _ in range(n):
        c = float(np.exp(rng.uniform(-3, 3)))
        beta = float(rng.uniform(-0.95, 3.5))
        w = Weight.power(beta, c)
        for q in (1.0, 1.5, 2.0, 3.0):
            rep = check_am_q(w, q, grid)
            expect = beta + 1 < q
            if rep.holds != expect:
                bad_verdict += 1
                wit = {"beta": beta, "c": c, "q": q}
            if expect:
                d = _rel(rep.constant, (beta + 1) / (q - beta - 1))
                if d > worst:
                    worst = d
                    if d > tol:
                        wit = {"beta": beta, "c": c, "q": q}
    return [Expectation("verdicts", bad_verdict == 0, bad_verdict, 0, wit if bad_verdict else None),
            Expectation("constants", worst <= tol, worst, tol, wit if worst > tol else None)], \
        {"checks": 4 * n}


def _modular_pairs(fail: bool):
    sp1 = OrliczFunction.spliced([(1.5,), (1.0, 2.5)])
    sp2 = OrliczFunction.spliced([(1.2,), (0.5, 2.0), (4.0, 3.0)])
    sp3 = OrliczFunction(PowerPiecewise([0, 1, math.inf], [[(1, 1, 0)], [(0.5, 2, 0), (0.5, 1, 0)]]))
    if not fail:
        out = []
        for q in (1.5, 2.0, 3.0):
            for beta in (-0.5, 0.0, 0.3):
                if beta + 1 < q:
                    out.append((beta, OrliczFunction.power(q)))
        for ph in (sp1, sp2, sp3):
            for beta in (-0.75, -0.5, -0.25, -0.1):
                out.append((beta, ph))
        return out[:20]
    return [(1.0, OrliczFunction.power(1.5)), (1.5, OrliczFunction.power(2.0)),
            (2.0, OrliczFunction.power(2.0)), (2.5, OrliczFunction.power(3.0)),
            (0.5, OrliczFunction.power(1.0)), (0.5, sp1), (1.0, sp2), (0.5, sp2), (0.0, sp3),
            (1.5, sp3)]


def sc_prop8(seed, cfg):
    """Modular Hardy inequality: certified bounds and indicator witnesses."""
    samples = int(cfg.get("samples", 500))
    slack = float(cfg.get("slack", 0.01))
    exps, consts = [], {}
    worst_excess, wit = -math.inf, None
    for i, (beta, phi) in enumerate(_modular_pairs(False)):
        w = Weight.power(beta)
        cert = certified_modular_constant(w, phi)
        rng = np.random.default_rng(seed + i)
        worst = 0.0
        for _ in range(samples):
            f = random_nonincreasing(rng)
            r = hardy_modular(w, phi, f) / modular(w, phi, f)
            if r > worst:
                worst, arg = r, f
        ex = worst / cert - 1.0
        consts[f"pass{i}"] = {"beta": beta, "ratio": worst, "certified": cert}
        if ex > worst_excess:
            worst_excess = ex
            wit = {"beta": beta, "phi": phi.to_json(), "f": arg.to_json()}
    exps.append(Expectation("passing_pairs_within_certified", worst_excess <= slack,
                            worst_excess, slack, wit if worst_excess > slack else None))
    missing = []
    for i, (beta, phi) in enumerate(_modular_pairs(True)):
        w = Weight.power(beta)
        r, f = indicator_witness(w, phi, 1e3)
        consts[f"fail{i}"] = {"beta": beta, "indicator_ratio": r}
        if not r > 1e3:
            missing.append({"beta": beta, "phi": phi.to_json()})
    exps.append(Expectation("failing_pairs_have_witness", not missing, len(missing), 0,
                            missing or None))
    return exps, consts


def sc_prop7_iterates(seed, cfg):
    """Closed-form iterate against repeated application."""
    rng = np.random.default_rng(seed)
    nf = int(cfg.get("functions", 20))
    npts = int(cfg.get("points", 10))
    tol = float(cfg.get("tol", 1e-6))
    worst, wit = 0.0, None
    for _ in range(nf):
        f = random_nonincreasing(rng)
        t = np.exp(rng.uniform(math.log(1e-3), math.log(f.breaks[-1] * 10), size=npts))
        for p in (1.0, 2.0):
            for n in range(1, 5):
                a = np.asarray(q_p_iterate(p, n, f)(t))
                b = np.asarray(q_p_apply(p, n, f)(t))
                d = max(_rel(x, y) for x, y in zip(a, b))
                if d > worst:
                    worst, wit = d, {"p": p, "n": n, "f": f.to_json(), "t": list(t)}
    zero = q_p_iterate(2.0, 0, f)
    return [Expectation("iterate_identity", worst <= tol, worst, tol, wit if worst > tol else None),
            Expectation("n0_identity", zero is f)], {"max_rel": worst}


def sc_prop7(seed, cfg):
    """S operator: series, closed form and Lorentz norm form."""
    rng = np.random.default_rng(seed)
    ncase = int(cfg.get("cases", 20))
    N = int(cfg.get("terms", 30))
    tol = float(cfg.get("tol", 1e-6))
    worst_tail, worst_lor, mono_ok, wit = -math.inf, 0.0, True, None
    for _ in range(ncase):
        f = random_nonincreasing(rng)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        eps = float(rng.uniform(0.05, 0.6))
        t = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=10))
        closed = np.asarray(s_operator(p, eps, f)(t))
        ser = s_series(p, eps, f, N)
        part = np.asarray(ser(t))
        lor = np.asarray(s_lorentz_form(p, eps, f)(t))
        gap = closed**p - part**p
        excess = float(np.max(np.maximum(-gap, gap - ser.tail_bound) / np.maximum(closed**p, 1e-300)))
        if excess > worst_tail:
            worst_tail = excess
            wit = {"p": p, "eps": eps, "f": f.to_json()}
        worst_lor = max(worst_lor, max(_rel(a, b) for a, b in zip(closed, lor)))
        prev = np.zeros_like(t)
        for n in (1, 5, 10, N):
            cur = np.asarray(s_series(p, eps, f, n)(t))
            mono_ok &= bool(np.all(cur >= prev * (1 - 1e-14)))
            prev = cur
    ind = StepFunction([0.0, 1.0], [1.0], HALF_LINE)
    eps = 0.3
    v = float(s_operator(2.0, eps, ind)(0.5))
    tol_tail = 1e-12
    Y = S.ClassicalLambda(Weight.power(0.0), 4)
    e_def = default_epsilon(2.0, Y, samples=int(cfg.get("samples", 16)), seed=seed)
    exps = [Expectation("series_within_tail_bound", worst_tail <= tol_tail, worst_tail, tol_tail,
                        wit if worst_tail > tol_tail else None),
            Expectation("lorentz_form", worst_lor <= tol, worst_lor, tol),
            Expectation("partial_sums_increase", mono_ok),
            Expectation("indicator_value", _rel(v, (1 / (1 - eps)) ** 0.5) <= 1e-12, v,
                        (1 / (1 - eps)) ** 0.5),
            Expectation("default_epsilon_in_range", 0 < e_def < 0.5, e_def)]
    bi = {}
    for p in (1.5, 2.0, 4.0):
        b = float(boyd_upper_index(S.Lp(p), samples=int(cfg.get("boyd_samples", 12)), seed=seed))
        bi[f"Lp{p:g}"] = b
        exps.append(Expectation(f"boyd_Lp{p:g}", abs(b - 1 / p) <= 0.05, b, 1 / p))
    return exps, {"boyd": bi, "default_epsilon": e_def}


def _banach_spaces(rng):
    k = int(rng.integers(0, 5))
    if k == 0:
        return S.Lp(float(rng.uniform(1.0, 4.0)))
    if k == 1:
        p = float(rng.uniform(1.2, 4.0))
        return S.LorentzPQ(p, float(rng.uniform(1.0, p)))
    if k == 2:
        return S.LambdaOf(random_concave_phi(rng))
    if k == 3:
        return S.MOf(random_concave_phi(rng))
    return S.ClassicalLambda(Weight.power(float(rng.uniform(-0.9, 0.0))), 1)


def sc_k_sandwich(seed, cfg):
    """``Q_X f <= K(phi(t), f)/phi(t) <= 2 Q_X f``."""
    rng = np.random.default_rng(seed)
    n = int(cfg.get("cases", 100))
    tol = float(cfg.get("tol", 1e-9))
    lo, hi, wit = math.inf, -math.inf, None
    for _ in range(n):
        sp = _banach_spaces(rng)
        f = random_nonincreasing(rng, max_pieces=12)
        t = float(np.exp(rng.uniform(math.log(1e-3), math.log(1e3))))
        ph = float(fundamental_function(sp).phi.value_at(t))
        K = k_functional(sp, ph, f)
        Q = float(q_x(sp, f)(t))
        r = K.value / (ph * Q)
        if r < lo or r > hi:
            lo, hi = min(lo, r), max(hi, r)
            if not (1 - tol <= r <= 2 + tol):
                wit = {"space": sp.to_json(), "t": t, "f": f.to_json(), "ratio": r}
    L1 = S.Lp(1)
    f = random_nonincreasing(rng)
    kd = k_functional(L1, 2.0, f).value
    exact = f.integrate(0.0, 2.0)
    return [Expectation("sandwich", lo >= 1 - tol and hi <= 2 + tol, [lo, hi], [1 - tol, 2 + tol],
                        wit),
            Expectation("L1_Linf_classical", _rel(kd, exact) <= 1e-12, kd, exact)], \
        {"min_ratio": lo, "max_ratio": hi}


def sc_lemma2(seed, cfg):
    exps, consts = [], {}
    grid = _grid(cfg)
    for p in (1.5, 2.0, 3.0, 5.0):
        r = lemma2_check(FundamentalFunction.power(1 / p), "d", grid=grid)
        c = lemma2_check(FundamentalFunction.power(1 / p), "c", grid=grid)
        consts[f"d_p{p:g}"] = r.constant
        exps.append(Expectation(f"d_closed_form_p{p:g}",
                                r.holds and _rel(r.constant, p / (p - 1)) <= 1e-6,
                                r.constant, p / (p - 1)))
        exps.append(Expectation(f"c_matches_d_p{p:g}", c.holds and _rel(c.constant, p / (p - 1))
                                <= 1e-6, c.constant, p / (p - 1)))
    r = lemma2_check(FundamentalFunction.power(1.0), "d", grid=grid)
    exps.append(Expectation("d_fails_for_t", (not r.holds) and r.divergence is not None,
                            r.divergence))
    b = lemma2_check(FundamentalFunction.power(0.5), "b", samples=int(cfg.get("samples", 200)),
                     seed=seed, grid=grid)
    exps.append(Expectation("b_sampled_ratio_le_2", b.constant <= 2 + 1e-9, b.constant, 2.0))
    consts["b_worst"] = b.constant
    return exps, consts


def sc_lemma3(seed, cfg):
    """Exponent improvement on certified triples: alpha admissible and psi passes."""
    rng = np.random.default_rng(seed)
    n = int(cfg.get("triples", 20))
    grid = Grid(points=int(cfg.get("grid_points", 64)))
    bad, consts, wit = 0, {}, None
    triples = []
    while len(triples) < n:
        if len(triples) % 2 == 0:
            q = float(rng.uniform(1.2, 4.0))
            phi = OrliczFunction.power(q)
            beta = float(rng.uniform(-0.9, q - 1.0 - 0.1))
        else:
            phi = OrliczFunction.spliced([(float(rng.uniform(1.1, 2.0)),),
                                          (float(np.exp(rng.uniform(-1, 1))),
                                           float(rng.uniform(2.0, 3.5)))])
            beta = float(rng.uniform(-0.9, 0.0))
        w = Weight.power(beta)
        B = a_phi_upper_bound(w, phi)
        if B is None:
            continue
        triples.append((w, phi, B, beta))
    for i, (w, phi, B, beta) in enumerate(triples):
        res = lemma3_improve(w, phi, B, grid)
        lo, hi = res.interval
        ok = lo < res.alpha < hi and res.passes
        consts[f"t{i}"] = {"beta": beta, "B": B, "alpha": res.alpha, "D": res.D_estimate}
        if not ok:
            bad += 1
            wit = {"beta": beta, "phi": phi.to_json(), "B": B}
    lo = lemma3_interval(0.5, 1.0)[0]
    return [Expectation("alpha_admissible_and_psi_passes", bad == 0, bad, 0, wit),
            Expectation("interval_example", abs(lo - math.log2(4 / 3)) < 1e-12, lo,
                        math.log2(4 / 3))], consts


def sc_simonenko(seed, cfg):
    rng = np.random.default_rng(seed)
    exps = []
    for p in (1.0, 1.5, 2.0, 3.7):
        ix = simonenko(OrliczFunction.power(p), 2.0)
        vals = [ix.p_T, ix.q_T, ix.p_0, ix.q_0, ix.p_liminf, ix.q_limsup]
        exps.append(Expectation(f"power_p{p:g}_exact", all(v == p for v in vals), vals, p))
    bad, wit = 0, None
    n = int(cfg.get("functions", 100))
    for _ in range(n):
        phi = random_convex_orlicz(rng)
        T = float(np.exp(rng.uniform(-2, 2)))
        ix = simonenko(phi, T)
        e = 1e-9
        ok = (1 - e <= ix.p_0 <= ix.p_T + e and ix.p_T <= ix.q_T + e and ix.q_T <= ix.q_0 + e
              and ix.q_0 < math.inf and ix.p_liminf >= ix.p_0 - e and ix.q_limsup <= ix.q_0 + e)
        if not ok:
            bad += 1
            wit = {"phi": phi.to_json(), "T": T}
    exps.append(Expectation("index_sandwich", bad == 0, bad, 0, wit))
    bi = {}
    for p in (1.5, 2.0, 4.0):
        for q in (1.0, 2.0, math.inf):
            b = float(boyd_upper_index(S.LorentzPQ(p, q), samples=int(cfg.get("boyd_samples", 12)),
                                       seed=seed))
            bi[f"L{p:g},{q:g}"] = b
            exps.append(Expectation(f"boyd_L{p:g},{q:g}", abs(b - 1 / p) <= 0.05, b, 1 / p))
    return exps, {"boyd": bi}


def sc_thm1(seed, cfg):
    exps = []
    c = CoupleDescriptor(S.Lp(2), S.LorentzPQ(2, math.inf))
    exps.append(Expectation("hypotheses_Lp_weak", c.theorem1_hypotheses, c.flags))
    rep = test_membership(c, (c.A0, c.A1), int(cfg.get("samples", 60)), seed)
    exps.append(Expectation("couple_itself_constant_1", abs(rep.sup_ratio - 1) <= 1e-9,
                            rep.sup_ratio, 1.0))
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(10):
        f = random_nonincreasing(rng)
        g = couple_operator(c, f)
        t = np.geomspace(1e-3, 1e3, 25)
        lhs = np.asarray(partial_norm(c.A1, g)(t))
        rhs = np.asarray(partial_norm(c.A0, f)(t))
        worst = max(worst, float(np.max((lhs - rhs) / rhs)))
    exps.append(Expectation("M_premise_for_Qf", worst <= 1e-9, worst, 1e-9))
    bad = CoupleDescriptor(S.Lp(1), S.Lp(math.inf))
    try:
        test_membership(bad, (bad.A0, bad.A1), 5, seed)
        refused = False
    except HypothesisError:
        refused = True
    exps.append(Expectation("refuses_without_hypotheses", refused, bad.flags))
    return exps, {"sup_ratio": rep.sup_ratio}


def sc_prop3(seed, cfg):
    rng = np.random.default_rng(seed)
    worst, dom, wit = 0.0, 0.0, None
    for _ in range(int(cfg.get("cases", 20))):
        phi = random_concave_phi(rng)
        f = random_nonincreasing(rng)
        t = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=20))
        a = np.asarray(q_lambda(phi, f)(t))
        b = np.asarray(q_lambda_conjugation(phi, f)(t))
        d = max(_rel(x, y) for x, y in zip(a, b))
        if d > worst:
            worst, wit = d, {"phi": phi.to_json(), "f": f.to_json()}
        p = float(rng.uniform(1.0, 4.0))
        qx = np.asarray(q_x(S.Lp(p), f)(t))
        ql = np.asarray(q_lambda(FundamentalFunction.power(1 / p), f)(t))
        dom = max(dom, float(np.max((qx - ql) / ql)))
    ex = np.asarray(q_lambda(FundamentalFunction.power(0.5),
                             StepFunction([0.0, 1.0], [1.0]))(np.array([0.5, 1.0, 4.0])))
    return [Expectation("conjugation_identity", worst <= 1e-9, worst, 1e-9,
                        wit if worst > 1e-9 else None),
            Expectation("QX_le_QLambda", dom <= 1e-12, dom, 1e-12),
            Expectation("indicator_example", bool(np.allclose(ex, [1.0, 1.0, 0.5], rtol=1e-12)),
                        list(ex), [1.0, 1.0, 0.5])], {}


def sc_prop4(seed, cfg):
    grid = _grid(cfg)
    bad, wit = 0, None
    for a in (0.25, 0.5, 1.0):
        ph = FundamentalFunction.power(a)
        for q in (1.0, 2.0, 4.0):
            for beta in (-0.5, 0.0, 0.4, 1.0, 2.5):
                r = check_cond22(Weight.power(beta), q, ph, grid)
                if r.holds != (beta + 1 < q * a):
                    bad += 1
                    wit = {"a": a, "q": q, "beta": beta}
        for beta in (0.0, 0.2, 0.5, 1.0):
            r = check_cond23(Weight.power(beta), ph, grid)
            if r.holds != (beta < a):
                bad += 1
                wit = {"a": a, "beta": beta, "cond": "2.3"}
    exps = [Expectation("cond22_cond23_verdicts", bad == 0, bad, 0, wit)]
    ph = FundamentalFunction.power(0.5)
    c = CoupleDescriptor(S.LambdaOf(ph), S.MStarOf(ph))
    n = int(cfg.get("samples", 40))
    cand = S.ClassicalLambda(Weight.power(0.0), 4)
    rep = test_membership(c, (cand, cand), n, seed)
    exps.append(Expectation("lambda_couple_bounded", rep.bounded and
                            rep.sup_ratio <= rep.certified_constant * (1 + 1e-9),
                            rep.sup_ratio, rep.certified_constant))
    c2 = CoupleDescriptor(S.LorentzPQ(2, 1), S.LorentzPQ(2, math.inf))
    bad_cand = S.ClassicalLambda(Weight.power(0.75), math.inf)
    rep2 = test_membership(c2, (bad_cand, bad_cand), n, seed)
    exps.append(Expectation("failing_23_counterexample", rep2.verdict == "counterexample",
                            rep2.sup_ratio, rep2.threshold, rep2.witness))
    return exps, {"bounded_ratio": rep.sup_ratio, "certified": rep.certified_constant}


def sc_prop5(seed, cfg):
    rng = np.random.default_rng(seed)
    worst = 0.0
    spaces = [S.Lp(1.5), S.Lp(3), S.LorentzPQ(2, 1), S.LorentzPQ(3, 2),
              S.LambdaOf(random_concave_phi(rng)), S.MOf(random_concave_phi(rng)),
              S.MStarOf(random_concave_phi(rng)), S.ClassicalLambda(Weight.power(-0.3), 2)]
    t = np.geomspace(1e-3, 1e3, 31)
    for sp in spaces:
        ph = fundamental_function(sp).phi
        for s in (0.01, 1.0, 37.0):
            f = StepFunction([0.0, s], [1.0])
            got = np.asarray(q_x(sp, f)(t))
            want = np.where(t < s, 1.0, ph.value_at(s) / np.asarray(ph(t)))
            worst = max(worst, max(_rel(a, b) for a, b in zip(got, want)))
    return [Expectation("QX_indicator_formula", worst <= 1e-9, worst, 1e-9)], {}


def sc_prop6(seed, cfg):
    grid = _grid(cfg)
    n = int(cfg.get("samples", 30))
    bad_v, bad_s, over, wit, cases = 0, 0, 0.0, None, 0
    for p in (1.5, 2.0, 4.0):
        c = CoupleDescriptor(S.Lp(p), S.LorentzPQ(p, math.inf))
        phiX = fundamental_function(c.A0)
        for q in (1.0, 2.0, 3.0, 6.0):
            for beta in (-0.5, 0.0, 0.5, 1.0, 2.0):
                w = Weight.power(beta)
                r = check_cond22(w, q, phiX, grid)
                expect = beta + 1 < q / p
                if r.holds != expect:
                    bad_v += 1
                    wit = {"p": p, "q": q, "beta": beta}
                if expect:
                    cases += 1
                    cand = S.ClassicalLambda(w, q)
                    rep = test_membership(c, (cand, cand), n, seed + cases)
                    ratio = rep.sup_ratio / rep.certified_constant
                    over = max(over, ratio)
                    if rep.verdict != "bounded_on_sample" or ratio > 10:
                        bad_s += 1
                        wit = {"p": p, "q": q, "beta": beta, "witness": rep.witness}
    exps = [Expectation("cond22_matches_closed_form", bad_v == 0, bad_v, 0, wit if bad_v else None),
            Expectation("sampling_consistent", bad_s == 0, over, 10.0, wit if bad_s else None)]
    bad24 = 0
    for p in (1.5, 2.0, 4.0):
        for beta in (0.0, 0.2, 0.5, 0.7):
            r = check_cond24(Weight.power(beta), S.Lp(p), grid)
            expect = beta < 1 / p
            if r.holds != expect or (expect and _rel(r.constant, (1 - beta * p) ** (-1 / p)) > 1e-6):
                bad24 += 1
    exps.append(Expectation("cond24_closed_form", bad24 == 0, bad24, 0))
    return exps, {"membership_cases": cases, "max_ratio_over_certified": over}


def sc_prop9(seed, cfg):
    n = int(cfg.get("samples", 20))
    exps, consts = [], {}
    sp = OrliczFunction.spliced([(1.5,), (1.0, 2.5)])
    cases = [("power_holds", Weight.power(0.5), OrliczFunction.power(2.0), True),
             ("power_fails", Weight.power(1.5), OrliczFunction.power(2.0), False),
             ("w1_p0_gt_1", Weight.power(0.0), sp, True),
             ("amq0_fails", Weight.power(3.0), sp, False)]
    for name, w, phi, want in cases:
        r = decide_prop9(w, phi, n, seed)
        observed = r.sampled["verdict"] == "bounded_on_sample"
        consts[name] = r.to_json()
        exps.append(Expectation(name, r.consistent and observed == want, observed, want,
                                r.sampled.get("witness")))
    return exps, consts


def sc_prop10(seed, cfg):
    n = int(cfg.get("samples", 20))
    dom = IntervalDomain.finite(1.0)
    sharp = OrliczFunction(PowerPiecewise([0, 1, math.inf],
                                          [[(1, 1, 0)], [(0.5, 2, 0), (0.5, 1, 0)]]))
    exps, consts = [], {}
    for name, w, phi in [("sharper", Weight.power(0.5, domain=dom), sharp),
                         ("power", Weight.power(0.5, domain=dom), OrliczFunction.power(2.0)),
                         ("w1", Weight.power(0.0, domain=dom), sharp)]:
        r = decide_prop10(w, phi, samples=n, seed=seed)
        consts[name] = r.to_json()
        ok = r.consistent and r.predicted_bounded is True and \
            r.sampled["verdict"] == "bounded_on_sample"
        if name == "sharper":
            ok = ok and not r.indices["AM_p0"]
        exps.append(Expectation(name, ok, r.predicted_bounded))
    return exps, consts


def sc_prop11(seed, cfg):
    grid = Grid(points=int(cfg.get("grid_points", 128)))
    bad = 0
    for q in (1.5, 3.0):
        for a in (0.25, 0.5, 1.0):
            for beta in (-0.5, 0.0, 0.5, 1.2):
                r = check_prop11_iii(Weight.power(beta), OrliczFunction.power(q),
                                     FundamentalFunction.power(a), grid)
                c = check_cond22(Weight.power(beta), q, FundamentalFunction.power(a), grid)
                if r.holds != c.holds or (c.holds and _rel(r.constant, c.constant) > 1e-9) \
                        or r.holds != (beta + 1 < q * a):
                    bad += 1
    e = check_prop11_iii(Weight.power(0.0), OrliczFunction.power(2.0), FundamentalFunction.power(1.0))
    sp = OrliczFunction.spliced([(2.0,), (0.5, 3.0)])
    s1 = check_prop11_iii(Weight.power(0.0), sp, FundamentalFunction.power(1.0), grid)
    s2 = check_prop11_iii(Weight.power(1.5), sp, FundamentalFunction.power(1.0), grid)
    return [Expectation("power_reduces_to_22", bad == 0, bad, 0),
            Expectation("example_w1_constant_1", e.holds and _rel(e.constant, 1.0) <= 1e-9,
                        e.constant, 1.0),
            Expectation("spliced_sufficient", s1.holds, s1.details.get("route")),
            Expectation("spliced_necessary_fails", not s2.holds, s2.divergence)], \
        {"spliced_constant": s1.constant}


SCENARIOS = {
    "thm1": sc_thm1, "prop3": sc_prop3, "prop4": sc_prop4, "prop5": sc_prop5,
    "prop6": sc_prop6, "prop7": sc_prop7, "prop8": sc_prop8, "prop9": sc_prop9,
    "prop10": sc_prop10, "prop11": sc_prop11, "lemma2": sc_lemma2, "lemma3": sc_lemma3,
    "prop7_iterates": sc_prop7_iterates, "k_sandwich": sc_k_sandwich,
    "rearrangement": sc_rearrangement, "amq": sc_amq, "simonenko": sc_simonenko,
}


def run_scenario(s: Scenario, timing: bool = False) -> RunReport:
    if s.id not in SCENARIOS:
        raise ScenarioError(f"unknown scenario id {s.id!r}; known: {', '.join(SCENARIOS)}")
    t0 = time.perf_counter()
    exps, consts = SCENARIOS[s.id](s.seed, dict(s.config))
    dt = time.perf_counter() - t0
    return RunReport(s.id, s.seed, dict(s.config), exps, consts,
                     timing=round(dt, 3) if timing else None)


def run_suite(suite: str = "all", seed: int = 42, config: dict | None = None,
              timing: bool = False) -> list[RunReport]:
    ids = list(SCENARIOS) if suite == "all" else [x.strip() for x in suite.split(",") if x.strip()]
    return [run_scenario(Scenario(i, seed, dict(config or {})), timing) for i in sorted(ids)]


def emit_report(r, format: str = "json") -> bytes:
    """JSON (stable ordering) or CSV with one row per expectation."""
    reports = r if isinstance(r, list) else [r]
    if format == "json":
        body = [x.to_json() for x in reports]
        payload = body if isinstance(r, list) else body[0]
        return (json.dumps(payload, indent=2, allow_nan=False) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["scenario", "seed", "kind", "name", "passed", "value", "tolerance"])
        for x in reports:
            for e in x.expectations:
                d = e.to_json()
                wr.writerow([x.scenario, x.seed, "expectation", e.name, int(bool(e.passed)),
                             json.dumps(d["measured"]), json.dumps(d["tolerance"])])
            for k, v in _flat(_clean(x.constants)):
                wr.writerow([x.scenario, x.seed, "constant", k, "", json.dumps(v), ""])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {format!r}")


def _flat(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flat(v, f"{prefix}{k}.")
    else:
        yield prefix.rstrip("."), obj


def emit_plot_data(curves: dict) -> bytes:
    """``curve,t,ratio`` rows, ``t`` increasing within each curve."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["curve", "t", "ratio"])
    for name in sorted(curves):
        ts, rs = curves[name]
        for t, r in sorted(zip(ts, rs)):
            wr.writerow([name, repr(float(t)), repr(float(r))])
    return buf.getvalue().encode()


__all__ = ["Scenario", "RunReport", "Expectation", "ScenarioError", "run_scenario", "run_suite",
           "emit_report", "emit_plot_data", "SCENARIOS", "random_step", "random_concave_phi",
           "random_convex_orlicz"]
