"""Command line entry point: ``rikit <subcommand> ...``.

Inputs are JSON files or inline JSON.  Exit codes: 0 all pass, 1 an
expectation failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .asymptotics import Divergence
from .funcrep import function_from_json
from .harness import (SCENARIOS, Scenario, _clean, emit_plot_data, emit_report,
                      run_scenario)
from .operators import (hardy, k_functional, q_lambda, q_p_iterate, q_x,
                        s_operator, test_membership)
from .orlicz import (OrliczFunction, check_a_phi, check_prop11_iii, decide_prop9, decide_prop10,
                     lemma3_improve, simonenko)
from .spaces import CapabilityError, CoupleDescriptor, FundamentalFunction, SpaceDescriptor, norm
from .weights import Grid, Weight, check_a1, check_am_q, check_cond22, check_cond23, check_cond24


class InputError(Exception):
    pass


def load_json(arg: str, what: str):
    """Inline JSON (starting with ``{`` or ``[``) or a path to a JSON file."""
    if arg is None:
        raise InputError(f"--{what} is required")
    text, src = arg, "inline"
    if not arg.lstrip().startswith(("{", "[")):
        if not os.path.exists(arg):
            raise InputError(f"--{what}: no such file {arg!r}")
        with open(arg) as fh:
            text, src = fh.read(), arg
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"--{what} ({src}) line {e.lineno} column {e.colno}: {e.msg}") from None


def _parse(kind, arg, what):
    obj = load_json(arg, what)
    try:
        if kind == "function":
            return function_from_json(obj)
        if kind == "weight":
            return Weight(function_from_json(obj))
        if kind == "phi":
            return FundamentalFunction(function_from_json(obj))
        if kind == "orlicz":
            return OrliczFunction.from_json(obj)
        if kind == "space":
            return SpaceDescriptor.from_json(obj)
        if kind == "couple":
            return CoupleDescriptor.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"--{what}: {e}") from None
    raise AssertionError(kind)


def _params(arg: str | None) -> dict:
    """``--params``: JSON object, a JSON file, or ``k=v,k=v``."""
    if not arg:
        return {}
    if arg.lstrip().startswith("{") or os.path.exists(arg):
        d = load_json(arg, "params")
        if not isinstance(d, dict):
            raise InputError("--params must be an object")
        return d
    out = {}
    for item in arg.split(","):
        if "=" not in item:
            raise InputError(f"--params: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v.strip()
    return out


def _floats(arg: str, what: str):
    try:
        return np.array([float(x) for x in arg.split(",") if x.strip()])
    except ValueError:
        raise InputError(f"--{what}: expected comma-separated numbers") from None


def _grid(a) -> Grid:
    g = Grid.default()
    return Grid(a.grid_min if a.grid_min is not None else g.min,
                a.grid_max if a.grid_max is not None else g.max,
                a.grid_points if a.grid_points is not None else g.points)


def _write(a, payload: bytes):
    if a.out:
        with open(a.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)


def _dump(a, obj):
    obj = _clean(obj)
    if a.format == "csv":
        rows = ["key,value"] + [f"{k},{json.dumps(v)}" for k, v in _flatten(obj)]
        _write(a, ("\n".join(rows) + "\n").encode())
    else:
        _write(a, (json.dumps(obj, indent=2) + "\n").encode())


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    else:
        yield prefix.rstrip("."), obj


def _expect(a, holds: bool) -> int:
    if a.expect is None:
        return 0
    return 0 if holds == (a.expect == "holds") else 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_check_weight(a) -> int:
    w = _parse("weight", a.weight, "weight")
    grid = _grid(a)
    c = a.condition
    if c == "amq":
        if a.q is None:
            raise InputError("amq needs --q")
        rep = check_am_q(w, a.q, grid)
    elif c == "a1":
        rep = check_a1(w, grid)
    elif c == "c22":
        if a.q is None or a.phi is None:
            raise InputError("c22 needs --q and --phi")
        rep = check_cond22(w, a.q, _parse("phi", a.phi, "phi"), grid)
    elif c == "c23":
        rep = check_cond23(w, _parse("phi", a.phi, "phi"), grid)
    else:
        rep = check_cond24(w, _parse("space", a.space, "space"), grid)
    if a.plot_data and rep.curve:
        with open(a.plot_data, "wb") as fh:
            fh.write(emit_plot_data({rep.condition: rep.curve}))
    _dump(a, rep.to_json())
    return _expect(a, rep.holds)


def cmd_norm(a) -> int:
    sp = _parse("space", a.space, "space")
    f = _parse("function", a.function, "function")
    _dump(a, {"space": sp.kind, "norm": norm(sp, f)})
    return 0


def cmd_op(a) -> int:
    f = _parse("function", a.function, "function")
    P = _params(a.params)
    t = _floats(a.eval_at, "eval-at")
    name = a.name
    if name == "hardy":
        g = hardy(f)
    elif name == "qlambda":
        g = q_lambda(_parse("phi", json.dumps(P["phi"]), "params.phi"), f)
    elif name == "qx":
        g = q_x(_parse("space", json.dumps(P["space"]), "params.space"), f)
    elif name == "qpn":
        g = q_p_iterate(float(P.get("p", 1.0)), int(P.get("n", 1)), f)
    else:
        g = s_operator(float(P.get("p", 1.0)), float(P.get("eps", P.get("epsilon", 0.5))), f)
    vals = np.asarray(g(t), dtype=float)
    _dump(a, {"operator": name, "params": P, "t": list(t), "values": list(vals)})
    return 0


def cmd_k(a) -> int:
    sp = _parse("space", a.space, "space")
    f = _parse("function", a.function, "function")
    r = k_functional(sp, a.t, f)
    _dump(a, r.to_json())
    return 0


def cmd_membership(a) -> int:
    c = _parse("couple", a.couple, "couple")
    cand = load_json(a.candidate, "candidate")
    try:
        if isinstance(cand, dict) and "X0" in cand:
            X0 = SpaceDescriptor.from_json(cand["X0"])
            X1 = SpaceDescriptor.from_json(cand.get("X1", cand["X0"]))
        else:
            X0 = X1 = SpaceDescriptor.from_json(cand)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"--candidate: {e}") from None
    rep = test_membership(c, (X0, X1), a.samples if a.samples is not None else 200, a.seed)
    _dump(a, rep.to_json())
    return _expect(a, rep.bounded)


def cmd_orlicz(a) -> int:
    phi = _parse("orlicz", a.phi, "phi")
    what = a.what
    if what == "indices":
        _dump(a, simonenko(phi, a.T).to_json())
        return 0
    w = _parse("weight", a.weight, "weight")
    n = a.samples if a.samples is not None else 40
    if what == "aphi":
        rep = check_a_phi(w, phi, Grid(points=a.grid_points) if a.grid_points else None)
        if a.plot_data and rep.curve:
            with open(a.plot_data, "wb") as fh:
                fh.write(emit_plot_data({rep.condition: rep.curve}))
        _dump(a, rep.to_json())
        return _expect(a, rep.holds)
    if what == "lemma3":
        if a.B is None:
            raise InputError("lemma3 needs --B")
        r = lemma3_improve(w, phi, a.B)
        _dump(a, {"alpha": r.alpha, "interval": list(r.interval), "D_estimate": r.D_estimate,
                  "psi": r.psi.to_json(), "psi_convex": r.psi_convex, "passes": r.passes})
        return _expect(a, r.passes)
    if what == "prop9":
        r = decide_prop9(w, phi, n, a.seed)
    elif what == "prop10":
        r = decide_prop10(w, phi, a.l, n, a.seed)
    else:
        phiX = _parse("phi", a.phix, "phix")
        rep = check_prop11_iii(w, phi, phiX, _grid(a))
        _dump(a, rep.to_json())
        return _expect(a, rep.holds)
    _dump(a, r.to_json())
    return 0 if r.consistent else 1


def _run_one(args):
    sid, seed, cfg = args
    return run_scenario(Scenario(sid, seed, cfg))


def cmd_verify(a) -> int:
    ids = sorted(SCENARIOS) if a.suite == "all" else [s.strip() for s in a.suite.split(",")]
    for s in ids:
        if s not in SCENARIOS:
            raise InputError(f"--suite: unknown scenario id {s!r}")
    cfg = {}
    if a.config:
        cfg.update(load_json(a.config, "config"))
    if a.samples is not None:
        cfg["samples"] = a.samples
    if a.tol is not None:
        cfg["tol"] = a.tol
    for key in ("grid_min", "grid_max", "grid_points"):
        if getattr(a, key) is not None:
            cfg[key] = getattr(a, key)
    jobs = [(s, a.seed, dict(cfg)) for s in ids]
    if a.jobs and a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as ex:
            reports = list(ex.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    reports.sort(key=lambda r: r.scenario)
    _write(a, emit_report(reports, a.format))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.scenario}", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int)
    common.add_argument("--grid-min", type=float)
    common.add_argument("--grid-max", type=float)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="rikit", description="r.i. spaces, weights and "
                                "interpolation operators")
    p.add_argument("--version", action="version", version=f"rikit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-weight", parents=[common], help="decide a weight condition")
    s.add_argument("--weight", required=True)
    s.add_argument("--condition", required=True, choices=("amq", "a1", "c22", "c23", "c24"))
    s.add_argument("--q", type=float)
    s.add_argument("--phi")
    s.add_argument("--space")
    s.add_argument("--plot-data")
    s.add_argument("--expect", choices=("holds", "fails"))
    s.set_defaults(func=cmd_check_weight)

    s = sub.add_parser("norm", parents=[common], help="norm of a function in a space")
    s.add_argument("--space", required=True)
    s.add_argument("--function", required=True)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("op", parents=[common], help="evaluate an operator")
    s.add_argument("--name", required=True, choices=("hardy", "qlambda", "qx", "qpn", "sop"))
    s.add_argument("--params")
    s.add_argument("--function", required=True)
    s.add_argument("--eval-at", required=True)
    s.set_defaults(func=cmd_op)

    s = sub.add_parser("k", parents=[common], help="K-functional for (X, L^inf)")
    s.add_argument("--space", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--function", required=True)
    s.set_defaults(func=cmd_k)

    s = sub.add_parser("membership", parents=[common], help="sample Q on a candidate pair")
    s.add_argument("--couple", required=True)
    s.add_argument("--candidate", required=True)
    s.add_argument("--expect", choices=("holds", "fails"))
    s.set_defaults(func=cmd_membership)

    s = sub.add_parser("orlicz", parents=[common], help="Orlicz function tools")
    s.add_argument("what", choices=("indices", "aphi", "lemma3", "prop9", "prop10", "prop11"))
    s.add_argument("--phi", required=True)
    s.add_argument("--weight")
    s.add_argument("--phix")
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--B", type=float)
    s.add_argument("--l", type=float)
    s.add_argument("--plot-data")
    s.add_argument("--expect", choices=("holds", "fails"))
    s.set_defaults(func=cmd_orlicz)

    s = sub.add_parser("verify", parents=[common], help="run scenario suites")
    s.add_argument("--suite", default="all")
    s.add_argument("--config")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return a.func(a)
    except (InputError, ValueError, CapabilityError, KeyError) as e:
        print(f"rikit: error: {e}", file=sys.stderr)
        return 2
    except Divergence as e:
        print(f"rikit: diverges: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
