"""Subcommands and the ``report-v1`` JSON document."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .. import __version__, freelie
from ..obstruction import ObstructionError, frac_str, stlc_verdict_asymmetric, stlc_verdict_symmetric
from ..signals import SignalError, xi
from ..simulate import SimulationError, exact_state_oracle, integrate
from ..vectorfields import VectorFieldError, eval_at_zero
from .dsl import DslError, SystemDocument, parse_bracket_spec, parse_controls, parse_system

SCHEMA = "stlc-oracle/report-v1"

EXIT_OBSTRUCTION = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


def parse_range(text: str) -> List[int]:
    """``2``, ``1..3`` or ``1,2,4``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            out = list(range(lo, hi + 1))
        else:
            out = sorted({int(x) for x in text.split(",")})
    except ValueError:
        raise UsageError(f"bad range {text!r}; use N, A..B or A,B,C") from None
    if not out or out[0] < 1:
        raise UsageError(f"range {text!r} must contain positive integers")
    return out


def parse_params(items: Sequence[str]) -> Dict[str, Fraction]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"bad --param {item!r}; use name=value")
        if "." in value:
            raise UsageError(f"--param {item!r}: decimals are not exact, write a rational such as 1/2")
        try:
            out[name.strip()] = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad --param value {value!r}") from None
    return out


def parse_rational(text: str, what: str) -> Fraction:
    if "." in text:
        raise UsageError(f"{what} {text!r}: decimals are not exact, write a rational such as 1/2")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad {what} {text!r}") from None


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _emit_json(payload: dict, target: Optional[str]):
    text = json.dumps(payload, indent=2) + "\n"
    if target == "-":
        sys.stdout.write(text)
    elif target:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def check_grid(ks, ms, asym=False, kps=None, mps=None) -> List[Tuple[int, ...]]:
    if not asym:
        return [(k, m) for k in ks for m in ms]
    return [(k, kp, m, mp) for k in ks for kp in kps if kp <= k for m in ms for mp in mps]


def _run_check(args) -> dict:
    text, source, overrides, cell, cap, timing = args
    system = parse_system(text, source).to_system(overrides)
    t0 = time.perf_counter()
    if len(cell) == 2:
        v = stlc_verdict_symmetric(system, cell[0], cell[1], cap)
    else:
        k, kp, m, mp = cell
        v = stlc_verdict_asymmetric(system, k, kp, m, mp, cap)
    entry = v.as_dict()
    entry["heuristic"] = False
    if timing:
        entry["timing_s"] = round(time.perf_counter() - t0, 6)
    return entry


def build_report(text: str, source: str, overrides: Dict[str, Fraction], grid, length_cap: Optional[int] = None,
                 jobs: int = 1, timing: bool = False) -> dict:
    doc = parse_system(text, source)
    system = doc.to_system(overrides)
    cap = freelie.configured_cap() if length_cap is None else length_cap
    tasks = [(text, source, overrides, cell, cap, timing) for cell in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            checks = list(pool.map(_run_check, tasks))
    else:
        checks = [_run_check(t) for t in tasks]
    n_obs = sum(c["outcome"] == "Obstruction" for c in checks)
    return {
        "schema": SCHEMA,
        "tool": {"name": "stlc-oracle", "version": __version__},
        "input": {
            "source": os.path.basename(source),
            "sha256": _digest(text),
            "system": doc.name,
            "dimension": doc.dim,
            "params": {k: frac_str(v) for k, v in system.params.items()},
        },
        "length_cap": cap,
        "checks": checks,
        "summary": {
            "checks": len(checks),
            "obstructions": n_obs,
            "inconclusive": len(checks) - n_obs,
            "truncated": any(c["truncated"] for c in checks),
        },
    }


def _fmt_vec(v) -> str:
    return "(" + ", ".join(v) + ")"


def cmd_check(ns) -> int:
    text = _read(ns.file)
    overrides = parse_params(ns.param)
    ks, ms = parse_range(ns.k_range), parse_range(ns.m_range)
    if ns.asym:
        kps = parse_range(ns.kprime_range) if ns.kprime_range else ks
        mps = parse_range(ns.mprime_range) if ns.mprime_range else ms
        grid = check_grid(ks, ms, True, kps, mps)
        if not grid:
            raise UsageError("no asymmetric cell has k' <= k")
    else:
        if ns.kprime_range or ns.mprime_range:
            raise UsageError("--kprime-range/--mprime-range need --asym")
        grid = check_grid(ks, ms)
    if ns.length_cap is not None and ns.length_cap < 1:
        raise UsageError("--length-cap must be positive")
    report = build_report(text, ns.file, overrides, grid, ns.length_cap, max(1, ns.jobs), ns.timing)
    if ns.json != "-":
        for c in report["checks"]:
            params = " ".join(f"{k}={v}" for k, v in c["parameters"].items())
            line = f"{c['mode']:<10} {params:<28} {c['outcome']}"
            if c["outcome"] == "Obstruction":
                line += f"  witness={_fmt_vec(c['bc']['witness'])}"
            elif c["bc"].get("blocking_case"):
                line += f"  blocking_case={c['bc']['blocking_case']}"
            if c["truncated"]:
                line += "  [truncated]"
            print(line)
        s = report["summary"]
        print(f"{s['obstructions']} obstruction(s), {s['inconclusive']} inconclusive")
    _emit_json(report, ns.json)
    return EXIT_OBSTRUCTION if report["summary"]["obstructions"] else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# brackets
# ---------------------------------------------------------------------------

def bracket_rows(doc: SystemDocument, max_length: int, at_zero: bool, overrides=None) -> List[dict]:
    basis = freelie.build_hall_basis(max_length)
    system = doc.to_system(overrides) if at_zero else None
    rows = []
    for i, b in enumerate(basis):
        length, n0, n1, n2 = freelie.counts(b)
        row = {"index": i, "bracket": str(b), "length": length, "n0": n0, "n1": n1, "n2": n2}
        fam = freelie.identify_family(b)
        if fam:
            row["family"] = f"{fam[0]} j={fam[1]} l={fam[2]}"
        if at_zero:
            row["f_at_zero"] = [frac_str(x) for x in eval_at_zero(system, b)]
        rows.append(row)
    return rows


def cmd_brackets(ns) -> int:
    text = _read(ns.file)
    doc = parse_system(text, ns.file)
    if ns.max_length < 1:
        raise UsageError("--max-length must be positive")
    rows = bracket_rows(doc, ns.max_length, ns.eval_at_zero, parse_params(ns.param))
    if ns.json:
        _emit_json({"schema": SCHEMA, "tool": {"name": "stlc-oracle", "version": __version__},
                    "input": {"source": os.path.basename(ns.file), "sha256": _digest(text)},
                    "brackets": rows}, ns.json)
    if ns.json != "-":
        for r in rows:
            line = f"{r['index']:>5}  len={r['length']} n0={r['n0']} n1={r['n1']} n2={r['n2']}  {r['bracket']}"
            if "family" in r:
                line += f"  [{r['family']}]"
            if "f_at_zero" in r:
                line += f"  f(0)={_fmt_vec(r['f_at_zero'])}"
            print(line)
    return 0


# ---------------------------------------------------------------------------
# simulate and xi
# ---------------------------------------------------------------------------

def cmd_simulate(ns) -> int:
    doc = parse_system(_read(ns.file), ns.file)
    system = doc.to_system(parse_params(ns.param))
    cp = parse_controls(_read(ns.controls), ns.controls).to_controls()
    t = cp.horizon if ns.t is None else parse_rational(ns.t, "--t")
    if t <= 0 or t > cp.horizon:
        raise SimulationError(f"--t {t} lies outside the control horizon (0, {cp.horizon}]")
    traj = integrate(system, cp, t, ns.rel_tol)
    names = [f"x{i + 1}" for i in range(system.dim)]
    payload = {
        "t": frac_str(t),
        "final": {n: float(x) for n, x in zip(names, traj.final)},
        "stats": traj.stats(),
    }
    if ns.exact:
        ex = exact_state_oracle(system, cp, t)
        payload["exact"] = {n: frac_str(x) for n, x in zip(names, ex)}
        payload["residual"] = max(abs(float(a) - float(b)) for a, b in zip(traj.final, ex))
    if ns.csv:
        with open(ns.csv, "w", encoding="utf-8") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for tt, xx in zip(traj.t, traj.x):
                fh.write(f"{tt!r}," + ",".join(repr(float(v)) for v in xx) + "\n")
    if ns.json:
        _emit_json(payload, ns.json)
    if ns.json != "-":
        print(f"t = {payload['t']}")
        for n, x in payload["final"].items():
            print(f"  {n} = {x:.17g}")
        st = payload["stats"]
        print(f"steps={st['steps']} rejected={st['rejected']} evaluations={st['evaluations']} "
              f"max_error_estimate={st['max_error_estimate']:.3g}")
        if ns.exact:
            print(f"exact residual = {payload['residual']:.3g}")
    return 0


def cmd_xi(ns) -> int:
    cp = parse_controls(_read(ns.controls), ns.controls).to_controls()
    try:
        b = parse_bracket_spec(ns.bracket)
    except freelie.FreeLieError as exc:
        raise UsageError(str(exc)) from None
    t = cp.horizon if ns.t is None else parse_rational(ns.t, "--t")
    if t < 0 or t > cp.horizon:
        raise SignalError(f"--t {t} lies outside the control horizon [0, {cp.horizon}]")
    val = xi(b, t, cp)
    print(f"xi_{b}({frac_str(t)}) = {frac_str(val)} ~ {float(val):.17g}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stlc-oracle", description="Quadratic obstructions to small-time local controllability.")
    p.add_argument("--version", action="version", version=f"stlc-oracle {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="grid of obstruction verdicts")
    c.add_argument("file")
    c.add_argument("--k-range", default="1")
    c.add_argument("--m-range", default="1")
    c.add_argument("--asym", action="store_true")
    c.add_argument("--kprime-range")
    c.add_argument("--mprime-range")
    c.add_argument("--length-cap", type=int)
    c.add_argument("--json", metavar="OUT", help="write the report to OUT ('-' for stdout)")
    c.add_argument("--param", action="append", metavar="NAME=VALUE")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--timing", action="store_true", help="add wall-clock timings to the report")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("brackets", help="list Hall members, optionally evaluated at 0")
    b.add_argument("file")
    b.add_argument("--max-length", type=int, default=3)
    b.add_argument("--eval-at-zero", action="store_true")
    b.add_argument("--param", action="append", metavar="NAME=VALUE")
    b.add_argument("--json", metavar="OUT")
    b.set_defaults(func=cmd_brackets)

    s = sub.add_parser("simulate", help="integrate the system for a control file")
    s.add_argument("file")
    s.add_argument("--controls", required=True)
    s.add_argument("--t")
    s.add_argument("--rel-tol", type=float, default=1e-9)
    s.add_argument("--csv", metavar="OUT")
    s.add_argument("--exact", action="store_true", help="compare with the exact oracle (corpus systems)")
    s.add_argument("--param", action="append", metavar="NAME=VALUE")
    s.add_argument("--json", metavar="OUT")
    s.set_defaults(func=cmd_simulate)

    x = sub.add_parser("xi", help="exact coordinate of the second kind")
    x.add_argument("controls")
    x.add_argument("--bracket", required=True)
    x.add_argument("--t")
    x.set_defaults(func=cmd_xi)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = make_parser().parse_args(argv)
        return ns.func(ns)
    except UsageError as exc:
        print(f"stlc-oracle: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DslError, ObstructionError, SimulationError, SignalError, VectorFieldError,
            freelie.FreeLieError, OSError) as exc:
        print(f"stlc-oracle: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
