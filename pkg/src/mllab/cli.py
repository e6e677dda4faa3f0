"""``mllab`` command line.

Exit codes: 0 success; 1 assertion failure in ``verify``; 2 unparsable input;
3 invalid parameters, unknown suite, or zero input where a nonzero one is
required; 4 decomposition guarantee violated; 5 fixture missing or stale.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .atoms import AtomFamily, decompose, decomposition_guarantees, synthesize
from .dyadic import ParseError, StepFunction
from .harness import SUITES, FixtureError, UnknownSuite, csv_text, load_fixtures, run_suite, TrialSpec, run_verify
from .lorentz import INF, DomainError, LorentzParams, lorentz_norm
from .morrey import MorreyLorentzParams, morrey_lorentz_norm, weak_morrey_norm
from .operators import (
    FracIntegralParams,
    MaximalParams,
    frac_integral,
    frac_integral_at,
    heat_extension,
    heat_extension_at,
    maximal,
)

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_PARSE = 2
EXIT_PARAMS = 3
EXIT_GUARANTEE = 4
EXIT_FIXTURE = 5


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    """15 significant digits, no locale."""
    x = float(x)
    if x == INF:
        return "inf"
    return f"{x:.15g}"


def _real(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return INF
    return float(text)


def _read_json(path: str, flag: str = "--input"):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{flag}: cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{flag}: {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _read_function(path: str, flag: str = "--input") -> StepFunction:
    obj = _read_json(path, flag)
    try:
        return StepFunction.from_json(obj)
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"{flag}: {path}: {exc}") from exc


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=1) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _points(specs: list[str], dim: int) -> np.ndarray:
    pts = []
    for s in specs:
        try:
            p = [float(c) for c in s.split(",")]
        except ValueError as exc:
            raise CliError(EXIT_PARAMS, f"--at: not a point: {s!r}") from exc
        if len(p) != dim:
            raise CliError(EXIT_PARAMS, f"--at: point {s!r} has {len(p)} coordinates, function has dim {dim}")
        pts.append(p)
    return np.array(pts)


def _params(builder, *args, flag: str = "parameters"):
    try:
        return builder(*args)
    except (DomainError, ValueError) as exc:
        raise CliError(EXIT_PARAMS, f"{flag}: {exc}") from exc


# -- commands -------------------------------------------------------------------------


def cmd_norm(a: argparse.Namespace) -> int:
    if a.space == "lorentz":
        lp = _params(LorentzParams, a.p, a.q, flag="--p/--q")
        f = _read_function(a.input)
        value = lorentz_norm(f, lp)
    elif a.space == "morrey-lorentz":
        if a.r is None:
            raise CliError(EXIT_PARAMS, "--r is required for --space morrey-lorentz")
        mp = _params(MorreyLorentzParams, a.p, a.q, a.r, flag="--p/--q/--r")
        value = morrey_lorentz_norm(_read_function(a.input), mp)
    else:
        _params(MorreyLorentzParams, a.p, a.q, INF, flag="--p/--q")
        value = weak_morrey_norm(_read_function(a.input), a.p, a.q)
    print(fmt(value))
    return EXIT_OK


def _emit_function(g: StepFunction, f_dim: int, a: argparse.Namespace, at_fn) -> None:
    if a.at:
        for x, val in zip(a.at, at_fn(_points(a.at, f_dim))):
            print(f"{x} {fmt(val)}")
    else:
        _write_json(g.to_json(), a.output)


def cmd_maximal(a: argparse.Namespace) -> int:
    mp = _params(MaximalParams, a.eta, a.theta, flag="--eta/--theta")
    f = _read_function(a.input)
    level = f.level if a.eval_level is None else a.eval_level
    if level < f.level:
        raise CliError(EXIT_PARAMS, f"--eval-level: must be at least the input level {f.level}")
    M = maximal(f, mp, level)
    _emit_function(M, f.dim, a, M.sample)
    return EXIT_OK


def cmd_fracint(a: argparse.Namespace) -> int:
    f = _read_function(a.input)
    fp = _params(FracIntegralParams, a.alpha, f.dim, flag="--alpha")
    level = f.level if a.eval_level is None else a.eval_level
    if level < f.level:
        raise CliError(EXIT_PARAMS, f"--eval-level: must be at least the input level {f.level}")
    if a.at:
        _emit_function(f, f.dim, a, lambda pts: frac_integral_at(f, fp.alpha, pts))
    else:
        _emit_function(frac_integral(f, fp, level, pad=a.pad), f.dim, a, None)
    return EXIT_OK


def cmd_heat(a: argparse.Namespace) -> int:
    if not a.t > 0:
        raise CliError(EXIT_PARAMS, "--t: must be positive")
    f = _read_function(a.input)
    level = f.level if a.eval_level is None else a.eval_level
    if level < f.level:
        raise CliError(EXIT_PARAMS, f"--eval-level: must be at least the input level {f.level}")
    if a.at:
        _emit_function(f, f.dim, a, lambda pts: heat_extension_at(f, a.t, pts))
    else:
        _emit_function(heat_extension(f, a.t, level, pad=a.pad), f.dim, a, None)
    return EXIT_OK


def cmd_decompose(a: argparse.Namespace) -> int:
    if a.K < 0:
        raise CliError(EXIT_PARAMS, "--K: must be >= 0")
    if not 0 < a.v <= 1:
        raise CliError(EXIT_PARAMS, "--v: must lie in (0, 1]")
    f = _read_function(a.input)
    if f.is_zero():
        raise CliError(EXIT_PARAMS, "--input: zero function has no decomposition")
    try:
        res = decompose(f, a.K, a.v)
    except (DomainError, ValueError) as exc:
        raise CliError(EXIT_PARAMS, f"--K: {exc}") from exc
    g = decomposition_guarantees(f, res, a.v)
    _write_json(res.family.to_json(), a.output)
    report = {
        "residual": res.residual.to_json(),
        "guarantees": g.to_json(),
        "level_range": list(res.level_range),
        "atoms": len(res.family.atoms),
    }
    if a.report:
        _write_json(report, a.report)
    bad = g.violations()
    if bad:
        raise CliError(EXIT_GUARANTEE, "decomposition guarantee violated: " + ", ".join(bad))
    if a.output and a.output != "-":
        print(f"atoms {len(res.family.atoms)} reconstruction_error {fmt(g.reconstruction_error)}")
    return EXIT_OK


def cmd_synthesize(a: argparse.Namespace) -> int:
    obj = _read_json(a.input)
    try:
        fam = AtomFamily.from_json(obj)
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"--input: {a.input}: {exc}") from exc
    g = synthesize(fam)
    if a.residual:
        rep = _read_json(a.residual, "--residual")
        try:
            g = g + StepFunction.from_json(rep["residual"] if "residual" in rep else rep)
        except (ParseError, TypeError) as exc:
            raise CliError(EXIT_PARSE, f"--residual: {a.residual}: {exc}") from exc
    if a.compare:
        f = _read_function(a.compare, "--compare")
        diff = (g - f).sup_norm()
        scale = f.sup_norm() if not f.is_zero() else 1.0
        print(f"max_cell_difference {fmt(diff)} relative {fmt(diff / scale)}")
        if a.output:
            _write_json(g.to_json(), a.output)
        return EXIT_OK
    _write_json(g.to_json(), a.output)
    return EXIT_OK


def _verify_targets(name: str) -> list[str]:
    if name == "all":
        return list(SUITES)
    if name not in SUITES:
        raise CliError(EXIT_PARAMS, f"--suite: unknown suite {name!r}; known: {', '.join(SUITES)}")
    return [name]


def cmd_verify(a: argparse.Namespace) -> int:
    if a.trials is not None and a.trials < 1:
        raise CliError(EXIT_PARAMS, "--trials: must be >= 1")
    names = _verify_targets(a.suite)
    reports = []
    try:
        for name in names:
            reports.extend(run_verify(name, a.trials, a.seed, a.mode, a.eval_level, a.fixtures, a.workers))
    except FixtureError as exc:
        raise CliError(EXIT_FIXTURE, str(exc)) from exc
    except UnknownSuite as exc:
        raise CliError(EXIT_PARAMS, f"--suite: {exc.args[0]}") from exc
    text = csv_text(reports)
    if a.report:
        Path(a.report).write_text(text, encoding="utf-8")
    failed = False
    for rep in reports:
        status = "record" if a.mode == "record" else ("PASS" if rep.passed else "FAIL")
        fx = f" fixture {fmt(rep.fixture.value)}" if rep.fixture is not None else ""
        print(f"{status} {rep.suite}[{rep.tag}] trials {len(rep.rows)} extreme {fmt(rep.statistic)}{fx}",
              file=sys.stderr)
        for msg in rep.failures:
            print(f"  {msg}", file=sys.stderr)
        failed |= not rep.passed
    return EXIT_ASSERT if failed else EXIT_OK


def cmd_estimate(a: argparse.Namespace) -> int:
    names = _verify_targets(a.suite)
    fixtures = load_fixtures(a.fixtures)
    for name in names:
        for ps in SUITES[name].sets:
            rep = run_suite(TrialSpec(name, ps.tag, a.trials, a.seed, a.eval_level), "record", fixtures, a.workers)
            fid = f"{name}[{ps.tag}]"
            fx = fixtures.get(fid)
            stored = fmt(fx.value) if fx is not None else "-"
            kind = "min" if ps.direction == "lower" else "max"
            print(f"{fid} {kind} {fmt(rep.statistic)} median {fmt(rep.median)} fixture {stored}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _suite_help() -> str:
    lines = ["suites (one named result each):"]
    for s in SUITES.values():
        lines.append(f"  {s.name:<16} {s.description}")
    lines.append("  all              every suite above")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mllab", description="Morrey-Lorentz norms, operators, and atomic decompositions on dyadic step functions.",
                                     epilog=__doc__.split("\n\n", 1)[1],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("norm", help="quasi-norm of a step function")
    p.add_argument("--space", required=True, choices=["lorentz", "morrey-lorentz", "weak-morrey"])
    p.add_argument("--p", type=_real, required=True)
    p.add_argument("--q", type=_real, required=True)
    p.add_argument("--r", type=_real, help="third exponent for --space morrey-lorentz (inf allowed)")
    p.add_argument("--input", required=True, help="step-function JSON")
    p.set_defaults(func=cmd_norm)

    def io_flags(p, pad_default=None):
        p.add_argument("--input", required=True, help="step-function JSON")
        p.add_argument("--eval-level", type=int, help="evaluation grid level (default: input level)")
        p.add_argument("--output", help="write the result step function here (default: stdout)")
        p.add_argument("--at", action="append", metavar="X[,Y]", help="print values at these points instead")
        if pad_default is not None:
            p.add_argument("--pad", type=int, default=pad_default,
                           help=f"evaluation window margin in domain-box sides (default {pad_default})")

    p = sub.add_parser("maximal", help="Lorentz-average maximal function M^(eta,theta)")
    p.add_argument("--eta", type=_real, default=1.0)
    p.add_argument("--theta", type=_real, default=1.0)
    io_flags(p)
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("fracint", help="fractional integral I_alpha (exact per cell)")
    p.add_argument("--alpha", type=_real, required=True)
    io_flags(p, 2)
    p.set_defaults(func=cmd_fracint)

    p = sub.add_parser("heat", help="heat extension e^{t Laplacian} f (exact per cell)")
    p.add_argument("--t", type=_real, required=True)
    io_flags(p, 1)
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("decompose", help="Calderon-Zygmund atomic decomposition")
    p.add_argument("--K", type=int, default=0, help="cancellation degree (default 0)")
    p.add_argument("--v", type=_real, default=1.0, help="aggregation exponent in (0, 1] (default 1)")
    p.add_argument("--input", required=True, help="step-function JSON")
    p.add_argument("--output", help="atom-family JSON (default: stdout)")
    p.add_argument("--report", help="JSON with residual, guarantees, and level_range")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("synthesize", help="sum an atom family")
    p.add_argument("--input", required=True, help="atom-family JSON")
    p.add_argument("--residual", help="decompose report (or step-function JSON) to add back")
    p.add_argument("--compare", help="step-function JSON to compare cellwise against")
    p.add_argument("--output", help="write the synthesized step function here")
    p.set_defaults(func=cmd_synthesize)

    def suite_flags(p, trials_help):
        p.add_argument("--suite", required=True, metavar="NAME", help="suite name or 'all'")
        p.add_argument("--trials", type=int, help=trials_help)
        p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
        p.add_argument("--eval-level", type=int, help="override the suite's evaluation level")
        p.add_argument("--fixtures", help="fixture file (default: $MLLAB_FIXTURES or the packaged file)")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    p = sub.add_parser("verify", help="run a verification suite", epilog=_suite_help(),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    suite_flags(p, "trial count (default: suite default)")
    p.add_argument("--mode", choices=["assert", "record"], default="assert")
    p.add_argument("--report", help="CSV output path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", help="empirical constants of a suite, without asserting or writing fixtures",
                       epilog=_suite_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    suite_flags(p, "trial count (default: suite default)")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: --help exits 0, flag errors exit 2
        code = exc.code if isinstance(exc.code, int) else 1
        return EXIT_OK if code == 0 else EXIT_PARAMS
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mllab {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"mllab {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
