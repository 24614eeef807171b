"""Command-line entry point: ``relprec <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 a bound was violated, 3 a check was
left undecided at the precision cap, 4 the analyzer could not derive a bound.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import analyzer as an
from .exactreal import DEFAULT_WORK_BITS, MAX_WORK_BITS
from .expr import ParseError, parse
from .formats import FloatGrid, Format, RoundingMode, unit_roundoff
from .model import (
    check_inner_product,
    exhaustive_vectors,
    InnerProductReport,
    inner_product_rp_bound,
    random_vectors,
    verify_model_exhaustive,
)
from .precision import relerr_counterexamples
from .serialize import SCHEMA_VERSION, approx_str, dumps, rat_from_str, rat_to_str

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_UNDECIDED, EXIT_FAILED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: Fraction) -> str:
    return f"{rat_to_str(x)} (approx {approx_str(x)})"


def _mode(text: str) -> RoundingMode:
    try:
        return RoundingMode.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _precision(text: str) -> Format:
    t = text.strip()
    if t.startswith("p="):
        t = t[2:]
    try:
        return Format(int(t))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad format {text!r}: {exc}") from None


def _grid(text: str) -> FloatGrid:
    try:
        return FloatGrid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _work_bits(text: str) -> int:
    try:
        wb = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"work bits must be an integer, got {text!r}") from None
    if not 1 <= wb <= MAX_WORK_BITS:
        raise argparse.ArgumentTypeError(f"work bits must be in [1, {MAX_WORK_BITS}]")
    return wb


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _write_json(path: str | None, payload: dict) -> None:
    if path:
        Path(path).write_text(dumps(payload))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_model(args: argparse.Namespace) -> int:
    g: FloatGrid = args.format
    report = verify_model_exhaustive(g, args.mode, args.work_bits)
    print(f"format p={g.format.precision} exponents [{g.exp_lo}, {g.exp_hi}] sub={g.subsamples_per_gap} mode={args.mode.value}")
    print(f"points checked: {report.points_checked}")
    print(f"unit roundoff u: {_num(report.unit_roundoff)}")
    print(f"rp bound u/(1-u): {_num(report.rp_bound)}")
    print(f"max |round(x)-x|/|x|: {_num(report.max_std_delta)} at x = {rat_to_str(report.std_witness)}")
    print(f"max |ln(round(x)/x)| (enclosure hi): {_num(report.max_rp_delta_hi)} at x = {rat_to_str(report.rp_witness)}")
    print(f"violations: {len(report.violations)}  undecided: {len(report.undecided)}")
    _write_json(args.json, report.to_json())
    if report.violations:
        return EXIT_VIOLATION
    if report.undecided:
        return EXIT_UNDECIDED
    return EXIT_OK


def _print_ip_report(report: InnerProductReport) -> None:
    print(f"instances: {report.instances}  rejected: {report.rejected}")
    print(f"rp bound violations: {len(report.violations)}  induction step failures: {len(report.step_failures)}")
    print(f"undecided checks: {report.undecided}")
    print(f"relative error above nu/(1-(n+1)u): {report.relerr_violations}")
    if report.converted_undefined:
        print(f"  ({report.converted_undefined} instances had (n+1)u >= 1 and were checked against e**(nu/(1-u)) - 1)")
    print(f"classical bound nu/(1-nu) held: {report.higham_held}  failed: {report.higham_failed}")
    print(f"max relerr / converted bound: {_num(report.max_relerr_ratio)}")


def _ip_exit(report: InnerProductReport) -> int:
    if report.violations or report.step_failures or report.relerr_violations or report.bound_order_failures:
        return EXIT_VIOLATION
    if report.undecided:
        return EXIT_UNDECIDED
    return EXIT_OK


def cmd_verify_innerprod(args: argparse.Namespace) -> int:
    f, mode = args.format, args.mode
    report = InnerProductReport(f, mode)
    if args.exhaustive:
        for n in range(1, args.n_max + 1):
            for x, y in exhaustive_vectors(f, n, args.exponent):
                check_inner_product(x, y, f, mode, report, args.work_bits)
    if args.trials:
        for x, y in random_vectors(f, (1, args.n_max), args.trials, args.seed):
            check_inner_product(x, y, f, mode, report, args.work_bits)
    print(f"format p={f.precision} mode={mode.value} n<={args.n_max}")
    _print_ip_report(report)
    _write_json(args.json, report.to_json())
    return _ip_exit(report)


def _load_vectors(path: str) -> list[tuple[list[Fraction], list[Fraction]]]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    out = []
    for item in data:
        x = [rat_from_str(v) for v in item["x"]]
        y = [rat_from_str(v) for v in item["y"]]
        out.append((x, y))
    return out


def cmd_demo_innerprod(args: argparse.Namespace) -> int:
    f, mode = args.format, args.mode
    if args.vectors:
        vectors = _load_vectors(args.vectors)
        for x, y in vectors:
            if len(x) != args.n or len(y) != args.n:
                raise UsageError(f"vectors must have length {args.n}")
    else:
        vectors = list(random_vectors(f, (args.n, args.n), args.trials, args.seed))
    report = InnerProductReport(f, mode)
    first = None
    for x, y in vectors:
        trace = check_inner_product(x, y, f, mode, report, args.work_bits)
        if first is None and trace is not None:
            first = (x, y, trace)
    bound = inner_product_rp_bound(args.n, f, mode)
    print(f"format p={f.precision} mode={mode.value} n={args.n} bound n*u/(1-u) = {_num(bound)}")
    payload = {
        "schema": SCHEMA_VERSION,
        "report": "demo_innerprod",
        "n": args.n,
        "bound": rat_to_str(bound),
        "aggregate": report.to_json(),
        "trace": None,
    }
    if first is not None:
        x, y, trace = first
        print("x = [" + ", ".join(rat_to_str(v) for v in x) + "]")
        print("y = [" + ", ".join(rat_to_str(v) for v in y) + "]")
        for k in range(trace.n):
            print(
                f"  k={k + 1}: s_k = {rat_to_str(trace.partials_exact[k])}  "
                f"s^_k = {rat_to_str(trace.intermediates[k])}  "
                f"s'_k = {rat_to_str(trace.partials_fp[k])}  "
                f"bound = {rat_to_str(trace.per_step_bounds[k])}"
            )
        payload["trace"] = {"x": [rat_to_str(v) for v in x], "y": [rat_to_str(v) for v in y], **trace.to_json()}
    _print_ip_report(report)
    _write_json(args.json, payload)
    return _ip_exit(report)


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        e = parse(args.expr)
    except ParseError as exc:
        raise UsageError(str(exc)) from None
    env = an.load_env(args.env) if args.env else {}
    try:
        result = an.analyze(e, env, args.format, args.mode, args.work_bits)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    print(an.describe(result))
    payload = result.to_json()
    if args.compare_higham:
        if result.kind is not an.Kind.RP:
            raise UsageError("--compare-higham needs a relative precision root bound")
        n = args.compare_higham
        u = unit_roundoff(args.format, args.mode)
        try:
            cmp = an.compare_bounds(result, n, u)
        except an.DomainError as exc:
            raise UsageError(str(exc)) from None
        print(f"comparison for n = {n}:")
        print(f"  e**B - 1 (from rp bound): {_num(cmp['relerr_from_rp'])}")
        print(f"  nu/(1-(n+1)u): {_num(cmp['converted'])}")
        print(f"  nu/(1-nu):     {_num(cmp['higham'])}")
        print(f"  ratio:         {_num(cmp['ratio'])}")
        payload["comparison"] = an.comparison_json(cmp)
    _write_json(args.json, payload)
    if result.kind is an.Kind.FAILED:
        for node in result.failures():
            print(f"failed at {node.label}: {node.reason}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_counterexamples(args: argparse.Namespace) -> int:
    rep = relerr_counterexamples(args.work_bits)
    sym, tri = rep["symmetry"], rep["triangle"]

    def show(enc) -> str:
        return f"[{rat_to_str(enc.lo)}, {rat_to_str(enc.hi)}] (approx {approx_str(enc.mid)})"

    print(f"relative error is not symmetric (a = {rat_to_str(sym['exact'])}, a' = {rat_to_str(sym['approx'])}):")
    print(f"  err_rel(a, a') = {rat_to_str(sym['relerr_forward'])}")
    print(f"  err_rel(a', a) = {rat_to_str(sym['relerr_backward'])}")
    print(f"  rp(a, a') in {show(sym['rp_forward'])}")
    print(f"  rp(a', a) in {show(sym['rp_backward'])}  symmetric: {sym['rp_symmetric']}")
    e12, e23 = tri["relerr_legs"]
    print("relative error breaks the triangle inequality (" + ", ".join(rat_to_str(v) for v in tri["points"]) + "):")
    print(
        f"  err_rel = {rat_to_str(tri['relerr_direct'])} > "
        f"{rat_to_str(e12)} + {rat_to_str(e23)} = {rat_to_str(tri['relerr_legs_sum'])}"
    )
    print(f"  rp direct in {show(tri['rp_direct'])}")
    print(f"  rp legs sum in {show(tri['rp_legs_sum'])}  triangle holds: {tri['rp_triangle_holds']}")
    print(f"reproduced: {rep['reproduced']}")

    def enc(v):
        if isinstance(v, Fraction):
            return rat_to_str(v)
        if isinstance(v, tuple):
            return [enc(x) for x in v]
        if hasattr(v, "lo"):
            return {"lo": rat_to_str(v.lo), "hi": rat_to_str(v.hi), "approx": approx_str(v.mid)}
        return v

    payload = {
        "schema": SCHEMA_VERSION,
        "report": "counterexamples",
        "symmetry": {k: enc(v) for k, v in sym.items()},
        "triangle": {k: enc(v) for k, v in tri.items()},
        "reproduced": rep["reproduced"],
    }
    _write_json(args.json, payload)
    return EXIT_OK if rep["reproduced"] else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relprec", description="Relative precision rounding error analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, grid: bool = False) -> None:
        if grid:
            sp.add_argument("--format", type=_grid, required=True, help="p=<int>,emin=<int>,emax=<int>,sub=<int>")
        else:
            sp.add_argument("--format", type=_precision, required=True, help="precision p (e.g. 24 or p=24)")
        sp.add_argument("--mode", type=_mode, default=RoundingMode.RN, help="ru, rd, rz or rn (default rn)")
        sp.add_argument("--work-bits", type=_work_bits, default=DEFAULT_WORK_BITS)
        sp.add_argument("--json", metavar="PATH", help="write the JSON report here")

    sp = sub.add_parser("verify-model", help="sweep a grid through both rounding models")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_verify_model)

    sp = sub.add_parser("verify-innerprod", help="check the inner-product bound on many vectors")
    common(sp)
    sp.add_argument("--n-max", type=_positive, default=3)
    sp.add_argument("--exhaustive", action="store_true", help="all sign-consistent vectors from one binade")
    sp.add_argument("--exponent", type=int, default=0, help="binade used by --exhaustive")
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify_innerprod)

    sp = sub.add_parser("analyze", help="derive an error bound for an expression")
    common(sp)
    sp.add_argument("--expr", required=True)
    sp.add_argument("--env", metavar="PATH", help="JSON map name -> {sign, range?, input_alpha?}")
    sp.add_argument("--compare-higham", type=_positive, metavar="N")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("demo-innerprod", help="trace one inner product and aggregate checks")
    common(sp)
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--vectors", metavar="PATH", help='JSON {"x": [...], "y": [...]} or a list of them')
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=_positive, default=100)
    sp.set_defaults(func=cmd_demo_innerprod)

    sp = sub.add_parser("counterexamples", help="relative error vs relative precision")
    sp.add_argument("--work-bits", type=_work_bits, default=DEFAULT_WORK_BITS)
    sp.add_argument("--json", metavar="PATH")
    sp.set_defaults(func=cmd_counterexamples)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"relprec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
