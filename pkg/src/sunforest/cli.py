"""Command-line front end: reduce, verify, trace, fit, canon, constants."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence

from .coefficient import Coefficient
from .expression import Expression
from .notation import ParseError, format_diagram, format_expression, parse_expression
from .oracle import FitFailure, LegMismatch, RankDeficient, export_tensors, fit_forest_coefficients, verify_equal
from .reducer import DEFAULT_BUDGET, StepBudgetExceeded, progress_violations, reduce_to_forests
from .traces import TraceKind, TraceWord, WordTooShort, adjoint_trace_diagram, expand_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _ns(text: str) -> List[int]:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad N list {text!r}") from None
    if not ns or min(ns) < 2:
        raise argparse.ArgumentTypeError("N values must be integers >= 2")
    return ns


def _read(arg: str) -> str:
    return sys.stdin.read() if arg == "-" else arg


def coefficient_json(c: Coefficient) -> dict:
    return {str(p): [str(re), str(im)] for p, (re, im) in sorted(c.items())}


def expression_json(e: Expression) -> dict:
    return {
        "text": format_expression(e),
        "terms": [{"diagram": format_diagram(k.diagram), "coefficient": coefficient_json(c)} for k, c in e.items()],
    }


def _report_json(r) -> dict:
    return {"passed": r.passed, "max_abs_diff": r.max_abs_diff,
            "per_N": {str(n): v for n, v in r.per_n.items()},
            "checked": {str(n): v for n, v in r.checked.items()}}


def _report_line(r) -> str:
    per = ", ".join(f"N={n}: {v:.3e} ({r.checked[n]} tuples)" for n, v in r.per_n.items())
    return f"{'PASS' if r.passed else 'FAIL'} max diff {r.max_abs_diff:.3e} [{per}]"


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands

def cmd_reduce(args) -> int:
    e = parse_expression(_read(args.expr))
    out, trace = reduce_to_forests(e, budget=args.budget, normal_form=not args.keep_forests)
    payload = {"result": expression_json(out), "phases": len(trace), "rule_applications": len(trace.applications)}
    lines = [format_expression(out)]
    code = EXIT_OK
    if args.trace:
        steps = []
        for p in trace.phases:
            steps.append({"phase": p.phase.value, "target": format_diagram(p.target.diagram),
                          "replacement": format_expression(p.replacement),
                          "rules": [a.rule_id.value for a in p.applications]})
            lines.append(f"[{p.phase.value}] {format_diagram(p.target.diagram)} -> {format_expression(p.replacement)}")
        payload["trace"] = steps
        payload["progress_violations"] = len(progress_violations(trace))
    if args.check_N:
        checks = []
        overall = verify_equal(e, out, ns=args.check_N, samples=args.samples)
        for i, p in enumerate(trace.phases):
            r = verify_equal(Expression({p.target: Coefficient.const(1)}), p.replacement,
                             ns=args.check_N, samples=args.samples)
            checks.append(r)
            lines.append(f"step {i} [{p.phase.value}]: {_report_line(r)}")
        lines.append(f"overall: {_report_line(overall)}")
        payload["step_checks"] = [_report_json(r) for r in checks]
        payload["overall"] = _report_json(overall)
        if not overall.passed or not all(checks):
            code = EXIT_FAIL
    _emit(args, payload, "\n".join(lines))
    return code


def cmd_verify(args) -> int:
    a = parse_expression(_read(args.a))
    b = parse_expression(_read(args.b))
    r = verify_equal(a, b, ns=args.N, samples=args.samples, tol=args.tol, seed=args.seed)
    _emit(args, _report_json(r), _report_line(r))
    return EXIT_OK if r.passed else EXIT_FAIL


def cmd_trace(args) -> int:
    indices = tuple(x.strip() for x in args.word.split(",") if x.strip())
    word = TraceWord(indices, TraceKind(args.kind))
    if word.kind is TraceKind.FUNDAMENTAL:
        out = expand_trace(word)
    else:
        out, _ = reduce_to_forests(adjoint_trace_diagram(word), budget=args.budget, normal_form=True)
    _emit(args, {"result": expression_json(out)}, format_expression(out))
    return EXIT_OK


def cmd_fit(args) -> int:
    e = parse_expression(_read(args.expr))
    ns = args.N
    fit_ns, holdout = (ns[:-1], ns[-1]) if len(ns) > 1 else (ns, ns[0] + 1)
    out = fit_forest_coefficients(e, ns=fit_ns, holdout=holdout, samples=args.samples)
    _emit(args, {"result": expression_json(out), "N": fit_ns, "holdout": holdout}, format_expression(out))
    return EXIT_OK


def cmd_canon(args) -> int:
    e = parse_expression(_read(args.expr))
    _emit(args, {"result": expression_json(e)}, format_expression(e))
    return EXIT_OK


def cmd_constants(args) -> int:
    if len(args.N) != 1:
        raise _UsageError("constants takes a single N")
    rows = export_tensors(args.N[0], args.out)
    _emit(args, {"N": args.N[0], "rows": rows, "out": args.out}, f"wrote {rows} entries to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sunforest", description="Reduce su(N) d/f birdtrack diagrams to forests.")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        sp.set_defaults(func=func)
        return sp

    sp = add("reduce", cmd_reduce, "rewrite an expression as a combination of forests")
    sp.add_argument("expr")
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--check-N", type=_ns, default=None)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--keep-forests", action="store_true", help="skip rewriting the output forests into normal form")

    sp = add("verify", cmd_verify, "compare two expressions numerically")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--N", type=_ns, default=[3, 4, 5])
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("trace", cmd_trace, "expand a generator trace")
    sp.add_argument("--word", required=True)
    sp.add_argument("--kind", choices=[k.value for k in TraceKind if k is not TraceKind.MIXED], default="lambda")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    sp = add("fit", cmd_fit, "fit forest coefficients numerically (last N is the holdout)")
    sp.add_argument("expr")
    sp.add_argument("--N", type=_ns, default=[3, 4, 5, 6, 7])
    sp.add_argument("--samples", type=int, default=400)

    sp = add("canon", cmd_canon, "print an expression in canonical form")
    sp.add_argument("expr")

    sp = add("constants", cmd_constants, "export numeric d and f tensors as CSV")
    sp.add_argument("--N", type=_ns, required=True)
    sp.add_argument("--out", required=True)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "json"):
            args.json = False
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        if exc.text:
            print(f"  {exc.text}\n  {' ' * exc.position}^", file=sys.stderr)
        return EXIT_USAGE
    except (LegMismatch, WordTooShort, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StepBudgetExceeded as exc:
        print(f"step budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FitFailure, RankDeficient) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_command())
