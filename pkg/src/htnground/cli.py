"""Command-line front end: ground, solve, validate, bench, estimate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .grounding import GroundingOptions, dump, estimate, ground
from .model import ModelError
from .parser import parse_domain, parse_problem
from .pipeline import EXIT_INPUT, EXIT_SOLVED, EXIT_UNSOLVABLE, PLANNERS, run
from .planner import DEFAULT_DEPTH, DEFAULT_TIMEOUT
from .sexpr import ParseError
from .validate import read_plan, read_trace, validate_plan, validate_trace


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None


def _load(args):
    dtext, ptext = _read(args.domain), _read(args.problem)
    domain = parse_domain(dtext, args.domain)
    return parse_problem(ptext, domain, args.problem)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_stats(path: str | None, stats: dict) -> None:
    if path:
        _write(path, json.dumps(stats, indent=2, sort_keys=True) + "\n")


def _estimate_lines(problem, unary_scan: bool, only: str | None) -> str:
    counts = estimate(problem, unary_scan)
    if only is not None:
        if only not in counts:
            raise InputError(f"no operator or method named {only}")
        return f"{counts[only]}\n"
    return "".join(f"{name} {n}\n" for name, n in counts.items()) + \
        f"total {sum(counts.values())}\n"


def cmd_ground(args) -> int:
    problem = _load(args)
    if args.estimate_only:
        sys.stdout.write(_estimate_lines(problem, args.unary_scan, args.operator))
        return 0
    opts = GroundingOptions(method_fixpoint=not args.no_method_fixpoint,
                            unary_scan=args.unary_scan)
    gp = ground(problem, opts)
    text = dump(gp)
    if args.output:
        sys.stdout.write(gp.report)
        _write(args.output, text)
    elif args.dump_only:
        sys.stdout.write(text)
    else:
        sys.stdout.write(gp.report + "\n" + text)
    _write_stats(args.stats, dict(gp.stats))
    return 0


def cmd_estimate(args) -> int:
    sys.stdout.write(_estimate_lines(_load(args), args.unary_scan, args.operator))
    return 0


def cmd_solve(args) -> int:
    r = run(_read(args.domain), _read(args.problem), args.planner, args.timeout, args.depth,
            method_fixpoint=not args.no_method_fixpoint, loop_check=not args.no_loop_check,
            domain_file=args.domain, problem_file=args.problem)
    _write_stats(args.stats, r.stats)
    if r.exit_code != EXIT_SOLVED:
        print(f"{r.stats['exit_status']}: {r.error}", file=sys.stderr)
        return r.exit_code
    _write(args.output, "".join(line + "\n" for line in r.result.plan_lines()))
    if args.trace:
        if r.result.trace is None:
            print("the lifted planner records no trace", file=sys.stderr)
        else:
            from .validate import write_trace
            _write(args.trace, write_trace(r.result.trace))
    return EXIT_SOLVED


def cmd_validate(args) -> int:
    problem = _load(args)
    gp = ground(problem)
    plan = read_plan(_read(args.plan), args.plan)
    bad = validate_plan(gp, plan)
    if bad is None and args.trace:
        bad = validate_trace(gp, read_trace(_read(args.trace), args.trace), plan)
    if bad is None:
        print(f"valid plan of length {len(plan)}")
        return 0
    print(f"invalid: {bad}")
    return EXIT_UNSOLVABLE


def cmd_bench(args) -> int:
    try:
        manifest = bench.load_manifest(args.manifest)
    except bench.ManifestError as e:
        raise InputError(str(e)) from None
    if args.timeout is not None:
        manifest["timeout"] = args.timeout
    records = bench.run_bench(manifest, args.jobs)
    sys.stdout.write(bench.format_tables(records, manifest["planners"]))
    if args.json:
        out = {"records": records, "series": bench.series(records, manifest["planners"]),
               "totals": {f: t["totals"] for f, t in
                          bench.tables(records, manifest["planners"]).items()}}
        _write(args.json, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="htnground", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def files(p):
        p.add_argument("domain")
        p.add_argument("problem")

    p = sub.add_parser("ground", help="ground and simplify, print the report and the dump")
    files(p)
    p.add_argument("-o", "--output", help="write the serialized problem here")
    p.add_argument("--dump-only", action="store_true", help="print only the serialized problem")
    p.add_argument("--no-method-fixpoint", action="store_true")
    p.add_argument("--unary-scan", action="store_true",
                   help="restrict parameter domains by unary inertia atoms")
    p.add_argument("--estimate-only", action="store_true",
                   help="print candidate counts without enumerating")
    p.add_argument("--operator", help="with --estimate-only, print this schema's count only")
    p.add_argument("--stats", metavar="PATH")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("estimate", help="candidate counts per operator and method")
    files(p)
    p.add_argument("--operator", help="print this schema's count only")
    p.add_argument("--unary-scan", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("solve", help="find a plan")
    files(p)
    p.add_argument("--planner", choices=PLANNERS, default="ishop")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                   help="search budget in seconds, preprocessing excluded")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--no-method-fixpoint", action="store_true")
    p.add_argument("--no-loop-check", action="store_true")
    p.add_argument("--stats", metavar="PATH")
    p.add_argument("-o", "--output", help="plan file (default: stdout)")
    p.add_argument("--trace", metavar="PATH", help="write the decomposition trace (ishop)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a plan, and optionally its trace")
    files(p)
    p.add_argument("plan")
    p.add_argument("--trace", metavar="PATH")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="run a benchmark manifest")
    p.add_argument("manifest")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timeout", type=float)
    p.add_argument("--json", metavar="PATH", help="write records, series and totals")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ParseError, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
