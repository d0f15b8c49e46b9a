"""Command line: ``tropinv trace|infer|verify|pipeline``.

Exit codes: 0 success, 2 usage, 3 program or input error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .formula import FormulaSyntaxError
from .infer import EmptyTraceError
from .kip import Candidate, SolverConfig, verify_set
from .minilang import (
    LocationNotFound, MiniRuntimeError, MiniSyntaxError, collect_traces, gen_random_inputs,
)
from .pipeline import (
    FORMS, SCHEMA, PipelineConfig, PipelineError, infer_candidates, load_program,
    partition_report, report_json, report_text, run_pipeline,
)
from .smt import DEFAULT_SOLVER_CMD, SolverError
from .traces import TermCapError, TraceFormatError, format_traces, parse_traces
from .vcgen import VcGenError, extract_transition_system, parse_transition_system

EXIT_OK, EXIT_USAGE, EXIT_PROGRAM, EXIT_SOLVER = 0, 2, 3, 4

_INPUT_ERRORS = (OSError, MiniSyntaxError, MiniRuntimeError, LocationNotFound, VcGenError,
                 FormulaSyntaxError, TraceFormatError, TermCapError, EmptyTraceError, ValueError)


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi with integers, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _forms(text: str) -> tuple[str, ...]:
    forms = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in forms if f not in FORMS]
    if bad or not forms:
        raise argparse.ArgumentTypeError(f"unknown form(s) {bad}; choose from {','.join(FORMS)}")
    return forms


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_trace_flags(p):
    p.add_argument("--loc", default="L", help="location label (default L)")
    p.add_argument("--runs", type=_positive, default=300, help="random runs for trace generation (default 300)")
    p.add_argument("--range", type=_range, default=(-100, 100), metavar="LO:HI",
                   help="input range; write --range=-5:5 for a negative start (default -100:100)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def _add_infer_flags(p):
    p.add_argument("--degree", type=_positive, default=1, help="equality degree (default 1)")
    p.add_argument("--forms", type=_forms, default=FORMS, metavar="LIST",
                   help="comma-separated forms to infer (default " + ",".join(FORMS) + ")")


def _add_solver_flags(p):
    p.add_argument("--maxk", type=_nonneg, default=5, help="largest induction depth (default 5)")
    p.add_argument("--jobs", type=_positive, default=1, help="parallel prover workers (default 1)")
    p.add_argument("--solver-cmd", default=DEFAULT_SOLVER_CMD, help=f"SMT-LIB2 solver command (default '{DEFAULT_SOLVER_CMD}')")
    p.add_argument("--timeout", type=float, default=10.0, help="seconds per solver query (default 10)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tropinv", description="Infer and prove loop invariants, tropical ones included.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="run a program on random inputs and print the states at a location")
    p.add_argument("program", help="program file, or the name of a bundled corpus program")
    _add_trace_flags(p)
    p.add_argument("--json", action="store_true", help="JSON output")

    p = sub.add_parser("infer", help="print candidate invariants fitted to traces")
    p.add_argument("program", nargs="?", help="program file or corpus name")
    p.add_argument("--traces", help="read traces from this file instead of running a program")
    _add_trace_flags(p)
    _add_infer_flags(p)
    p.add_argument("--json", action="store_true", help="JSON output")

    p = sub.add_parser("verify", help="prove or refute candidate invariants by k-induction")
    p.add_argument("program", nargs="?", help="program file or corpus name (with --loc)")
    p.add_argument("--loc", default="L", help="location label (default L)")
    p.add_argument("--ts", help="transition system file instead of a program")
    p.add_argument("-c", "--candidate", action="append", default=[], metavar="REL",
                   help="candidate relation; repeatable")
    p.add_argument("--candidates", metavar="FILE", help="file with one candidate per line")
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true", help="JSON output")

    p = sub.add_parser("pipeline", help="traces, inference, filtering and proof in one go")
    p.add_argument("program", help="program file or corpus name")
    _add_trace_flags(p)
    p.add_argument("--filter-runs", type=_nonneg, default=100, help="fresh runs used for filtering (default 100)")
    _add_infer_flags(p)
    _add_solver_flags(p)
    p.add_argument("--inject", action="append", default=[], metavar="REL",
                   help="extra candidate that skips filtering; repeatable")
    p.add_argument("--json", action="store_true", help="JSON output")
    p.add_argument("--no-timings", action="store_true", help="leave stage timings out of the report")
    return ap


def _collect(args):
    prog = load_program(args.program)
    lo, hi = args.range
    if args.loc not in prog.locations:
        raise LocationNotFound(f"program {prog.name} has no location {args.loc!r}")
    return collect_traces(prog, args.loc, gen_random_inputs(prog, args.runs, seed=args.seed, lo=lo, hi=hi))


def _cmd_trace(args, out):
    traces = _collect(args)
    if args.json:
        rows = [{n: str(r[n]) if r[n].denominator != 1 else int(r[n]) for n in traces.variables}
                for r in traces.rows]
        out.write(json.dumps({"location": traces.location, "variables": list(traces.variables),
                              "rows": rows}, indent=2) + "\n")
    else:
        out.write(format_traces(traces))
    return EXIT_OK


def _cmd_infer(args, out):
    if args.traces:
        traces = parse_traces(Path(args.traces).read_text(encoding="utf-8"))
    elif args.program:
        traces = _collect(args)
    else:
        raise _Usage("infer needs a program or --traces FILE")
    cands = infer_candidates(traces, args.forms, args.degree)
    if args.json:
        out.write(json.dumps([{"relation": c.text, "provenance": c.provenance} for c in cands], indent=2) + "\n")
    else:
        for c in cands:
            out.write(c.text + "\n")
    return EXIT_OK


def _read_candidates(path):
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def _cmd_verify(args, out):
    if args.ts:
        ts = parse_transition_system(Path(args.ts).read_text(encoding="utf-8"))
    elif args.program:
        ts = extract_transition_system(load_program(args.program), args.loc)
    else:
        raise _Usage("verify needs a program or --ts FILE")
    texts = list(args.candidate)
    if args.candidates:
        texts += _read_candidates(args.candidates)
    if not texts:
        raise _Usage("no candidates given (use -c REL or --candidates FILE)")
    cands = [Candidate.parse(t) for t in texts]
    part = verify_set(ts, cands, args.maxk, args.jobs, SolverConfig(args.solver_cmd, args.timeout))
    rep = {"schema": SCHEMA, "transition_system": ts.to_text(), **partition_report(part)}
    out.write(report_json(rep) if args.json else report_text(rep))
    return EXIT_OK


def _cmd_pipeline(args, out):
    lo, hi = args.range
    cfg = PipelineConfig(
        program=args.program, location=args.loc, runs=args.runs, filter_runs=args.filter_runs,
        lo=lo, hi=hi, seed=args.seed, degree=args.degree, maxk=args.maxk, forms=args.forms,
        jobs=args.jobs, solver_cmd=args.solver_cmd, timeout=args.timeout, json=args.json,
        inject=tuple(args.inject),
    )
    rep = run_pipeline(cfg)
    if args.no_timings:
        rep.pop("timings", None)
    out.write(report_json(rep) if args.json else report_text(rep))
    return EXIT_OK


class _Usage(Exception):
    pass


_COMMANDS = {"trace": _cmd_trace, "infer": _cmd_infer, "verify": _cmd_verify, "pipeline": _cmd_pipeline}


def main(argv=None, out=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = out or sys.stdout
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, out)
    except _Usage as exc:
        ap.print_usage(sys.stderr)
        print(f"tropinv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"tropinv: {exc}", file=sys.stderr)
        return EXIT_SOLVER if exc.solver else EXIT_PROGRAM
    except SolverError as exc:
        print(f"tropinv: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _INPUT_ERRORS as exc:
        print(f"tropinv: {exc}", file=sys.stderr)
        return EXIT_PROGRAM


if __name__ == "__main__":
    sys.exit(main())
