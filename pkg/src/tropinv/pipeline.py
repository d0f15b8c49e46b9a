"""The end-to-end run: traces, inference, filtering, transition system, proofs, report."""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .infer import (
    EmptyTraceError, TropicalKind, filter_candidates, fit_pair_general, fit_weak,
    infer_equalities, infer_template_bounds, prune_redundant, simplify_relation,
)
from .kip import Candidate, Partition, SolverConfig, verify_set
from .minilang import (
    MiniRuntimeError, MiniSyntaxError, Program, collect_traces, corpus_names, gen_random_inputs,
    load_corpus, parse_program,
)
from .smt import DEFAULT_SOLVER_CMD, SolverError
from .traces import TermCapError, TraceSet
from .vcgen import VcGenError, extract_transition_system

__all__ = [
    "FORMS", "SCHEMA", "PipelineConfig", "PipelineError", "PipelineResult", "load_program",
    "infer_candidates", "execute", "run_pipeline", "partition_report", "report_json", "report_text",
]

FORMS = ("eq", "ieq", "maxplus", "minplus", "pairs-general")
SCHEMA = "tropinv-report/1"


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``solver`` marks solver trouble."""

    def __init__(self, stage: str, message: str, solver: bool = False):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.solver = solver


@dataclass
class PipelineConfig:
    program: str
    location: str = "L"
    runs: int = 300
    filter_runs: int = 100
    lo: int = -100
    hi: int = 100
    seed: int = 0
    degree: int = 1
    maxk: int = 5
    forms: tuple[str, ...] = FORMS
    jobs: int = 1
    solver_cmd: str = DEFAULT_SOLVER_CMD
    timeout: float = 10.0
    json: bool = False
    ieq_family: str = "zone"
    cap: int = 200
    inject: tuple[str, ...] = ()

    def __post_init__(self):
        self.forms = tuple(self.forms)
        bad = [f for f in self.forms if f not in FORMS]
        if bad:
            raise ValueError(f"unknown form(s) {bad}; choose from {', '.join(FORMS)}")
        if self.lo > self.hi:
            raise ValueError(f"empty input range {self.lo}:{self.hi}")
        if self.runs < 1 or self.filter_runs < 0:
            raise ValueError("runs must be >= 1 and filter runs >= 0")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.maxk < 0:
            raise ValueError("maxk must be >= 0")
        self.inject = tuple(self.inject)

    def settings(self) -> dict:
        """Everything that can change the verdicts (so not ``jobs``)."""
        return {
            "location": self.location, "runs": self.runs, "filter_runs": self.filter_runs,
            "range": [self.lo, self.hi], "seed": self.seed, "degree": self.degree,
            "maxk": self.maxk, "forms": list(self.forms), "ieq_family": self.ieq_family,
            "cap": self.cap, "solver_cmd": self.solver_cmd, "timeout": self.timeout,
        }


def load_program(ref: str) -> Program:
    """A program from a file path, or a bundled corpus program by name."""
    path = Path(ref)
    if path.is_file():
        return parse_program(path.read_text(encoding="utf-8"))
    if ref in corpus_names():
        return load_corpus(ref)
    raise FileNotFoundError(f"no program file {ref!r} and no corpus program of that name "
                            f"(corpus: {', '.join(corpus_names())})")


def _subsets(names, sizes):
    for k in sizes:
        yield from itertools.combinations(names, k)


def infer_candidates(traces: TraceSet, forms=FORMS, degree: int = 1, ieq_family: str = "zone",
                     cap: int = 200) -> list[Candidate]:
    """All candidate relations of the enabled forms, deduplicated by text, in a fixed order.

    Weak (single parameter) relations are fitted over every pair and triple of
    variables, the two-parameter ones over pairs only.
    """
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    traces = traces.distinct()
    names = list(traces.variables)
    out: list[Candidate] = []
    if "eq" in forms:
        out += [Candidate(e, "eq") for e in infer_equalities(traces, degree, cap)]
    if "ieq" in forms:
        out += [Candidate(b, "ieq") for b in infer_template_bounds(traces, ieq_family)]
    sizes = (2, 3) if len(names) > 1 else (1,)
    for form, kind in (("maxplus", TropicalKind.MAX), ("minplus", TropicalKind.MIN)):
        if form not in forms:
            continue
        rels = []
        for sub in _subsets(names, sizes):
            for r in fit_weak(traces, kind, sub):
                if r not in rels:
                    rels.append(r)
        for r in prune_redundant(rels):
            s = simplify_relation(r)
            if s is not None:
                out.append(Candidate(s, form))
    if "pairs-general" in forms:
        for u, v in itertools.combinations(names, 2):
            bounds = infer_template_bounds(traces, "zone", variables=[u, v])
            for kind in (TropicalKind.MAX, TropicalKind.MIN):
                out += [Candidate(r, "pairs-general") for r in fit_pair_general(u, v, traces, kind, bounds)]
    seen = set()
    uniq = []
    for c in out:
        if c.text not in seen:
            seen.add(c.text)
            uniq.append(c)
    return uniq


def _num(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class PipelineResult:
    report: dict
    program: Program
    traces: TraceSet
    ts: object
    partition: Partition


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and return the report as a JSON-ready dict."""
    return execute(cfg).report


def execute(cfg: PipelineConfig) -> PipelineResult:
    """Like ``run_pipeline`` but also hands back the intermediate objects."""
    timings = {}

    def stage(name):
        timings[name] = time.perf_counter()

    def done(name):
        timings[name] = round(time.perf_counter() - timings[name], 6)

    stage("load")
    try:
        prog = load_program(cfg.program)
    except (OSError, MiniSyntaxError) as exc:
        raise PipelineError("load", str(exc)) from None
    if cfg.location not in prog.locations:
        raise PipelineError("load", f"program {prog.name} has no location {cfg.location!r} "
                            f"(locations: {', '.join(sorted(prog.locations)) or 'none'})")
    done("load")

    stage("trace")
    try:
        inputs = gen_random_inputs(prog, cfg.runs, seed=cfg.seed, lo=cfg.lo, hi=cfg.hi)
        traces = collect_traces(prog, cfg.location, inputs)
        filt = None
        if cfg.filter_runs:
            # a different seed, so filtering sees fresh inputs
            finputs = gen_random_inputs(prog, cfg.filter_runs, seed=cfg.seed + 1, lo=cfg.lo, hi=cfg.hi)
            filt = collect_traces(prog, cfg.location, finputs)
    except MiniRuntimeError as exc:
        raise PipelineError("trace", str(exc)) from None
    if not traces.rows:
        raise PipelineError("trace", f"no run reached location {cfg.location}")
    done("trace")

    stage("infer")
    try:
        generated = infer_candidates(traces, cfg.forms, cfg.degree, cfg.ieq_family, cfg.cap)
    except (TermCapError, EmptyTraceError, ValueError) as exc:
        raise PipelineError("infer", str(exc)) from None
    done("infer")

    stage("filter")
    kept = filter_candidates(generated, filt.distinct() if filt is not None else None)
    injected = [Candidate.parse(t, "input") for t in cfg.inject]
    texts = {c.text for c in kept}
    candidates = kept + [c for c in injected if c.text not in texts]
    done("filter")

    stage("vcgen")
    try:
        ts = extract_transition_system(prog, cfg.location)
    except VcGenError as exc:
        raise PipelineError("vcgen", str(exc)) from None
    outside = sorted({n for c in candidates for n in c.variables()} - set(ts.vars))
    if outside:
        raise PipelineError("vcgen", f"candidates mention {outside}, which are not state variables at {cfg.location}")
    done("vcgen")

    stage("verify")
    try:
        part = verify_set(ts, candidates, cfg.maxk, cfg.jobs, SolverConfig(cfg.solver_cmd, cfg.timeout))
    except SolverError as exc:
        raise PipelineError("verify", str(exc), solver=True) from None
    done("verify")

    report = _report(cfg, prog, traces, filt, generated, kept, injected, ts, part, timings)
    return PipelineResult(report, prog, traces, ts, part)


def _classes(part: Partition):
    out = {}
    for name in ("independent", "redundant", "disproved", "unproved"):
        for c in getattr(part, name):
            out[c] = name
    return out


def partition_report(part: Partition) -> dict:
    """Per-candidate verdicts in input order, and the four-way split."""
    cls = _classes(part)
    entries = []
    for c, r in part.results.items():
        e = {
            "relation": c.text,
            "provenance": c.provenance,
            "class": cls[c],
            "verdict": r.status,
            "round": part.rounds[c],
        }
        if r.k is not None:
            e["k"] = r.k
        if r.reason:
            e["reason"] = r.reason
        if r.cex:
            e["cex"] = [{n: _num(v) for n, v in sorted(st.items())} for st in r.cex]
            if r.inputs:
                e["cex_inputs"] = {n: _num(v) for n, v in sorted(r.inputs.items())}
        entries.append(e)
    return {
        "candidates": entries,
        "partition": {
            name: [c.text for c in getattr(part, name)]
            for name in ("independent", "redundant", "disproved", "unproved")
        },
    }


def _report(cfg, prog, traces, filt, generated, kept, injected, ts, part, timings) -> dict:
    return {
        "schema": SCHEMA,
        "program": prog.name,
        "settings": cfg.settings(),
        "traces": {
            "variables": list(traces.variables),
            "rows": len(traces.rows),
            "distinct_rows": len(traces.distinct().rows),
            "filter_rows": len(filt.rows) if filt is not None else 0,
        },
        "transition_system": ts.to_text(),
        "generated": len(generated),
        "after_filter": len(kept),
        "injected": len(injected),
        **partition_report(part),
        "timings": timings,
    }


def report_json(report: dict, timings: bool = True) -> str:
    if not timings:
        report = {k: v for k, v in report.items() if k != "timings"}
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _is_disjunctive(text: str) -> bool:
    return "max(" in text or "min(" in text or "||" in text


def report_text(report: dict) -> str:
    by_text = {e["relation"]: e for e in report["candidates"]}
    lines = []
    if "program" in report:
        lines.append(f"program {report['program']} at {report['settings']['location']}")
    if "traces" in report:
        lines.append(f"traces: {report['traces']['rows']} rows ({report['traces']['distinct_rows']} distinct) "
                     f"over {', '.join(report['traces']['variables'])}")
    if "generated" in report:
        lines.append(f"candidates: {report['generated']} generated, {report['after_filter']} after filtering, "
                     f"{report['injected']} injected")

    def note(e):
        if e["verdict"] == "proved":
            return f"[k={e['k']}, round {e['round']}]"
        if e["verdict"] == "disproved":
            last = e["cex"][-1]
            return "[cex: " + ", ".join(f"{n}={v}" for n, v in last.items()) + f" at step {len(e['cex']) - 1}]"
        return f"[{e.get('reason', 'unproved')}]"

    part = report["partition"]
    for name, title in (("independent", "proved invariants"), ("redundant", "proved but redundant"),
                        ("disproved", "disproved"), ("unproved", "unproved")):
        rels = part[name]
        lines.append(f"{title} ({len(rels)}):")
        if name in ("independent", "redundant"):
            groups = (("conjunctive", [r for r in rels if not _is_disjunctive(r)]),
                      ("disjunctive", [r for r in rels if _is_disjunctive(r)]))
            for g, members in groups:
                if members:
                    lines.append(f"  {g}:")
                    lines += [f"    {r}  {note(by_text[r])}" for r in members]
        else:
            lines += [f"  {r}  {note(by_text[r])}" for r in rels]
    t = report.get("timings")
    if t:
        lines.append("timings: " + ", ".join(f"{k} {v:.2f}s" for k, v in t.items()))
    return "\n".join(lines) + "\n"
