"""k-induction prover: per-candidate ``kprove``, lemma rounds, redundancy split."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction

from . import formula as F
from .smt import (
    COUNTEREXAMPLE, DEFAULT_SOLVER_CMD, ENTAILED, UNKNOWN, SolverError, SolverSession, as_formula,
)
from .vcgen import TransitionSystem

__all__ = [
    "Candidate", "ProofResult", "Partition", "SolverConfig", "VerificationAborted",
    "PROVED", "DISPROVED", "UNPROVED", "kprove", "verify_set", "check_redundancy",
    "replay_counterexample",
]

log = logging.getLogger(__name__)

PROVED = "proved"
DISPROVED = "disproved"
UNPROVED = "unproved"


@dataclass(frozen=True)
class Candidate:
    """A state formula proposed as an invariant, with where it came from."""

    relation: object
    provenance: str = ""

    @classmethod
    def parse(cls, text: str, provenance: str = "input") -> Candidate:
        return cls(F.parse_formula(text), provenance)

    @cached_property
    def formula(self):
        return as_formula(self.relation)

    @cached_property
    def text(self) -> str:
        return F.to_text(self.formula)

    @property
    def size(self) -> int:
        return F.size(self.formula)

    def variables(self) -> set[str]:
        return {n for n, _ in F.free_vars(self.formula)}

    def at(self, index):
        return F.at_index(self.formula, index)

    def holds(self, v: Mapping) -> bool:
        return bool(F.evaluate(self.formula, F.state_env(v)))

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class ProofResult:
    status: str
    k: int | None = None
    cex: tuple = ()  # states at indices 0..k, each a dict name -> int
    inputs: Mapping = field(default_factory=dict)  # values of x@in in the cex
    reason: str = ""
    step_log: tuple = ()  # (k, step-check status) for every step check made

    @property
    def proved(self) -> bool:
        return self.status == PROVED

    def describe(self) -> str:
        if self.status == PROVED:
            return f"proved (k={self.k})"
        if self.status == DISPROVED:
            return f"disproved (cex of length {len(self.cex)})"
        return "unproved" + (f" ({self.reason})" if self.reason else "")


@dataclass(frozen=True)
class SolverConfig:
    cmd: str = DEFAULT_SOLVER_CMD
    timeout: float = 10.0

    def session(self) -> SolverSession:
        return SolverSession(self.cmd, self.timeout)


class VerificationAborted(SolverError):
    def __init__(self, message, partial: Partition):
        super().__init__(message)
        self.partial = partial


def _as_candidate(c) -> Candidate:
    if isinstance(c, Candidate):
        return c
    if isinstance(c, str):
        return Candidate.parse(c)
    return Candidate(c)


def _check_vars(ts: TransitionSystem, c: Candidate):
    extra = c.variables() - set(ts.vars)
    if extra:
        raise ValueError(f"candidate {c.text} mentions {sorted(extra)}, not state variables of the loop")


def replay_counterexample(ts: TransitionSystem, c: Candidate, states: Sequence[Mapping],
                          inputs: Mapping | None = None) -> bool:
    """Exact check: the states satisfy init and every transition and violate ``c`` last."""
    env = {}
    for i, st in enumerate(states):
        for n, v in st.items():
            env[(n, i)] = Fraction(v)
    for n, v in (inputs or {}).items():
        env[(n, "in")] = Fraction(v)
    k = len(states) - 1
    try:
        if not F.evaluate(ts.init, env):
            return False
        for i in range(1, k + 1):
            if not F.evaluate(ts.trans_at(i), env):
                return False
        return not F.evaluate(c.at(k), env)
    except KeyError:
        return False


def _cex_states(ts: TransitionSystem, model: Mapping, k: int):
    states = []
    for i in range(k + 1):
        states.append({n: model[(n, i)] for n in ts.vars if (n, i) in model})
    inputs = {n: v for (n, idx), v in model.items() if idx == "in"}
    return tuple(states), inputs


def kprove(ts: TransitionSystem, p, max_k: int = 5, lemmas: Iterable = (),
           solver: SolverConfig | None = None) -> ProofResult:
    """Incremental k-induction of ``p`` for ``k = 0 .. max_k``.

    The base session holds ``init`` and the transitions unrolled so far and
    checks ``p`` at the newest index. The step session holds ``p`` at indices
    ``0..k``, transitions ``1..k+1`` and the lemmas at every index, and checks
    ``p`` at ``k+1``.
    """
    if max_k < 0:
        raise ValueError("max_k must be >= 0")
    p = _as_candidate(p)
    lemmas = [_as_candidate(q) for q in lemmas]
    _check_vars(ts, p)
    solver = solver or SolverConfig()
    steps = []
    base = solver.session()
    step = solver.session()
    try:
        base.add(ts.init)
        for k in range(max_k + 1):
            if k >= 1:
                base.add(ts.trans_at(k))
            r = base.entail(p.at(k))
            if r.status == COUNTEREXAMPLE:
                states, inputs = _cex_states(ts, r.model, k)
                if not replay_counterexample(ts, p, states, inputs):
                    raise SolverError(f"counterexample for {p.text} does not replay: {r.model}")
                return ProofResult(DISPROVED, k, states, inputs, step_log=tuple(steps))
            if r.status == UNKNOWN:
                return ProofResult(UNPROVED, reason=f"base case at k={k}: {r.reason}",
                                   step_log=tuple(steps))
            if k == 0:
                for q in lemmas:
                    step.add(q.at(0))
            step.add(p.at(k))
            step.add(ts.trans_at(k + 1))
            for q in lemmas:
                step.add(q.at(k + 1))
            r = step.entail(p.at(k + 1))
            steps.append((k, r.status))
            if r.status == ENTAILED:
                return ProofResult(PROVED, k, step_log=tuple(steps))
        last = steps[-1][1] if steps else ""
        reason = f"not {max_k}-inductive" + (" (solver unknown)" if last == UNKNOWN else "")
        return ProofResult(UNPROVED, reason=reason, step_log=tuple(steps))
    finally:
        base.close()
        step.close()


@dataclass
class Partition:
    independent: list = field(default_factory=list)
    redundant: list = field(default_factory=list)
    disproved: list = field(default_factory=list)
    unproved: list = field(default_factory=list)
    results: dict = field(default_factory=dict)  # candidate -> ProofResult
    rounds: dict = field(default_factory=dict)  # candidate -> round of its final verdict
    complete: bool = True

    @property
    def proved(self) -> list:
        return self.independent + self.redundant

    def verdict(self, c) -> ProofResult:
        return self.results[_as_candidate(c)]


def verify_set(ts: TransitionSystem, candidates: Iterable, max_k: int = 5, jobs: int = 1,
               solver: SolverConfig | None = None) -> Partition:
    """Rounds of ``kprove`` with the lemmas proved in earlier rounds, then the redundancy split.

    Each round sees the same lemma snapshot for every candidate, so verdicts
    do not depend on scheduling or ``jobs``.
    """
    cands = list(dict.fromkeys(_as_candidate(c) for c in candidates))
    for c in cands:
        _check_vars(ts, c)
    solver = solver or SolverConfig()
    part = Partition()
    if not cands:
        return part
    lemmas: list[Candidate] = []
    pending = cands
    rnd = 0
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        while pending:
            rnd += 1
            snapshot = tuple(lemmas)
            try:
                verdicts = list(pool.map(lambda c: kprove(ts, c, max_k, snapshot, solver), pending))
            except SolverError as exc:
                part.unproved = [c for c in cands if c not in part.results or not part.results[c].proved]
                part.complete = False
                raise VerificationAborted(f"solver failure in round {rnd}: {exc}", part) from exc
            new_proved, still = [], []
            for c, r in zip(pending, verdicts):
                part.results[c] = r
                part.rounds[c] = rnd
                if r.status == PROVED:
                    new_proved.append(c)
                elif r.status == UNPROVED:
                    still.append(c)
            log.info("round %d: %d proved, %d unproved", rnd, len(new_proved), len(still))
            lemmas.extend(new_proved)
            if not new_proved or not still:
                break
            pending = still
    proved = [c for c in cands if part.results[c].status == PROVED]
    part.disproved = [c for c in cands if part.results[c].status == DISPROVED]
    part.unproved = [c for c in cands if part.results[c].status == UNPROVED]
    part.independent, part.redundant = check_redundancy(proved, ts, solver)
    return part


def check_redundancy(proved: Iterable, ts: TransitionSystem | None = None,
                     solver: SolverConfig | None = None) -> tuple[list, list]:
    """Split into (independent, redundant); smallest candidates are tested first."""
    order = sorted(dict.fromkeys(_as_candidate(c) for c in proved), key=lambda c: (c.size, c.text))
    if len(order) <= 1:
        return order, []
    solver = solver or SolverConfig()
    independent = list(order)
    redundant = []
    with solver.session() as s:
        for c in order:
            others = [q for q in independent if q is not c]
            s.push()
            try:
                for q in others:
                    s.add(q.at(0))
                r = s.entail(c.at(0))
            finally:
                s.pop()
            if r.status == ENTAILED:
                independent.remove(c)
                redundant.append(c)
    keep = set(independent)
    return [c for c in order if c in keep], redundant
