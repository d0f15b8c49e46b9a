"""Independent checks of prover verdicts by concrete execution.

``simulate`` runs a transition system forward from random initial states with
the exact evaluator, without any solver. It handles the deterministic shape
that vcgen produces: a conjunction of equations ``v@n = e`` plus side
conditions. ``program_states`` gets the same kind of evidence from the
interpreter instead.
"""

from __future__ import annotations

import random
from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction

from . import formula as F
from .kip import Candidate, Partition, ProofResult, DISPROVED, PROVED, replay_counterexample
from .minilang import collect_traces, gen_random_inputs
from .vcgen import TransitionSystem

__all__ = ["OracleError", "Violation", "simulate", "program_states", "check_invariants", "check_partition"]


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    candidate: str
    state: dict
    detail: str = ""


def _conjuncts(f):
    if isinstance(f, F.And):
        out = []
        for a in f.args:
            out.extend(_conjuncts(a))
        return out
    if f == F.TRUE:
        return []
    return [f]


def _split(f, index, names):
    """Equations ``v@index = e`` (with e free of index) and the remaining conditions."""
    defs, conds = {}, []
    for c in _conjuncts(f):
        if (isinstance(c, F.Cmp) and c.op == "=" and isinstance(c.left, F.Var)
                and c.left.index == index and c.left.name in names and c.left.name not in defs
                and (c.left.name, index) not in F.free_vars(c.right)):
            defs[c.left.name] = c.right
        else:
            conds.append(c)
    return defs, conds


def _eval(node, env):
    return F.evaluate(node, env)


def _solve(defs, env, index):
    """Evaluate the equations in dependency order; fails on cycles."""
    todo = dict(defs)
    while todo:
        ready = [n for n, e in todo.items()
                 if all(v in env for v in F.free_vars(e))]
        if not ready:
            raise KeyError(sorted(todo)[0])
        for n in ready:
            env[(n, index)] = _eval(todo.pop(n), env)


def simulate(ts: TransitionSystem, runs: int = 200, steps: int = 50, seed: int = 0,
             lo: int = -100, hi: int = 100, budget: int | None = None) -> list[list[dict]]:
    """State sequences of ``ts`` from random initial states (unconstrained values in ``[lo, hi]``)."""
    names = set(ts.vars)
    init_defs, init_conds = _split(ts.init, 0, names)
    step_defs, step_conds = _split(ts.trans, 1, names)
    if ts.trans != F.FALSE and set(step_defs) != names:
        raise OracleError("transition relation does not define every variable at n; cannot simulate")
    free = sorted({n for n, i in F.free_vars(ts.init) if i == "in"} |
                  {n for n in ts.vars if n not in init_defs})
    rng = random.Random(seed)
    out = []
    tries = 0
    budget = budget if budget is not None else max(1000, 100 * runs)
    while len(out) < runs:
        tries += 1
        if tries > budget:
            break
        env = {}
        for n in free:
            v = Fraction(rng.randint(lo, hi))
            idx = "in" if (n, "in") in F.free_vars(ts.init) else 0
            env[(n, idx)] = v
        try:
            _solve(init_defs, env, 0)
            if not all(_eval(c, env) for c in init_conds):
                continue
        except KeyError as exc:
            raise OracleError(f"init is not in executable form: {exc}") from None
        state = {n: env[(n, 0)] for n in ts.vars}
        seq = [state]
        for _ in range(steps):
            env = {(n, 0): v for n, v in state.items()}
            if ts.trans == F.FALSE or not all(_eval(c, env) for c in step_conds):
                break
            _solve(step_defs, env, 1)
            state = {n: env[(n, 1)] for n in ts.vars}
            seq.append(state)
        out.append(seq)
    return out


def program_states(program, location: str, runs: int = 1000, seed: int = 12345,
                   lo: int = -100, hi: int = 100) -> list[dict]:
    """States the interpreter reaches at ``location`` on fresh random inputs."""
    inputs = gen_random_inputs(program, runs, seed=seed, lo=lo, hi=hi)
    traces = collect_traces(program, location, inputs)
    return [dict(r) for r in traces.rows]


def check_invariants(candidates: Iterable, states: Iterable[dict]) -> list[Violation]:
    cands = [c if isinstance(c, Candidate) else Candidate.parse(c) if isinstance(c, str) else Candidate(c)
             for c in candidates]
    bad = []
    for st in states:
        for c in cands:
            try:
                ok = c.holds(st)
            except KeyError as exc:
                bad.append(Violation(c.text, dict(st), f"missing variable {exc}"))
                continue
            if not ok:
                bad.append(Violation(c.text, dict(st)))
    return bad


def check_partition(ts: TransitionSystem, part: Partition, runs: int = 200, steps: int = 50,
                    seed: int = 0, lo: int = -100, hi: int = 100) -> list[Violation]:
    """Simulate PROVED candidates and replay every DISPROVED counterexample."""
    seqs = simulate(ts, runs, steps, seed, lo, hi)
    states = [s for seq in seqs for s in seq]
    bad = check_invariants(part.proved, states)
    for c in part.disproved:
        r: ProofResult = part.results[c]
        if r.status != DISPROVED or not replay_counterexample(ts, c, r.cex, r.inputs):
            bad.append(Violation(c.text, {}, "counterexample does not replay"))
    for c in part.proved:
        if part.results[c].status != PROVED:
            bad.append(Violation(c.text, {}, "classified proved without a proof"))
    return bad
