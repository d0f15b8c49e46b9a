"""Tree-walking interpreter and location tracer."""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping

from ..traces import TraceSet, Valuation
from .syntax import (
    Assert, Assign, Assume, BinOp, BoolLit, BoolOp, Compare, If, IntLit, Label, NotOp,
    Program, Return, UnaryMinus, VarRef, While,
)

__all__ = [
    "InputVector",
    "MiniRuntimeError",
    "InputRejected",
    "StepLimitExceeded",
    "AssertionFailed",
    "RetryBudgetExhausted",
    "LocationNotFound",
    "run",
    "run_traced",
    "collect_traces",
    "gen_random_inputs",
    "DEFAULT_STEP_LIMIT",
]

DEFAULT_STEP_LIMIT = 10**6


class MiniRuntimeError(RuntimeError):
    pass


class InputRejected(MiniRuntimeError):
    """The input violates the program's entry assumption; not a runtime fault."""


class StepLimitExceeded(MiniRuntimeError):
    def __init__(self, message, partial: TraceSet | None = None):
        super().__init__(message)
        self.partial = partial


class AssertionFailed(MiniRuntimeError):
    def __init__(self, message, partial: TraceSet | None = None):
        super().__init__(message)
        self.partial = partial


class RetryBudgetExhausted(MiniRuntimeError):
    pass


class LocationNotFound(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "location not found"


class InputVector(Mapping):
    """Integer assignment to a program's params."""

    __slots__ = ("_items",)

    def __init__(self, entries: Mapping | Iterable = ()):
        items = dict(entries)
        for k, v in items.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError(f"input {k} must be an integer, got {v!r}")
        self._items = items

    def __getitem__(self, k):
        return self._items[k]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return hash(frozenset(self._items.items()))

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return self._items == dict(other)
        return NotImplemented

    def __repr__(self):
        return "InputVector(" + ", ".join(f"{k}={v}" for k, v in self._items.items()) + ")"


# -- evaluation --------------------------------------------------------------

def _eval(e, env: dict):
    t = type(e)
    if t is IntLit:
        return e.value
    if t is VarRef:
        try:
            return env[e.name]
        except KeyError:
            raise MiniRuntimeError(f"variable {e.name!r} read before assignment") from None
    if t is BinOp:
        a, b = _eval(e.left, env), _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        return a * b
    if t is UnaryMinus:
        return -_eval(e.arg, env)
    raise MiniRuntimeError(f"not an integer expression: {e!r}")


def _test(c, env: dict) -> bool:
    t = type(c)
    if t is Compare:
        a, b = _eval(c.left, env), _eval(c.right, env)
        op = c.op
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == ">=":
            return a >= b
        return a > b
    if t is BoolOp:
        if c.op == "and":
            return all(_test(a, env) for a in c.args)
        return any(_test(a, env) for a in c.args)
    if t is NotOp:
        return not _test(c.arg, env)
    if t is BoolLit:
        return c.value
    raise MiniRuntimeError(f"not a condition: {c!r}")


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Blocked(Exception):
    """A non-entry assume failed: the execution is discarded from here on."""


class _Machine:
    def __init__(self, prog: Program, location, step_limit: int):
        self.prog = prog
        self.location = location
        self.step_limit = step_limit
        self.steps = 0
        self.samples: list[dict] = []

    def tick(self):
        self.steps += 1
        if self.steps > self.step_limit:
            raise StepLimitExceeded(f"step limit of {self.step_limit} exceeded")

    def sample(self, env):
        self.samples.append(dict(env))

    def block(self, stmts, env):
        for s in stmts:
            self.stmt(s, env)

    def stmt(self, s, env):
        self.tick()
        t = type(s)
        if t is Assign:
            env[s.target] = _eval(s.expr, env)
        elif t is If:
            self.block(s.then if _test(s.cond, env) else s.other, env)
        elif t is While:
            mark = s.label is not None and s.label == self.location
            while True:
                if mark:
                    self.sample(env)
                if not _test(s.cond, env):
                    break
                self.block(s.body, env)
                self.tick()
        elif t is Label:
            if s.label == self.location:
                self.sample(env)
        elif t is Assume:
            if not _test(s.cond, env):
                raise _Blocked()
        elif t is Assert:
            if not _test(s.cond, env):
                raise AssertionFailed(f"assertion on line {s.line} failed")
        elif t is Return:
            raise _Return(_eval(s.expr, env))
        else:
            raise MiniRuntimeError(f"unsupported statement {s!r}")


def _check_input(prog: Program, inputs: Mapping) -> dict:
    if set(inputs) != set(prog.params):
        raise ValueError(f"input binds {sorted(inputs)}, program params are {list(prog.params)}")
    env = {p: int(inputs[p]) for p in prog.params}
    if not all(_test(c, env) for c in prog.entry):
        raise InputRejected(f"input {dict(inputs)} violates the entry assumption of {prog.name}")
    return env


def run(prog: Program, inputs: Mapping, step_limit: int = DEFAULT_STEP_LIMIT):
    """Execute and return ``(return value or None, final environment)``."""
    env = _check_input(prog, inputs)
    m = _Machine(prog, None, step_limit)
    try:
        m.block(prog.body[len(prog.entry):], env)
    except _Return as r:
        return r.value, env
    except _Blocked:
        pass
    return None, env


def _to_traceset(location, samples, final_env) -> TraceSet:
    names = tuple(sorted(samples[0] if samples else final_env))
    rows = tuple(Valuation({n: s[n] for n in names}) for s in samples)
    return TraceSet(location, names, rows)


def run_traced(prog: Program, inputs: Mapping, location: str,
               step_limit: int = DEFAULT_STEP_LIMIT) -> TraceSet:
    """Run ``prog`` and record the state each time control reaches ``location``.

    A labeled while is sampled at every guard evaluation, the final failing
    one included. Columns are the variables bound at the first visit, sorted.
    """
    if location not in prog.locations:
        raise LocationNotFound(f"program {prog.name} has no location {location!r}")
    if step_limit < 1:
        raise ValueError("step_limit must be positive")
    env = _check_input(prog, inputs)
    m = _Machine(prog, location, step_limit)
    try:
        m.block(prog.body[len(prog.entry):], env)
    except (_Return, _Blocked):
        pass
    except StepLimitExceeded as exc:
        exc.partial = _to_traceset(location, m.samples, env)
        raise
    except AssertionFailed as exc:
        exc.partial = _to_traceset(location, m.samples, env)
        raise
    return _to_traceset(location, m.samples, env)


def collect_traces(prog: Program, location: str, inputs: Iterable[Mapping],
                   step_limit: int = DEFAULT_STEP_LIMIT, keep_partial: bool = True) -> TraceSet:
    """Merge the traces of several runs into one trace set.

    Columns are the variables present in every run's trace. Runs that hit the
    step limit or a failing assert contribute the rows observed before the
    fault when ``keep_partial`` is set.
    """
    parts = []
    for inp in inputs:
        try:
            parts.append(run_traced(prog, inp, location, step_limit))
        except (StepLimitExceeded, AssertionFailed) as exc:
            if not keep_partial:
                raise
            parts.append(exc.partial)
    parts = [p for p in parts if p.rows]
    if not parts:
        return TraceSet(location, (), ())
    common = set(parts[0].variables)
    for p in parts[1:]:
        common &= set(p.variables)
    names = tuple(sorted(common))
    rows = tuple(r.project(names) for p in parts for r in p.rows)
    return TraceSet(location, names, rows)


def gen_random_inputs(prog: Program, n: int, seed=0, lo: int = -100, hi: int = 100,
                      budget: int | None = None) -> list[InputVector]:
    """Draw ``n`` inputs uniformly per param from ``[lo, hi]``; redraw on entry-assumption failure."""
    if lo > hi:
        raise ValueError(f"empty input range [{lo}, {hi}]")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    budget = max(1000, 100 * n) if budget is None else budget
    out: list[InputVector] = []
    draws = 0
    while len(out) < n:
        if draws >= budget:
            raise RetryBudgetExhausted(
                f"only {len(out)} of {n} inputs satisfy the entry assumption of {prog.name} "
                f"after {draws} draws from [{lo}, {hi}]"
            )
        draws += 1
        env = {p: rng.randint(lo, hi) for p in prog.params}
        if all(_test(c, env) for c in prog.entry):
            out.append(InputVector(env))
    return out
