"""Transition systems ``M = (I, T)`` for one labeled loop, by forward symbolic execution.

``init`` describes the state at index 0, the first time control reaches the
loop guard. ``trans`` relates index 0 (the state at a guard evaluation, printed
``@n-1``) to index 1 (the state at the next one, printed ``@n``) and includes
the guard at index 0. ``trans_at(k)`` is the copy relating ``k-1`` to ``k``.

Branches in the code become ``ite`` terms instead of a disjunction over paths,
so each variable gets exactly one update equation. Params that are overwritten
before the loop appear in ``init`` with index ``in`` (their input value).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from . import formula as F
from .minilang import syntax as S

__all__ = ["TransitionSystem", "VcGenError", "extract_transition_system", "parse_transition_system"]


class VcGenError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionSystem:
    vars: tuple[str, ...]
    init: object
    trans: object
    location: str = "L"
    params: tuple[str, ...] = ()

    def trans_at(self, k: int):
        """Transition from state ``k-1`` to ``k``."""
        if k < 1:
            raise ValueError("transitions start at index 1")
        return F.shift(self.trans, k - 1)

    def unrolling(self, k: int):
        """``init`` and the first ``k`` transitions."""
        return F.conj([self.init] + [self.trans_at(i) for i in range(1, k + 1)])

    def to_text(self) -> str:
        lines = [
            f"loc: {self.location}",
            "vars: " + ", ".join(self.vars),
        ]
        if self.params:
            lines.append("params: " + ", ".join(self.params))
        lines.append("init: " + F.to_text(self.init))
        lines.append("trans: " + F.to_text(self.trans, relative=True))
        return "\n".join(lines) + "\n"


def parse_transition_system(text: str) -> TransitionSystem:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("loc", "vars", "params", "init", "trans"):
            raise VcGenError(f"line {lineno}: expected 'loc:', 'vars:', 'params:', 'init:' or 'trans:'")
        if key in fields:
            raise VcGenError(f"line {lineno}: duplicate {key!r}")
        fields[key] = value.strip()
    for key in ("vars", "init", "trans"):
        if key not in fields:
            raise VcGenError(f"missing {key!r} line")

    def names(s):
        return tuple(n.strip() for n in s.split(",") if n.strip())

    try:
        init = F.parse_formula(fields["init"])
        trans = F.parse_formula(fields["trans"])
    except F.FormulaSyntaxError as exc:
        raise VcGenError(str(exc)) from None
    ts = TransitionSystem(names(fields["vars"]), init, trans, fields.get("loc", "L"),
                          names(fields.get("params", "")))
    _check_indices(ts)
    return ts


def _check_indices(ts: TransitionSystem):
    known = set(ts.vars) | set(ts.params)
    for name, idx in F.free_vars(ts.init):
        if name not in known or idx not in (0, "in"):
            raise VcGenError(f"init mentions {name}@{idx}; only state variables at index 0 "
                             "(or params at 'in') are allowed")
    for name, idx in F.free_vars(ts.trans):
        if name not in ts.vars or idx not in (0, 1):
            raise VcGenError(f"trans mentions {name}@{idx}; only state variables at n-1 and n")


# -- symbolic execution -------------------------------------------------------

def _add(a, b):
    if isinstance(a, F.Num) and isinstance(b, F.Num):
        return F.Num(a.value + b.value)
    if isinstance(b, F.Num) and b.value == 0:
        return a
    if isinstance(a, F.Num) and a.value == 0:
        return b
    left = a.args if isinstance(a, F.Add) else (a,)
    right = b.args if isinstance(b, F.Add) else (b,)
    return F.Add(left + right)


def _mul(a, b):
    if isinstance(a, F.Num) and isinstance(b, F.Num):
        return F.Num(a.value * b.value)
    left = a.args if isinstance(a, F.Mul) else (a,)
    right = b.args if isinstance(b, F.Mul) else (b,)
    return F.Mul(left + right)


def _ite(c, a, b):
    if a == b:
        return a
    if c == F.TRUE:
        return a
    if c == F.FALSE:
        return b
    return F.Ite(c, a, b)


class _Undefined(Exception):
    def __init__(self, name):
        self.name = name


def _expr(e, state: Mapping):
    if isinstance(e, S.IntLit):
        return F.Num(e.value)
    if isinstance(e, S.VarRef):
        if e.name not in state:
            raise _Undefined(e.name)
        return state[e.name]
    if isinstance(e, S.BinOp):
        a, b = _expr(e.left, state), _expr(e.right, state)
        if e.op == "+":
            return _add(a, b)
        if e.op == "-":
            if isinstance(a, F.Num) and isinstance(b, F.Num):
                return F.Num(a.value - b.value)
            return F.Sub(a, b)
        return _mul(a, b)
    if isinstance(e, S.UnaryMinus):
        a = _expr(e.arg, state)
        return F.Num(-a.value) if isinstance(a, F.Num) else F.Neg(a)
    raise VcGenError(f"unsupported expression {e!r}")


_CMP = {"<": "<", "<=": "<=", "==": "=", "!=": "!=", ">=": ">=", ">": ">"}


def _cond(c, state: Mapping):
    if isinstance(c, S.Compare):
        return F.Cmp(_CMP[c.op], _expr(c.left, state), _expr(c.right, state))
    if isinstance(c, S.BoolOp):
        parts = [_cond(a, state) for a in c.args]
        return F.conj(parts) if c.op == "and" else F.disj(parts)
    if isinstance(c, S.NotOp):
        return F.negate_formula(_cond(c.arg, state))
    if isinstance(c, S.BoolLit):
        return F.TRUE if c.value else F.FALSE
    raise VcGenError(f"unsupported condition {c!r}")


def _and(a, b):
    return F.conj([a, b] if not isinstance(a, F.And) else list(a.args) + [b])


def _block(stmts, state: dict, where: str):
    """Execute loop-free code; returns ``(state, go)``.

    ``go`` is the condition under which execution falls through the block
    (rather than returning or being cut off by a failing assume).
    """
    go = F.TRUE
    state = dict(state)
    for i, s in enumerate(stmts):
        if isinstance(s, S.Assign):
            state[s.target] = _expr(s.expr, state)
        elif isinstance(s, S.If):
            c = _cond(s.cond, state)
            s1, g1 = _block(s.then, state, where)
            s2, g2 = _block(s.other, state, where)
            merged = {}
            for name in set(s1) & set(s2):
                merged[name] = _ite(c, s1[name], s2[name])
            state = merged
            if g1 != F.TRUE or g2 != F.TRUE:
                go = _and(go, F.disj([F.conj([c, g1]), F.conj([F.negate_formula(c), g2])]))
        elif isinstance(s, (S.Assume, S.Assert)):
            # a failing assert aborts the run, so past it the condition holds
            go = _and(go, _cond(s.cond, state))
        elif isinstance(s, S.Return):
            return state, F.FALSE
        elif isinstance(s, S.Label):
            pass
        elif isinstance(s, S.While):
            raise VcGenError(f"{where} contains a loop"
                             + (f" labeled {s.label}" if s.label else "")
                             + "; only loop-free code is supported there")
        else:
            raise VcGenError(f"unsupported statement {type(s).__name__} in {where}")
    return state, go


def _assigned(stmts) -> set[str]:
    out = set()
    for s in stmts:
        if isinstance(s, S.Assign):
            out.add(s.target)
        elif isinstance(s, S.If):
            out |= _assigned(s.then) | _assigned(s.other)
        elif isinstance(s, S.While):
            out |= _assigned(s.body)
    return out


def extract_transition_system(p: S.Program, location: str = "L") -> TransitionSystem:
    """Build ``(init, trans)`` for the top-level ``while[location]`` of ``p``.

    A top-level ``[location]`` label gets ``trans = false``: it is reached once.
    """
    loop_at = None
    for i, s in enumerate(p.body):
        if isinstance(s, (S.While, S.Label)) and s.label == location:
            loop_at = i
            break
    if loop_at is None:
        if location in p.locations:
            raise VcGenError(f"location {location!r} of {p.name} does not label a top-level while loop or statement")
        raise VcGenError(f"program {p.name} has no location {location!r}")
    prefix = p.body[:loop_at]
    loop = p.body[loop_at]
    touched = _assigned(prefix)
    entry = {q: F.Var(q, "in" if q in touched else 0) for q in p.params}
    try:
        state, go = _block(prefix, entry, f"the path to {location}")
    except _Undefined as exc:
        raise VcGenError(f"variable {exc.name!r} is read before it is assigned on the path to {location}") from None
    if go == F.FALSE:
        raise VcGenError(f"the loop {location} is unreachable")
    names = tuple(sorted(state))
    init = F.conj([go] + [F.Cmp("=", F.Var(n, 0), state[n]) for n in names
                          if state[n] != F.Var(n, 0)])
    # flatten nested conjunctions for readability
    if isinstance(init, F.And):
        flat = []
        for a in init.args:
            flat.extend(a.args if isinstance(a, F.And) else (a,))
        init = F.conj(flat)

    if isinstance(loop, S.Label):
        # a plain label is visited once: no transitions out of it
        return TransitionSystem(names, init, F.FALSE, location, tuple(p.params))

    cur = {n: F.Var(n, 0) for n in names}
    guard = _cond(loop.cond, cur)
    try:
        after, go = _block(loop.body, cur, f"the body of loop {location}")
    except _Undefined as exc:
        raise VcGenError(f"variable {exc.name!r} is read before it is assigned in loop {location}; "
                         "it is not defined when the loop is entered") from None
    missing = [n for n in names if n not in after]
    if missing:
        raise VcGenError(f"loop {location} leaves {missing} undefined on some branch")
    parts = [guard]
    if go != F.TRUE:
        parts.append(go)
    parts += [F.Cmp("=", F.Var(n, 1), after[n]) for n in names]
    return TransitionSystem(names, init, F.conj(parts), location, tuple(p.params))
