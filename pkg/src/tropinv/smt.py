"""SMT-LIB2 encoding and an external solver session over standard streams.

The solver is any process that reads SMT-LIB2 commands on stdin and answers on
stdout (``z3 -in`` by default). Sessions run one query at a time: ``entail``
brackets ``(assert (not f)) (check-sat)`` in a push/pop so the asserted
context persists between calls.
"""

from __future__ import annotations

import logging
import os
import queue
import re
import shlex
import subprocess
import threading
import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import lcm

from . import formula as F

__all__ = [
    "SolverError", "SolverDied", "SolverProtocolError", "SolverSession", "EntailResult",
    "ENTAILED", "COUNTEREXAMPLE", "UNKNOWN", "encode", "encode_term", "var_symbol",
    "parse_symbol", "parse_sexpr", "DEFAULT_SOLVER_CMD", "solver_available",
]

log = logging.getLogger(__name__)

DEFAULT_SOLVER_CMD = "z3 -in"

ENTAILED = "entailed"
COUNTEREXAMPLE = "counterexample"
UNKNOWN = "unknown"


class SolverError(RuntimeError):
    pass


class SolverDied(SolverError):
    """The solver process exited or could not be started."""


class SolverProtocolError(SolverError):
    """The solver answered something we could not make sense of."""


@dataclass(frozen=True)
class EntailResult:
    status: str
    model: Mapping = field(default_factory=dict)  # (name, index) -> int
    reason: str = ""

    @property
    def entailed(self) -> bool:
        return self.status == ENTAILED

    def __repr__(self):
        if self.status == COUNTEREXAMPLE:
            return f"EntailResult(counterexample, {dict(self.model)})"
        if self.status == UNKNOWN:
            return f"EntailResult(unknown, {self.reason!r})"
        return "EntailResult(entailed)"


def solver_available(cmd: str = DEFAULT_SOLVER_CMD) -> bool:
    import shutil
    try:
        exe = shlex.split(cmd)[0]
    except (ValueError, IndexError):
        return False
    return shutil.which(exe) is not None


# -- encoding ----------------------------------------------------------------

_SUFFIX = re.compile(r"(.*)__(\d+|in)\Z")


def var_symbol(name: str, index) -> str:
    return name if index is None else f"{name}__{index}"


def parse_symbol(sym: str):
    m = _SUFFIX.match(sym)
    if not m:
        return (sym, None)
    idx = m.group(2)
    return (m.group(1), "in" if idx == "in" else int(idx))


def _den(e) -> int:
    """Least multiplier making ``e`` integral."""
    if isinstance(e, F.Num):
        return e.value.denominator
    if isinstance(e, F.Var):
        return 1
    if isinstance(e, (F.Add, F.Max, F.Min)):
        return reduce(lcm, (_den(a) for a in e.args), 1)
    if isinstance(e, F.Sub):
        return lcm(_den(e.left), _den(e.right))
    if isinstance(e, F.Neg):
        return _den(e.arg)
    if isinstance(e, F.Mul):
        return reduce(lambda acc, a: acc * _den(a), e.args, 1)
    if isinstance(e, F.Pow):
        return _den(e.base) ** e.exp
    if isinstance(e, F.Ite):
        return lcm(_den(e.then), _den(e.other))
    raise TypeError(f"not an expression: {e!r}")


def _scale(e, k: int):
    """``k * e`` with every constant integral; ``k`` must be a multiple of ``_den(e)``."""
    if k == 1 and _den(e) == 1:
        return e  # conditions inside are handled by _inner_conds
    if isinstance(e, F.Num):
        return F.Num(e.value * k)
    if isinstance(e, F.Var):
        return F.Mul((F.Num(k), e))
    if isinstance(e, (F.Add, F.Max, F.Min)):
        return type(e)(tuple(_scale(a, k) for a in e.args))
    if isinstance(e, F.Sub):
        return F.Sub(_scale(e.left, k), _scale(e.right, k))
    if isinstance(e, F.Neg):
        return F.Neg(_scale(e.arg, k))
    if isinstance(e, F.Mul):
        coeff = Fraction(k)
        factors = []
        for a in e.args:
            if isinstance(a, F.Num):
                coeff *= a.value
            else:
                d = _den(a)
                coeff /= d
                factors.append(_scale(a, d))
        if coeff == 0:
            return F.Num(0)
        if coeff == 1 and factors:
            return factors[0] if len(factors) == 1 else F.Mul(tuple(factors))
        return F.Mul((F.Num(coeff),) + tuple(factors)) if factors else F.Num(coeff)
    if isinstance(e, F.Pow):
        d = _den(e.base)
        inner = F.Pow(_scale(e.base, d), e.exp)
        m = k // d ** e.exp
        return inner if m == 1 else F.Mul((F.Num(m), inner))
    if isinstance(e, F.Ite):
        return F.Ite(e.cond, _scale(e.then, k), _scale(e.other, k))
    raise TypeError(f"not an expression: {e!r}")


def _clear(f):
    """Multiply each comparison through by its denominators so all constants are integers."""
    if isinstance(f, F.Cmp):
        k = lcm(_den(f.left), _den(f.right))
        return F.Cmp(f.op, _inner_conds(_scale(f.left, k)), _inner_conds(_scale(f.right, k)))
    if isinstance(f, (F.And, F.Or)):
        return type(f)(tuple(_clear(a) for a in f.args))
    if isinstance(f, F.Not):
        return F.Not(_clear(f.arg))
    return f


def _inner_conds(e):
    """Clear the conditions of if-then-else terms nested in ``e``."""
    if isinstance(e, F.Ite):
        return F.Ite(_clear(e.cond), _inner_conds(e.then), _inner_conds(e.other))
    if isinstance(e, (F.Num, F.Var)):
        return e
    return F._map_children(e, _inner_conds)


def _int(v: Fraction) -> str:
    if v.denominator != 1:
        raise ValueError(f"non-integral constant {v} survived encoding")
    n = v.numerator
    return str(n) if n >= 0 else f"(- {-n})"


def encode_term(e) -> str:
    if isinstance(e, F.Num):
        return _int(e.value)
    if isinstance(e, F.Var):
        return var_symbol(e.name, e.index)
    if isinstance(e, F.Add):
        return "(+ " + " ".join(encode_term(a) for a in e.args) + ")"
    if isinstance(e, F.Sub):
        return f"(- {encode_term(e.left)} {encode_term(e.right)})"
    if isinstance(e, F.Neg):
        return f"(- {encode_term(e.arg)})"
    if isinstance(e, F.Mul):
        return "(* " + " ".join(encode_term(a) for a in e.args) + ")"
    if isinstance(e, F.Pow):
        if e.exp == 0:
            return "1"
        if e.exp == 1:
            return encode_term(e.base)
        b = encode_term(e.base)
        return "(* " + " ".join([b] * e.exp) + ")"
    if isinstance(e, F.Ite):
        return f"(ite {encode_bool(e.cond)} {encode_term(e.then)} {encode_term(e.other)})"
    if isinstance(e, (F.Max, F.Min)):
        return encode_term(F.expand_tropical(e))
    raise TypeError(f"cannot encode {e!r} as a term")


def encode_bool(f) -> str:
    if isinstance(f, F.BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, F.Cmp):
        a, b = encode_term(f.left), encode_term(f.right)
        if f.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({f.op} {a} {b})"
    if isinstance(f, F.And):
        return "(and " + " ".join(encode_bool(a) for a in f.args) + ")"
    if isinstance(f, F.Or):
        return "(or " + " ".join(encode_bool(a) for a in f.args) + ")"
    if isinstance(f, F.Not):
        return f"(not {encode_bool(f.arg)})"
    raise TypeError(f"cannot encode {f!r} as a formula")


def as_formula(x):
    return x.to_formula() if hasattr(x, "to_formula") else x


def encode(x, index=None) -> str:
    """SMT-LIB2 text of a formula or relation; ``index`` is attached to unindexed variables."""
    f = as_formula(x)
    if index is not None:
        f = F.at_index(f, index)
    f = _clear(F.expand_tropical(f))
    return encode_bool(f) if F.is_bool(f) else encode_term(f)


# -- s-expressions -----------------------------------------------------------

_SEXP_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()"|]+))')


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of strings."""
    pos = 0
    stack: list[list] = [[]]
    while True:
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SolverProtocolError(f"unbalanced ')' in solver output: {text!r}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            tok = m.group(3) or m.group(4) or m.group(5)
            stack[-1].append(tok)
    if text[pos:].strip():
        raise SolverProtocolError(f"cannot parse solver output: {text!r}")
    if len(stack) != 1 or len(stack[0]) != 1:
        raise SolverProtocolError(f"expected one s-expression, got {text!r}")
    return stack[0][0]


def _int_value(v) -> int:
    if isinstance(v, str):
        try:
            return int(v)
        except ValueError:
            raise SolverProtocolError(f"expected an integer, got {v!r}") from None
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -_int_value(v[1])
    raise SolverProtocolError(f"expected an integer, got {v!r}")


def _paren_balance(s: str) -> int:
    depth = 0
    in_str = False
    for ch in s:
        if ch == '"':
            in_str = not in_str
        elif not in_str:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
    return depth


# -- sessions -----------------------------------------------------------------

class SolverSession:
    """One external solver process with an assertion stack mirrored on our side."""

    def __init__(self, cmd: str = DEFAULT_SOLVER_CMD, timeout: float = 10.0, logic: str = "QF_NIA"):
        self.cmd = cmd
        self.timeout = float(timeout)
        self.logic = logic
        self._argv = shlex.split(cmd)
        if not self._argv:
            raise SolverDied("empty solver command")
        self._is_z3 = os.path.basename(self._argv[0]).startswith("z3")
        self._proc = None
        self._lines: queue.Queue | None = None
        self._lock = threading.Lock()
        # each frame: (commands to replay, asserted formulas, symbols declared)
        self._frames: list[tuple[list[str], list, set]] = [([], [], set())]
        self.restarts = 0
        self._start()

    # process management
    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self._argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT, text=True, bufsize=1,
            )
        except OSError as exc:
            raise SolverDied(f"cannot start solver {self.cmd!r}: {exc}") from None
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self._proc, self._lines), daemon=True).start()
        self._send("(set-option :print-success true)")
        self._send(f"(set-logic {self.logic})")
        if self._is_z3:
            self._send(f"(set-option :timeout {max(1, int(self.timeout * 1000))})")

    @staticmethod
    def _pump(proc, lines):
        for line in proc.stdout:
            lines.put(line)
        lines.put(None)

    def _kill(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:  # already gone
                pass
            self._proc = None

    def _restart(self):
        self._kill()
        self.restarts += 1
        self._start()
        for depth, (cmds, _, _) in enumerate(self._frames):
            if depth:
                self._send("(push 1)")
            for c in cmds:
                self._send(c)

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
                self._proc.wait(timeout=2)
            except Exception:
                pass
            self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    # raw protocol
    def _write(self, text: str):
        if self._proc is None or self._proc.poll() is not None:
            raise SolverDied(f"solver {self.cmd!r} is not running")
        try:
            self._proc.stdin.write(text + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverDied(f"solver {self.cmd!r} died: {exc}") from None

    def _read(self, deadline: float | None) -> str | None:
        """One complete response, or ``None`` if the deadline passed."""
        buf = ""
        while True:
            wait = None if deadline is None else deadline - time.monotonic()
            if wait is not None and wait <= 0:
                return None
            try:
                line = self._lines.get(timeout=wait)
            except queue.Empty:
                return None
            if line is None:
                # forget the process so later writes fail fast instead of waiting
                self._kill()
                raise SolverDied(f"solver {self.cmd!r} exited unexpectedly"
                                 + (f" after {buf.strip()!r}" if buf.strip() else ""))
            buf += line
            if buf.strip() and _paren_balance(buf) <= 0:
                return buf.strip()

    def _deadline(self, slack: float = 5.0) -> float:
        return time.monotonic() + self.timeout + max(slack, self.timeout * 0.5)

    def _send(self, cmd: str) -> str:
        self._write(cmd)
        resp = self._read(self._deadline())
        if resp is None:
            raise SolverDied(f"solver {self.cmd!r} did not acknowledge {cmd[:60]!r}")
        if resp.startswith("(error"):
            raise SolverProtocolError(f"solver rejected {cmd[:200]!r}: {resp}")
        if resp != "success":
            raise SolverProtocolError(f"expected 'success' after {cmd[:60]!r}, got {resp!r}")
        return resp

    def _query(self, cmd: str, deadline: float | None) -> str | None:
        self._write(cmd)
        resp = self._read(deadline)
        if resp is not None and resp.startswith("(error"):
            raise SolverProtocolError(f"solver rejected {cmd[:200]!r}: {resp}")
        return resp

    # assertion stack
    @property
    def depth(self) -> int:
        return len(self._frames) - 1

    def _declared(self) -> set:
        out = set()
        for _, _, d in self._frames:
            out |= d
        return out

    def _declare(self, f):
        known = self._declared()
        for name, index in sorted(F.free_vars(f), key=lambda p: (p[0], str(p[1]))):
            sym = var_symbol(name, index)
            if sym not in known:
                cmd = f"(declare-const {sym} Int)"
                self._send(cmd)
                self._frames[-1][0].append(cmd)
                self._frames[-1][2].add(sym)
                known.add(sym)

    def push(self):
        with self._lock:
            self._send("(push 1)")
            self._frames.append(([], [], set()))

    def pop(self):
        with self._lock:
            if len(self._frames) == 1:
                raise SolverProtocolError("pop without matching push")
            self._send("(pop 1)")
            self._frames.pop()

    def add(self, x):
        """Assert a formula or relation (already indexed)."""
        f = as_formula(x)
        with self._lock:
            self._declare(f)
            cmd = f"(assert {encode(f)})"
            self._send(cmd)
            self._frames[-1][0].append(cmd)
            self._frames[-1][1].append(f)

    assert_ = add

    def assertions(self) -> list:
        return [f for _, fs, _ in self._frames for f in fs]

    def entail(self, x) -> EntailResult:
        """Do the current assertions imply ``x``?"""
        goal = as_formula(x)
        with self._lock:
            self._declare(goal)
            self._send("(push 1)")
            try:
                self._send(f"(assert (not {encode(goal)}))")
                resp = self._query("(check-sat)", self._deadline(slack=1.0))
                if resp is None:
                    log.warning("solver exceeded %.3gs; restarting", self.timeout)
                    self._restart()
                    return EntailResult(UNKNOWN, reason="timeout")
                if resp == "unsat":
                    result = EntailResult(ENTAILED)
                elif resp == "sat":
                    model = self._model(goal)
                    result = EntailResult(COUNTEREXAMPLE, model)
                elif resp == "unknown":
                    why = self._query("(get-info :reason-unknown)", self._deadline())
                    result = EntailResult(UNKNOWN, reason=_reason(why))
                else:
                    raise SolverProtocolError(f"unexpected check-sat answer {resp!r}")
            finally:
                if self._proc is not None:
                    self._send("(pop 1)")
        return result

    def _model(self, goal) -> dict:
        resp = self._query("(get-model)", self._deadline())
        if resp is None:
            raise SolverProtocolError("solver did not return a model")
        tree = parse_sexpr(resp)
        if isinstance(tree, list) and tree and tree[0] == "model":
            tree = tree[1:]
        model = {}
        for entry in tree if isinstance(tree, list) else []:
            if (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"
                    and entry[2] == [] and entry[3] == "Int"):
                model[parse_symbol(entry[1])] = _int_value(entry[4])
        wanted = set()
        for f in self.assertions() + [goal]:
            wanted |= F.free_vars(f)
        missing = sorted((p for p in wanted if p not in model), key=lambda p: (p[0], str(p[1])))
        if missing:
            syms = " ".join(var_symbol(*p) for p in missing)
            resp = self._query(f"(get-value ({syms}))", self._deadline())
            if resp is None:
                raise SolverProtocolError("solver did not answer get-value")
            for pair in parse_sexpr(resp):
                model[parse_symbol(pair[0])] = _int_value(pair[1])
        model = {p: model[p] for p in sorted(wanted, key=lambda p: (p[0], str(p[1])))}
        # never trust the model blindly: it must satisfy the query exactly
        env = {p: Fraction(v) for p, v in model.items()}
        for f in self.assertions():
            if not F.evaluate(f, env):
                raise SolverProtocolError(f"model {model} violates asserted {F.to_text(f)}")
        if F.evaluate(goal, env):
            raise SolverProtocolError(f"model {model} does not refute {F.to_text(goal)}")
        return model


def _reason(resp) -> str:
    if not resp:
        return "unknown"
    try:
        tree = parse_sexpr(resp)
        if isinstance(tree, list) and len(tree) == 2:
            why = str(tree[1]).strip('"')
            # z3 reports its own per-query timeout as a cancellation
            return "timeout" if why in ("canceled", "timeout") else why
    except SolverProtocolError:
        pass
    return resp
