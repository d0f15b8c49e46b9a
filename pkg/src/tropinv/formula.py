"""Expression and formula trees shared by candidates, transition systems and the encoder.

Variables optionally carry a step index: ``None`` for state formulas, an int
for unrolled copies (``x@3``), or the string ``"in"`` for loop-entry inputs
that were overwritten before the loop (``x@in``).

Text grammar (also the candidate syntax)::

    formula := conj (('||' | 'or') conj)*
    conj    := unary (('&&' | 'and') unary)*
    unary   := ('!' | 'not') unary | 'true' | 'false' | chain | '(' formula ')'
    chain   := expr (relop expr)+          # 11 >= y >= 5 is a conjunction
    expr    := prod (('+' | '-') prod)*
    prod    := neg (('*' | '/') neg)*      # '/' only by a numeric constant
    neg     := '-' neg | pow
    pow     := atom ('^' INT)?
    atom    := NUM | NAME ['@' index] | ('max'|'min') '(' expr, ... ')'
             | 'ite' '(' formula ',' expr ',' expr ')' | '(' expr ')'
    index   := INT | 'in' | 'n' | 'n-' INT  # n-relative forms only for transitions
"""

from __future__ import annotations

import re
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

__all__ = [
    "FormulaSyntaxError",
    "Num", "Var", "Add", "Sub", "Neg", "Mul", "Pow", "Max", "Min", "Ite",
    "BoolConst", "Cmp", "And", "Or", "Not",
    "TRUE", "FALSE",
    "parse_formula", "parse_expr", "to_text", "evaluate", "free_vars",
    "at_index", "shift", "substitute", "size", "conj", "disj", "negate_formula",
    "expand_tropical",
]


# -- nodes -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var:
    name: str
    index: int | str | None = None


@dataclass(frozen=True)
class Add:
    args: tuple


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Mul:
    args: tuple


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


@dataclass(frozen=True)
class Max:
    args: tuple


@dataclass(frozen=True)
class Min:
    args: tuple


@dataclass(frozen=True)
class Ite:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object

    def __post_init__(self):
        if self.op not in _CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


TRUE = BoolConst(True)
FALSE = BoolConst(False)

_CMP_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}
_NEGATED_CMP = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}

_EXPR_NODES = (Num, Var, Add, Sub, Neg, Mul, Pow, Max, Min, Ite)
_BOOL_NODES = (BoolConst, Cmp, And, Or, Not)


def conj(parts: Iterable) -> object:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def disj(parts: Iterable) -> object:
    parts = [p for p in parts if p != FALSE]
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(tuple(parts))


def negate_formula(f) -> object:
    """Negation with comparisons flipped in place, for readable output."""
    if isinstance(f, Cmp):
        return Cmp(_NEGATED_CMP[f.op], f.left, f.right)
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, BoolConst):
        return BoolConst(not f.value)
    return Not(f)


# -- generic traversal -------------------------------------------------------

def _map_children(node, fn: Callable):
    if isinstance(node, (Num, Var, BoolConst)):
        return node
    if isinstance(node, (Add, Mul, Max, Min, And, Or)):
        return type(node)(tuple(fn(a) for a in node.args))
    if isinstance(node, Sub):
        return Sub(fn(node.left), fn(node.right))
    if isinstance(node, Neg):
        return Neg(fn(node.arg))
    if isinstance(node, Not):
        return Not(fn(node.arg))
    if isinstance(node, Pow):
        return Pow(fn(node.base), node.exp)
    if isinstance(node, Ite):
        return Ite(fn(node.cond), fn(node.then), fn(node.other))
    if isinstance(node, Cmp):
        return Cmp(node.op, fn(node.left), fn(node.right))
    raise TypeError(f"not a formula node: {node!r}")


def _children(node) -> tuple:
    if isinstance(node, (Num, Var, BoolConst)):
        return ()
    if isinstance(node, (Add, Mul, Max, Min, And, Or)):
        return node.args
    if isinstance(node, Sub):
        return (node.left, node.right)
    if isinstance(node, (Neg, Not)):
        return (node.arg,)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Ite):
        return (node.cond, node.then, node.other)
    if isinstance(node, Cmp):
        return (node.left, node.right)
    raise TypeError(f"not a formula node: {node!r}")


def free_vars(node) -> set[tuple[str, int | str | None]]:
    out: set = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add((n.name, n.index))
        else:
            stack.extend(_children(n))
    return out


def size(node) -> int:
    return 1 + sum(size(c) for c in _children(node))


def substitute(node, fn: Callable[[Var], object]):
    """Replace every variable ``v`` by ``fn(v)``."""
    if isinstance(node, Var):
        return fn(node)
    return _map_children(node, lambda c: substitute(c, fn))


def at_index(node, index: int | str):
    """Attach ``index`` to every unindexed variable."""
    return substitute(node, lambda v: Var(v.name, index) if v.index is None else v)


def shift(node, offset: int):
    """Add ``offset`` to every integer index; ``None`` and ``"in"`` are left alone."""
    def move(v: Var):
        if isinstance(v.index, int) and not isinstance(v.index, bool):
            return Var(v.name, v.index + offset)
        return v
    return substitute(node, move)


def expand_tropical(node):
    """Rewrite max/min into if-then-else chains (``max(a, b) = ite(a > b, a, b)``)."""
    node = _map_children(node, expand_tropical)
    if isinstance(node, (Max, Min)):
        op = ">" if isinstance(node, Max) else "<"
        args = list(node.args)
        acc = args[-1]
        for a in reversed(args[:-1]):
            acc = Ite(Cmp(op, a, acc), a, acc)
        return acc
    return node


# -- evaluation --------------------------------------------------------------

def evaluate(node, env: Mapping | Callable):
    """Exact evaluation; ``env`` maps ``(name, index)`` to a value (or is a callable)."""
    lookup = env if callable(env) else env.__getitem__

    def ev(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            try:
                return Fraction(lookup((n.name, n.index)))
            except KeyError:
                raise KeyError(f"unbound variable {_var_text(n)}") from None
        if isinstance(n, Add):
            return sum((ev(a) for a in n.args), Fraction(0))
        if isinstance(n, Sub):
            return ev(n.left) - ev(n.right)
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Mul):
            return reduce(lambda acc, a: acc * ev(a), n.args, Fraction(1))
        if isinstance(n, Pow):
            return ev(n.base) ** n.exp
        if isinstance(n, Max):
            return max(ev(a) for a in n.args)
        if isinstance(n, Min):
            return min(ev(a) for a in n.args)
        if isinstance(n, Ite):
            return ev(n.then) if ev(n.cond) else ev(n.other)
        if isinstance(n, BoolConst):
            return n.value
        if isinstance(n, Cmp):
            return _CMP_OPS[n.op](ev(n.left), ev(n.right))
        if isinstance(n, And):
            return all(ev(a) for a in n.args)
        if isinstance(n, Or):
            return any(ev(a) for a in n.args)
        if isinstance(n, Not):
            return not ev(n.arg)
        raise TypeError(f"not a formula node: {n!r}")

    return ev(node)


def state_env(valuation: Mapping, index=None) -> dict:
    return {(k, index): v for k, v in valuation.items()}


# -- printing ----------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Cmp: 4, Add: 5, Sub: 5, Mul: 6, Neg: 7, Pow: 8}


def _fmt_num(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _var_text(v: Var, relative: bool = False) -> str:
    if v.index is None:
        return v.name
    if relative and isinstance(v.index, int):
        return f"{v.name}@n" if v.index == 1 else f"{v.name}@n-{1 - v.index}"
    return f"{v.name}@{v.index}"


def to_text(node, relative: bool = False) -> str:
    """Render in the text grammar; ``relative`` prints transition indices 0/1 as n-1/n."""

    def prec(n) -> int:
        # -1/2 reads as a quotient, so it binds like a product, not a negation
        if isinstance(n, Num) and n.value.denominator != 1:
            return _PREC[Mul]
        if isinstance(n, Num) and n.value < 0:
            return _PREC[Neg]
        return _PREC.get(type(n), 9)

    def wrap(n, min_prec: int) -> str:
        s = fmt(n)
        return f"({s})" if prec(n) < min_prec else s

    def fmt(n) -> str:
        if isinstance(n, Num):
            return _fmt_num(n.value)
        if isinstance(n, Var):
            return _var_text(n, relative)
        if isinstance(n, Add):
            return " + ".join(wrap(a, 5) for a in n.args)
        if isinstance(n, Sub):
            return f"{wrap(n.left, 5)} - {wrap(n.right, 6)}"
        if isinstance(n, Neg):
            return f"-{wrap(n.arg, 8)}"
        if isinstance(n, Mul):
            return "*".join(wrap(a, 7) for a in n.args)
        if isinstance(n, Pow):
            return f"{wrap(n.base, 9)}^{n.exp}"
        if isinstance(n, (Max, Min)):
            name = "max" if isinstance(n, Max) else "min"
            return f"{name}(" + ", ".join(fmt(a) for a in n.args) + ")"
        if isinstance(n, Ite):
            return f"ite({fmt(n.cond)}, {fmt(n.then)}, {fmt(n.other)})"
        if isinstance(n, BoolConst):
            return "true" if n.value else "false"
        if isinstance(n, Cmp):
            return f"{wrap(n.left, 5)} {n.op} {wrap(n.right, 5)}"
        if isinstance(n, And):
            return " && ".join(wrap(a, 3) for a in n.args)
        if isinstance(n, Or):
            return " || ".join(wrap(a, 3) for a in n.args)
        if isinstance(n, Not):
            return f"!{wrap(n.arg, 5)}"
        raise TypeError(f"not a formula node: {n!r}")

    return fmt(node)


# -- parsing -----------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} at column {pos + 1}: {text!r}"
        super().__init__(message)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<index>@(?:in|n-\d+|n|\d+))
  | (?P<op><=|>=|==|!=|&&|\|\||[-+*/^(),<>=!])
    """,
    re.VERBOSE,
)
_RELOPS = {"<", "<=", "=", "==", "!=", ">=", ">"}
_KEYWORDS = {"and", "or", "not", "true", "false", "max", "min", "ite"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # helpers
    def peek(self, offset: int = 0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, value: str) -> bool:
        kind, text, _ = self.peek()
        return kind in ("op", "name") and text == value

    def take(self, value: str | None = None):
        tok = self.peek()
        if value is not None and not self.at(value):
            self.fail(f"expected {value!r}")
        self.i += 1
        return tok

    def fail(self, message: str):
        kind, text, pos = self.peek()
        found = "end of input" if kind == "eof" else repr(text)
        raise FormulaSyntaxError(f"{message}, found {found}", self.text, pos)

    # formulas
    def formula(self):
        parts = [self.conj()]
        while self.at("||") or self.at("or"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self):
        parts = [self.unary()]
        while self.at("&&") or self.at("and"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        if self.at("!") or self.at("not"):
            self.take()
            return Not(self.unary())
        if self.at("true"):
            self.take()
            return TRUE
        if self.at("false"):
            self.take()
            return FALSE
        if self.at("("):
            save = self.i
            try:
                return self.chain()
            except FormulaSyntaxError:
                self.i = save
            self.take("(")
            inner = self.formula()
            self.take(")")
            return inner
        return self.chain()

    def chain(self):
        left = self.expr()
        if not (self.peek()[0] == "op" and self.peek()[1] in _RELOPS):
            self.fail("expected a comparison")
        parts = []
        while self.peek()[0] == "op" and self.peek()[1] in _RELOPS:
            op = self.take()[1]
            op = "=" if op == "==" else op
            right = self.expr()
            parts.append(Cmp(op, left, right))
            left = right
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    # expressions
    def expr(self):
        node = self.prod()
        terms = [node]
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            rhs = self.prod()
            if op == "+":
                terms.append(rhs)
            else:
                left = terms[0] if len(terms) == 1 else Add(tuple(terms))
                terms = [Sub(left, rhs)]
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def prod(self):
        factors = [self.neg()]
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            rhs = self.neg()
            if op == "*":
                factors.append(rhs)
            else:
                if not isinstance(rhs, Num) or rhs.value == 0:
                    self.fail("division only by a nonzero numeric constant")
                if len(factors) == 1 and isinstance(factors[0], Num):
                    factors = [Num(factors[0].value / rhs.value)]
                else:
                    factors.append(Num(1 / rhs.value))
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def neg(self):
        if self.at("-"):
            self.take()
            inner = self.neg()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^"):
            self.take()
            kind, text, _ = self.peek()
            if kind != "num":
                self.fail("exponent must be a non-negative integer")
            self.take()
            return Pow(base, int(text))
        return base

    def atom(self):
        kind, text, _ = self.peek()
        if kind == "num":
            self.take()
            return Num(int(text))
        if kind == "name" and text in ("max", "min"):
            self.take()
            self.take("(")
            args = [self.expr()]
            while self.at(","):
                self.take()
                args.append(self.expr())
            self.take(")")
            return (Max if text == "max" else Min)(tuple(args))
        if kind == "name" and text == "ite":
            self.take()
            self.take("(")
            cond = self.formula()
            self.take(",")
            a = self.expr()
            self.take(",")
            b = self.expr()
            self.take(")")
            return Ite(cond, a, b)
        if kind == "name" and text not in _KEYWORDS:
            self.take()
            index = None
            if self.peek()[0] == "index":
                raw = self.take()[1][1:]
                if raw == "in":
                    index = "in"
                elif raw == "n":
                    index = 1
                elif raw.startswith("n-"):
                    index = 1 - int(raw[2:])
                else:
                    index = int(raw)
            return Var(text, index)
        if self.at("("):
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        self.fail("expected an expression")


def parse_formula(text: str):
    p = _Parser(text)
    node = p.formula()
    if p.peek()[0] != "eof":
        p.fail("unexpected trailing input")
    return node


def parse_expr(text: str):
    p = _Parser(text)
    node = p.expr()
    if p.peek()[0] != "eof":
        p.fail("unexpected trailing input")
    return node


def is_bool(node) -> bool:
    return isinstance(node, _BOOL_NODES)
