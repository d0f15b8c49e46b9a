"""Lexer, AST and recursive-descent parser for the mini imperative language.

::

    program := 'prog' NAME '(' [NAME (',' NAME)*] ')' block
    block   := '{' stmt* '}'
    stmt    := NAME '=' expr ';'
             | 'if' '(' cond ')' block ['else' (block | if-stmt)]
             | 'while' ['[' LABEL ']'] '(' cond ')' block
             | 'assume' '(' cond ')' ';' | 'assert' '(' cond ')' ';'
             | 'return' expr ';'
             | '[' LABEL ']' [';']
    cond    := disjunction of conjunctions of comparisons, with '!' / 'not'
    expr    := integer arithmetic over + - * with unary minus
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "MiniSyntaxError",
    "Program",
    "parse_program",
    "IntLit", "VarRef", "BinOp", "UnaryMinus", "Compare", "BoolOp", "NotOp", "BoolLit",
    "Assign", "If", "While", "Assume", "Assert", "Return", "Label",
]


class MiniSyntaxError(SyntaxError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        super().__init__(f"{message} (line {line}, column {col})")


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class VarRef:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: object
    right: object


@dataclass(frozen=True)
class UnaryMinus:
    arg: object


@dataclass(frozen=True)
class Compare:
    op: str  # '<', '<=', '==', '!=', '>=', '>'
    left: object
    right: object


@dataclass(frozen=True)
class BoolOp:
    op: str  # 'and', 'or'
    args: tuple


@dataclass(frozen=True)
class NotOp:
    arg: object


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    other: tuple = ()


@dataclass(frozen=True)
class While:
    cond: object
    body: tuple
    label: str | None = None


@dataclass(frozen=True)
class Assume:
    cond: object


@dataclass(frozen=True)
class Assert:
    cond: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    expr: object


@dataclass(frozen=True)
class Label:
    label: str


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[str, ...]
    body: tuple
    locations: frozenset[str]
    entry: tuple = ()  # leading assume/assert conditions over params only

    def statements(self):
        """All statements, depth first."""
        def walk(stmts):
            for s in stmts:
                yield s
                if isinstance(s, If):
                    yield from walk(s.then)
                    yield from walk(s.other)
                elif isinstance(s, While):
                    yield from walk(s.body)
        return walk(self.body)

    def variables(self) -> list[str]:
        """Params followed by every assigned variable, sorted."""
        names = set(self.params)
        names.update(s.target for s in self.statements() if isinstance(s, Assign))
        return sorted(names)


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|&&|\|\||[-+*(){}\[\];,<>=!])
    """,
    re.VERBOSE,
)
KEYWORDS = {
    "prog", "if", "else", "while", "assume", "assert", "return", "and", "or", "not",
    "true", "false", "max", "min", "ite", "in",
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise MiniSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "name" and m.group() in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.labels: list[str] = []

    def peek(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("op", "kw") and t.text == text

    def take(self, text: str | None = None) -> Token:
        t = self.peek()
        if text is not None and not self.at(text):
            self.error(f"expected {text!r}")
        self.i += 1
        return t

    def name(self) -> Token:
        t = self.peek()
        if t.kind != "name":
            self.error("expected an identifier")
        self.i += 1
        return t

    def error(self, message: str):
        t = self.peek()
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise MiniSyntaxError(f"{message}, found {found}", t.line, t.col)

    def program(self):
        self.take("prog")
        name = self.name().text
        self.take("(")
        params = []
        if not self.at(")"):
            params.append(self.name().text)
            while self.at(","):
                self.take()
                params.append(self.name().text)
        self.take(")")
        if len(set(params)) != len(params):
            self.error("duplicate parameter")
        body = self.block()
        if self.peek().kind != "eof":
            self.error("unexpected input after program")
        return name, tuple(params), body

    def block(self) -> tuple:
        self.take("{")
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.error("unterminated block")
            stmts.append(self.stmt())
        self.take("}")
        return tuple(stmts)

    def label(self) -> str:
        self.take("[")
        t = self.name()
        self.take("]")
        if t.text in self.labels:
            raise MiniSyntaxError(f"duplicate label {t.text!r}", t.line, t.col)
        self.labels.append(t.text)
        return t.text

    def stmt(self):
        t = self.peek()
        if t.kind == "name":
            self.i += 1
            self.take("=")
            e = self.expr()
            self.take(";")
            return Assign(t.text, e, t.line)
        if self.at("if"):
            return self.if_stmt()
        if self.at("while"):
            self.take()
            label = self.label() if self.at("[") else None
            self.take("(")
            c = self.cond()
            self.take(")")
            return While(c, self.block(), label)
        if self.at("assume") or self.at("assert"):
            kw = self.take()
            self.take("(")
            c = self.cond()
            self.take(")")
            self.take(";")
            return Assume(c) if kw.text == "assume" else Assert(c, kw.line)
        if self.at("return"):
            self.take()
            e = self.expr()
            self.take(";")
            return Return(e)
        if self.at("["):
            lab = self.label()
            if self.at(";"):
                self.take()
            return Label(lab)
        self.error("expected a statement")

    def if_stmt(self):
        self.take("if")
        self.take("(")
        c = self.cond()
        self.take(")")
        then = self.block()
        other: tuple = ()
        if self.at("else"):
            self.take()
            other = (self.if_stmt(),) if self.at("if") else self.block()
        return If(c, then, other)

    # conditions
    def cond(self):
        parts = [self.cond_and()]
        while self.at("||") or self.at("or"):
            self.take()
            parts.append(self.cond_and())
        return parts[0] if len(parts) == 1 else BoolOp("or", tuple(parts))

    def cond_and(self):
        parts = [self.cond_not()]
        while self.at("&&") or self.at("and"):
            self.take()
            parts.append(self.cond_not())
        return parts[0] if len(parts) == 1 else BoolOp("and", tuple(parts))

    def cond_not(self):
        if self.at("!") or self.at("not"):
            self.take()
            return NotOp(self.cond_not())
        if self.at("true") or self.at("false"):
            return BoolLit(self.take().text == "true")
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except MiniSyntaxError:
                self.i = save
            self.take("(")
            c = self.cond()
            self.take(")")
            return c
        return self.comparison()

    def comparison(self):
        left = self.expr()
        t = self.peek()
        if not (t.kind == "op" and t.text in ("<", "<=", "==", "!=", ">=", ">")):
            self.error("expected a comparison operator")
        self.i += 1
        return Compare(t.text, left, self.expr())

    # expressions
    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*"):
            self.take()
            node = BinOp("*", node, self.unary())
        return node

    def unary(self):
        if self.at("-"):
            self.take()
            inner = self.unary()
            if isinstance(inner, IntLit):
                return IntLit(-inner.value)
            return UnaryMinus(inner)
        t = self.peek()
        if t.kind == "num":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "name":
            self.i += 1
            return VarRef(t.text, t.line, t.col)
        if self.at("("):
            self.take()
            e = self.expr()
            self.take(")")
            return e
        self.error("expected an expression")


def _reads(node):
    if isinstance(node, VarRef):
        yield node
    elif isinstance(node, (BinOp, Compare)):
        yield from _reads(node.left)
        yield from _reads(node.right)
    elif isinstance(node, (UnaryMinus, NotOp)):
        yield from _reads(node.arg)
    elif isinstance(node, BoolOp):
        for a in node.args:
            yield from _reads(a)


def _stmt_reads(s):
    if isinstance(s, Assign):
        return _reads(s.expr)
    if isinstance(s, (If, While, Assume, Assert)):
        return _reads(s.cond)
    if isinstance(s, Return):
        return _reads(s.expr)
    return iter(())


def parse_program(text: str) -> Program:
    p = _Parser(text)
    name, params, body = p.program()
    # entry assumptions: leading assume/assert statements that read only params
    entry = []
    for s in body:
        if isinstance(s, (Assume, Assert)) and all(r.name in params for r in _reads(s.cond)):
            entry.append(s.cond)
        else:
            break
    prog = Program(name, params, body, frozenset(p.labels), tuple(entry))
    declared = set(prog.variables())
    for s in prog.statements():
        for r in _stmt_reads(s):
            if r.name not in declared:
                raise MiniSyntaxError(f"use of undeclared variable {r.name!r}", r.line, r.col)
    return prog
