"""Valuations, trace sets and monomial terms.

Everything here is exact: values are :class:`fractions.Fraction` and no float
ever enters a trace.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

__all__ = [
    "TraceFormatError",
    "TermCapError",
    "Valuation",
    "TraceSet",
    "Term",
    "parse_traces",
    "format_traces",
    "gen_terms",
    "eval_term",
    "max_degree_within",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_RATIONAL = re.compile(r"[+-]?\d+(/\d+)?\Z")


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TermCapError(ValueError):
    """Raised when the requested term set is larger than the cap."""


def _to_rational(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floating point values are not allowed in valuations")
    return Fraction(value)


class Valuation(Mapping):
    """Immutable map from variable name to exact rational value."""

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping | Iterable = ()):
        items = dict(entries)
        for name in items:
            if not isinstance(name, str) or not _IDENT.match(name):
                raise ValueError(f"invalid variable name {name!r}")
        self._items = {k: _to_rational(v) for k, v in items.items()}
        self._hash = None

    def __getitem__(self, name: str) -> Fraction:
        return self._items[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Valuation):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        body = ", ".join(f"{k}={v}" for k, v in self._items.items())
        return f"Valuation({body})"

    def project(self, names: Sequence[str]) -> Valuation:
        return Valuation({n: self._items[n] for n in names})


@dataclass(frozen=True)
class TraceSet:
    """Rows observed at one program location.

    ``variables`` fixes the column order; every row binds exactly those names.
    """

    location: str
    variables: tuple[str, ...]
    rows: tuple[Valuation, ...] = ()

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variables in {variables}")
        rows = tuple(r if isinstance(r, Valuation) else Valuation(r) for r in self.rows)
        want = set(variables)
        for i, row in enumerate(rows):
            if set(row) != want:
                raise ValueError(f"row {i} binds {sorted(row)}, expected {sorted(want)}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_points(cls, location: str, variables: Sequence[str], points: Iterable[Sequence]) -> TraceSet:
        variables = tuple(variables)
        rows = []
        for p in points:
            if len(p) != len(variables):
                raise ValueError(f"point {tuple(p)} does not match {variables}")
            rows.append(Valuation(zip(variables, p)))
        return cls(location, variables, tuple(rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[Valuation]:
        return iter(self.rows)

    def column(self, name: str) -> tuple[Fraction, ...]:
        return tuple(r[name] for r in self.rows)

    def points(self, names: Sequence[str] | None = None) -> list[tuple[Fraction, ...]]:
        names = self.variables if names is None else tuple(names)
        return [tuple(r[n] for n in names) for r in self.rows]

    def distinct(self) -> TraceSet:
        """Same trace set with duplicate rows removed (first occurrence kept)."""
        seen = set()
        rows = []
        for r in self.rows:
            if r not in seen:
                seen.add(r)
                rows.append(r)
        return TraceSet(self.location, self.variables, tuple(rows))

    def merge(self, other: TraceSet) -> TraceSet:
        if other.variables != self.variables:
            raise ValueError(f"cannot merge traces over {self.variables} and {other.variables}")
        return TraceSet(self.location, self.variables, self.rows + other.rows)

    def negated(self) -> TraceSet:
        return TraceSet(
            self.location,
            self.variables,
            tuple(Valuation({k: -v for k, v in r.items()}) for r in self.rows),
        )


def _parse_rational(text: str, line: int) -> Fraction:
    text = text.strip()
    if not _RATIONAL.match(text):
        raise TraceFormatError(f"cannot parse rational literal {text!r}", line)
    value = Fraction(text)
    return value


def parse_traces(text: str) -> TraceSet:
    """Parse the line-oriented trace format.

    ::

        loc: L
        vars: x,y
        -1,5
        # comment
        0,5

    Values are integers or ``p/q`` rationals.
    """
    location = None
    variables = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if location is None:
            key, _, value = line.partition(":")
            if key.strip() != "loc" or not _:
                raise TraceFormatError("expected header 'loc: <label>'", lineno)
            location = value.strip()
            if not location:
                raise TraceFormatError("empty location label", lineno)
            continue
        if variables is None:
            key, _, value = line.partition(":")
            if key.strip() != "vars" or not _:
                raise TraceFormatError("expected header 'vars: <v1>,<v2>,...'", lineno)
            names = [v.strip() for v in value.split(",")] if value.strip() else []
            for n in names:
                if not _IDENT.match(n):
                    raise TraceFormatError(f"invalid variable name {n!r}", lineno)
            if len(set(names)) != len(names):
                raise TraceFormatError("duplicate variable names", lineno)
            variables = tuple(names)
            continue
        fields = line.split(",")
        if len(fields) != len(variables):
            raise TraceFormatError(
                f"row has {len(fields)} values but {len(variables)} variables are declared", lineno
            )
        rows.append(Valuation(zip(variables, (_parse_rational(f, lineno) for f in fields))))
    if location is None:
        raise TraceFormatError("missing 'loc:' header")
    if variables is None:
        raise TraceFormatError("missing 'vars:' header")
    return TraceSet(location, variables, tuple(rows))


def format_traces(traces: TraceSet) -> str:
    lines = [f"loc: {traces.location}", "vars: " + ",".join(traces.variables)]
    for row in traces.rows:
        lines.append(",".join(str(row[v]) for v in traces.variables))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, order=False)
class Term:
    """A monomial; the empty exponent map is the constant 1.

    Terms are totally ordered graded-lexicographically with variables taken in
    name order, so ``1 < x < y < x^2 < x*y < y^2``.
    """

    exponents: tuple[tuple[str, int], ...] = ()
    _key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        exps = self.exponents
        if isinstance(exps, Mapping):
            exps = exps.items()
        merged: dict[str, int] = {}
        for name, e in exps:
            if not isinstance(e, int) or e < 0:
                raise ValueError(f"exponent of {name} must be a non-negative integer")
            if e:
                merged[name] = merged.get(name, 0) + e
        items = tuple(sorted(merged.items()))
        object.__setattr__(self, "exponents", items)
        degree = sum(e for _, e in items)
        object.__setattr__(self, "_key", (degree, tuple((n, -e) for n, e in items)))

    @classmethod
    def of(cls, **exponents: int) -> Term:
        return cls(tuple(exponents.items()))

    @property
    def degree(self) -> int:
        return self._key[0]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.exponents)

    def is_constant(self) -> bool:
        return not self.exponents

    def __mul__(self, other: Term) -> Term:
        return Term(self.exponents + other.exponents)

    def __lt__(self, other: Term) -> bool:
        return self._key < other._key

    def __le__(self, other: Term) -> bool:
        return self._key <= other._key

    def __gt__(self, other: Term) -> bool:
        return self._key > other._key

    def __ge__(self, other: Term) -> bool:
        return self._key >= other._key

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        return "*".join(n if e == 1 else f"{n}^{e}" for n, e in self.exponents)


ONE = Term()


def gen_terms(variables: Sequence[str], degree: int, cap: int = 200) -> list[Term]:
    """All monomials of total degree <= ``degree`` over ``variables``, constant included."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    names = sorted(set(variables))
    count = comb(len(names) + degree, degree)
    if count > cap:
        raise TermCapError(
            f"{count} terms over {len(names)} variables at degree {degree} exceed the cap of {cap}"
        )
    terms = [ONE]
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(names, d):
            exps: dict[str, int] = {}
            for n in combo:
                exps[n] = exps.get(n, 0) + 1
            terms.append(Term(tuple(exps.items())))
    terms.sort()
    return terms


def max_degree_within(nvars: int, cap: int = 200) -> int:
    """Largest degree whose full term set over ``nvars`` variables fits under ``cap``."""
    if comb(nvars + 1, 1) > cap:
        raise TermCapError(f"even degree 1 over {nvars} variables exceeds the cap of {cap}")
    d = 1
    while comb(nvars + d + 1, d + 1) <= cap:
        d += 1
    return d


def eval_term(term: Term, v: Mapping) -> Fraction:
    result = Fraction(1)
    for name, e in term.exponents:
        try:
            value = v[name]
        except KeyError:
            raise KeyError(f"variable {name!r} is not bound in the valuation") from None
        result *= Fraction(value) ** e
    return result
