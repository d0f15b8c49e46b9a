"""Polynomial equalities from the nullspace of the point-by-term matrix."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

from .. import formula as F
from ..traces import ONE, Term, TraceSet, eval_term, gen_terms

__all__ = ["PolyEquality", "infer_equalities", "term_matrix_row", "EmptyTraceError"]


class EmptyTraceError(ValueError):
    pass


def _term_expr(t: Term):
    factors = [F.Var(n) if e == 1 else F.Pow(F.Var(n), e) for n, e in t.exponents]
    return factors[0] if len(factors) == 1 else F.Mul(tuple(factors))


def _scaled(c: int, t: Term):
    if t.is_constant():
        return F.Num(c)
    body = _term_expr(t)
    if c == 1:
        return body
    return F.Mul((F.Num(c),) + (body.args if isinstance(body, F.Mul) else (body,)))


@dataclass(frozen=True)
class PolyEquality:
    """``sum c_t * t = 0`` with coprime integer coefficients, leading one positive.

    ``coefficients`` is stored as ``(term, c)`` pairs, greatest term first.
    """

    coefficients: tuple[tuple[Term, int], ...]

    def __post_init__(self):
        items = self.coefficients
        if isinstance(items, Mapping):
            items = items.items()
        merged: dict[Term, Fraction] = {}
        for t, c in items:
            merged[t] = merged.get(t, Fraction(0)) + Fraction(c)
        merged = {t: c for t, c in merged.items() if c}
        if not merged:
            raise ValueError("an equality needs at least one nonzero coefficient")
        if len(merged) == 1 and ONE in merged:
            raise ValueError("a nonzero constant alone is not an equality")
        den = reduce(lcm, (c.denominator for c in merged.values()), 1)
        ints = {t: int(c * den) for t, c in merged.items()}
        g = reduce(gcd, (abs(c) for c in ints.values()))
        ordered = sorted(ints.items(), key=lambda kv: kv[0], reverse=True)
        sign = 1 if ordered[0][1] > 0 else -1
        object.__setattr__(self, "coefficients", tuple((t, sign * c // g) for t, c in ordered))

    @property
    def terms(self) -> tuple[Term, ...]:
        return tuple(t for t, _ in self.coefficients)

    @property
    def leading(self) -> Term:
        return self.coefficients[0][0]

    @property
    def degree(self) -> int:
        return self.leading.degree

    def variables(self) -> set[str]:
        return {n for t in self.terms for n in t.variables}

    def residual(self, v: Mapping) -> Fraction:
        return sum((c * eval_term(t, v) for t, c in self.coefficients), Fraction(0))

    def holds(self, v: Mapping) -> bool:
        return self.residual(v) == 0

    def to_formula(self):
        lhs = [(t, c) for t, c in self.coefficients if not t.is_constant()]
        const = sum(c for t, c in self.coefficients if t.is_constant())
        acc = None
        for t, c in lhs:
            piece = _scaled(abs(c), t)
            if acc is None:
                acc = piece if c > 0 else F.Neg(piece)
            elif c > 0:
                acc = F.Add(acc.args + (piece,)) if isinstance(acc, F.Add) else F.Add((acc, piece))
            else:
                acc = F.Sub(acc, piece)
        return F.Cmp("=", acc, F.Num(-const))

    def __str__(self):
        return F.to_text(self.to_formula())


# -- exact linear algebra ----------------------------------------------------

def term_matrix_row(terms: list[Term], v: Mapping) -> list[int]:
    """Term values at ``v`` scaled by the common denominator (same nullspace)."""
    vals = [eval_term(t, v) for t in terms]
    den = reduce(lcm, (x.denominator for x in vals), 1)
    if den == 1:
        return [x.numerator for x in vals]
    return [int(x * den) for x in vals]


def _term_plan(terms: list[Term]) -> list[tuple[int, str]] | None:
    """For each non-constant term, (index of a term one degree lower, variable)."""
    index = {t: i for i, t in enumerate(terms)}
    plan = []
    for t in terms:
        if t.is_constant():
            plan.append((-1, ""))
            continue
        name, e = t.exponents[-1]
        parent = Term(t.exponents[:-1] + (((name, e - 1),) if e > 1 else ()))
        if parent not in index:
            return None
        plan.append((index[parent], name))
    return plan


def _int_row(plan, point: Mapping) -> list[int]:
    vals: list[int] = []
    for parent, name in plan:
        vals.append(1 if parent < 0 else vals[parent] * point[name])
    return vals


class _Echelon:
    """Integer reduced row echelon form, pivots at ascending columns, rows primitive."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: dict[int, list[int]] = {}  # pivot column -> row

    @property
    def rank(self) -> int:
        return len(self.rows)

    @staticmethod
    def _primitive(row: list[int], col: int) -> list[int]:
        g = reduce(gcd, row)
        if row[col] < 0:
            g = -g
        return row if g == 1 else [x // g for x in row]

    def add(self, row: list[int]) -> bool:
        row = list(row)
        lead = None
        for col in range(self.ncols):
            a = row[col]
            if not a:
                continue
            piv = self.rows.get(col)
            if piv is None:
                if lead is None:
                    lead = col
                continue
            p = piv[col]
            g = gcd(a, p)
            fa, fp = p // g, a // g
            row = [fa * x - fp * y for x, y in zip(row, piv)]
        if lead is None:
            return False
        row = self._primitive(row, lead)
        for c, other in list(self.rows.items()):
            a = other[lead]
            if a:
                p = row[lead]
                g = gcd(a, p)
                fa, fp = p // g, a // g
                self.rows[c] = self._primitive([fa * x - fp * y for x, y in zip(other, row)], c)
        self.rows[lead] = row
        return True

    def nullspace(self) -> list[list[int]]:
        """One integer vector per free column f: x_f > 0, other free columns 0."""
        out = []
        for f in range(self.ncols):
            if f in self.rows:
                continue
            used = [(p, r) for p, r in self.rows.items() if p < f and r[f]]
            den = reduce(lcm, (r[p] for p, r in used), 1)
            x = [0] * self.ncols
            x[f] = den
            for p, r in used:
                x[p] = -r[f] * (den // r[p])
            out.append(x)
        return out


def infer_equalities(traces: TraceSet, degree: int = 2, cap: int = 200,
                     variables=None) -> list[PolyEquality]:
    """Canonical basis of all degree-``degree`` equalities satisfied by every row.

    The basis has one member per non-pivot term column; each member's leading
    term is that column and it has no other non-pivot term, which makes it the
    reduced echelon basis of the nullspace and independent of row order.
    """
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    names = tuple(sorted(variables if variables is not None else traces.variables))
    terms = gen_terms(names, degree, cap)
    n = len(terms)
    plan = _term_plan(terms)
    ech = _Echelon(n)
    null: list[list[int]] | None = None
    seen = set()
    for row in traces.rows:
        key = tuple(row[v] for v in names)
        if key in seen:
            continue
        seen.add(key)
        if all(x.denominator == 1 for x in key):
            vals = _int_row(plan, {k: x.numerator for k, x in zip(names, key)})
        else:
            vals = term_matrix_row(terms, row)
        if null is not None and all(sum(a * b for a, b in zip(vals, w) if b) == 0 for w in null):
            continue
        if ech.add(vals):
            null = None
            if ech.rank == n:
                return []
        if null is None and len(seen) > n:
            null = ech.nullspace()
    out = []
    for w in ech.nullspace():
        out.append(PolyEquality(tuple((terms[j], w[j]) for j in range(n) if w[j])))
    out.sort(key=lambda e: e.leading)
    return out
