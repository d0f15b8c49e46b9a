"""Trace filtering and conversion of degenerate tropical relations to linear form."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from fractions import Fraction

from .. import formula as F
from ..traces import ONE, Term, TraceSet
from .equalities import PolyEquality
from .inequalities import LinearInequality
from .tropical import CONST, TropicalRelation

__all__ = ["holds", "filter_candidates", "simplify_relation"]


def holds(candidate, v: Mapping) -> bool:
    """Truth of any candidate at a state: relation objects or plain formulas."""
    if hasattr(candidate, "holds"):
        return candidate.holds(v)
    return bool(F.evaluate(candidate, F.state_env(v)))


def filter_candidates(cands: Iterable, traces: TraceSet | None) -> list:
    """Keep exactly the candidates that hold on every row of ``traces``."""
    cands = list(cands)
    if traces is None or not traces.rows:
        return cands
    out = []
    for c in cands:
        try:
            if all(holds(c, row) for row in traces.rows):
                out.append(c)
        except KeyError:
            # mentions a variable the filter traces do not record; cannot refute it
            out.append(c)
    return out


def simplify_relation(r):
    """A tropical relation with one argument per side, as a linear bound or equality.

    Anything else is returned unchanged. Constant-only comparisons give ``None``.
    """
    if not isinstance(r, TropicalRelation) or not r.is_pointwise():
        return r
    (a, alpha), = r.lhs.entries().items()
    (b, beta), = r.rhs.entries().items()
    # a + alpha  (>= or =)  b + beta
    if a == CONST and b == CONST:
        return None
    if a == b:
        return None
    c = Fraction(beta) - Fraction(alpha)
    if r.sense == "=":
        coeffs = {}
        if a != CONST:
            coeffs[Term.of(**{a: 1})] = 1
        if b != CONST:
            coeffs[Term.of(**{b: 1})] = coeffs.get(Term.of(**{b: 1}), 0) - 1
        coeffs[ONE] = coeffs.get(ONE, 0) - c
        return PolyEquality(tuple(coeffs.items()))
    if b == CONST:
        return LinearInequality(((a, 1),), c, ">=")
    if a == CONST:
        return LinearInequality(((b, 1),), -c, "<=")
    return LinearInequality(((a, 1), (b, -1)), c, ">=")
