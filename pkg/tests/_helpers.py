"""Independent checks shared by the test modules."""

import random
from math import gcd

from tropinv import formula as F
from tropinv.smt import SolverSession
from tropinv.traces import TraceSet


def entails(premises, goal, timeout=10.0):
    """``premises |= goal`` over the integers, all formulas at index 0."""
    with SolverSession(timeout=timeout) as s:
        for p in premises:
            s.add(F.at_index(p, 0))
        return s.entail(F.at_index(goal, 0)).entailed


def equivalent_sets(left, right):
    """Both conjunctions entail every member of the other one."""
    return all(entails(left, g) for g in right) and all(entails(right, g) for g in left)


def equivalent(a, b):
    return entails([a], b) and entails([b], a)


def _echelon(rows):
    """Integer row echelon form, rows kept primitive (fraction-free elimination)."""
    out = []  # (pivot column, row)
    for r in rows:
        r = list(r)
        for c, p in out:
            if r[c]:
                f, g = p[c], r[c]
                r = [f * a - g * b for a, b in zip(r, p)]
        c = next((i for i, a in enumerate(r) if a), None)
        if c is None:
            continue
        g = 0
        for a in r:
            g = gcd(g, a)
        out.append((c, [a // g for a in r]))
    return out


def rank(rows):
    """Rank over the rationals."""
    return len(_echelon(rows))


def in_span(basis, eq):
    """Is the equality ``eq`` a rational combination of the ``basis`` equalities?"""
    terms = sorted({t for e in list(basis) + [eq] for t in e.terms})
    vec = lambda e: [dict(e.coefficients).get(t, 0) for t in terms]  # noqa: E731
    rows = [vec(e) for e in basis]
    if not rows:
        return False
    ech = _echelon(rows)
    return len(_echelon([r for _, r in ech] + [vec(eq)])) == len(ech)


def random_points(rng: random.Random, max_vars=3, max_points=200, lo=-20, hi=20):
    """A random trace set; half the time the points satisfy a planted linear relation."""
    k = rng.randint(1, max_vars)
    names = ["u", "v", "w"][:k]
    n = rng.randint(1, max_points)
    pts = []
    planted = k >= 2 and rng.random() < 0.5
    coeffs = [rng.randint(-2, 2) for _ in range(k - 1)]
    c0 = rng.randint(-5, 5)
    for _ in range(n):
        p = [rng.randint(lo, hi) for _ in range(k)]
        if planted:
            p[-1] = c0 + sum(a * b for a, b in zip(coeffs, p))
        pts.append(p)
    return TraceSet.from_points("L", names, pts)
