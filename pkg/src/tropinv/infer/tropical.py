"""Max-plus and min-plus relations: weak templates, the pairwise general fitter, pruning.

A relation compares two tropical sides with the same kind::

    max(c, x + dx, y + dy, ...)  >=  max(...)      (or  =)

Each side folds its present arguments with max (or min). Absent arguments are
simply left out, which is the identity of the fold: minus infinity for max and
plus infinity for min.
"""

from __future__ import annotations

import bisect
import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .. import formula as F
from ..traces import TraceSet
from .equalities import EmptyTraceError
from .inequalities import LinearInequality, infer_template_bounds

__all__ = [
    "TropicalKind", "MAX", "MIN", "CONST", "ABSENT", "GE", "LE",
    "TropicalSide", "TropicalRelation", "WeakTemplate", "WeakRelation", "VACUOUS",
    "enumerate_weak_templates", "fit_parameter", "fit_weak", "fit_pair_general",
    "check_relation", "is_tautology", "implies", "prune_redundant", "implied_by_bounds",
]


class TropicalKind(str, Enum):
    MAX = "max"
    MIN = "min"

    def fold(self, values):
        return max(values) if self is TropicalKind.MAX else min(values)

    @property
    def dual(self) -> TropicalKind:
        return TropicalKind.MIN if self is TropicalKind.MAX else TropicalKind.MAX


MAX = TropicalKind.MAX
MIN = TropicalKind.MIN

CONST = "#const"  # the constant argument in masks and argument maps; not an identifier
ABSENT = None


class _Vacuous:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "VACUOUS"

    def __bool__(self):
        return False


VACUOUS = _Vacuous()

GE = "ge"  # tropical side >= target + d
LE = "le"  # target + d >= tropical side


# -- sides and relations -----------------------------------------------------

@dataclass(frozen=True)
class TropicalSide:
    """Present arguments of one side: an optional constant plus variable offsets."""

    constant: Fraction | None = None
    args: tuple[tuple[str, Fraction], ...] = ()

    def __post_init__(self):
        args = self.args
        if isinstance(args, Mapping):
            args = args.items()
        clean = tuple(sorted((n, Fraction(c)) for n, c in args if c is not ABSENT))
        if len({n for n, _ in clean}) != len(clean):
            raise ValueError("variable repeated on one side")
        const = None if self.constant is ABSENT else Fraction(self.constant)
        if const is None and not clean:
            raise ValueError("a tropical side needs at least one present argument")
        object.__setattr__(self, "args", clean)
        object.__setattr__(self, "constant", const)

    def entries(self) -> dict:
        """Argument map with the constant under ``CONST``."""
        out = {} if self.constant is None else {CONST: self.constant}
        out.update(self.args)
        return out

    @classmethod
    def from_entries(cls, entries: Mapping) -> TropicalSide:
        d = dict(entries)
        c = d.pop(CONST, None)
        return cls(c, tuple(d.items()))

    def variables(self) -> set[str]:
        return {n for n, _ in self.args}

    def value(self, kind: TropicalKind, v: Mapping) -> Fraction:
        vals = [] if self.constant is None else [self.constant]
        for n, c in self.args:
            try:
                vals.append(Fraction(v[n]) + c)
            except KeyError:
                raise KeyError(f"variable {n!r} is not bound in the valuation") from None
        return kind.fold(vals)

    def shifted(self, delta: Fraction) -> TropicalSide:
        return TropicalSide(
            None if self.constant is None else self.constant + delta,
            tuple((n, c + delta) for n, c in self.args),
        )

    def negated(self) -> TropicalSide:
        return TropicalSide(
            None if self.constant is None else -self.constant,
            tuple((n, -c) for n, c in self.args),
        )

    def expr(self, kind: TropicalKind):
        parts = [] if self.constant is None else [F.Num(self.constant)]
        for n, c in self.args:
            if c == 0:
                parts.append(F.Var(n))
            elif c > 0:
                parts.append(F.Add((F.Var(n), F.Num(c))))
            else:
                parts.append(F.Sub(F.Var(n), F.Num(-c)))
        if len(parts) == 1:
            return parts[0]
        return F.Max(tuple(parts)) if kind is MAX else F.Min(tuple(parts))


def _normalize(lhs: TropicalSide, rhs: TropicalSide):
    if not lhs.args and rhs.args:
        delta = rhs.args[0][1]  # 11 >= x rather than 0 >= x - 11
    elif not rhs.args and lhs.args:
        delta = lhs.args[0][1]
    elif lhs.constant is not None:
        delta = lhs.constant
    elif rhs.constant is not None:
        delta = rhs.constant
    else:
        delta = rhs.args[0][1]
    if delta:
        return lhs.shifted(-delta), rhs.shifted(-delta)
    return lhs, rhs


def _side_order(kind, lhs, rhs):
    return (-len(lhs.entries()), F.to_text(lhs.expr(kind)), F.to_text(rhs.expr(kind)))


@dataclass(frozen=True)
class TropicalRelation:
    """``lhs sense rhs`` with both sides folded by ``kind``; sense is ``>=`` or ``=``.

    Offsets are normalized by a common shift so that the lhs constant is 0, or
    failing that the rhs constant, or failing that the first rhs variable
    offset. A side that is only a constant instead gets the other side's first
    variable offset zeroed. The shift changes nothing logically.
    """

    kind: TropicalKind
    lhs: TropicalSide
    rhs: TropicalSide
    sense: str = ">="

    def __post_init__(self):
        kind = TropicalKind(self.kind)
        if self.sense not in (">=", "="):
            raise ValueError(f"sense must be >= or =, got {self.sense!r}")
        lhs, rhs = _normalize(self.lhs, self.rhs)
        if self.sense == "=":
            # equalities are symmetric: the side with more arguments goes left
            alt = _normalize(self.rhs, self.lhs)
            if _side_order(kind, *alt) < _side_order(kind, lhs, rhs):
                lhs, rhs = alt
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    def variables(self) -> set[str]:
        return self.lhs.variables() | self.rhs.variables()

    def holds(self, v: Mapping) -> bool:
        a = self.lhs.value(self.kind, v)
        b = self.rhs.value(self.kind, v)
        return a == b if self.sense == "=" else a >= b

    def directions(self) -> list[TropicalRelation]:
        """The relation as one or two ``>=`` relations."""
        if self.sense == ">=":
            return [self]
        return [TropicalRelation(self.kind, self.lhs, self.rhs),
                TropicalRelation(self.kind, self.rhs, self.lhs)]

    def negate(self) -> TropicalRelation:
        """Image under ``v -> -v`` for every variable: the dual kind, sides swapped."""
        return TropicalRelation(self.kind.dual, self.rhs.negated(), self.lhs.negated(), self.sense)

    def is_pointwise(self) -> bool:
        """Both sides have a single argument, so the relation is really linear."""
        return len(self.lhs.entries()) == 1 and len(self.rhs.entries()) == 1

    def to_formula(self):
        return F.Cmp(self.sense, self.lhs.expr(self.kind), self.rhs.expr(self.kind))

    def __str__(self):
        return F.to_text(self.to_formula())


def check_relation(r: TropicalRelation, v: Mapping) -> bool:
    return r.holds(v)


# -- syntactic implication ---------------------------------------------------

def _implies_ge(r1: TropicalRelation, r2: TropicalRelation) -> bool:
    """Both are ``>=`` relations of the same kind."""
    if r1.kind is not r2.kind:
        return False
    b1, s1 = r1.lhs.entries(), r1.rhs.entries()
    b2, s2 = r2.lhs.entries(), r2.rhs.entries()
    if r1.kind is MAX:
        # max(B2) >= max(B1) + delta >= max(S1) + delta >= max(S2)
        if not (set(b1) <= set(b2) and set(s2) <= set(s1)):
            return False
        lo = max(s2[a] - s1[a] for a in s2)
        hi = min(b2[a] - b1[a] for a in b1)
    else:
        # min(B2) >= min(B1) + delta >= min(S1) + delta >= min(S2)
        if not (set(b2) <= set(b1) and set(s1) <= set(s2)):
            return False
        lo = max(s2[a] - s1[a] for a in s1)
        hi = min(b2[a] - b1[a] for a in b2)
    return lo <= hi


def implies(r1: TropicalRelation, r2: TropicalRelation) -> bool:
    """Sufficient syntactic test that ``r1`` entails ``r2``."""
    return all(any(_implies_ge(a, b) for a in r1.directions()) for b in r2.directions())


def is_tautology(r: TropicalRelation) -> bool:
    """Every direction holds identically (its small side is dominated argument-wise)."""
    for d in r.directions():
        big, small = d.lhs.entries(), d.rhs.entries()
        if d.kind is MAX:
            ok = all(a in big and big[a] >= c for a, c in small.items())
        else:
            ok = all(a in small and c >= small[a] for a, c in big.items())
        if not ok:
            return False
    return True


def prune_redundant(rs: Iterable[TropicalRelation]) -> list[TropicalRelation]:
    """Drop relations implied by another kept one; among equivalents the earliest stays."""
    rs = list(dict.fromkeys(rs))
    kept = [True] * len(rs)
    for i, r in enumerate(rs):
        for j, q in enumerate(rs):
            if i == j or not kept[j] or not implies(q, r):
                continue
            if j < i or not implies(r, q):
                kept[i] = False
                break
    return [r for r, k in zip(rs, kept) if k]


# -- weak templates ----------------------------------------------------------

@dataclass(frozen=True)
class WeakTemplate:
    kind: TropicalKind
    target: str
    mask: frozenset
    direction: str

    def __post_init__(self):
        object.__setattr__(self, "kind", TropicalKind(self.kind))
        object.__setattr__(self, "mask", frozenset(self.mask))
        if self.direction not in (GE, LE):
            raise ValueError(f"direction must be {GE!r} or {LE!r}")

    def side(self) -> TropicalSide | None:
        if not self.mask:
            return None
        return TropicalSide.from_entries({a: 0 for a in self.mask})

    def __str__(self):
        side = self.side()
        s = "<empty>" if side is None else F.to_text(side.expr(self.kind))
        if self.direction == GE:
            return f"{s} >= {self.target} + d"
        return f"{self.target} + d >= {s}"


@dataclass(frozen=True)
class WeakRelation:
    template: WeakTemplate
    d: Fraction

    @property
    def relation(self) -> TropicalRelation:
        t = self.template
        target = TropicalSide(None, ((t.target, self.d),))
        if t.direction == GE:
            return TropicalRelation(t.kind, t.side(), target)
        return TropicalRelation(t.kind, target, t.side())

    def gap(self, v: Mapping) -> Fraction:
        """Slack of the fitted inequality at ``v``; zero where it is tight."""
        t = self.template
        g = t.side().value(t.kind, v) - Fraction(v[t.target]) - self.d
        return g if t.direction == GE else -g

    def holds(self, v: Mapping) -> bool:
        return self.gap(v) >= 0

    def __str__(self):
        return str(self.relation)


def _mask_order(names: Sequence[str]) -> list[frozenset]:
    atoms = [CONST] + list(names)
    return [frozenset(c) for r in range(len(atoms) + 1) for c in itertools.combinations(atoms, r)]


def enumerate_weak_templates(variables: Sequence[str], kind: TropicalKind) -> list[WeakTemplate]:
    """All ``k * 2^(k+2)`` raw templates: direction x target x mask."""
    kind = TropicalKind(kind)
    names = list(variables)
    if len(set(names)) != len(names):
        raise ValueError("duplicate variables")
    masks = _mask_order(names)
    return [WeakTemplate(kind, t, m, direction)
            for direction in (GE, LE) for t in names for m in masks]


def _side_values(kind: TropicalKind, mask: frozenset, cols: Mapping, nrows: int) -> list[Fraction]:
    parts = [cols[a] for a in sorted(mask - {CONST})]
    if CONST in mask:
        parts.append([Fraction(0)] * nrows)
    if len(parts) == 1:
        return list(parts[0])
    fold = max if kind is MAX else min
    return [fold(p[i] for p in parts) for i in range(nrows)]


def fit_parameter(t: WeakTemplate, traces: TraceSet):
    """Tightest ``d`` for the template over the rows, or ``VACUOUS`` for an empty mask."""
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    if not t.mask:
        return VACUOUS
    n = len(traces.rows)
    cols = {a: traces.column(a) for a in (t.mask - {CONST}) | {t.target}}
    side = _side_values(t.kind, t.mask, cols, n)
    diffs = [s - x for s, x in zip(side, cols[t.target])]
    return WeakRelation(t, min(diffs) if t.direction == GE else max(diffs))


def fit_weak(traces: TraceSet, kind: TropicalKind, variables: Sequence[str] | None = None,
             keep_tautologies: bool = False) -> list[TropicalRelation]:
    """Fit every weak template over ``variables``.

    Where both directions of a (target, mask) pair fit the same ``d`` the two
    inequalities are reported as one equality. Tautologies are dropped unless
    asked for.
    """
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    kind = TropicalKind(kind)
    names = list(traces.variables if variables is None else variables)
    n = len(traces.rows)
    cols = {a: traces.column(a) for a in names}
    masks = _mask_order(names)
    fitted: dict[tuple, Fraction] = {}
    for m in masks:
        if not m:
            continue
        side = _side_values(kind, m, cols, n)
        for target in names:
            diffs = [s - x for s, x in zip(side, cols[target])]
            fitted[(GE, target, m)] = min(diffs)
            fitted[(LE, target, m)] = max(diffs)
    out = []
    for direction in (GE, LE):
        for target in names:
            for m in masks:
                if not m:
                    continue
                d = fitted[(direction, target, m)]
                other = fitted[(LE if direction == GE else GE, target, m)]
                t = WeakTemplate(kind, target, m, GE)
                if d == other:
                    if direction == LE:
                        continue
                    rel = WeakRelation(t, d).relation
                    rel = TropicalRelation(rel.kind, rel.lhs, rel.rhs, "=")
                else:
                    rel = WeakRelation(WeakTemplate(kind, target, m, direction), d).relation
                if keep_tautologies or not is_tautology(rel):
                    out.append(rel)
    return out


# -- implication by box / zone bounds ------------------------------------------

def _leq(a, b) -> bool:
    """Order on (bound, strict) weights: a strict bound is tighter."""
    return a[0] < b[0] or (a[0] == b[0] and (a[1] or not b[1]))


def _feasible(constraints: list[tuple[str, str, Fraction, bool]]) -> bool:
    """Rational feasibility of ``x - y <= c`` (``<`` when strict); ``CONST`` is the zero node."""
    nodes = sorted({a for a, _, _, _ in constraints} | {b for _, b, _, _ in constraints} | {CONST})
    idx = {n: i for i, n in enumerate(nodes)}
    size = len(nodes)
    inf = None
    dist = [[inf] * size for _ in range(size)]
    for i in range(size):
        dist[i][i] = (Fraction(0), False)
    for x, y, c, strict in constraints:
        w = (Fraction(c), strict)
        i, j = idx[x], idx[y]
        if dist[i][j] is inf or _leq(w, dist[i][j]):
            dist[i][j] = w
    for k in range(size):
        for i in range(size):
            if dist[i][k] is inf:
                continue
            for j in range(size):
                if dist[k][j] is inf:
                    continue
                w = (dist[i][k][0] + dist[k][j][0], dist[i][k][1] or dist[k][j][1])
                if dist[i][j] is inf or _leq(w, dist[i][j]):
                    dist[i][j] = w
    return all(not _leq(dist[i][i], (Fraction(0), True)) for i in range(size)
               if dist[i][i] is not inf)


def _bound_constraints(b: LinearInequality):
    coeffs = b.coefficients
    if len(coeffs) == 1:
        (x, _), = coeffs
        pos, neg = x, CONST
    elif coeffs[1][1] == -1:
        pos, neg = coeffs[0][0], coeffs[1][0]
    else:
        return None  # octagon sums are not difference constraints
    if b.sense == "<=":
        return (pos, neg, b.bound, False)
    return (neg, pos, -b.bound, False)


def implied_by_bounds(r: TropicalRelation, bounds: Iterable[LinearInequality]) -> bool:
    """Exact test over the rationals that the box/zone ``bounds`` entail ``r``."""
    base = [c for c in map(_bound_constraints, bounds) if c is not None]
    for d in r.directions():
        big, small = d.lhs.entries(), d.rhs.entries()
        # negation as a disjunction of conjunctions of strict atoms l < s
        if d.kind is MAX:
            cases = [[(a, ca, s, cs) for a, ca in big.items()] for s, cs in small.items()]
        else:
            cases = [[(a, ca, s, cs) for s, cs in small.items()] for a, ca in big.items()]
        for case in cases:
            extra = [(a, s, cs - ca, True) for a, ca, s, cs in case]  # a - s < cs - ca
            if _feasible(base + extra):
                return False
    return True


# -- pairwise general fitter -----------------------------------------------------

def _pareto(points: list[tuple], big: bool) -> list[tuple]:
    """Keep the ``(c0, c1)`` pairs that no other pair matches or beats in both parameters.

    Sweep over the pairs sorted strongest-first on ``c0``; order of the input is kept.
    """
    def key(p):
        return math.inf if p is ABSENT else (-p if big else p)

    uniq = list(dict.fromkeys(points))
    ranked = sorted(uniq, key=lambda p: (key(p[0]), key(p[1])), reverse=True)
    keep = set()
    best = -math.inf  # strongest c1 among pairs with a strictly stronger c0
    i = 0
    while i < len(ranked):
        j = i
        k0 = key(ranked[i][0])
        while j < len(ranked) and key(ranked[j][0]) == k0:
            j += 1
        head = ranked[i]
        if key(head[1]) > best:
            keep.add(head)
        best = max(best, key(head[1]))
        i = j
    return [p for p in uniq if p in keep]


def fit_pair_general(u: str, v: str, traces: TraceSet, kind: TropicalKind,
                     bounds: Iterable[LinearInequality] | None = None) -> list[TropicalRelation]:
    """Two-parameter relations ``fold(c0, u + c1) >= v`` and ``v >= fold(c0, u + c1)``.

    Run for both orientations of the pair. ``c1`` ranges over the observed
    differences ``v_i - u_i`` plus absent; for each the extremal valid ``c0`` is
    computed, pairs that another pair beats in both parameters are discarded,
    and so are relations with an absent parameter or that the box/zone bounds
    already entail.
    """
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    kind = TropicalKind(kind)
    if bounds is None:
        bounds = infer_template_bounds(traces, "zone", variables=[u, v])
    bounds = list(bounds)
    out: list[TropicalRelation] = []
    for a, b in ((u, v), (v, u)):
        pts = list(zip(traces.column(a), traces.column(b)))
        shifts = sorted({y - x for x, y in pts}) + [ABSENT]
        for big in (True, False):
            table = _extremal_table(kind, big, shifts, pts)
            pairs = [(c0, c1) for c1, c0 in zip(shifts, table) if c0 is not _INFEASIBLE]
            for c0, c1 in _pareto(pairs, big):
                if c0 is ABSENT or c1 is ABSENT:
                    continue
                side = TropicalSide(c0, ((a, c1),))
                single = TropicalSide(None, ((b, Fraction(0)),))
                rel = (TropicalRelation(kind, side, single) if big
                       else TropicalRelation(kind, single, side))
                if is_tautology(rel) or implied_by_bounds(rel, bounds):
                    continue
                if rel not in out:
                    out.append(rel)
    return out


_INFEASIBLE = object()


def _extremal_c0(kind, big, c1, pts):
    """Tightest valid ``c0`` for fixed ``c1``; ``ABSENT`` when the ``u`` argument alone suffices.

    An absent ``c1`` drops the ``u`` argument, i.e. it is the identity of the fold.
    """
    def below(x, y):  # x + c1 < y
        if c1 is ABSENT:
            return kind is MAX
        return x + c1 < y

    def above(x, y):  # y < x + c1
        if c1 is ABSENT:
            return kind is MIN
        return y < x + c1

    if kind is MAX and big:
        # max(c0, x + c1) >= y: rows not covered by x + c1 force c0 >= y
        need = [y for x, y in pts if below(x, y)]
        return max(need) if need else ABSENT
    if kind is MIN and not big:
        # y >= min(c0, x + c1): rows with y < x + c1 force c0 <= y
        need = [y for x, y in pts if above(x, y)]
        return min(need) if need else ABSENT
    if kind is MAX:
        # y >= max(c0, x + c1) is conjunctive: every row satisfies both parts
        if c1 is not ABSENT and any(above(x, y) for x, y in pts):
            return _INFEASIBLE
        return min(y for _, y in pts)
    # min(c0, x + c1) >= y, also conjunctive
    if c1 is not ABSENT and any(below(x, y) for x, y in pts):
        return _INFEASIBLE
    return max(y for _, y in pts)


def _extremal_table(kind, big, shifts, pts):
    """``_extremal_c0`` for every shift at once, from the rows sorted by ``y - x``."""
    ds = sorted((y - x, y) for x, y in pts)
    dvals = [d for d, _ in ds]
    ys = [y for _, y in ds]
    n = len(ds)
    out = []
    if kind is MAX and big:
        # c0 = max of y over rows with d > c1: suffix maxima
        suf = [None] * (n + 1)
        for i in range(n - 1, -1, -1):
            suf[i] = ys[i] if suf[i + 1] is None else max(ys[i], suf[i + 1])
        for c1 in shifts:
            if c1 is ABSENT:
                out.append(suf[0])
                continue
            i = bisect.bisect_right(dvals, c1)
            out.append(ABSENT if suf[i] is None else suf[i])
        return out
    if kind is MIN and not big:
        # c0 = min of y over rows with d < c1: prefix minima
        pre = [None] * (n + 1)
        for i in range(n):
            pre[i + 1] = ys[i] if pre[i] is None else min(ys[i], pre[i])
        for c1 in shifts:
            if c1 is ABSENT:
                out.append(pre[n])
                continue
            i = bisect.bisect_left(dvals, c1)
            out.append(ABSENT if pre[i] is None else pre[i])
        return out
    lo_y, hi_y = min(ys), max(ys)
    for c1 in shifts:
        if kind is MAX:
            ok = c1 is ABSENT or dvals[0] >= c1
            out.append(lo_y if ok else _INFEASIBLE)
        else:
            ok = c1 is ABSENT or dvals[-1] <= c1
            out.append(hi_y if ok else _INFEASIBLE)
    return out


def _tighter(big: bool):
    """``p`` is at least as strong a parameter as ``q``.

    Raising an argument raises its fold, so parameters on the big side are
    stronger when smaller and on the small side when larger. ``ABSENT`` only
    reaches the comparison where it is the strongest value (minus infinity on a
    max big side, plus infinity on a min small side).
    """
    def better(p, q):
        if p is ABSENT:
            return True
        if q is ABSENT:
            return False
        return p <= q if big else p >= q

    return better
