"""Box, zone and octagon bounds by extremizing template expressions over the rows."""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction

from .. import formula as F
from ..traces import TraceSet
from .equalities import EmptyTraceError

__all__ = ["LinearInequality", "infer_template_bounds", "FAMILIES"]

FAMILIES = ("box", "zone", "octagon")


@dataclass(frozen=True)
class LinearInequality:
    """``sum c_v * v  sense  bound`` over at most two variables.

    Stored canonically: variables in name order, first coefficient +1.
    """

    coefficients: tuple[tuple[str, int], ...]
    bound: Fraction
    sense: str  # "<=" or ">="

    def __post_init__(self):
        items = self.coefficients
        if isinstance(items, Mapping):
            items = items.items()
        coeffs = tuple(sorted((n, int(c)) for n, c in items if c))
        if not coeffs:
            raise ValueError("inequality has no variables")
        if len(coeffs) > 2:
            raise ValueError("template inequalities have at most two variables")
        if len({n for n, _ in coeffs}) != len(coeffs):
            raise ValueError("repeated variable")
        if self.sense not in ("<=", ">="):
            raise ValueError(f"sense must be <= or >=, got {self.sense!r}")
        bound = Fraction(self.bound)
        sense = self.sense
        if coeffs[0][1] < 0:
            coeffs = tuple((n, -c) for n, c in coeffs)
            bound = -bound
            sense = "<=" if sense == ">=" else ">="
        if coeffs[0][1] != 1 or any(abs(c) != 1 for _, c in coeffs):
            raise ValueError("template coefficients must be +1 or -1")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "sense", sense)

    def variables(self) -> set[str]:
        return {n for n, _ in self.coefficients}

    def value(self, v: Mapping) -> Fraction:
        return sum((c * Fraction(v[n]) for n, c in self.coefficients), Fraction(0))

    def holds(self, v: Mapping) -> bool:
        x = self.value(v)
        return x <= self.bound if self.sense == "<=" else x >= self.bound

    def expr(self):
        (n0, _), *rest = self.coefficients
        e = F.Var(n0)
        for n, c in rest:
            e = F.Add((e, F.Var(n))) if c > 0 else F.Sub(e, F.Var(n))
        return e

    def to_formula(self):
        return F.Cmp(self.sense, self.expr(), F.Num(self.bound))

    def __str__(self):
        return F.to_text(self.to_formula())


def _expressions(names, family):
    for n in names:
        yield ((n, 1),)
    if family == "box":
        return
    for a, b in itertools.combinations(names, 2):
        yield ((a, 1), (b, -1))
        if family == "octagon":
            yield ((a, 1), (b, 1))


def infer_template_bounds(traces: TraceSet, family: str = "zone", variables=None) -> list[LinearInequality]:
    """Tightest ``e <= max`` and ``e >= min`` for each template expression ``e``."""
    if family not in FAMILIES:
        raise ValueError(f"unknown template family {family!r}; expected one of {FAMILIES}")
    if not traces.rows:
        raise EmptyTraceError(f"no trace rows at location {traces.location}")
    names = sorted(variables if variables is not None else traces.variables)
    cols = {n: traces.column(n) for n in names}
    out = []
    for coeffs in _expressions(names, family):
        vals = [sum(c * cols[n][i] for n, c in coeffs) for i in range(len(traces.rows))]
        out.append(LinearInequality(coeffs, max(vals), "<="))
        out.append(LinearInequality(coeffs, min(vals), ">="))
    return out
