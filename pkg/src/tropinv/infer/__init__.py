"""Candidate invariant inference from traces."""

from .equalities import EmptyTraceError, PolyEquality, infer_equalities
from .filtering import filter_candidates, holds, simplify_relation
from .inequalities import FAMILIES, LinearInequality, infer_template_bounds
from .tropical import (
    ABSENT, CONST, GE, LE, MAX, MIN, VACUOUS, TropicalKind, TropicalRelation, TropicalSide,
    WeakRelation, WeakTemplate, check_relation, enumerate_weak_templates, fit_pair_general,
    fit_parameter, fit_weak, implied_by_bounds, implies, is_tautology, prune_redundant,
)

__all__ = [
    "ABSENT", "CONST", "EmptyTraceError", "FAMILIES", "GE", "LE", "LinearInequality", "MAX",
    "MIN", "PolyEquality", "TropicalKind", "TropicalRelation", "TropicalSide", "VACUOUS",
    "WeakRelation", "WeakTemplate", "check_relation", "enumerate_weak_templates",
    "filter_candidates", "fit_pair_general", "fit_parameter", "fit_weak", "holds",
    "implied_by_bounds", "implies", "infer_equalities", "infer_template_bounds",
    "is_tautology", "prune_redundant", "simplify_relation",
]
