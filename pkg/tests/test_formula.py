from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tropinv import formula as F
from tropinv.formula import (
    FormulaSyntaxError, Var, at_index, evaluate, expand_tropical, free_vars, negate_formula,
    parse_expr, parse_formula, shift, state_env, to_text,
)

NAMES = ["x", "y", "z"]

leaf = st.one_of(
    st.builds(F.Num, st.fractions(min_value=-20, max_value=20, max_denominator=4)),
    st.builds(F.Var, st.sampled_from(NAMES)),
)


def _expr(children):
    two = st.lists(children, min_size=2, max_size=3).map(tuple)
    return st.one_of(
        two.map(F.Add), two.map(F.Mul), two.map(F.Max), two.map(F.Min),
        st.builds(F.Sub, children, children),
        st.builds(F.Neg, children),
        st.builds(F.Pow, leaf, st.integers(0, 3)),
    )


exprs = st.recursive(leaf, _expr, max_leaves=8)
atoms = st.builds(F.Cmp, st.sampled_from(["<", "<=", "=", "!=", ">=", ">"]), exprs, exprs)


def _bool(children):
    two = st.lists(children, min_size=2, max_size=3).map(tuple)
    return st.one_of(two.map(F.And), two.map(F.Or), st.builds(F.Not, children))


formulas = st.recursive(atoms, _bool, max_leaves=5)
envs = st.fixed_dictionaries({n: st.integers(-6, 6) for n in NAMES})


@settings(max_examples=100, deadline=None)
@given(formulas, envs)
def test_print_parse_roundtrip(f, env):
    g = parse_formula(to_text(f))
    e = state_env(env)
    assert evaluate(g, e) == evaluate(f, e)
    assert to_text(parse_formula(to_text(g))) == to_text(g)


@settings(max_examples=100, deadline=None)
@given(formulas, envs)
def test_expand_tropical_and_negation(f, env):
    e = state_env(env)
    assert evaluate(expand_tropical(f), e) == evaluate(f, e)
    assert evaluate(negate_formula(f), e) == (not evaluate(f, e))


@given(formulas, st.integers(-5, 5))
def test_shift_is_invertible(f, k):
    g = at_index(f, 3)
    assert shift(shift(g, k), -k) == g


def test_chain_and_precedence():
    f = parse_formula("11 >= y >= 5")
    assert evaluate(f, state_env({"y": 7}))
    assert not evaluate(f, state_env({"y": 12}))
    assert evaluate(parse_expr("2 + 3*x^2"), state_env({"x": 2})) == 14
    assert evaluate(parse_expr("-2^2"), {}) == -4
    assert evaluate(parse_expr("x/4"), state_env({"x": 2})) == Fraction(1, 2)


def test_indices():
    f = parse_formula("x@n = x@n-1 + y@in && z@0 > 0")
    # n-relative indices read as the step from 0 to 1
    assert free_vars(f) == {("x", 1), ("x", 0), ("y", "in"), ("z", 0)}
    assert to_text(parse_formula("x@3 + 1 >= x@2")) == "x@3 + 1 >= x@2"


def test_tropical_and_ite():
    env = state_env({"x": 6, "y": 6})
    assert evaluate(parse_formula("max(0, x - 5) >= y - 5"), env)
    env = state_env({"x": 4, "y": 6})
    assert not evaluate(parse_formula("max(0, x - 5) >= y - 5"), env)
    assert evaluate(parse_expr("ite(x > 5, 1, 2)"), env) == 2
    assert evaluate(parse_formula("min(x, y) = z"), state_env({"x": 3, "y": 7, "z": 3}))


@pytest.mark.parametrize("text", ["x >=", "max()", "x @ 1", "x / y >= 0", "(x > 1", "x ^ y > 0", "1 + "])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_unbound_variable():
    with pytest.raises(KeyError, match="unbound"):
        evaluate(Var("q"), {})
