from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tropinv.infer import EmptyTraceError, LinearInequality, infer_template_bounds
from tropinv.minilang import collect_traces, load_corpus
from tropinv.traces import TraceSet


def ex1_traces():
    prog = load_corpus("ex1")
    return collect_traces(prog, "L", [{"x": x} for x in range(-1, 15)])


def as_set(ineqs):
    return {str(i) for i in ineqs}


def test_ex1_box():
    got = as_set(infer_template_bounds(ex1_traces(), "box"))
    assert got == {"x <= 11", "x >= -1", "y <= 11", "y >= 5"}


def test_ex1_zone():
    got = as_set(infer_template_bounds(ex1_traces(), "zone"))
    assert got == {"x <= 11", "x >= -1", "y <= 11", "y >= 5", "x - y <= 0", "x - y >= -6"}


def test_single_row_octagon():
    tr = TraceSet.from_points("L", ("x", "y"), [(3, 4)])
    got = as_set(infer_template_bounds(tr, "octagon"))
    assert {"x + y <= 7", "x + y >= 7", "x - y <= -1", "x - y >= -1"} <= got
    assert len(got) == 8


def test_canonical_sign():
    a = LinearInequality((("y", -1), ("x", 1)), 2, "<=")
    b = LinearInequality((("x", -1), ("y", 1)), -2, ">=")
    assert a == b and str(a) == "x - y <= 2"
    with pytest.raises(ValueError):
        LinearInequality((("x", 2),), 0, "<=")
    with pytest.raises(ValueError):
        LinearInequality((("x", 1), ("y", 1), ("z", 1)), 0, "<=")


def test_errors():
    with pytest.raises(EmptyTraceError):
        infer_template_bounds(TraceSet("L", ("x",), ()))
    with pytest.raises(ValueError):
        infer_template_bounds(ex1_traces(), "polyhedra")


rows = st.lists(st.tuples(st.integers(-50, 50), st.fractions(-5, 5, max_denominator=3)),
                min_size=1, max_size=30)


@given(rows, rows, st.sampled_from(["box", "zone", "octagon"]))
def test_sound_tight_monotone(a, b, family):
    ta = TraceSet.from_points("L", ("p", "q"), a)
    tb = ta.merge(TraceSet.from_points("L", ("p", "q"), b))
    small = infer_template_bounds(ta, family)
    big = infer_template_bounds(tb, family)
    for ineq in small:
        assert all(ineq.holds(r) for r in ta.rows)
        assert any(ineq.value(r) == ineq.bound for r in ta.rows)
    # more rows only loosen the bounds
    for s, g in zip(small, big):
        assert s.coefficients == g.coefficients and s.sense == g.sense
        if s.sense == "<=":
            assert g.bound >= s.bound
        else:
            assert g.bound <= s.bound
    assert all(isinstance(i.bound, Fraction) for i in big)
