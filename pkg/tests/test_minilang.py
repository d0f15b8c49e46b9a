import random

import pytest

from tropinv.minilang import (
    AssertionFailed, InputRejected, LocationNotFound, MiniSyntaxError, RetryBudgetExhausted,
    StepLimitExceeded, collect_traces, corpus_names, gen_random_inputs, load_corpus,
    parse_program, run, run_traced,
)


def rows(tr):
    return [tuple(int(r[v]) for v in tr.variables) for r in tr.rows]


def test_corpus_parses():
    names = corpus_names()
    for n in ("ex1", "ex2", "sqrt", "sqrt1", "ps2", "ps3", "freire1", "cohencb", "strncpy"):
        assert n in names
    for n in names:
        load_corpus(n)


def test_ex1_and_sqrt_shape():
    ex1 = load_corpus("ex1")
    assert ex1.params == ("x",) and "L" in ex1.locations
    sq = load_corpus("sqrt")
    assert sq.params == ("x",) and len(sq.entry) == 1


def test_ex1_trace_table():
    tr = run_traced(load_corpus("ex1"), {"x": -1}, "L")
    assert tr.variables == ("x", "y")
    want = [(x, 5) for x in range(-1, 6)] + [(x, x) for x in range(6, 12)]
    assert rows(tr) == want and len(want) == 13


def test_ex2_single_row():
    tr = run_traced(load_corpus("ex2"), {"x": 9}, "L")
    assert tr.variables == ("b", "x", "y")
    assert rows(tr) == [(0, 9, 10)]


def test_sqrt_rejects_negative():
    with pytest.raises(InputRejected):
        run(load_corpus("sqrt"), {"x": -3})


def test_syntax_errors():
    with pytest.raises(MiniSyntaxError, match="undeclared"):
        parse_program("prog p(a) { while[L](x < 0) {} }")
    with pytest.raises(MiniSyntaxError, match="duplicate label"):
        parse_program("prog p(a) { [L] [L] }")
    with pytest.raises(MiniSyntaxError) as info:
        parse_program("prog p(a) {\n  a = ;\n}")
    assert info.value.line == 2


def test_step_limit_keeps_partial_rows():
    prog = parse_program("prog p(a) { i = 0; while[L](true) { i = i + 1; } }")
    with pytest.raises(StepLimitExceeded) as info:
        run_traced(prog, {"a": 0}, "L", step_limit=50)
    assert len(info.value.partial) > 0
    tr = collect_traces(prog, "L", [{"a": 0}], step_limit=50)
    assert len(tr) == len(info.value.partial)


def test_failed_assert_is_raised():
    prog = parse_program("prog p(a) { [L] assert(a > 0); }")
    with pytest.raises(AssertionFailed):
        run(prog, {"a": 0})


def test_unknown_location():
    with pytest.raises(LocationNotFound):
        run_traced(load_corpus("ex1"), {"x": 0}, "M")


def test_random_inputs_deterministic():
    ex1 = load_corpus("ex1")
    a = gen_random_inputs(ex1, 300, seed=1)
    assert len(a) == 300 and a == gen_random_inputs(ex1, 300, seed=1)
    assert a != gen_random_inputs(ex1, 300, seed=2)
    b = gen_random_inputs(load_corpus("ex2"), 100, seed=7)
    assert len(b) == 100 and all(-100 <= v["x"] <= 100 for v in b)


def test_random_inputs_respect_assumption():
    sq = load_corpus("sqrt")
    assert all(v["x"] >= 0 for v in gen_random_inputs(sq, 50, seed=3))
    with pytest.raises(RetryBudgetExhausted):
        gen_random_inputs(sq, 10, lo=-5, hi=-1)


# Direct Python versions of the kernels, each returning (rows at L, result).

def py_ex1(x):
    y = 5
    if x > y:
        x = y
    out = []
    while True:
        out.append((x, y))
        if not x <= 10:
            break
        if x >= 5:
            y += 1
        x += 1
    return out, None


def py_sqrt(x):
    a, s, t = 0, 1, 1
    out = []
    while True:
        out.append((a, s, t, x))
        if not s <= x:
            break
        a += 1
        t += 2
        s += t
    return out, a


def py_ps2(k):
    y = x = 0
    out = []
    while True:
        out.append((k, x, y))
        if not y < k:
            break
        y += 1
        x += y
    return out, x


def py_cohencb(a):
    n, x, y, z = 0, 0, 1, 6
    out = []
    while True:
        out.append((a, n, x, y, z))
        if not n <= a:
            break
        n, x, y, z = n + 1, x + y, y + z, z + 6
    return out, x


def py_freire1(x0):
    a, x, r = 2 * x0, x0, 0
    out = []
    while True:
        out.append((a, r, x, x0))
        if not x > r:
            break
        x -= r
        r += 1
    return out, r


@pytest.mark.parametrize("name, param, fn, lo", [
    ("ex1", "x", py_ex1, -100),
    ("sqrt", "x", py_sqrt, 0),
    ("ps2", "k", py_ps2, 0),
    ("cohencb", "a", py_cohencb, 0),
    ("freire1", "x0", py_freire1, 0),
])
def test_interpreter_matches_direct_kernels(name, param, fn, lo):
    prog = load_corpus(name)
    rng = random.Random(name)
    for _ in range(100):
        v = rng.randint(lo, 100)
        want_rows, want_ret = fn(v)
        tr = run_traced(prog, {param: v}, "L")
        assert rows(tr) == want_rows
        ret, _ = run(prog, {param: v})
        assert ret == want_ret
