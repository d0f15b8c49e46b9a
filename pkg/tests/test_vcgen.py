import random

import pytest

from tropinv import formula as F
from tropinv.minilang import corpus_names, gen_random_inputs, load_corpus, parse_program, run_traced
from tropinv.vcgen import TransitionSystem, VcGenError, extract_transition_system, parse_transition_system

P = F.parse_formula


def _env(rows, inputs):
    env = {(p, "in"): v for p, v in inputs.items()}
    for i, r in enumerate(rows):
        env.update({(n, i): v for n, v in r.items()})
    return env


def test_sqrt_system():
    ts = extract_transition_system(load_corpus("sqrt"))
    assert ts.vars == ("a", "s", "t", "x")
    want_init = P("x@0 >= 0 && a@0 = 0 && s@0 = 1 && t@0 = 1")
    want_trans = P("s@n-1 <= x@n-1 && x@n = x@n-1 && a@n = a@n-1 + 1 "
                   "&& t@n = t@n-1 + 2 && s@n = s@n-1 + t@n-1 + 2")
    assert set(ts.init.args) == set(want_init.args)
    assert set(ts.trans.args) == set(want_trans.args)


def test_ex1_system():
    ts = extract_transition_system(load_corpus("ex1"))
    # on the post-if state, y = 5 and x <= 5
    for x_in in range(-20, 20):
        env = {("x", "in"): x_in, ("x", 0): min(x_in, 5), ("y", 0): 5}
        assert F.evaluate(ts.init, env)
        assert F.evaluate(P("x@0 <= 5 && y@0 = 5"), env)
    for x, y in [(3, 5), (7, 7), (10, 10)]:
        nxt = {("x", 0): x, ("y", 0): y, ("x", 1): x + 1, ("y", 1): y + 1 if x >= 5 else y}
        assert F.evaluate(ts.trans, nxt)
    assert not F.evaluate(ts.trans, {("x", 0): 11, ("y", 0): 11, ("x", 1): 12, ("y", 1): 12})


@pytest.mark.parametrize("name", [n for n in corpus_names() if n != "ex2"])
def test_simulation_equivalence(name):
    prog = load_corpus(name)
    ts = extract_transition_system(prog)
    for inp in gen_random_inputs(prog, 100, seed=11, lo=-30, hi=30):
        tr = run_traced(prog, inp, "L")
        rows = [dict(r) for r in tr.rows]
        env = _env(rows, inp)
        m = len(rows) - 1
        assert F.evaluate(ts.unrolling(m), env), (name, dict(inp))
        # the last sampled state fails the guard, so no step leaves it
        last = {(n, 0): v for n, v in rows[-1].items()}
        last.update({(n, 1): 0 for n in ts.vars})
        guard = ts.trans.args[0] if isinstance(ts.trans, F.And) else ts.trans
        assert not F.evaluate(guard, last)


def test_label_system_is_step_free():
    prog = load_corpus("ex2")
    ts = extract_transition_system(prog)
    assert ts.trans == F.FALSE
    for x in range(-30, 30):
        row = dict(run_traced(prog, {"x": x}, "L").rows[0])
        assert F.evaluate(ts.init, {(n, 0): v for n, v in row.items()})


@pytest.mark.parametrize("name", corpus_names())
def test_frame_soundness(name):
    ts = extract_transition_system(load_corpus(name))
    if ts.trans == F.FALSE:
        return
    updates = [a for a in ts.trans.args
               if isinstance(a, F.Cmp) and a.op == "=" and isinstance(a.left, F.Var) and a.left.index == 1]
    assert sorted(u.left.name for u in updates) == sorted(ts.vars)
    assert {i for _, i in F.free_vars(ts.trans)} <= {0, 1}
    assert {i for _, i in F.free_vars(ts.init)} <= {0, "in"}


@pytest.mark.parametrize("name", corpus_names())
def test_text_roundtrip(name):
    ts = extract_transition_system(load_corpus(name))
    back = parse_transition_system(ts.to_text())
    assert back == ts


def test_hand_written_system():
    ts = parse_transition_system("vars: x\ninit: x@0 = 0\ntrans: x@n = x@n-1 + 1\n")
    assert isinstance(ts, TransitionSystem)
    assert F.to_text(ts.trans_at(3)) == "x@3 = x@2 + 1"
    with pytest.raises(VcGenError):
        parse_transition_system("vars: x\ninit: x@1 = 0\ntrans: x@n = x@n-1\n")
    with pytest.raises(VcGenError):
        parse_transition_system("vars: x\ninit: x@0 = 0\n")
    with pytest.raises(VcGenError):
        parse_transition_system("vars: x\ninit: x@0 = 0\ntrans: y@n = 1\n")


def test_nested_loop_rejected():
    prog = parse_program("""
        prog p(a) {
          i = 0;
          while[L](i < a) {
            j = 0;
            while[M](j < i) { j = j + 1; }
            i = i + 1;
          }
        }""")
    with pytest.raises(VcGenError, match="loop"):
        extract_transition_system(prog)


def test_loop_before_location_rejected():
    with pytest.raises(VcGenError):
        extract_transition_system(load_corpus("strncpy"), "E")


def test_missing_location():
    with pytest.raises(VcGenError, match="no location"):
        extract_transition_system(load_corpus("ex1"), "Q")


def test_branchy_body_random_agreement():
    prog = parse_program("""
        prog p(a, b) {
          assume(a >= 0);
          x = a; y = b; c = 0;
          while[L](x > 0) {
            if (y > x) { y = y - x; } else { if (y < 0) { y = -y; } else { c = c + 1; } }
            x = x - 1;
          }
        }""")
    ts = extract_transition_system(prog)
    rng = random.Random(5)
    for _ in range(100):
        inp = {"a": rng.randint(0, 25), "b": rng.randint(-40, 40)}
        rows = [dict(r) for r in run_traced(prog, inp, "L").rows]
        assert F.evaluate(ts.unrolling(len(rows) - 1), _env(rows, inp))
