import pytest

from tropinv import formula as F
from tropinv.kip import Candidate, Partition, ProofResult
from tropinv.minilang import load_corpus, run_traced
from tropinv.oracle import OracleError, check_invariants, check_partition, program_states, simulate
from tropinv.vcgen import TransitionSystem, extract_transition_system

P = F.parse_formula


def test_counter_runs():
    ts = TransitionSystem(("x",), P("x@0 = 0"), P("x@n = x@n-1 + 1"))
    seqs = simulate(ts, runs=3, steps=10)
    assert len(seqs) == 3
    assert all([s["x"] for s in seq] == list(range(11)) for seq in seqs)


# ex1 clamps its input before the loop, so the input is not recoverable; see below
@pytest.mark.parametrize("name", ["sqrt", "cohencb", "freire1", "strncpy"])
def test_simulation_matches_interpreter(name):
    prog = load_corpus(name)
    ts = extract_transition_system(prog)
    for seq in simulate(ts, runs=40, steps=400, seed=3, lo=-40, hi=40):
        inp = {p: int(seq[0][p]) for p in prog.params}
        rows = [dict(r) for r in run_traced(prog, inp, "L").rows]
        assert rows[:len(seq)] == seq


def test_ex1_simulation_states_are_reachable():
    prog = load_corpus("ex1")
    reachable = {tuple(sorted(s.items())) for s in program_states(prog, "L", runs=400, seed=1)}
    for seq in simulate(extract_transition_system(prog), runs=50, steps=30, seed=2):
        for s in seq:
            assert tuple(sorted(s.items())) in reachable


def test_label_system_gives_single_states():
    prog = load_corpus("ex2")
    seqs = simulate(extract_transition_system(prog), runs=30)
    assert all(len(seq) == 1 for seq in seqs)
    assert not check_invariants(["1 >= b", "b >= 0"], [s for seq in seqs for s in seq])


def test_nondeterministic_trans_rejected():
    ts = TransitionSystem(("x",), P("x@0 = 0"), P("x@n = x@n-1 + 1 || x@n = x@n-1 + 2"))
    with pytest.raises(OracleError):
        simulate(ts)


def test_check_invariants_reports():
    bad = check_invariants(["x >= 0", "y = 1"], [{"x": 1, "y": 1}, {"x": -1, "y": 1}, {"x": 0}])
    assert [(v.candidate, v.detail != "") for v in bad] == [
        ("x >= 0", False), ("y = 1", True)]


def test_check_partition_catches_forgeries():
    ts = TransitionSystem(("x",), P("x@0 = 0"), P("x@n = x@n-1 + 1"))
    wrong = Candidate.parse("x <= 5")
    fake_cex = Candidate.parse("x >= 0")
    part = Partition(independent=[wrong], disproved=[fake_cex],
                     results={wrong: ProofResult("proved", 0),
                              fake_cex: ProofResult("disproved", 1, ({"x": 0}, {"x": 1}))})
    bad = check_partition(ts, part, runs=2, steps=10)
    assert {v.candidate for v in bad} == {"x <= 5", "x >= 0"}
