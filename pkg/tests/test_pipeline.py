import json

import pytest

from _helpers import equivalent, equivalent_sets
from tropinv import formula as F
from tropinv.kip import Candidate
from tropinv.minilang import load_corpus
from tropinv.oracle import check_invariants, program_states
from tropinv.pipeline import (
    PipelineConfig, PipelineError, execute, infer_candidates, report_json, report_text, run_pipeline,
)
from tropinv.traces import TraceSet

P = F.parse_formula
pytestmark = pytest.mark.solver


@pytest.fixture(scope="module")
def ex1():
    return execute(PipelineConfig("ex1"))


def test_ex1_defaults(ex1):
    part = ex1.partition
    want = [P(t) for t in ("11 >= y", "y >= 5", "0 >= x - y", "max(0, x - 5) >= y - 5")]
    assert equivalent_sets([c.formula for c in part.proved], want)
    assert any(equivalent(c.formula, P("11 >= x")) for c in part.redundant)
    rep = ex1.report
    assert rep["generated"] >= rep["after_filter"] > 0
    assert rep["settings"]["runs"] == 300 and rep["settings"]["filter_runs"] == 100
    assert set(rep["timings"]) == {"load", "trace", "infer", "filter", "vcgen", "verify"}


def test_ex1_no_spurious_answers(ex1):
    # fresh inputs, different seed from both trace and filter runs
    states = program_states(load_corpus("ex1"), "L", runs=1000, seed=999)
    assert check_invariants(ex1.partition.proved, states) == []


def test_report_shapes(ex1):
    rep = ex1.report
    doc = json.loads(report_json(rep, timings=False))
    assert "timings" not in doc and doc["schema"] == "tropinv-report/1"
    classes = {e["relation"]: e["class"] for e in doc["candidates"]}
    for name, members in doc["partition"].items():
        assert all(classes[m] == name for m in members)
    assert sorted(classes) == sorted(m for ms in doc["partition"].values() for m in ms)
    text = report_text(rep)
    assert "proved invariants" in text and "disjunctive:" in text
    assert "max(0, x - 5) >= y - 5" in text


def test_same_config_same_report():
    a = report_json(run_pipeline(PipelineConfig("ex2", seed=4)), timings=False)
    b = report_json(run_pipeline(PipelineConfig("ex2", seed=4)), timings=False)
    assert a == b


def test_forms_restrict_provenance():
    from tropinv.minilang import collect_traces, gen_random_inputs
    prog = load_corpus("ex1")
    tr = collect_traces(prog, "L", gen_random_inputs(prog, 50))
    cands = infer_candidates(tr, forms=("maxplus",))
    assert cands and {c.provenance for c in cands} == {"maxplus"}
    assert len({c.text for c in cands}) == len(cands)


def test_single_variable_traces():
    tr = TraceSet.from_points("L", ("u",), [(1,), (4,), (9,)])
    texts = {c.text for c in infer_candidates(tr)}
    assert {"u <= 9", "u >= 1"} <= texts


def test_stage_errors(tmp_path):
    with pytest.raises(PipelineError) as info:
        execute(PipelineConfig("ex1", location="NOPE"))
    assert info.value.stage == "load" and not info.value.solver
    with pytest.raises(PipelineError) as info:
        execute(PipelineConfig(str(tmp_path / "missing.imp")))
    assert info.value.stage == "load"
    bad = tmp_path / "bad.imp"
    bad.write_text("prog p(a) { a = ; }")
    with pytest.raises(PipelineError):
        execute(PipelineConfig(str(bad)))
    with pytest.raises(PipelineError) as info:
        execute(PipelineConfig("sqrt", lo=-5, hi=-1))
    assert info.value.stage == "trace"
    with pytest.raises(PipelineError) as info:
        execute(PipelineConfig("strncpy", location="E"))
    assert info.value.stage == "vcgen"
    with pytest.raises(PipelineError) as info:
        execute(PipelineConfig("ex1", solver_cmd="definitely-not-a-solver-binary"))
    assert info.value.stage == "verify" and info.value.solver
    with pytest.raises(ValueError):
        PipelineConfig("ex1", forms=("hull",))


def test_injected_candidates_skip_filtering():
    res = execute(PipelineConfig("ex1", inject=("x >= -1",)))
    assert res.report["injected"] == 1
    c = Candidate.parse("x >= -1")
    assert res.partition.verdict(c).status == "disproved"


@pytest.mark.slow
def test_sqrt_degree_two():
    from _helpers import entails
    res = execute(PipelineConfig("sqrt", degree=2))
    # the equality basis comes out reduced, so the textbook forms are implied, not listed
    ind = [c.formula for c in res.partition.independent]
    for t in ("t = 2*a + 1", "4*s = t^2 + 2*t + 1", "s = (a + 1)^2", "s >= t"):
        assert entails(ind, P(t)), t
    assert any(equivalent(c.formula, P("s = (a + 1)^2")) for c in res.partition.proved)
