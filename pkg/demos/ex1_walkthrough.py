"""Walk the ex1 loop through every stage by hand and print what each one produces.

Run with ``python demos/ex1_walkthrough.py`` (needs z3 on PATH).
"""

from tropinv.infer import MAX, MIN, filter_candidates, fit_weak, infer_equalities, infer_template_bounds
from tropinv.kip import verify_set
from tropinv.minilang import collect_traces, gen_random_inputs, load_corpus
from tropinv.pipeline import infer_candidates
from tropinv.vcgen import extract_transition_system


def show(title, items):
    print(f"\n{title} ({len(items)})")
    for it in items:
        print("   ", it)


prog = load_corpus("ex1")
traces = collect_traces(prog, "L", gen_random_inputs(prog, 300, seed=0))
print(f"{len(traces.rows)} states at L from 300 runs")

show("equalities, degree 2", [str(r) for r in infer_equalities(traces, degree=2)])
show("zone bounds", [str(r) for r in infer_template_bounds(traces)])
# the disjunction only shows up in the tropical fits
show("max-plus fits", [str(r) for r in fit_weak(traces, MAX)])
show("min-plus fits", [str(r) for r in fit_weak(traces, MIN)])

cands = infer_candidates(traces)
fresh = collect_traces(prog, "L", gen_random_inputs(prog, 100, seed=1))
kept = filter_candidates(cands, fresh)
print(f"\n{len(cands)} candidates, {len(kept)} survive 100 fresh runs")

ts = extract_transition_system(prog)
print("\ntransition system at L:\n" + ts.to_text())

part = verify_set(ts, kept, max_k=5, jobs=4)
show("independent invariants", [f"{c.text}  (k={part.results[c].k})" for c in part.independent])
show("proved but redundant", [c.text for c in part.redundant])
show("disproved", [c.text for c in part.disproved])
show("unproved", [c.text for c in part.unproved])
