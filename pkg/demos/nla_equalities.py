"""Equality bases of the nonlinear kernels at the highest degree that fits 200 terms.

The prover is not involved here; the script just shows what traces alone give.
Run with ``python demos/nla_equalities.py``.
"""

import time

from tropinv.infer import infer_equalities
from tropinv.minilang import collect_traces, gen_random_inputs, load_corpus
from tropinv.traces import max_degree_within

for name in ("sqrt1", "ps2", "ps3", "ps4", "ps5", "ps6", "freire1", "cohencb"):
    prog = load_corpus(name)
    traces = collect_traces(prog, "L", gen_random_inputs(prog, 300, seed=0))
    degree = max_degree_within(len(traces.variables), 200)
    t0 = time.perf_counter()
    basis = infer_equalities(traces, degree=degree, cap=200)
    dt = time.perf_counter() - t0
    print(f"{name}: vars {', '.join(traces.variables)}; degree {degree}; "
          f"{len(traces.rows)} rows; {len(basis)} equalities in {dt:.2f}s")
    # high degrees also pick up multiples of the interesting ones
    for e in sorted(basis, key=lambda e: len(str(e)))[:4]:
        print("   ", e)
