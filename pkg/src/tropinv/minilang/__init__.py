"""The mini imperative language: parser, interpreter, tracer and bundled corpus."""

from importlib import resources

from .interp import (
    DEFAULT_STEP_LIMIT, AssertionFailed, InputRejected, InputVector, LocationNotFound,
    MiniRuntimeError, RetryBudgetExhausted, StepLimitExceeded, collect_traces,
    gen_random_inputs, run, run_traced,
)
from .syntax import MiniSyntaxError, Program, parse_program

__all__ = [
    "DEFAULT_STEP_LIMIT", "AssertionFailed", "InputRejected", "InputVector", "LocationNotFound",
    "MiniRuntimeError", "MiniSyntaxError", "Program", "RetryBudgetExhausted",
    "StepLimitExceeded", "collect_traces", "corpus_names", "corpus_source", "gen_random_inputs",
    "load_corpus", "parse_program", "run", "run_traced",
]


def corpus_names() -> list[str]:
    root = resources.files("tropinv") / "corpus"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".imp"))


def corpus_source(name: str) -> str:
    path = resources.files("tropinv") / "corpus" / f"{name}.imp"
    if not path.is_file():
        raise FileNotFoundError(f"no corpus program named {name!r}; have {corpus_names()}")
    return path.read_text(encoding="utf-8")


def load_corpus(name: str) -> Program:
    return parse_program(corpus_source(name))
