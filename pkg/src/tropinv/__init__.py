"""Trace-based inference of tropical and polynomial loop invariants, checked by k-induction."""

__version__ = "0.1.0"
