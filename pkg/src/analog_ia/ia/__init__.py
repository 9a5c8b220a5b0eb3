"""Interference alignment: precoders, combiners and leakage measures."""

from ._backend import BACKEND
from .closed_form import closed_form_precoders
from .core import (
    DegenerateSpectrumWarning,
    IaConvergenceError,
    IaSolution,
    SolverOptions,
    canonical_phase,
    combiners,
    cross_gains,
    max_leakage,
    random_unitary,
    solve_ia,
    solve_precoders,
    stack_columns,
    total_leakage,
    zf_combiner,
)
from .dump import dump_solution, load_solution

__all__ = [
    "BACKEND",
    "DegenerateSpectrumWarning",
    "IaConvergenceError",
    "IaSolution",
    "SolverOptions",
    "canonical_phase",
    "closed_form_precoders",
    "combiners",
    "cross_gains",
    "dump_solution",
    "load_solution",
    "max_leakage",
    "random_unitary",
    "solve_ia",
    "solve_precoders",
    "stack_columns",
    "total_leakage",
    "zf_combiner",
]
