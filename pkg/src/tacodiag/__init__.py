"""Fault codiagnosability analysis for finite and timed automata."""
from .automata import (
    FAULT, TAU, Automaton, Guard, Run, TimedWord, classify_run, enumerate_runs, make_fa, make_ta,
    trace_of, validate,
)
from .codiag import (
    AmbiguousTuple, CodiagVerdict, check_codiag, check_delta_codiag, optimal_delay,
    verify_ambiguous_tuple,
)
from .dta_game import Resource, codiag_dta_synthesis
from .errors import BudgetExceeded, CodiagError, NotCodiagnosable
from .modelio import parse_model, write_model
from .synth import estimator_start, estimator_step, evaluate_diagnoser, synthesize_fa_codiagnoser

__all__ = [
    "FAULT", "TAU", "Automaton", "Guard", "Run", "TimedWord", "classify_run", "enumerate_runs",
    "make_fa", "make_ta", "trace_of", "validate", "AmbiguousTuple", "CodiagVerdict", "check_codiag",
    "check_delta_codiag", "optimal_delay", "verify_ambiguous_tuple", "Resource",
    "codiag_dta_synthesis", "BudgetExceeded", "CodiagError", "NotCodiagnosable", "parse_model",
    "write_model", "estimator_start", "estimator_step", "evaluate_diagnoser",
    "synthesize_fa_codiagnoser",
]
