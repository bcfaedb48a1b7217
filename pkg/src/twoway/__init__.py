"""Nonuniform two-way automata, witness functions and their complexity measures."""

from .machine import (Kind, Move, NonuniformMachine, Transition, UniformMachine, apply_shuffle,
                      interleaving_permutation, validate_machine, validate_uniform)
from .simulate import (AcceptanceProbability, RunOutcome, Verdict, acceptance_probability, decide_probabilistic,
                       expected_running_time, run_deterministic, run_nondeterministic, run_uniform_2dfa)
from .witness import eq_eval, saf_eval, saf_params, usaf_eval, usaf_params, usaf_wellformed

__version__ = "0.1.0"
