"""Globally optimal real-time coding over a noisy channel with noisy feedback."""

__version__ = "0.1.0"

from .model import Instance, ChannelSpec, load_instance, make_instance, validate_instance  # noqa: E402
from .solver import Solver, SolverLimits, solve, value_at  # noqa: E402
from .evaluator import evaluate_exact, simulate, trace  # noqa: E402
from .oracle import brute_force_full, brute_force_no_feedback, count_designs, compare  # noqa: E402

__all__ = [
    "Instance", "ChannelSpec", "load_instance", "make_instance", "validate_instance",
    "Solver", "SolverLimits", "solve", "value_at",
    "evaluate_exact", "simulate", "trace",
    "brute_force_full", "brute_force_no_feedback", "count_designs", "compare",
]
