"""Exception hierarchy shared by the solver, evaluators and CLI."""


class RTCommError(Exception):
    """Base class for all package errors."""


class InstanceParseError(RTCommError):
    """Instance (or design) file is malformed or structurally incomplete."""


class InstanceValidationError(RTCommError):
    """Instance parsed but violates one or more numeric invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid instance:\n  " + "\n  ".join(self.violations))


class ZeroLikelihoodError(RTCommError):
    """A Bayes update was asked to condition on an impossible observation."""


class ZeroMassError(RTCommError):
    """A posterior was requested at an observation with no probability mass."""


class MissingRuleError(RTCommError, KeyError):
    """A decision rule lacks an entry for a point in the state's support."""

    def __str__(self):
        return Exception.__str__(self)


class StageMismatchError(RTCommError, ValueError):
    """Information states of different stage kinds were combined."""


class LimitExceededError(RTCommError):
    """A guardrail from :class:`~rtcomm.solver.SolverLimits` was hit.

    ``what`` names the guarded quantity, ``count`` is the offending value and
    ``limit`` the configured bound. ``stats`` carries partial solver
    statistics when available.
    """

    def __init__(self, what, count, limit, stats=None):
        self.what = what
        self.count = count
        self.limit = limit
        self.stats = stats or {}
        super().__init__(f"{what}: {count} exceeds limit {limit}")


class BeliefMismatchError(RTCommError):
    """A structured encoder met a belief that is not in its rule table."""


class DimensionMismatchError(RTCommError):
    """A design's table sizes do not match the instance alphabets."""
