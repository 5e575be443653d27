"""
Rateless Toolkit - Error Types
Exception hierarchy shared by all modules; exit codes are used by the CLI.
"""


class RatelessError(Exception):
    """Base class for toolkit errors."""

    exit_code = 1


class ConfigError(RatelessError):
    """Invalid experiment/problem file or configuration value."""

    exit_code = 2


class DistributionError(RatelessError):
    """Degree distribution literal could not be parsed or violates invariants."""

    exit_code = 2


class SpecInvalidError(RatelessError):
    """CodeSpec cannot be built (SPEC_INVALID)."""

    exit_code = 2


class InsufficientRankError(RatelessError):
    """Linear system does not determine every unknown (INSUFFICIENT_RANK)."""


class InconsistentSystemError(RatelessError):
    """Known values violate a parity equation (INCONSISTENT)."""


class DuplicateSymbolError(RatelessError):
    """A symbol was received twice (DUPLICATE)."""


class InfeasibleError(RatelessError):
    """EXIT tunnel closed even at the lowest noise level tried (INFEASIBLE)."""

    exit_code = 3


class NoFeasibleError(RatelessError):
    """No grid point admits a feasible degree distribution (NO_FEASIBLE)."""

    exit_code = 3
