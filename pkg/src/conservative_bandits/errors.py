"""Exception hierarchy shared by every module.

The CLI maps :class:`ConfigError` to exit code 2 and every other
:class:`BanditError` to exit code 3.
"""


class BanditError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(BanditError, ValueError):
    """Invalid problem configuration or instance file."""


class ContractViolation(BanditError, ValueError):
    """A function was called with arguments breaking its precondition."""


class NumericalDegeneracyError(BanditError, ArithmeticError):
    """A matrix operation met a (near-)singular or non-positive quantity."""


class MissingFeedbackError(BanditError):
    """The constraint channel was requested but never observed."""


class SafetyContractError(BanditError):
    """A conservative mixing coefficient exceeds its guaranteed-safe limit."""


class UnsupportedRegimeError(BanditError):
    """The requested variant/regime has no defined behaviour (e.g. gap <= 0)."""


class InfeasibleInstanceError(BanditError):
    """No action satisfies the true constraint."""


class AggregationError(BanditError, ValueError):
    """Run logs cannot be combined (empty input, mismatched horizons)."""
