"""Exceptions and warning categories used across dipolar.

`ConfigError` maps to CLI exit code 2, every `NumericError` to exit code 3.
"""


class DipolarError(Exception):
    """Base class for all dipolar errors."""

    exit_code = 1


class ConfigError(DipolarError, ValueError):
    """Scenario file or command line problem."""

    exit_code = 2


class NumericError(DipolarError):
    """A computation could not be carried out."""

    exit_code = 3


class DomainError(NumericError, ValueError):
    """Argument outside the domain of an operation."""


class FrequencyRangeError(NumericError, KeyError):
    """Frequency outside a tabulated interval."""

    def __str__(self):
        # KeyError quotes its message, keep it readable
        return str(self.args[0]) if self.args else ""


class ModelError(NumericError, ValueError):
    """Non-physical model input."""


class BranchError(ModelError):
    """Strong/weak branch inconsistent with the coupling ordering."""


class StabilityError(NumericError, ValueError):
    """Step size beyond a stability or resolution bound."""


class GridError(NumericError, ValueError):
    """Invalid sampling grid."""


class MemoryCapError(NumericError, MemoryError):
    """Projected solver memory above the configured cap."""


class RateRegimeError(NumericError, ValueError):
    """No rate regime found in a population series."""


class AnalysisError(DipolarError):
    """A scenario analysis failed; carries the exit code of the cause."""

    def __init__(self, analysis: str, context: str, cause: Exception):
        self.analysis = analysis
        self.context = context
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", NumericError.exit_code)
        super().__init__(f"[{analysis}] {context}: {cause}")


class RegimeWarning(UserWarning):
    """Result used outside the regime where its approximation holds."""


class ConvergenceWarning(UserWarning):
    """A numerical result may not be converged."""


class ReflectionDataWarning(UserWarning):
    """Reflection part of the Green tensor not available."""
