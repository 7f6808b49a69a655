"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates an operation's precondition."""


class ConfigError(ValueError):
    """A run configuration is inconsistent or incomplete."""


class CascadeBuildError(RuntimeError):
    """Cascade construction produced ports that fail the DFT cross-check."""


class NumericalError(RuntimeError):
    """Base class for runtime numerical failures (exit code 3 in the CLI)."""


class UndefinedVisibilityError(NumericalError):
    """Visibility requested where bright and dark signals are both zero."""


class UndefinedCorrelationError(NumericalError):
    """Correlation requested for a series with zero variance."""


class SaturationError(NumericalError):
    """Power level left the invertible fringe branch (|k dL| >= pi/2)."""


class ConvergenceError(NumericalError):
    """Iterative fit did not converge; carries the best parameters found."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PipelineError(NumericalError):
    """A multi-stage analysis failed; the message names the failing stage."""


class CsvFormatError(ValueError):
    """A data file could not be parsed; the message names the offending line."""
