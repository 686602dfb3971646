"""Exception hierarchy shared by every module of the toolkit."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed its internal convergence check."""


class StepSizeError(ValueError):
    """The integration step is too coarse for the fastest rate in the model."""


class NumericalError(RuntimeError):
    """A state invariant (trace, Hermiticity, positivity) was violated."""


class FitError(RuntimeError):
    """Nonlinear least squares did not converge.

    ``diagnostics`` carries the last iterate and the iteration count so that
    callers can report something useful.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateDataError(FitError):
    """The trace carries no usable signal for the requested model."""


class ConfigError(ValueError):
    """One or more problems in an experiment configuration.

    All problems found are collected in ``errors`` (strings that already carry
    line diagnostics), not just the first one.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))
