"""Exception types shared across the toolkit."""


class LandauKitError(Exception):
    """Base class for all toolkit errors."""


class OutOfRangeError(LandauKitError, ValueError):
    """Evaluation point lies outside a tabulated range."""


class DomainError(LandauKitError, ValueError):
    """Argument outside the region where a transform is defined."""


class AccuracyError(LandauKitError):
    """A quadrature or iteration did not reach its tolerance.

    The achieved residual is kept on ``residual``.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class StabilityError(LandauKitError):
    """The dispersion function vanishes (or nearly so) on a contour."""


class TruncationError(LandauKitError):
    """A truncated contour or time integral has too large a tail."""


class StepSizeError(LandauKitError, ValueError):
    """Implicit time step is singular for the given step size."""


class NumericalError(LandauKitError):
    """Non-finite values or boundary leakage in a simulation."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConfigError(LandauKitError, ValueError):
    """Invalid experiment configuration; ``problems`` lists each field."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
