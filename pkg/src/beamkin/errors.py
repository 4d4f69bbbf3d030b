"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario or parameter value.

    ``path`` names the offending field (e.g. ``"spectrum.samples"``) when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(ArithmeticError):
    """A numerical procedure missed its tolerance or budget.

    Carries the best available estimate and its error bound so callers can
    decide whether the result is still usable.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        self.estimate = estimate
        self.error_bound = error_bound
        super().__init__(message)


class RegimeError(ValueError):
    """Asymptotic formula evaluated where it is singular (e.g. t = 0)."""


class SimulationError(RuntimeError):
    """Monte-Carlo run aborted (event cap exceeded, invalid state)."""


class RegimeWarning(UserWarning):
    """Closed form used outside its validity regime."""
