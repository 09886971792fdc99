"""Exception types used across the package."""


class DomainError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite result where one is required."""


class DesignError(ValueError):
    """A sampling design cannot be realized (e.g. infeasible size measures)."""


class InitializationError(RuntimeError):
    """The sampler could not be started (non-finite target at the init point)."""


class FitFailure(RuntimeError):
    """A model fit failed after the allowed retry."""


class StudyError(RuntimeError):
    """Too many replicates of a Monte Carlo study failed."""


class LoadError(ValueError):
    """A dataset could not be loaded."""
