"""Exception hierarchy shared across the package."""


class ModelError(ValueError):
    """Invalid model, target or configuration (bad dimensions, unstable A, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (singular system, non-PD covariance, ...)."""


class EstimationError(NumericalError):
    """Estimation on a particular dataset could not be carried out."""
