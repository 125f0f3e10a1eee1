"""Impulse-response inference for locally misspecified VARs: LP vs VAR."""

from .errors import EstimationError, ModelError, NumericalError
from .model import (
    CompanionModel,
    IrfTarget,
    LagPolynomial,
    LocalModel,
    build_companion,
    misspec_norm,
    proxy_reparametrize,
    spectral_radius,
    stationary_variance,
    true_irf,
)

__version__ = "0.1.0"

__all__ = [
    "CompanionModel",
    "EstimationError",
    "IrfTarget",
    "LagPolynomial",
    "LocalModel",
    "ModelError",
    "NumericalError",
    "build_companion",
    "misspec_norm",
    "proxy_reparametrize",
    "spectral_radius",
    "stationary_variance",
    "true_irf",
]
