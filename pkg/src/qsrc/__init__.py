"""Quantum source compression of mixed-state ensembles.

Information functionals (entropies, Holevo information, fidelity, trace
distance), Kraus channels, and blind / purification-composed
typical-subspace compression protocols with built-in bound checks.
"""

from qsrc.config import TOL, Tolerances, default_dense_cap
from qsrc.exceptions import (
    ConfigError,
    DimensionError,
    NegativityError,
    PropertyViolation,
    ProvenanceError,
    ResourceCapError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "TOL",
    "Tolerances",
    "default_dense_cap",
    "ConfigError",
    "DimensionError",
    "NegativityError",
    "PropertyViolation",
    "ProvenanceError",
    "ResourceCapError",
    "ValidationError",
]
