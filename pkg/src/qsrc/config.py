"""Numerical tolerances and resource caps.

All modules read their defaults from :data:`TOL` so that a single place
controls how round-off is separated from genuinely invalid input.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

DENSE_CAP_ENV = "QSRC_DENSE_CAP"


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-9
    """Relative Frobenius bound on ``||M - M^H|| / max(1, ||M||)``."""
    eig_clip: float = 1e-10
    """Eigenvalues in ``[-eig_clip, 0)`` are round-off and clip to zero."""
    trace: float = 1e-9
    norm: float = 1e-9
    support_weight: float = 1e-8
    """Weight outside a support above which a vector counts as leaving it."""
    trace_preserving: float = 1e-8
    unitary: float = 1e-8
    bound: float = 1e-9
    """Slack allowed when deciding whether an inequality is satisfied."""
    holevo_clamp: float = 1e-9
    tie: float = 1e-9
    """log2 gap below which two product eigenvalues are treated as equal."""


TOL = Tolerances()

DEFAULT_DENSE_CAP = 4096
DEFAULT_EXACT_BUDGET = 4096


def default_dense_cap() -> int:
    """Dense matrix dimension cap, overridable through ``QSRC_DENSE_CAP``."""
    raw = os.environ.get(DENSE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{DENSE_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{DENSE_CAP_ENV} must be positive, got {cap}")
    return cap
