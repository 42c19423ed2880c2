"""Scalar information quantities and the explicit compression bounds.

Base conventions: every entropy-like quantity is in bits. The exception is
:func:`eta`, which is ``-x ln x`` in nats. The lemma and theorem bounds add
a ``log2`` term to a natural-log ``eta`` term; this mixed form is kept
deliberately and is never converted to a single base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qsrc import linalg
from qsrc.config import TOL
from qsrc.exceptions import DimensionError, ValidationError
from qsrc.states import Ensemble, as_density_matrix, ensemble_average


@dataclass(frozen=True)
class BoundReport:
    """One instance of an inequality ``lhs <= rhs``.

    ``satisfied`` holds when ``lhs <= rhs + TOL.bound``; ``slack`` is
    ``rhs - lhs``. When the bound's precondition fails, ``applicable`` is
    False, ``satisfied`` is True and ``rhs``/``slack`` are NaN.
    """

    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    applicable: bool = True

    @classmethod
    def check(cls, lhs: float, rhs: float) -> "BoundReport":
        lhs, rhs = float(lhs), float(rhs)
        return cls(lhs, rhs, lhs <= rhs + TOL.bound, rhs - lhs)

    @classmethod
    def not_applicable(cls, lhs: float) -> "BoundReport":
        return cls(float(lhs), math.nan, True, math.nan, applicable=False)


def _xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def shannon_entropy(p: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > TOL.trace:
        raise ValidationError(f"not a probability distribution: {p.tolist()}")
    return float(max(0.0, -np.sum(_xlog2x(p))))


def entropy_of_spectrum(w: np.ndarray) -> float:
    w = linalg.clip_spectrum(np.asarray(w, dtype=float))
    return float(max(0.0, -np.sum(_xlog2x(w))))


def von_neumann_entropy(rho) -> float:
    return entropy_of_spectrum(linalg.eig_hermitian(rho).eigenvalues)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"binary entropy argument {x} outside [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def eta(x: float) -> float:
    """``-x ln x`` with ``eta(0) = 0``, in nats."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"eta argument {x} outside [0, 1]")
    return 0.0 if x == 0.0 else float(-x * math.log(x))


def relative_entropy(rho, sigma) -> float:
    """``Tr rho (log2 rho - log2 sigma)``; ``inf`` when supp(rho) is not inside supp(sigma)."""
    rho = as_density_matrix(rho, "rho")
    sigma = as_density_matrix(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionError(f"shapes differ: {rho.shape} vs {sigma.shape}")
    lam, u = linalg.eig_hermitian(rho)
    mu, v = linalg.eig_hermitian(sigma)
    lam = linalg.clip_spectrum(lam)
    mu = linalg.clip_spectrum(mu)
    s_supp = mu > TOL.eig_clip
    vs = v[:, s_supp]
    r_supp = lam > TOL.eig_clip
    for k in np.flatnonzero(r_supp):
        inside = vs.conj().T @ u[:, k]
        if 1.0 - float(np.vdot(inside, inside).real) > TOL.support_weight:
            return math.inf
    # Tr rho log sigma = sum_j log mu_j <v_j|rho|v_j> over supp(sigma)
    diag = np.einsum("ij,ik,kj->j", vs.conj(), rho, vs).real
    cross = float(np.sum(diag * np.log2(mu[s_supp])))
    self_term = float(np.sum(_xlog2x(lam)))
    return max(0.0, self_term - cross)


def holevo_information(ens: Ensemble) -> float:
    """``S(sum p_i rho_i) - sum p_i S(rho_i)`` in bits."""
    chi = von_neumann_entropy(ensemble_average(ens)) - sum(
        p * von_neumann_entropy(r) for p, r in zip(ens.probs, ens.states)
    )
    if chi < -TOL.holevo_clamp:
        raise ValidationError(f"negative Holevo information {chi:.3g}")
    return max(0.0, float(chi))


def holevo_via_relative_entropy(ens: Ensemble) -> float:
    """Holevo information as the mean relative entropy to the average state."""
    avg = ensemble_average(ens)
    total = 0.0
    for p, r in zip(ens.probs, ens.states):
        if p == 0:
            continue
        d = relative_entropy(r, avg)
        # supp(rho_i) lies inside supp(sum p_j rho_j) whenever p_i > 0
        assert math.isfinite(d), "member support escapes the average state"
        total += p * d
    return max(0.0, float(total))


def trace_distance(rho, sigma) -> float:
    """Full trace norm ``||rho - sigma||_1`` (range [0, 2], no factor 1/2)."""
    rho = as_density_matrix(rho, "rho")
    sigma = as_density_matrix(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionError(f"shapes differ: {rho.shape} vs {sigma.shape}")
    return float(min(2.0, linalg.trace_norm(rho - sigma, hermitian=True)))


def fidelity(rho1, rho2) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2``."""
    rho1 = as_density_matrix(rho1, "rho1")
    rho2 = as_density_matrix(rho2, "rho2")
    if rho1.shape != rho2.shape:
        raise DimensionError(f"shapes differ: {rho1.shape} vs {rho2.shape}")
    # Tr sqrt(sqrt(r1) r2 sqrt(r1)) is the trace norm of sqrt(r1) sqrt(r2); its singular
    # values avoid square-rooting round-off eigenvalues of the product.
    prod = linalg.matrix_sqrt_psd(rho1) @ linalg.matrix_sqrt_psd(rho2)
    f = float(np.sum(np.linalg.svd(prod, compute_uv=False))) ** 2
    return min(1.0, max(0.0, f))


def fannes_bound_check(rho, sigma) -> BoundReport:
    """``|S(rho) - S(sigma)| <= T log2(dim) + eta(T)`` for ``T = ||rho - sigma|| <= 1/2``."""
    t = trace_distance(rho, sigma)
    lhs = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma))
    if t > 0.5:
        return BoundReport.not_applicable(lhs)
    dim = np.asarray(rho).shape[0]
    return BoundReport.check(lhs, t * math.log2(dim) + eta(t))


def lemma_bound(epsilon: float, n: int, d: int) -> float:
    """``2 [eps N log2 d + eta(eps)]`` for ``0 <= eps <= 1/2``."""
    if not 0.0 <= epsilon <= 0.5:
        raise ValidationError(f"epsilon {epsilon} outside [0, 1/2]")
    return 2.0 * (epsilon * n * math.log2(d) + eta(epsilon))


def theorem_bound_check(
    holevo_per_msg: float, avg_distortion: float, n: int, d: int, log_dim_encoded: float
) -> BoundReport:
    """Check ``log_dim_encoded >= N chi - 2 [D N log2 d + eta(D)]``.

    Orientation: ``lhs`` is the Holevo side, ``rhs`` the encoded qubit count,
    so ``slack = log_dim_encoded - lower_bound``. Only applicable for
    ``D <= 1/2``.
    """
    if avg_distortion > 0.5:
        return BoundReport.not_applicable(n * holevo_per_msg)
    lower = n * holevo_per_msg - lemma_bound(max(0.0, avg_distortion), n, d)
    return BoundReport.check(lower, log_dim_encoded)


def purified_pair_entropy(p1: float, p2: float, overlap_sq: float) -> float:
    """Entropy of ``p1|psi1><psi1| + p2|psi2><psi2|`` given ``|<psi1|psi2>|^2``."""
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > TOL.trace:
        raise ValidationError(f"invalid binary distribution ({p1}, {p2})")
    if not -TOL.norm <= overlap_sq <= 1.0 + TOL.norm:
        raise ValidationError(f"squared overlap {overlap_sq} outside [0, 1]")
    ov = min(1.0, max(0.0, overlap_sq))
    x = 0.5 * (1.0 + math.sqrt((p1 - p2) ** 2 + 4.0 * p1 * p2 * ov))
    return binary_entropy(min(1.0, x))


def smin_binary(p1: float, p2: float, rho1, rho2) -> float:
    """Minimal entropy over single-message purifications of a binary source."""
    return purified_pair_entropy(p1, p2, fidelity(rho1, rho2))
