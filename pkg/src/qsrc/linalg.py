"""Dense complex linear algebra kernel.

Every spectral functional in the package goes through :func:`eig_hermitian`,
so the Hermiticity and clipping rules live here.
"""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from qsrc.config import TOL
from qsrc.exceptions import DimensionError, NegativityError, ValidationError


class HermitianSpectrum(NamedTuple):
    """Eigenvalues sorted descending with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite complex 2-D array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def _require_square(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative Frobenius norm of the anti-Hermitian part."""
    scale = max(1.0, float(np.linalg.norm(m)))
    return float(np.linalg.norm(m - m.conj().T)) / scale


def hermitize(m, tol: float = TOL.hermitian, name: str = "matrix") -> np.ndarray:
    """Return ``(M + M^H)/2``, refusing inputs that are not Hermitian within ``tol``."""
    m = as_matrix(m, name)
    _require_square(m, name)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValidationError(f"{name} is not Hermitian (relative defect {defect:.3g})")
    return (m + m.conj().T) / 2


def eig_hermitian(m, tol: float = TOL.hermitian) -> HermitianSpectrum:
    h = hermitize(m, tol)
    w, v = np.linalg.eigh(h)
    order = np.argsort(w)[::-1]
    return HermitianSpectrum(w[order].real.copy(), v[:, order].copy())


def clip_spectrum(w: np.ndarray, clip: float = TOL.eig_clip) -> np.ndarray:
    """Zero out round-off negatives; raise on anything below ``-clip``."""
    lo = float(np.min(w)) if w.size else 0.0
    if lo < -clip:
        raise NegativityError(f"eigenvalue {lo:.3g} below -{clip:g}")
    return np.clip(w, 0.0, None)


def trace_norm(a, hermitian: bool = False) -> float:
    """Sum of singular values; for Hermitian input the sum of ``|eigenvalues|``."""
    m = as_matrix(a)
    _require_square(m, "matrix")
    if hermitian:
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def matrix_sqrt_psd(m) -> np.ndarray:
    spec = eig_hermitian(m)
    w = clip_spectrum(spec.eigenvalues)
    v = spec.eigenvectors
    return (v * np.sqrt(w)) @ v.conj().T


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of arrays (vectors or matrices)."""
    if not mats:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the factor dimensions in tensor order; the kept factors
    come back in ascending index order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims)) if dims else 1
    if m.shape != (n, n):
        raise DimensionError(f"dims {dims} imply {n}x{n}, got {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep {keep} out of range for {len(dims)} subsystems")
    nsys = len(dims)
    t = m.reshape(dims + dims)
    # Trace the highest axes first so lower indices stay valid.
    for ax in sorted(set(range(nsys)) - set(keep), reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=ax, axis2=ax + cur)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(U, s, V)`` with ``A = U diag(s) V^H`` and ``s`` descending."""
    m = as_matrix(a)
    u, s, vh = np.linalg.svd(m)
    return u, s, vh.conj().T


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (z + z.conj().T) / 2
