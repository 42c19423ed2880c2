"""Density matrices, ensembles, block sequences and purifications.

States are plain complex ``ndarray`` values validated on entry: density
matrices are ``(d, d)`` arrays, pure states are unit vectors. Purifications
of a ``d``-dimensional state with ancilla dimension ``r`` are flattened in
``system (x) ancilla`` order, i.e. the amplitude of ``|x>|a>`` sits at index
``x * r + a``.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from qsrc import linalg
from qsrc.config import TOL, default_dense_cap
from qsrc.exceptions import DimensionError, ResourceCapError, ValidationError

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_density_matrix(m, name: str = "state") -> np.ndarray:
    """Validate and return a Hermitian-symmetrized density matrix."""
    h = linalg.hermitize(m, name=name)
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > TOL.trace:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1")
    w = np.linalg.eigvalsh(h)
    if w.min() < -TOL.eig_clip:
        raise ValidationError(f"{name} has negative eigenvalue {w.min():.3g}")
    return h


def as_pure_state(v, name: str = "ket") -> np.ndarray:
    psi = np.asarray(v, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {psi.shape}")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > TOL.norm:
        raise ValidationError(f"{name} has norm {nrm:.12g}, expected 1")
    return psi


def ket(*amplitudes) -> np.ndarray:
    """Normalized ket from raw amplitudes."""
    psi = np.asarray(amplitudes, dtype=complex)
    return psi / np.linalg.norm(psi)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def bloch_state(x: float, y: float, z: float) -> np.ndarray:
    """Qubit state ``(I + xX + yY + zZ)/2`` for a Bloch vector of length <= 1."""
    r = float(np.sqrt(x * x + y * y + z * z))
    if r > 1.0 + TOL.norm:
        raise ValidationError(f"Bloch vector length {r:.6g} exceeds 1")
    rho = 0.5 * (np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z)
    return as_density_matrix(rho, "Bloch state")


def rank(rho: np.ndarray, cutoff: float = TOL.eig_clip) -> int:
    return int(np.sum(np.linalg.eigvalsh(rho) > cutoff))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Probability-weighted list of equal-dimension density matrices."""

    probs: np.ndarray
    states: tuple[np.ndarray, ...]
    _kets: tuple | None = field(default=None, repr=False, compare=False)

    def __init__(self, probs, states):
        p = np.asarray(probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValidationError("ensemble must be nonempty")
        if len(states) != p.size:
            raise ValidationError(f"{p.size} probabilities for {len(states)} states")
        if np.any(p < 0) or abs(p.sum() - 1.0) > TOL.trace:
            raise ValidationError(f"invalid probabilities {p.tolist()}")
        rhos = tuple(
            as_density_matrix(np.asarray(s) if np.ndim(s) == 2 else projector(as_pure_state(s)), f"state[{i}]")
            for i, s in enumerate(states)
        )
        dims = {r.shape[0] for r in rhos}
        if len(dims) != 1:
            raise DimensionError(f"ensemble members have mixed dimensions {sorted(dims)}")
        for arr in rhos:
            arr.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", rhos)
        object.__setattr__(self, "_kets", None)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def __len__(self) -> int:
        return len(self.states)

    def is_pure(self) -> bool:
        return all(rank(r) == 1 for r in self.states)

    def kets(self) -> tuple[np.ndarray, ...]:
        """Unit vectors for an all-pure ensemble (global phases are arbitrary)."""
        if self._kets is None:
            if not self.is_pure():
                raise ValidationError("ensemble has mixed members")
            vecs = tuple(linalg.eig_hermitian(r).eigenvectors[:, 0] for r in self.states)
            object.__setattr__(self, "_kets", vecs)
        return self._kets

    def fingerprint(self) -> str:
        """Stable digest identifying the ensemble up to 1e-12 rounding."""
        h = hashlib.sha256()
        h.update(np.round(self.probs, 12).tobytes())
        for r in self.states:
            h.update(np.round(r, 12).tobytes())
        return h.hexdigest()[:16]


def ensemble_average(ens: Ensemble) -> np.ndarray:
    avg = sum(p * r for p, r in zip(ens.probs, ens.states))
    return as_density_matrix(avg, "average state")


def check_sequence(ens: Ensemble, seq: Sequence[int]) -> tuple[int, ...]:
    seq = tuple(int(i) for i in seq)
    if not seq:
        raise ValidationError("block sequence must be nonempty")
    bad = [i for i in seq if i < 0 or i >= len(ens)]
    if bad:
        raise ValidationError(f"sequence indices {bad} invalid for {len(ens)} members")
    return seq


def sequence_probability(ens: Ensemble, seq: Sequence[int]) -> float:
    return float(np.prod(ens.probs[list(seq)]))


@dataclass(frozen=True, eq=False)
class ProductState:
    """Lazy tensor product; each factor is a ket (1-D) or density matrix (2-D)."""

    factors: tuple[np.ndarray, ...]

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.local_dims))

    @property
    def is_pure(self) -> bool:
        return all(f.ndim == 1 for f in self.factors)

    def trace(self) -> float:
        return float(np.prod([np.vdot(f, f).real if f.ndim == 1 else np.trace(f).real for f in self.factors]))

    def density_factors(self) -> tuple[np.ndarray, ...]:
        return tuple(projector(f) if f.ndim == 1 else f for f in self.factors)

    def ket(self, dense_cap: int | None = None) -> np.ndarray:
        if not self.is_pure:
            raise ValidationError("product state has mixed factors")
        _check_cap(self.dim, dense_cap)
        return linalg.kron(*self.factors)

    def dense(self, dense_cap: int | None = None) -> np.ndarray:
        _check_cap(self.dim, dense_cap)
        return linalg.kron(*self.density_factors())


def _check_cap(dim: int, dense_cap: int | None) -> None:
    cap = default_dense_cap() if dense_cap is None else dense_cap
    if dim > cap:
        raise ResourceCapError(f"dense dimension {dim} exceeds cap {cap}")


def block_state(ens: Ensemble, seq: Sequence[int], materialize: bool = False, dense_cap: int | None = None):
    """State ``rho_{i1} (x) ... (x) rho_{iN}`` for a block sequence.

    Returns a :class:`ProductState` unless ``materialize`` is set, in which
    case the dense matrix is built (subject to the dense cap).
    """
    seq = check_sequence(ens, seq)
    prod = ProductState(tuple(ens.states[i] for i in seq))
    return prod.dense(dense_cap) if materialize else prod


def purification_matrix(rho, ancilla_dim: int | None = None) -> np.ndarray:
    """Canonical purification as a ``d x r`` amplitude matrix ``V sqrt(Lambda)``.

    The ancilla dimension defaults to ``rank(rho)``; a larger value pads with
    zero columns so several states can share one ancilla space.
    """
    spec = linalg.eig_hermitian(rho)
    w = linalg.clip_spectrum(spec.eigenvalues)
    r = int(np.sum(w > TOL.eig_clip))
    r = max(r, 1)
    amp = spec.eigenvectors[:, :r] * np.sqrt(w[:r])
    amp = amp / np.linalg.norm(amp)
    if ancilla_dim is not None:
        if ancilla_dim < r:
            raise DimensionError(f"ancilla dimension {ancilla_dim} below rank {r}")
        amp = np.hstack([amp, np.zeros((amp.shape[0], ancilla_dim - r), dtype=complex)])
    return amp


def purify(rho, ancilla_dim: int | None = None) -> np.ndarray:
    """Purification ``sum_k sqrt(lambda_k) |v_k>|k>`` on ``C^d (x) C^r``."""
    rho = as_density_matrix(rho)
    return purification_matrix(rho, ancilla_dim).reshape(-1)


def reduced_state(psi, dim: int) -> np.ndarray:
    """Trace the ancilla out of a ``system (x) ancilla`` pure state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.size % dim:
        raise DimensionError(f"state of length {psi.size} does not factor with system dim {dim}")
    amp = psi.reshape(dim, -1)
    return amp @ amp.conj().T


def optimal_purification_pair(rho1, rho2) -> tuple[np.ndarray, np.ndarray]:
    """Purifications on a shared ancilla whose overlap attains the fidelity.

    The first is canonical; the second is rotated on the ancilla by the
    unitary ``Y X^H`` from the SVD ``A1^H A2 = X S Y^H`` of the amplitude
    matrices, which turns ``<psi1|psi2>`` into ``sum(S) = sqrt(F)``.
    """
    rho1 = as_density_matrix(rho1, "rho1")
    rho2 = as_density_matrix(rho2, "rho2")
    if rho1.shape != rho2.shape:
        raise DimensionError(f"shapes differ: {rho1.shape} vs {rho2.shape}")
    r = max(rank(rho1), rank(rho2), 1)
    a1 = purification_matrix(rho1, r)
    a2 = purification_matrix(rho2, r)
    x, _, y = linalg.svd(a1.conj().T @ a2)
    a2 = a2 @ (y @ x.conj().T)
    return a1.reshape(-1), a2.reshape(-1)


def aligned_purifications(ens: Ensemble) -> tuple[np.ndarray, int]:
    """Purifications of every member on one shared ancilla.

    Binary ensembles get the fidelity-optimal pair; larger ensembles use
    canonical purifications padded to the largest rank.
    Returns ``(kets, ancilla_dim)`` with ``kets`` of shape ``(len(ens), d*r)``.
    """
    if len(ens) == 2:
        k1, k2 = optimal_purification_pair(*ens.states)
        return np.stack([k1, k2]), k1.size // ens.dim
    r = max(rank(s) for s in ens.states)
    r = max(r, 1)
    return np.stack([purify(s, r) for s in ens.states]), r


def sample_sequence(ens: Ensemble, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    if n < 1:
        raise ValidationError(f"block length must be >= 1, got {n}")
    return tuple(int(i) for i in rng.choice(len(ens), size=n, p=ens.probs))


def sample_sequences(ens: Ensemble, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. sequences as an int array of shape ``(count, n)``."""
    if n < 1:
        raise ValidationError(f"block length must be >= 1, got {n}")
    return rng.choice(len(ens), size=(count, n), p=ens.probs)


def all_sequences(ens: Ensemble, n: int) -> Iterator[tuple[int, ...]]:
    """Every sequence whose members have nonzero probability, in lexicographic order."""
    support = [i for i, p in enumerate(ens.probs) if p > 0]
    return itertools.product(support, repeat=n)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed state of the given rank (full rank by default)."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return (rho + rho.conj().T) / 2


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_ensemble(n_members: int, dim: int, rng: np.random.Generator, pure: bool = False) -> Ensemble:
    probs = rng.dirichlet(np.ones(n_members))
    if pure:
        states = [projector(random_pure_state(dim, rng)) for _ in range(n_members)]
    else:
        states = [random_density_matrix(dim, rng, int(rng.integers(1, dim + 1))) for _ in range(n_members)]
    return Ensemble(probs, states)
