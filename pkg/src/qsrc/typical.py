"""Typical subspaces of ``rho^(x)N`` described by retained eigen-multi-indices.

A product eigenvalue of ``rho^(x)N`` depends only on the type (occupation
counts) of its multi-index, so selection works over the
``C(N + d - 1, d - 1)`` type classes and only expands the ones that are
kept. Nothing of size ``d^N`` is ever built here.

Retained multi-indices are stored in selection order: product eigenvalue
descending, ties (within ``TOL.tie`` in log2) broken lexicographically.
Row 0 is therefore the junk index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qsrc import linalg
from qsrc.config import TOL
from qsrc.exceptions import DimensionError, ResourceCapError, ValidationError
from qsrc.functionals import entropy_of_spectrum
from qsrc.linalg import HermitianSpectrum
from qsrc.states import ProductState

# Hard ceiling on the number of retained multi-indices held in memory.
MAX_RETAINED = 1 << 22


@dataclass(frozen=True, eq=False)
class TypicalSubspace:
    n: int
    base_spectrum: HermitianSpectrum
    retained: np.ndarray
    """Int array of shape ``(K, N)``; row 0 is the junk index."""

    @property
    def size(self) -> int:
        return self.retained.shape[0]

    @property
    def log_dim(self) -> float:
        return math.log2(self.size)

    @property
    def local_dim(self) -> int:
        return self.base_spectrum.eigenvalues.size

    @property
    def junk_index(self) -> tuple[int, ...]:
        return tuple(int(t) for t in self.retained[0])

    def product_eigenvalues(self) -> np.ndarray:
        lam = np.clip(self.base_spectrum.eigenvalues, 0.0, None)
        return np.prod(lam[self.retained], axis=1)

    @property
    def retained_weight(self) -> float:
        return float(np.sum(self.product_eigenvalues()))

    def basis_vectors(self, dense_cap: int) -> np.ndarray:
        """Dense ``d^N x K`` matrix whose columns are the retained product eigenvectors."""
        dim = self.local_dim ** self.n
        if dim > dense_cap or self.size > dense_cap:
            raise ResourceCapError(f"dense basis {dim}x{self.size} exceeds cap {dense_cap}")
        v = self.base_spectrum.eigenvectors
        out = np.ones((1, self.size), dtype=complex)
        for j in range(self.n):
            col = v[:, self.retained[:, j]]
            out = (out[:, None, :] * col[None, :, :]).reshape(-1, self.size)
        return out


def type_classes(d: int, n: int) -> np.ndarray:
    """All occupation-count vectors of length ``d`` summing to ``n``."""
    rows = [np.bincount(c, minlength=d) for c in itertools.combinations_with_replacement(range(d), n)]
    return np.array(rows, dtype=np.int64).reshape(-1, d)


def _log2_type_eigenvalues(lam: np.ndarray, types: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        loglam = np.log2(np.clip(lam, 0.0, None))
    out = np.zeros(types.shape[0])
    for t in range(lam.size):
        used = types[:, t] > 0
        out[used] += types[used, t] * loglam[t]
    return out


def multinomial(counts: Sequence[int]) -> int:
    total, out = 0, 1
    for c in counts:
        total += int(c)
        out *= math.comb(total, int(c))
    return out


def lex_members(types: Sequence[Sequence[int]], limit: int | None = None) -> list[tuple[int, ...]]:
    """Multi-indices whose type is in ``types``, in lexicographic order.

    Depth-first over positions with the candidate types pruned as digits are
    fixed; stops after ``limit`` results.
    """
    types = [tuple(int(c) for c in t) for t in types]
    if not types:
        return []
    d = len(types[0])
    n = sum(types[0])
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []
    cap = math.inf if limit is None else limit

    def rec(cands: list[tuple[int, ...]]) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for t in range(d):
            nxt = [c[:t] + (c[t] - 1,) + c[t + 1:] for c in cands if c[t] > 0]
            if not nxt:
                continue
            prefix.append(t)
            rec(nxt)
            prefix.pop()
            if len(out) >= cap:
                return

    rec(types)
    return out


def _tie_groups(log_eigs: np.ndarray) -> list[np.ndarray]:
    """Type indices grouped by equal product eigenvalue, largest first."""
    order = np.argsort(-log_eigs, kind="stable")
    groups: list[list[int]] = []
    prev = None
    for idx in order:
        val = log_eigs[idx]
        same = prev is not None and (
            (np.isneginf(val) and np.isneginf(prev)) or abs(val - prev) <= TOL.tie
        )
        if same:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
        prev = val
    return [np.array(g) for g in groups]


def _spectrum(rho) -> HermitianSpectrum:
    spec = linalg.eig_hermitian(rho)
    return HermitianSpectrum(linalg.clip_spectrum(spec.eigenvalues), spec.eigenvectors)


def _build(n: int, spec: HermitianSpectrum, rows: list[tuple[int, ...]]) -> TypicalSubspace:
    retained = np.array(rows, dtype=np.int64).reshape(-1, n)
    retained.setflags(write=False)
    return TypicalSubspace(n, spec, retained)


def product_spectrum_topk(rho, n: int, k: int) -> TypicalSubspace:
    """Keep the ``k`` largest product eigenvalues of ``rho^(x)n``."""
    spec = _spectrum(rho)
    d = spec.eigenvalues.size
    if n < 1:
        raise ValidationError(f"block length must be >= 1, got {n}")
    if not 1 <= k <= d ** n:
        raise ValidationError(f"K={k} outside [1, {d}^{n}]")
    if k > MAX_RETAINED:
        raise ResourceCapError(f"K={k} exceeds the retained-set ceiling {MAX_RETAINED}")
    types = type_classes(d, n)
    logs = _log2_type_eigenvalues(spec.eigenvalues, types)
    rows: list[tuple[int, ...]] = []
    for group in _tie_groups(logs):
        need = k - len(rows)
        if need <= 0:
            break
        size = sum(multinomial(types[g]) for g in group)
        rows.extend(lex_members(types[group], None if size <= need else need))
    return _build(n, spec, rows[:k])


def product_spectrum_delta(rho, n: int, delta: float) -> TypicalSubspace:
    """Keep multi-indices with ``2^-N(S+delta) <= lambda <= 2^-N(S-delta)``.

    Falls back to the single largest index when the window is empty.
    """
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    spec = _spectrum(rho)
    d = spec.eigenvalues.size
    s = entropy_of_spectrum(spec.eigenvalues)
    types = type_classes(d, n)
    logs = _log2_type_eigenvalues(spec.eigenvalues, types)
    lo, hi = -n * (s + delta), -n * (s - delta)
    rows: list[tuple[int, ...]] = []
    for group in _tie_groups(logs):
        val = logs[group[0]]
        if lo - TOL.tie <= val <= hi + TOL.tie:
            rows.extend(lex_members(types[group]))
            if len(rows) > MAX_RETAINED:
                raise ResourceCapError(f"typical set exceeds the retained-set ceiling {MAX_RETAINED}")
    if not rows:
        return product_spectrum_topk(rho, n, 1)
    return _build(n, spec, rows)


def amplitude_table(ts: TypicalSubspace, kets: Sequence[np.ndarray]) -> np.ndarray:
    """``A[t, i] = <e_t|psi_i>`` for single-copy eigenvectors ``e_t``."""
    kets = np.asarray(kets, dtype=complex)
    if kets.shape[1] != ts.local_dim:
        raise DimensionError(f"kets of dim {kets.shape[1]} vs subspace local dim {ts.local_dim}")
    return ts.base_spectrum.eigenvectors.conj().T @ kets.T


def diagonal_table(ts: TypicalSubspace, rhos: Sequence[np.ndarray]) -> np.ndarray:
    """``D[t, i] = <e_t|rho_i|e_t>``."""
    v = ts.base_spectrum.eigenvectors
    return np.stack([np.einsum("xt,xy,yt->t", v.conj(), r, v).real for r in rhos], axis=1)


def captured_weight(ts: TypicalSubspace, block) -> float:
    """``Tr(Pi rho_block)`` for a product block, evaluated factor by factor."""
    if not isinstance(block, ProductState):
        block = ProductState(tuple(np.asarray(f, dtype=complex) for f in block))
    if block.n_factors != ts.n or any(dd != ts.local_dim for dd in block.local_dims):
        raise DimensionError("block does not match the subspace's block length or local dimension")
    v = ts.base_spectrum.eigenvectors
    w = np.ones(ts.size)
    for j, f in enumerate(block.factors):
        if f.ndim == 1:
            col = np.abs(v.conj().T @ f) ** 2
        else:
            col = np.einsum("xt,xy,yt->t", v.conj(), f, v).real
        w *= col[ts.retained[:, j]]
    return float(np.sum(w))
