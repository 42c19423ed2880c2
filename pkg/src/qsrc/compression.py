"""Blind typical-subspace compression and the purification-composed protocol.

Encoding maps a block state onto the retained subspace and sends whatever
weight falls outside it to the junk basis vector (row 0 of
``TypicalSubspace.retained``):

    rho -> Pi rho Pi + Tr((1 - Pi) rho) |e_junk><e_junk|

expressed in retained-subspace coordinates. Decoding is the isometric
embedding back into the block space.

Distortion is the full trace norm ``||rho - rho'||_1``. Pure product blocks
are handled in the span of ``{Psi, Pi Psi, e_junk}`` through a 3x3 Gram
matrix. For the composed protocol the ancillas are traced out after
decoding. That distortion comes from a Gram matrix over ancilla indices,
so the ``d^k``-dimensional system space is never materialized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from qsrc import linalg
from qsrc.channels import KrausChannel
from qsrc.config import DEFAULT_EXACT_BUDGET, TOL, default_dense_cap
from qsrc.exceptions import DimensionError, ProvenanceError, ResourceCapError, ValidationError
from qsrc.functionals import BoundReport, holevo_information, theorem_bound_check
from qsrc.parallel import parallel_map
from qsrc.states import (
    Ensemble,
    ProductState,
    aligned_purifications,
    all_sequences,
    ensemble_average,
    sample_sequences,
)
from qsrc.typical import (
    TypicalSubspace,
    amplitude_table,
    product_spectrum_delta,
    product_spectrum_topk,
)

BLIND_SJ = "blind_sj"
COMPOSED = "composed_purified"

# Largest coefficient tensor (entries) the ancilla Gram contraction may build.
MAX_GRAM_TENSOR = 1 << 22
# Pivoted-Cholesky stopping threshold, relative to the largest Gram diagonal.
GRAM_RANK_TOL = 1e-15


def rate_to_k(rate: float, n: int, dim: int) -> int:
    """Retained-set size ``floor(2^(n*rate))`` clamped to ``[1, dim^n]``.

    Flooring keeps ``log2 K <= n * rate``, so a record never spends more
    qubits than its nominal rate.
    """
    if not math.isfinite(rate) or rate < 0:
        raise ValidationError(f"rate must be a finite non-negative number, got {rate}")
    if n * rate >= n * math.log2(dim) - 1e-12:
        return dim ** n
    return max(1, min(dim ** n, math.floor(2.0 ** (n * rate) + 1e-9)))


def build_subspace(rho, n: int, rate: float | None = None, mode: str = "topk", delta: float | None = None) -> TypicalSubspace:
    if mode == "topk":
        if rate is None:
            raise ValidationError("topk mode needs a rate")
        return product_spectrum_topk(rho, n, rate_to_k(rate, n, rho.shape[0]))
    if mode == "delta":
        if delta is None:
            raise ValidationError("delta mode needs delta")
        return product_spectrum_delta(rho, n, delta)
    raise ValidationError(f"unknown subspace mode {mode!r}")


# --- encoder / decoder -------------------------------------------------------


def _local_blocks(ts: TypicalSubspace, factor) -> np.ndarray:
    v = ts.base_spectrum.eigenvectors
    f = np.asarray(factor, dtype=complex)
    if f.ndim == 1:
        a = v.conj().T @ f
        return np.outer(a, a.conj())
    return v.conj().T @ f @ v


def sj_encode(ts: TypicalSubspace, block, dense_cap: int | None = None) -> np.ndarray:
    """Encoded ``K x K`` state in retained coordinates (junk vector is coordinate 0).

    ``block`` is a :class:`ProductState` (evaluated factor-wise) or a dense
    ``d^N x d^N`` matrix.
    """
    cap = default_dense_cap() if dense_cap is None else dense_cap
    if ts.size > cap:
        raise ResourceCapError(f"retained dimension {ts.size} exceeds cap {cap}")
    if isinstance(block, ProductState):
        if block.n_factors != ts.n:
            raise DimensionError(f"block of {block.n_factors} factors vs N={ts.n}")
        enc = np.ones((ts.size, ts.size), dtype=complex)
        for j, f in enumerate(block.factors):
            if f.shape[0] != ts.local_dim:
                raise DimensionError("factor dimension does not match the subspace")
            loc = _local_blocks(ts, f)
            idx = ts.retained[:, j]
            enc *= loc[np.ix_(idx, idx)]
    else:
        rho = linalg.as_matrix(block)
        basis = ts.basis_vectors(cap)
        if rho.shape != (basis.shape[0],) * 2:
            raise DimensionError(f"dense block {rho.shape} vs block dimension {basis.shape[0]}")
        enc = basis.conj().T @ rho @ basis
    enc = (enc + enc.conj().T) / 2
    lost = 1.0 - float(np.trace(enc).real)
    enc[0, 0] += max(0.0, lost)
    return enc


@dataclass(frozen=True, eq=False)
class DecodedBlock:
    """Decoded state kept as retained-subspace coordinates; ``dense()`` embeds it."""

    subspace: TypicalSubspace
    matrix: np.ndarray

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def dense(self, dense_cap: int | None = None) -> np.ndarray:
        cap = default_dense_cap() if dense_cap is None else dense_cap
        p = self.subspace.basis_vectors(cap)
        return p @ self.matrix @ p.conj().T


def sj_decode(ts: TypicalSubspace, encoded) -> DecodedBlock:
    enc = linalg.as_matrix(encoded, "encoded state")
    if enc.shape != (ts.size, ts.size):
        raise DimensionError(f"encoded state {enc.shape} vs retained size {ts.size}")
    return DecodedBlock(ts, enc)


def encoder_channel(ts: TypicalSubspace, dense_cap: int | None = None) -> KrausChannel:
    """The encoder as Kraus operators ``{P^H} + {|junk><u| : u outside the subspace}``."""
    cap = default_dense_cap() if dense_cap is None else dense_cap
    p = ts.basis_vectors(cap)
    d, n = ts.local_dim, ts.n
    kept = {tuple(r) for r in ts.retained.tolist()}
    v = ts.base_spectrum.eigenvectors
    ops = [p.conj().T]
    junk = np.zeros(ts.size, dtype=complex)
    junk[0] = 1.0
    for m in itertools.product(range(d), repeat=n):
        if m in kept:
            continue
        u = linalg.kron(*(v[:, t] for t in m))
        ops.append(np.outer(junk, u.conj()))
    return KrausChannel(ops)


def decoder_channel(ts: TypicalSubspace, dense_cap: int | None = None) -> KrausChannel:
    cap = default_dense_cap() if dense_cap is None else dense_cap
    return KrausChannel([ts.basis_vectors(cap)])


# --- distortion kernels ------------------------------------------------------


def _factor_psd(gram: np.ndarray) -> np.ndarray:
    """``F`` with ``gram = F F^H`` from a pivoted Cholesky, truncated at numerical rank."""
    g = (gram + gram.conj().T) / 2
    scale = float(np.max(np.abs(np.diag(g)).real, initial=0.0))
    if scale == 0.0:
        return np.zeros((g.shape[0], 0), dtype=complex)
    c, piv, rank, info = lapack.zpstrf(g, lower=1, tol=GRAM_RANK_TOL * scale)
    if info < 0:
        raise ValidationError(f"pivoted Cholesky failed (info={info})")
    low = np.tril(c)[:, :rank]
    out = np.empty_like(low)
    out[piv - 1] = low
    return out


def _form_trace_norm(gram: np.ndarray, coeff: np.ndarray) -> float:
    """Trace norm of ``B C B^H`` given ``G = B^H B`` and Hermitian ``C``.

    With ``G = F F^H`` the nonzero spectrum of ``B C B^H`` equals that of
    ``F^H C F``, so ``B`` itself is never needed.
    """
    f = _factor_psd(gram)
    if f.shape[1] == 0:
        return 0.0
    core = f.conj().T @ coeff @ f
    core = (core + core.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(core))))


def _pure_distortion_from_parts(leak: np.ndarray, c0: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """Pure-block distortions from the orthogonal split ``Psi = chi + c0 e_junk + phi'``.

    ``leak = ||chi||^2`` is the weight outside the subspace and ``rest`` is
    ``||phi'||^2``. In the orthonormal frame ``(chi, e_junk, phi')`` the
    difference ``Psi Psi^H - Pi Psi Psi^H Pi - leak e e^H`` equals ``a N``
    with ``a = sqrt(leak)`` and ``N = [[a, c0*, c], [c0, -a, 0], [c, 0, 0]]``.
    """
    a = np.sqrt(np.clip(np.asarray(leak, dtype=float), 0.0, None))
    c = np.sqrt(np.clip(np.asarray(rest, dtype=float), 0.0, None))
    c0 = np.asarray(c0, dtype=complex)
    m = np.zeros(a.shape + (3, 3), dtype=complex)
    m[..., 0, 0] = a
    m[..., 0, 1] = c0.conj()
    m[..., 1, 0] = c0
    m[..., 0, 2] = c
    m[..., 2, 0] = c
    m[..., 1, 1] = -a
    norms = np.sum(np.abs(np.linalg.eigvalsh(m)), axis=-1)
    return np.minimum(2.0, a * norms)


def _retained_coefficients(ts: TypicalSubspace, amp: np.ndarray, seqs: np.ndarray) -> np.ndarray:
    """``c[s, m] = prod_j amp[R[m, j], seq[s, j]]`` for each retained multi-index ``m``."""
    c = np.ones((seqs.shape[0], ts.size), dtype=complex)
    for j in range(ts.n):
        c *= amp[ts.retained[:, j]][:, seqs[:, j]].T
    return c


def pure_distortions(ts: TypicalSubspace, kets: Sequence[np.ndarray], seqs: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Vectorized pure-block distortion for many sequences over one set of member kets."""
    amp = amplitude_table(ts, kets)
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    norms = np.sum(np.abs(amp) ** 2, axis=0)
    full = ts.size == ts.local_dim ** ts.n
    step = max(1, chunk // max(1, ts.size))
    out = np.empty(seqs.shape[0])
    for lo in range(0, seqs.shape[0], step):
        part = seqs[lo:lo + step]
        c = _retained_coefficients(ts, amp, part)
        if full:
            leak = np.zeros(part.shape[0])
        else:
            total = np.prod(norms[part], axis=1)
            leak = np.clip(total - np.sum(np.abs(c) ** 2, axis=1), 0.0, None)
        rest = np.sum(np.abs(c[:, 1:]) ** 2, axis=1)
        out[lo:lo + step] = _pure_distortion_from_parts(leak, c[:, 0], rest)
    return out


def pure_block_distortion(ts: TypicalSubspace, psi_block) -> float:
    """``|| |Psi><Psi| - decode(encode(Psi)) ||_1`` for a pure product block."""
    if isinstance(psi_block, ProductState):
        if not psi_block.is_pure:
            raise ValidationError("pure_block_distortion needs ket factors")
        factors = psi_block.factors
    else:
        factors = [np.asarray(f, dtype=complex) for f in psi_block]
    if len(factors) != ts.n:
        raise DimensionError(f"{len(factors)} factors vs N={ts.n}")
    seq = np.arange(ts.n)[None, :]
    return float(pure_distortions(ts, factors, seq)[0])


def mixed_block_distortion(ts: TypicalSubspace, block: ProductState, dense_cap: int | None = None) -> float:
    """Dense-path distortion for a (possibly mixed) product block."""
    cap = default_dense_cap() if dense_cap is None else dense_cap
    rho = block.dense(cap)
    out = sj_decode(ts, sj_encode(ts, block, cap)).dense(cap)
    return float(min(2.0, linalg.trace_norm(rho - out, hermitian=True)))


@dataclass(frozen=True, eq=False)
class PurifiedSource:
    """Aligned purifications of a source plus the subspace built on their average."""

    kets: np.ndarray
    """``(members, d*r)`` purifications in ``system (x) ancilla`` order."""
    system_dim: int
    ancilla_dim: int
    subspace: TypicalSubspace
    support: int
    frames: np.ndarray = field(repr=False)
    """Supported eigenvectors of the purified average as ``(s, d, r)`` amplitude matrices."""
    partial_gram: np.ndarray = field(repr=False)
    """``g[t, u, a, b] = sum_x conj(f_t[x, a]) f_u[x, b]``."""
    coeffs: np.ndarray = field(repr=False)
    """``<f_t|psi_i>`` with shape ``(s, members)``."""


def purified_source(ens: Ensemble, k: int, rate: float | None = None, mode: str = "topk",
                    delta: float | None = None) -> PurifiedSource:
    kets, r = aligned_purifications(ens)
    rho_t = sum(p * np.outer(v, v.conj()) for p, v in zip(ens.probs, kets))
    ts = build_subspace(rho_t, k, rate, mode, delta)
    lam = ts.base_spectrum.eigenvalues
    s = max(1, int(np.sum(lam > TOL.eig_clip)))
    frames = ts.base_spectrum.eigenvectors[:, :s].T.reshape(s, ens.dim, r)
    g = np.einsum("txa,uxb->tuab", frames.conj(), frames)
    coeffs = ts.base_spectrum.eigenvectors[:, :s].conj().T @ kets.T
    return PurifiedSource(kets, ens.dim, r, ts, s, frames, g, coeffs)


def _ancilla_gram(a: np.ndarray, b: np.ndarray, g: np.ndarray, k: int) -> np.ndarray:
    """``V_a^H V_b`` where ``V_x`` is the system-by-ancilla reshaping of a block vector.

    ``a`` and ``b`` are coefficient tensors of shape ``(s,)*k`` in the
    product eigenbasis. The contraction replaces each pair ``(t_j, u_j)``
    by ancilla indices ``(alpha_j, beta_j)`` one position at a time.
    """
    r = g.shape[2]
    m = np.multiply.outer(a.conj(), b)
    for j in range(k):
        rem = k - j
        m = np.tensordot(m, g, axes=([0, rem], [0, 1]))
    m = m.reshape((r, r) * k)
    perm = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    return m.transpose(perm).reshape(r ** k, r ** k)


def traced_block_distortion(src: PurifiedSource, seq: Sequence[int], dense_cap: int | None = None) -> float:
    """Distortion after decoding a purified block and tracing out every ancilla.

    The block vector splits orthogonally as ``chi + c0 e_junk + phi'``
    (outside the subspace, junk, rest of the subspace). The traced
    difference is then ``sum_ab C_ab V_a V_b^H`` over those three pieces,
    so its trace norm follows from their ``3 r^k`` ancilla Gram matrix.
    """
    cap = default_dense_cap() if dense_cap is None else dense_cap
    ts = src.subspace
    k, s, r = ts.n, src.support, src.ancilla_dim
    if s ** (2 * k) > MAX_GRAM_TENSOR or 3 * r ** k > cap:
        raise ResourceCapError(
            f"ancilla Gram of size {3 * r ** k} (tensor {s ** (2 * k)}) exceeds caps"
        )
    psi = np.ones((), dtype=complex)
    for i in seq:
        psi = np.multiply.outer(psi, src.coeffs[:, i])
    psi = psi.reshape(-1)
    in_support = np.all(ts.retained < s, axis=1)
    flat = np.ravel_multi_index(ts.retained[in_support].T, (s,) * k) if np.any(in_support) else None
    kept = np.zeros(s ** k, dtype=bool)
    if flat is not None:
        kept[flat] = True
    chi = np.where(kept, 0.0, psi)
    leak = float(np.sum(np.abs(chi) ** 2))
    if leak == 0.0:
        return 0.0
    junk_flat = np.ravel_multi_index(ts.junk_index, (s,) * k) if in_support[0] else None
    rest = np.where(kept, psi, 0.0)
    junk = np.zeros(s ** k, dtype=complex)
    c0 = 0.0j
    if junk_flat is not None:
        junk[junk_flat] = 1.0
        c0 = complex(psi[junk_flat])
        rest[junk_flat] = 0.0
    # C over (chi, e_junk, phi'): chi chi^H + chi phi^H + phi chi^H - leak e e^H
    pieces = [chi, junk, rest]
    coeff = np.array([[1.0, np.conj(c0), 1.0], [c0, -leak, 0.0], [1.0, 0.0, 0.0]], dtype=complex)
    live = [i for i, v in enumerate(pieces) if np.any(v != 0)]
    vecs = [pieces[i].reshape((s,) * k) for i in live]
    n = r ** k
    m = len(live)
    gram = np.empty((m * n, m * n), dtype=complex)
    for x in range(m):
        for y in range(x, m):
            blk = _ancilla_gram(vecs[x], vecs[y], src.partial_gram, k)
            gram[x * n:(x + 1) * n, y * n:(y + 1) * n] = blk
            if y != x:
                gram[y * n:(y + 1) * n, x * n:(x + 1) * n] = blk.conj().T
    big = np.kron(coeff[np.ix_(live, live)], np.eye(n))
    return float(min(2.0, _form_trace_norm(gram, big)))


# --- protocol drivers --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProtocolRecord:
    protocol_kind: str
    n: int
    d: int
    target_rate: float | None
    log_dim_encoded: float
    avg_distortion: float
    n_sequences: int
    estimation: str
    seed: int | None
    samples: int | None
    bound: BoundReport
    holevo: float
    std_error: float = 0.0
    purified_distortion: float | None = None
    contractivity_violations: int = 0
    source: str = ""
    distortions: np.ndarray = field(default=None, repr=False)
    purified_distortions: np.ndarray | None = field(default=None, repr=False)

    @property
    def rate(self) -> float:
        return self.log_dim_encoded / self.n


def _sequences(ens: Ensemble, n: int, seed: int | None, samples: int | None, exact_budget: int):
    """Either all sequences with their probabilities, or an i.i.d. Monte Carlo draw."""
    support = int(np.sum(ens.probs > 0))
    total = support ** n
    if total <= exact_budget:
        seqs = np.array(list(all_sequences(ens, n)), dtype=np.int64).reshape(-1, n)
        weights = np.prod(ens.probs[seqs], axis=1)
        return seqs, weights, "exact"
    if seed is None:
        raise ValidationError(f"{total} sequences exceed the exact budget; Monte Carlo needs a seed")
    if samples is None or samples < 1:
        raise ValidationError("Monte Carlo estimation needs a positive sample count")
    rng = np.random.default_rng(seed)
    return sample_sequences(ens, n, samples, rng), None, "monte_carlo"


def _average(values: np.ndarray, weights: np.ndarray | None) -> tuple[float, float]:
    if weights is not None:
        return float(np.dot(weights, values)), 0.0
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(np.mean(values)), se


def run_blind_sj(
    ens: Ensemble,
    n: int,
    rate: float | None = None,
    mode: str = "topk",
    delta: float | None = None,
    seed: int | None = None,
    samples: int | None = None,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    dense_cap: int | None = None,
    threads: int = 1,
) -> ProtocolRecord:
    """Blind compression of ``n``-blocks onto the typical subspace of the average state."""
    cap = default_dense_cap() if dense_cap is None else dense_cap
    rho = ensemble_average(ens)
    ts = build_subspace(rho, n, rate, mode, delta)
    seqs, weights, estimation = _sequences(ens, n, seed, samples, exact_budget)
    if ens.is_pure():
        dist = pure_distortions(ts, ens.kets(), seqs)
    else:
        if ens.dim ** n > cap or ts.size > cap:
            raise ResourceCapError(f"mixed blocks need dense {ens.dim}^{n}; cap is {cap}")
        dist = np.array(parallel_map(
            lambda sq: mixed_block_distortion(ts, ProductState(tuple(ens.states[i] for i in sq)), cap),
            seqs, threads,
        ))
    avg, se = _average(dist, weights)
    chi = holevo_information(ens)
    return ProtocolRecord(
        protocol_kind=BLIND_SJ, n=n, d=ens.dim, target_rate=rate,
        log_dim_encoded=ts.log_dim, avg_distortion=avg, n_sequences=seqs.shape[0],
        estimation=estimation, seed=seed if estimation == "monte_carlo" else None,
        samples=seqs.shape[0] if estimation == "monte_carlo" else None,
        bound=theorem_bound_check(chi, avg, n, ens.dim, ts.log_dim), holevo=chi,
        std_error=se, source=ens.fingerprint(), distortions=dist,
    )


def run_composed(
    ens: Ensemble,
    k: int,
    rate: float | None = None,
    mode: str = "topk",
    delta: float | None = None,
    seed: int | None = None,
    samples: int | None = None,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    dense_cap: int | None = None,
    threads: int = 1,
) -> ProtocolRecord:
    """Purify each message, compress ``k``-blocks of purifications, trace the ancillas out."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    cap = default_dense_cap() if dense_cap is None else dense_cap
    src = purified_source(ens, k, rate, mode, delta)
    seqs, weights, estimation = _sequences(ens, k, seed, samples, exact_budget)
    purified = pure_distortions(src.subspace, src.kets, seqs)
    traced = np.array(parallel_map(lambda sq: traced_block_distortion(src, sq, cap), seqs, threads))
    violations = int(np.sum(traced > purified + TOL.bound))
    avg, se = _average(traced, weights)
    avg_p, _ = _average(purified, weights)
    chi = holevo_information(ens)
    log_dim = src.subspace.log_dim
    return ProtocolRecord(
        protocol_kind=COMPOSED, n=k, d=ens.dim, target_rate=rate,
        log_dim_encoded=log_dim, avg_distortion=avg, n_sequences=seqs.shape[0],
        estimation=estimation, seed=seed if estimation == "monte_carlo" else None,
        samples=seqs.shape[0] if estimation == "monte_carlo" else None,
        bound=theorem_bound_check(chi, avg, k, ens.dim, log_dim), holevo=chi,
        std_error=se, purified_distortion=avg_p, contractivity_violations=violations,
        source=ens.fingerprint(), distortions=traced, purified_distortions=purified,
    )


def verify_record(rec: ProtocolRecord, ens: Ensemble) -> BoundReport:
    """Re-check the rate lower bound for a record against its source ensemble."""
    if rec.source and rec.source != ens.fingerprint():
        raise ProvenanceError("record was produced from a different ensemble")
    return theorem_bound_check(holevo_information(ens), rec.avg_distortion, rec.n, rec.d, rec.log_dim_encoded)
