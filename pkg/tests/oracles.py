"""Independent dense reference computations used as test oracles.

Everything here builds full matrices directly and shares no code path with
the implicit/Gram routines under test beyond ``numpy``.
"""

import itertools
import math

import numpy as np


def entropy_bits(rho):
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log2(w)))


def trace_norm_dense(a):
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex) if np.ndim(mats[0]) == 2 else np.ones(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def product_eigvecs(rho, n, rows):
    """Columns ``e_{m1} (x) ... (x) e_{mN}`` for the given multi-index rows."""
    w, v = np.linalg.eigh(rho)
    v = v[:, np.argsort(w)[::-1]]
    return np.stack([kron_all([v[:, t] for t in row]) for row in rows], axis=1)


def sj_channel_dense(basis, rho):
    """``P P^H rho P P^H + (1 - Tr P^H rho P) e0 e0^H`` with ``e0`` the first column of ``basis``."""
    inner = basis.conj().T @ rho @ basis
    lost = 1.0 - np.trace(inner).real
    e0 = basis[:, :1]
    return basis @ inner @ basis.conj().T + lost * (e0 @ e0.conj().T)


def dense_block_distortion(ts, block):
    basis = ts.basis_vectors(1 << 16)
    return trace_norm_dense(block - sj_channel_dense(basis, block))


def dense_traced_distortion(src, seq):
    """Purified block through the SJ map, ancillas traced out, compared with the mixed block."""
    ts = src.subspace
    k, d, r = ts.n, src.system_dim, src.ancilla_dim
    psi = kron_all([src.kets[i] for i in seq])
    basis = ts.basis_vectors(1 << 16)
    out = sj_channel_dense(basis, np.outer(psi, psi.conj()))
    t = out.reshape([d, r] * k + [d, r] * k)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    idx = list(letters[: 4 * k])
    for j in range(k):
        idx[2 * k + 2 * j + 1] = idx[2 * j + 1]
    sys_in = "".join(idx[2 * j] for j in range(k))
    sys_out = "".join(idx[2 * k + 2 * j] for j in range(k))
    traced = np.einsum("".join(idx) + "->" + sys_in + sys_out, t).reshape(d ** k, d ** k)
    mixed = kron_all([psi_to_rho(src.kets[i], d) for i in seq])
    return trace_norm_dense(mixed - traced)


def psi_to_rho(psi, d):
    a = np.asarray(psi).reshape(d, -1)
    return a @ a.conj().T


def all_product_eigenvalues(lam, n):
    return sorted((math.prod(c) for c in itertools.product(lam, repeat=n)), reverse=True)
