"""Trace-preserving completely positive maps in Kraus form and as unitary dilations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qsrc import linalg
from qsrc.config import TOL
from qsrc.exceptions import DimensionError, ValidationError
from qsrc.states import Ensemble


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """``rho -> sum_i V_i rho V_i^H`` with ``dout x din`` operators."""

    operators: tuple[np.ndarray, ...]

    def __init__(self, operators: Sequence, check: bool = True):
        ops = tuple(linalg.as_matrix(v, f"V[{i}]") for i, v in enumerate(operators))
        if not ops:
            raise ValidationError("Kraus channel needs at least one operator")
        shapes = {v.shape for v in ops}
        if len(shapes) != 1:
            raise DimensionError(f"Kraus operators have mixed shapes {sorted(shapes)}")
        object.__setattr__(self, "operators", ops)
        if check:
            defect = self.trace_preservation_defect()
            if defect > TOL.trace_preserving:
                raise ValidationError(f"sum V^H V deviates from identity by {defect:.3g}")

    @property
    def din(self) -> int:
        return self.operators[0].shape[1]

    @property
    def dout(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def trace_preservation_defect(self) -> float:
        s = sum(v.conj().T @ v for v in self.operators)
        return float(np.max(np.abs(s - np.eye(self.din))))

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


@dataclass(frozen=True, eq=False)
class Dilation:
    """``rho -> Tr_anc U (rho (x) P) U^H`` on ``C^din (x) C^a_in = C^dout (x) C^a_out``."""

    ancilla_state: np.ndarray
    unitary: np.ndarray
    din: int
    dout: int

    def __post_init__(self):
        u = linalg.as_matrix(self.unitary, "unitary")
        n = self.din * self.ancilla_state.size
        if u.shape != (n, n) or n % self.dout:
            raise DimensionError(f"unitary shape {u.shape} incompatible with din={self.din}, "
                                 f"ancilla={self.ancilla_state.size}, dout={self.dout}")
        if np.max(np.abs(u.conj().T @ u - np.eye(n))) > TOL.unitary:
            raise ValidationError("dilation matrix is not unitary")

    @property
    def ancilla_in(self) -> int:
        return self.ancilla_state.size

    @property
    def ancilla_out(self) -> int:
        return self.unitary.shape[0] // self.dout


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel([np.eye(dim)])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel([u])


def depolarizing_channel(p: float) -> KrausChannel:
    """Qubit depolarizing map; ``p = 1`` sends every state to ``I/2``."""
    from qsrc.states import PAULI_X, PAULI_Y, PAULI_Z

    ops = [math.sqrt(1 - 3 * p / 4) * np.eye(2)]
    ops += [math.sqrt(p / 4) * s for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    return KrausChannel(ops)


def apply(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.din, ch.din):
        raise DimensionError(f"channel expects {ch.din}x{ch.din} input, got {rho.shape}")
    out = sum(v @ rho @ v.conj().T for v in ch.operators)
    return (out + out.conj().T) / 2


def apply_to_ensemble(ch: KrausChannel, ens: Ensemble) -> Ensemble:
    return Ensemble(ens.probs, [apply(ch, r) for r in ens.states])


def compose(after: KrausChannel, before: KrausChannel) -> KrausChannel:
    """Channel ``after o before`` with operators ``A_j B_i``."""
    if before.dout != after.din:
        raise DimensionError(f"cannot compose: before.dout={before.dout}, after.din={after.din}")
    return KrausChannel([a @ b for a in after.operators for b in before.operators])


def _complete_columns(partial: np.ndarray, fixed: Sequence[int], n: int) -> np.ndarray:
    """Fill the free columns of an ``n x n`` matrix with an orthonormal completion.

    Candidates are standard basis vectors taken in index order and
    Gram-Schmidt orthogonalized (twice) against everything placed so far.
    """
    u = partial.copy()
    basis = [u[:, c] for c in fixed]
    free = [c for c in range(n) if c not in set(fixed)]
    cand = 0
    for c in free:
        while True:
            if cand >= n:
                raise ValidationError("failed to complete unitary; columns not orthonormal")
            v = np.zeros(n, dtype=complex)
            v[cand] = 1.0
            cand += 1
            for _ in range(2):
                for b in basis:
                    v = v - np.vdot(b, v) * b
            nrm = np.linalg.norm(v)
            if nrm > 1e-6:
                v = v / nrm
                break
        u[:, c] = v
        basis.append(v)
    return u


def dilate(ch: KrausChannel) -> Dilation:
    """Unitary dilation with ancilla ``|0>`` in and the Kraus index traced out.

    The total dimension is the smallest common multiple of ``din`` and
    ``dout`` that leaves room for ``len(ch)`` output ancilla levels. Input
    column ``i (x) 0`` carries the stacked isometry ``sum_a V_a|i> (x) |a>``.
    """
    din, dout, k = ch.din, ch.dout, len(ch)
    lcm = din * dout // math.gcd(din, dout)
    n = lcm * max(1, math.ceil(dout * k / lcm))
    a_in, a_out = n // din, n // dout
    iso = np.zeros((n, din), dtype=complex)
    for a, v in enumerate(ch.operators):
        iso[np.arange(dout) * a_out + a, :] = v
    fixed = [i * a_in for i in range(din)]
    partial = np.zeros((n, n), dtype=complex)
    partial[:, fixed] = iso
    u = _complete_columns(partial, fixed, n)
    anc = np.zeros(a_in, dtype=complex)
    anc[0] = 1.0
    return Dilation(anc, u, din, dout)


def apply_via_dilation(dil: Dilation, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dil.din, dil.din):
        raise DimensionError(f"dilation expects {dil.din}x{dil.din} input, got {rho.shape}")
    joint = np.kron(rho, np.outer(dil.ancilla_state, dil.ancilla_state.conj()))
    out = dil.unitary @ joint @ dil.unitary.conj().T
    red = linalg.partial_trace(out, [dil.dout, dil.ancilla_out], keep=[0])
    return (red + red.conj().T) / 2


def random_channel(din: int, dout: int, k: int, rng: np.random.Generator) -> KrausChannel:
    """Random channel from a Gaussian isometry ``C^din -> C^(k dout)`` cut into ``k`` blocks."""
    if k < 1:
        raise ValidationError(f"need at least one Kraus operator, got {k}")
    if k * dout < din:
        raise ValidationError(f"k*dout={k * dout} too small for an isometry from dim {din}")
    g = rng.standard_normal((k * dout, din)) + 1j * rng.standard_normal((k * dout, din))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return KrausChannel([q[a * dout:(a + 1) * dout, :] for a in range(k)])

