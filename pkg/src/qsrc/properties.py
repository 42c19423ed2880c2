"""Seeded property sweeps for the channel and entropy inequalities.

Every sample draws from its own generator ``default_rng([seed, suite_id, i])``
so a failing case can be rebuilt from ``(suite, seed, index)`` alone with
:func:`replay`. Sampling distributions:

* states: Ginibre density matrices of uniformly chosen rank
  (:func:`qsrc.states.random_density_matrix`);
* channels: Gaussian isometries cut into ``k`` Kraus blocks
  (:func:`qsrc.channels.random_channel`);
* dimensions: uniform on ``2..4`` for input and output independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qsrc import linalg
from qsrc.channels import KrausChannel, apply, apply_to_ensemble, random_channel
from qsrc.config import TOL
from qsrc.functionals import (
    eta,
    fannes_bound_check,
    holevo_information,
    lemma_bound,
    relative_entropy,
    trace_distance,
)
from qsrc.parallel import parallel_map
from qsrc.states import Ensemble, projector, random_density_matrix, random_ensemble, random_pure_state

MONOTONICITY_TOL = 1e-8
# Scale applied to every Kraus operator by the negative control; 0.9^2 < 1 so sum V^H V < I.
TAMPER_SCALE = 0.9


@dataclass(frozen=True)
class Outcome:
    """One evaluated sample. ``applicable`` is False when the sample falls outside the property's premise."""

    ok: bool
    applicable: bool = True
    lhs: float = 0.0
    rhs: float = 0.0
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Counterexample:
    suite: str
    seed: int
    index: int
    lhs: float
    rhs: float
    detail: dict

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "index": self.index,
            "lhs": _finite_or_token(self.lhs),
            "rhs": _finite_or_token(self.rhs),
            "detail": {k: _finite_or_token(v) if isinstance(v, float) else v for k, v in self.detail.items()},
        }


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    seed: int
    checked: int
    drawn: int
    counterexamples: tuple[Counterexample, ...]
    worst_slack: float
    """Smallest ``rhs - lhs`` over checked samples (negative means a violation)."""

    @property
    def passed(self) -> bool:
        return not self.counterexamples and self.checked > 0


def _finite_or_token(x: float):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _rng(seed: int, suite_id: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, suite_id, index])


def _dims(rng: np.random.Generator) -> tuple[int, int]:
    return int(rng.integers(2, 5)), int(rng.integers(2, 5))


def _state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))


def _channel(din: int, dout: int, rng: np.random.Generator) -> KrausChannel:
    kmin = -(-din // dout)
    return random_channel(din, dout, int(rng.integers(kmin, kmin + 3)), rng)


def _tamper(ch: KrausChannel) -> KrausChannel:
    return KrausChannel([TAMPER_SCALE * v for v in ch.operators], check=False)


# --- individual samples -------------------------------------------------------


def sample_contractivity(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """``||L(rho) - L(sigma)|| <= ||rho - sigma||`` for a random channel, plus trace preservation."""
    din, dout = _dims(rng)
    ch = _channel(din, dout, rng)
    if tamper:
        ch = _tamper(ch)
    rho, sigma = _state(din, rng), _state(din, rng)
    defect = ch.trace_preservation_defect()
    if defect > TOL.trace_preserving:
        return Outcome(False, lhs=defect, rhs=TOL.trace_preserving,
                       detail={"reason": "channel is not trace preserving", "din": din, "dout": dout})
    out_r = apply(ch, rho)
    out_s = apply(ch, sigma)
    tr_err = max(abs(np.trace(out_r).real - 1.0), abs(np.trace(out_s).real - 1.0))
    if tr_err > TOL.trace:
        return Outcome(False, lhs=tr_err, rhs=TOL.trace, detail={"reason": "output trace drifted"})
    lhs = linalg.trace_norm(out_r - out_s, hermitian=True)
    rhs = trace_distance(rho, sigma)
    return Outcome(lhs <= rhs + TOL.bound, lhs=lhs, rhs=rhs,
                   detail={"din": din, "dout": dout, "kraus": len(ch)})


def sample_monotonicity(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """``S(L rho | L sigma) <= S(rho | sigma)`` when finite, and Holevo information non-increase."""
    din, dout = _dims(rng)
    ch = _channel(din, dout, rng)
    if tamper:
        ch = _tamper(ch)
        return Outcome(False, lhs=ch.trace_preservation_defect(), rhs=TOL.trace_preserving,
                       detail={"reason": "channel is not trace preserving"})
    rho, sigma = _state(din, rng), _state(din, rng)
    before = relative_entropy(rho, sigma)
    if not math.isfinite(before):
        return Outcome(True, applicable=False)
    after = relative_entropy(apply(ch, rho), apply(ch, sigma))
    ens = random_ensemble(int(rng.integers(2, 5)), din, rng)
    chi_in = holevo_information(ens)
    chi_out = holevo_information(apply_to_ensemble(ch, ens))
    ok = after <= before + MONOTONICITY_TOL and chi_out <= chi_in + MONOTONICITY_TOL
    return Outcome(ok, lhs=after, rhs=before,
                   detail={"holevo_in": chi_in, "holevo_out": chi_out, "din": din, "dout": dout})


def sample_fannes(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """Entropy continuity for a state and a nearby perturbation of it."""
    dim = int(rng.integers(2, 5))
    rho = _state(dim, rng)
    t = float(rng.uniform(0.0, 0.3))
    sigma = (1 - t) * rho + t * _state(dim, rng)
    rep = fannes_bound_check(rho, sigma)
    if not rep.applicable:
        return Outcome(True, applicable=False)
    return Outcome(rep.satisfied, lhs=rep.lhs, rhs=rep.rhs, detail={"dim": dim})


def sample_lemma(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """``|I(E) - I(E')| <= 2[eps N log2 d + eta(eps)]`` for a block ensemble and a perturbation.

    ``E`` is the ``N``-block ensemble of a random single-copy ensemble; ``E'``
    mixes each block state with an independent random state on the block
    space, and ``eps = sum p ||rho - rho'||``.
    """
    d = int(rng.integers(2, 4))
    n = int(rng.integers(1, 4 if d == 2 else 3))
    base = random_ensemble(int(rng.integers(2, 4)), d, rng)
    seqs = np.array(np.meshgrid(*[np.arange(len(base))] * n, indexing="ij")).reshape(n, -1).T
    probs = np.prod(base.probs[seqs], axis=1)
    blocks = [linalg.kron(*[base.states[i] for i in seq]) for seq in seqs]
    t = float(rng.uniform(0.0, 0.25))
    perturbed = [(1 - t) * b + t * _state(d ** n, rng) for b in blocks]
    eps = float(sum(p * trace_distance(a, b) for p, a, b in zip(probs, blocks, perturbed)))
    if eps > 0.5:
        return Outcome(True, applicable=False)
    lhs = abs(holevo_information(Ensemble(probs, blocks)) - holevo_information(Ensemble(probs, perturbed)))
    rhs = lemma_bound(eps, n, d)
    return Outcome(lhs <= rhs + TOL.bound, lhs=lhs, rhs=rhs, detail={"d": d, "N": n, "eps": eps, "eta": eta(eps)})


def sample_partial_trace(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """``||Tr_B rho - Tr_B sigma|| <= ||rho - sigma||`` on a random bipartition."""
    da, db = _dims(rng)
    rho, sigma = _state(da * db, rng), _state(da * db, rng)
    lhs = trace_distance(linalg.partial_trace(rho, [da, db], [0]), linalg.partial_trace(sigma, [da, db], [0]))
    rhs = trace_distance(rho, sigma)
    return Outcome(lhs <= rhs + TOL.bound, lhs=lhs, rhs=rhs, detail={"da": da, "db": db})


def sample_unitary(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """Unitary conjugation leaves the trace distance unchanged."""
    dim = int(rng.integers(2, 5))
    u = linalg.random_unitary(dim, rng)
    rho, sigma = _state(dim, rng), _state(dim, rng)
    lhs = linalg.trace_norm(u @ (rho - sigma) @ u.conj().T, hermitian=True)
    rhs = trace_distance(rho, sigma)
    return Outcome(abs(lhs - rhs) <= TOL.bound, lhs=lhs, rhs=rhs, detail={"dim": dim})


def sample_ancilla(rng: np.random.Generator, tamper: bool = False) -> Outcome:
    """Appending a pure ancilla ``P`` leaves the trace distance unchanged."""
    dim, da = _dims(rng)
    p = projector(random_pure_state(da, rng))
    rho, sigma = _state(dim, rng), _state(dim, rng)
    lhs = linalg.trace_norm(np.kron(rho - sigma, p), hermitian=True)
    rhs = trace_distance(rho, sigma)
    return Outcome(abs(lhs - rhs) <= TOL.bound, lhs=lhs, rhs=rhs, detail={"dim": dim, "ancilla": da})


SampleFn = Callable[..., Outcome]

SUITES: dict[str, tuple[int, SampleFn, int]] = {
    # name: (suite id mixed into the seed, sampler, default count of checked samples)
    "contractivity": (1, sample_contractivity, 500),
    "monotonicity": (2, sample_monotonicity, 500),
    "fannes": (3, sample_fannes, 1000),
    "lemma": (4, sample_lemma, 200),
    "partial_trace": (5, sample_partial_trace, 200),
    "unitary": (6, sample_unitary, 200),
    "ancilla": (7, sample_ancilla, 200),
}


def replay(suite: str, seed: int, index: int, tamper: bool = False) -> Outcome:
    """Re-evaluate one sample of a suite exactly as the sweep drew it."""
    suite_id, fn, _ = SUITES[suite]
    return fn(_rng(seed, suite_id, index), tamper=tamper)


def run_suite(suite: str, seed: int, samples: int | None = None, threads: int = 1,
              tamper: bool = False, max_draw_factor: int = 20) -> SuiteResult:
    """Draw samples until ``samples`` applicable ones are checked (or the draw budget runs out)."""
    if suite not in SUITES:
        raise KeyError(f"unknown property suite {suite!r}; choose from {sorted(SUITES)}")
    suite_id, fn, default = SUITES[suite]
    target = default if samples is None else samples
    checked, drawn = 0, 0
    bad: list[Counterexample] = []
    worst = math.inf
    budget = max(target, 1) * max_draw_factor
    while checked < target and drawn < budget:
        batch = range(drawn, drawn + (target - checked))
        outs = parallel_map(lambda i: fn(_rng(seed, suite_id, i), tamper=tamper), batch, threads)
        for i, out in zip(batch, outs):
            drawn += 1
            if not out.applicable:
                continue
            if checked >= target:
                break
            checked += 1
            worst = min(worst, out.rhs - out.lhs)
            if not out.ok:
                bad.append(Counterexample(suite, seed, i, out.lhs, out.rhs, dict(out.detail)))
    return SuiteResult(suite, seed, checked, drawn, tuple(bad), worst)


def run_all(seed: int, samples: dict[str, int] | None = None, threads: int = 1,
            tamper: bool = False) -> list[SuiteResult]:
    samples = samples or {}
    return [run_suite(name, seed, samples.get(name), threads, tamper) for name in SUITES]
