import math

import numpy as np
import pytest

from qsrc import channels as C
from qsrc import linalg
from qsrc.exceptions import DimensionError, ValidationError
from qsrc.functionals import holevo_information, relative_entropy, trace_distance
from qsrc.states import Ensemble, ensemble_average, projector, random_density_matrix, random_ensemble, random_pure_state


def _random_pair(d, rng):
    return random_density_matrix(d, rng), random_density_matrix(d, rng)


def test_kraus_channel_validation():
    with pytest.raises(ValidationError):
        C.KrausChannel([])
    with pytest.raises(ValidationError):
        C.KrausChannel([0.9 * np.eye(2)])
    with pytest.raises(DimensionError):
        C.KrausChannel([np.eye(2), np.eye(3)])
    ch = C.KrausChannel([0.9 * np.eye(2)], check=False)
    assert ch.trace_preservation_defect() == pytest.approx(0.19)


def test_apply_examples():
    rng = np.random.default_rng(0)
    rho = random_density_matrix(3, rng)
    assert np.allclose(C.apply(C.identity_channel(3), rho), rho)
    u = linalg.random_unitary(3, rng)
    assert np.allclose(C.apply(C.unitary_channel(u), rho), u @ rho @ u.conj().T)
    dep = C.depolarizing_channel(1.0)
    for _ in range(20):
        assert np.allclose(C.apply(dep, random_density_matrix(2, rng)), np.eye(2) / 2, atol=1e-12)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        C.apply(C.identity_channel(2), np.eye(3) / 3)


def test_dilation_examples():
    rng = np.random.default_rng(1)
    dil = C.dilate(C.identity_channel(3))
    assert dil.ancilla_in == 1
    assert np.allclose(dil.unitary, np.eye(3))
    rho = random_density_matrix(3, rng)
    assert np.allclose(C.apply_via_dilation(dil, rho), rho)
    u = linalg.random_unitary(2, rng)
    rho = random_density_matrix(2, rng)
    assert np.allclose(C.apply_via_dilation(C.dilate(C.unitary_channel(u)), rho), u @ rho @ u.conj().T)


def test_dilation_of_two_operator_qubit_channel():
    ch = C.random_channel(2, 2, 2, np.random.default_rng(2))
    dil = C.dilate(ch)
    assert dil.ancilla_in == 2
    assert dil.unitary.shape == (4, 4)


def test_dilation_matches_kraus_on_random_channels():
    rng = np.random.default_rng(3)
    for _ in range(100):
        din, dout = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        kmin = -(-din // dout)
        ch = C.random_channel(din, dout, int(rng.integers(kmin, kmin + 3)), rng)
        dil = C.dilate(ch)
        lcm = math.lcm(din, dout)
        assert len(ch) * dout <= dil.ancilla_in * din < len(ch) * dout + lcm
        rho = random_density_matrix(din, rng)
        assert np.max(np.abs(C.apply_via_dilation(dil, rho) - C.apply(ch, rho))) <= 1e-8


def test_dilation_is_deterministic():
    ch = C.random_channel(3, 2, 2, np.random.default_rng(4))
    assert np.array_equal(C.dilate(ch).unitary, C.dilate(ch).unitary)


def test_dilation_rejects_non_unitary():
    with pytest.raises(ValidationError):
        C.Dilation(np.array([1.0]), 2 * np.eye(2), 2, 2)


def test_random_channel_examples():
    rng = np.random.default_rng(5)
    iso = C.random_channel(3, 3, 1, rng)
    u = iso.operators[0]
    assert np.max(np.abs(u.conj().T @ u - np.eye(3))) <= 1e-12
    for _ in range(20):
        ch = C.random_channel(int(rng.integers(2, 5)), 4, int(rng.integers(1, 4)), rng)
        assert ch.trace_preservation_defect() <= 1e-8
    a = C.random_channel(2, 3, 2, np.random.default_rng(77))
    b = C.random_channel(2, 3, 2, np.random.default_rng(77))
    assert all(np.array_equal(x, y) for x, y in zip(a.operators, b.operators))
    with pytest.raises(ValidationError):
        C.random_channel(4, 2, 1, rng)


def test_compose_examples():
    rng = np.random.default_rng(6)
    ch = C.random_channel(3, 2, 2, rng)
    rho = random_density_matrix(3, rng)
    assert np.allclose(C.apply(C.compose(C.identity_channel(2), ch), rho), C.apply(ch, rho))
    u, v = linalg.random_unitary(2, rng), linalg.random_unitary(2, rng)
    uv = C.compose(C.unitary_channel(u), C.unitary_channel(v))
    assert len(uv) == 1
    assert np.allclose(uv.operators[0], u @ v)
    after = C.random_channel(2, 4, 3, rng)
    assert np.max(np.abs(C.apply(C.compose(after, ch), rho) - C.apply(after, C.apply(ch, rho)))) <= 1e-8
    with pytest.raises(DimensionError):
        C.compose(ch, ch)


def test_apply_to_ensemble_examples():
    rng = np.random.default_rng(7)
    ens = random_ensemble(3, 2, rng)
    same = C.apply_to_ensemble(C.identity_channel(2), ens)
    assert np.array_equal(same.probs, ens.probs)
    assert all(np.allclose(a, b) for a, b in zip(same.states, ens.states))
    ch = C.random_channel(2, 3, 2, rng)
    out = C.apply_to_ensemble(ch, ens)
    assert np.allclose(ensemble_average(out), C.apply(ch, ensemble_average(ens)))
    assert holevo_information(out) <= holevo_information(ens) + 1e-8


def test_contractivity_and_trace_preservation():
    rng = np.random.default_rng(8)
    for _ in range(200):
        din, dout = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        ch = C.random_channel(din, dout, -(-din // dout) + int(rng.integers(0, 3)), rng)
        rho, sigma = _random_pair(din, rng)
        out_r = C.apply(ch, rho)
        assert np.trace(out_r).real == pytest.approx(1.0, abs=1e-9)
        assert trace_distance(out_r, C.apply(ch, sigma)) <= trace_distance(rho, sigma) + 1e-9


def test_relative_entropy_monotonicity():
    rng = np.random.default_rng(9)
    finite = 0
    while finite < 200:
        din, dout = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        ch = C.random_channel(din, dout, -(-din // dout) + int(rng.integers(0, 3)), rng)
        rho = random_density_matrix(din, rng, int(rng.integers(1, din + 1)))
        sigma = random_density_matrix(din, rng, int(rng.integers(1, din + 1)))
        before = relative_entropy(rho, sigma)
        if not math.isfinite(before):
            continue
        finite += 1
        assert relative_entropy(C.apply(ch, rho), C.apply(ch, sigma)) <= before + 1e-8


def test_partial_trace_unitary_and_ancilla_steps_are_non_expansive():
    rng = np.random.default_rng(10)
    for _ in range(100):
        rho, sigma = _random_pair(6, rng)
        d = trace_distance(rho, sigma)
        assert trace_distance(linalg.partial_trace(rho, [2, 3], [0]), linalg.partial_trace(sigma, [2, 3], [0])) <= d + 1e-9
        u = linalg.random_unitary(6, rng)
        assert trace_distance(u @ rho @ u.conj().T, u @ sigma @ u.conj().T) == pytest.approx(d, abs=1e-9)
        p = projector(random_pure_state(2, rng))
        assert trace_distance(np.kron(rho, p), np.kron(sigma, p)) == pytest.approx(d, abs=1e-9)


def test_identity_ensemble_holevo_unchanged():
    ens = Ensemble([0.5, 0.5], [np.diag([1.0, 0.0]), np.eye(2) / 2])
    assert holevo_information(C.apply_to_ensemble(C.identity_channel(2), ens)) == pytest.approx(
        holevo_information(ens)
    )
