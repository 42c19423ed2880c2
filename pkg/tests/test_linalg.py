import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsrc import linalg
from qsrc.exceptions import DimensionError, NegativityError, ValidationError
from qsrc.states import projector, random_density_matrix, random_pure_state

PLUS = np.array([1, 1]) / np.sqrt(2)


def test_eig_hermitian_diagonal():
    spec = linalg.eig_hermitian(np.diag([1.0, 0.0]))
    assert np.allclose(spec.eigenvalues, [1, 0])
    assert np.allclose(np.abs(spec.eigenvectors), np.eye(2))


def test_eig_hermitian_plus_projector():
    m = 0.5 * (np.array([[0, 1], [1, 0]]) + np.eye(2))
    assert np.allclose(linalg.eig_hermitian(m).eigenvalues, [1, 0])


def test_eig_hermitian_reconstruction_and_orthonormality():
    rng = np.random.default_rng(3)
    m = linalg.random_hermitian(8, rng)
    spec = linalg.eig_hermitian(m)
    assert np.linalg.norm(spec.reconstruct() - m) <= 1e-9 * 8
    v = spec.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(8))) <= 1e-9
    assert np.all(np.diff(spec.eigenvalues) <= 0)


def test_eig_hermitian_rejects_bad_input():
    with pytest.raises(DimensionError):
        linalg.eig_hermitian(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        linalg.eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_trace_norm_examples():
    assert linalg.trace_norm(np.diag([0.5, -0.5]), hermitian=True) == pytest.approx(1.0, abs=1e-15)
    rho = random_density_matrix(3, np.random.default_rng(0))
    assert linalg.trace_norm(rho - rho) == 0.0
    # eigenvalues of |0><0| - |+><+| are +-1/sqrt(2)
    diff = np.diag([1.0, 0.0]) - projector(PLUS)
    assert linalg.trace_norm(diff, hermitian=True) == pytest.approx(1.4142135623730951, abs=1e-12)
    assert linalg.trace_norm(diff) == pytest.approx(1.4142135623730951, abs=1e-12)


def test_trace_norm_rejects_non_square():
    with pytest.raises(DimensionError):
        linalg.trace_norm(np.ones((2, 3)))


def test_matrix_sqrt_psd():
    assert np.allclose(linalg.matrix_sqrt_psd(np.eye(3)), np.eye(3))
    assert np.allclose(linalg.matrix_sqrt_psd(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]))
    m = random_density_matrix(4, np.random.default_rng(1), rank=2)
    s = linalg.matrix_sqrt_psd(m)
    assert np.max(np.abs(s @ s - m)) <= 1e-8
    assert np.min(np.linalg.eigvalsh(s)) >= -1e-12


def test_matrix_sqrt_rejects_negative():
    with pytest.raises(NegativityError):
        linalg.matrix_sqrt_psd(np.diag([1.0, -1e-6]))
    # round-off negatives clip silently
    assert np.allclose(linalg.matrix_sqrt_psd(np.diag([1.0, -1e-11])), np.diag([1.0, 0.0]))


def test_kron_examples():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(linalg.kron(a, np.eye(1)), a)
    e0, e1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.allclose(linalg.kron(e0, e1), expected)
    b = np.array([[2, 1j], [-1j, 5]])
    assert np.trace(linalg.kron(a, b)) == pytest.approx(np.trace(a) * np.trace(b))


def test_partial_trace_of_product_with_ancilla():
    rng = np.random.default_rng(2)
    rho = random_density_matrix(3, rng)
    p = projector(random_pure_state(2, rng))
    assert np.allclose(linalg.partial_trace(np.kron(rho, p), [3, 2], [0]), rho, atol=1e-12)
    assert np.allclose(linalg.partial_trace(np.kron(p, rho), [2, 3], [1]), rho, atol=1e-12)


def test_partial_trace_keep_all_and_trace_preserved():
    rng = np.random.default_rng(5)
    m = random_density_matrix(12, rng)
    assert np.allclose(linalg.partial_trace(m, [2, 3, 2], [0, 1, 2]), m)
    for keep in ([0], [1], [2], [0, 2], []):
        assert np.trace(linalg.partial_trace(m, [2, 3, 2], keep)) == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_middle_subsystem_against_einsum():
    rng = np.random.default_rng(6)
    m = random_density_matrix(12, rng)
    t = m.reshape(2, 3, 2, 2, 3, 2)
    expected = np.einsum("abcdbf->acdf", t).reshape(4, 4)
    assert np.allclose(linalg.partial_trace(m, [2, 3, 2], [0, 2]), expected)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        linalg.partial_trace(np.eye(4), [2, 3], [0])


def test_partial_trace_is_norm_contracting_on_hermitian():
    rng = np.random.default_rng(7)
    for _ in range(50):
        a = linalg.random_hermitian(6, rng)
        assert linalg.trace_norm(linalg.partial_trace(a, [2, 3], [0]), hermitian=True) <= (
            linalg.trace_norm(a, hermitian=True) + 1e-10
        )


def test_svd_examples():
    u, s, v = linalg.svd(np.eye(3))
    assert np.allclose(s, 1)
    _, s, _ = linalg.svd(np.diag([3.0, -2.0]))
    assert np.allclose(s, [3, 2])
    rng = np.random.default_rng(8)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    u, s, v = linalg.svd(a)
    assert np.max(np.abs(u @ np.diag(s) @ v.conj().T - a)) <= 1e-8
    assert np.all(np.diff(s) <= 0)
    assert np.sum(s) == pytest.approx(linalg.trace_norm(a), abs=1e-10)


def test_trace_norm_is_a_norm():
    rng = np.random.default_rng(9)
    assert linalg.trace_norm(np.zeros((3, 3))) <= 1e-10
    for _ in range(50):
        a, b = (linalg.random_hermitian(3, rng) for _ in range(2))
        na, nb = linalg.trace_norm(a), linalg.trace_norm(b)
        assert na > 0
        assert linalg.trace_norm(a + b) <= na + nb + 1e-10
        assert linalg.trace_norm(-2.5 * a) == pytest.approx(2.5 * na)


def test_trace_norm_with_pure_ancilla_and_unitary_invariance():
    rng = np.random.default_rng(10)
    for _ in range(30):
        a = linalg.random_hermitian(3, rng)
        p = projector(random_pure_state(2, rng))
        u = linalg.random_unitary(3, rng)
        na = linalg.trace_norm(a, hermitian=True)
        assert linalg.trace_norm(np.kron(a, p), hermitian=True) == pytest.approx(na, abs=1e-9)
        assert linalg.trace_norm(u @ a @ u.conj().T, hermitian=True) == pytest.approx(na, abs=1e-9)


def test_kron_spectrum_is_pairwise_products():
    rng = np.random.default_rng(11)
    rho, sigma = random_density_matrix(2, rng), random_density_matrix(3, rng)
    got = linalg.eig_hermitian(np.kron(rho, sigma)).eigenvalues
    a, b = np.linalg.eigvalsh(rho), np.linalg.eigvalsh(sigma)
    expected = np.sort(np.outer(a, b).ravel())[::-1]
    assert np.max(np.abs(got - expected)) <= 1e-9


def test_random_unitary_is_unitary():
    u = linalg.random_unitary(5, np.random.default_rng(12))
    assert np.max(np.abs(u.conj().T @ u - np.eye(5))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_partial_trace_matches_explicit_sum(da, db, seed):
    rng = np.random.default_rng(seed)
    m = random_density_matrix(da * db, rng)
    basis = np.eye(db)
    expected = sum(
        np.kron(np.eye(da), basis[:, [j]].T) @ m @ np.kron(np.eye(da), basis[:, [j]]) for j in range(db)
    )
    assert np.allclose(linalg.partial_trace(m, [da, db], [0]), expected, atol=1e-12)
