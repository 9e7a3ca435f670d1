import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccqlab import linalg
from ccqlab.errors import DimensionOverflow, NonSquare, NotHermitian, NotPSD

KET0 = np.array([1, 0])
PLUS = np.array([1, 1]) / math.sqrt(2)


def test_trace_norm_basic_values():
    assert linalg.trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    rho = linalg.ket_projector(KET0)
    assert linalg.trace_norm(rho) == pytest.approx(1.0, abs=1e-10)
    # pure-state closed form 2 sqrt(1 - |<0|+>|^2), and an SVD oracle
    diff = rho - linalg.ket_projector(PLUS)
    assert linalg.trace_norm(diff) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert linalg.trace_norm(diff) == pytest.approx(np.linalg.svd(diff, compute_uv=False).sum(), abs=1e-12)


def test_trace_norm_non_hermitian_uses_singular_values():
    a = np.array([[0, 2], [0, 0]], dtype=complex)
    assert linalg.trace_norm(a) == pytest.approx(2.0)


def test_trace_norm_rejects_non_square():
    with pytest.raises(NonSquare):
        linalg.trace_norm(np.ones((2, 3)))


def test_spectral_decompose_examples():
    sd = linalg.spectral_decompose(np.eye(2) / 2)
    np.testing.assert_allclose(sd.eigenvalues, [0.5, 0.5])
    sd = linalg.spectral_decompose(linalg.ket_projector(PLUS))
    np.testing.assert_allclose(sd.eigenvalues, [1, 0], atol=1e-12)
    top = sd.eigenvectors[:, 0]
    assert abs(np.vdot(top, PLUS)) == pytest.approx(1.0, abs=1e-12)
    mix = (linalg.ket_projector(KET0) + linalg.ket_projector(PLUS)) / 2
    # 2x2 characteristic polynomial: lambda^2 - lambda + det = 0
    det = np.linalg.det(mix).real
    roots = [(1 + math.sqrt(1 - 4 * det)) / 2, (1 - math.sqrt(1 - 4 * det)) / 2]
    np.testing.assert_allclose(linalg.spectral_decompose(mix).eigenvalues, roots, atol=1e-12)
    np.testing.assert_allclose(roots, [0.8535533905932737, 0.14644660940672624], atol=1e-12)


def test_spectral_decompose_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.spectral_decompose(np.array([[1, 1], [0, 1]]))


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_spectral_invariants_random(rng, method):
    for dim in (2, 3, 5, 8):
        a = linalg.random_density(dim, rng)
        sd = linalg.spectral_decompose(a, method=method)
        assert np.all(np.diff(sd.eigenvalues) <= 0)
        assert np.max(np.abs(sd.reconstruct() - a)) <= 1e-9
        v = sd.eigenvectors
        assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) <= 1e-10
        assert sd.eigenvalues.sum() == pytest.approx(1.0, abs=1e-9)
        assert sd.eigenvalues[-1] >= -1e-10
        again = linalg.spectral_decompose(sd.reconstruct(), method=method)
        assert np.max(np.abs(again.eigenvalues - sd.eigenvalues)) <= 1e-9


def test_jacobi_matches_lapack(rng):
    for dim in (3, 6):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = g + g.conj().T
        w, _ = linalg.jacobi_eigh(h)
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(h), atol=1e-10)


def test_spectral_decompose_deterministic(rng):
    a = linalg.random_density(4, rng)
    one, two = linalg.spectral_decompose(a), linalg.spectral_decompose(a.copy())
    assert np.array_equal(one.eigenvalues, two.eigenvalues)
    assert np.array_equal(one.eigenvectors, two.eigenvectors)


def test_degenerate_cluster_projector_is_basis_independent(rng):
    u = linalg.random_unitary(3, rng)
    a = u @ np.diag([0.4, 0.4, 0.2]) @ u.conj().T
    for method in ("lapack", "jacobi"):
        v = linalg.spectral_decompose(a, method=method).eigenvectors[:, :2]
        np.testing.assert_allclose(v @ v.conj().T, u[:, :2] @ u[:, :2].conj().T, atol=1e-9)


def test_tensor_examples(rng):
    np.testing.assert_array_equal(linalg.tensor(np.eye(2), np.eye(2)), np.eye(4))
    rho = linalg.random_density(3, rng)
    np.testing.assert_array_equal(linalg.tensor_power(rho, 1), rho)
    sigma = linalg.random_density(2, rng)
    assert np.trace(linalg.tensor(rho, sigma)) == pytest.approx(np.trace(rho) * np.trace(sigma))
    a, b = rng.standard_normal((2, 2)), rng.standard_normal((3, 3))
    t = linalg.tensor(a, b)
    assert t[1 * 3 + 2, 0 * 3 + 1] == pytest.approx(a[1, 0] * b[2, 1])


def test_tensor_power_is_density(rng):
    rho = linalg.random_density(2, rng)
    assert linalg.is_density(linalg.tensor_power(rho, 4))


def test_tensor_power_overflow(monkeypatch):
    with pytest.raises(DimensionOverflow) as exc:
        linalg.tensor_power(np.eye(2) / 2, 13)
    assert (exc.value.dim, exc.value.n) == (2, 13)
    monkeypatch.setenv("CCQLAB_MAX_DIM", "8")
    with pytest.raises(DimensionOverflow):
        linalg.tensor_power(np.eye(2) / 2, 4)
    assert linalg.tensor_power(np.eye(2) / 2, 3).shape == (8, 8)


def test_matrix_function_examples(rng):
    a = linalg.random_density(3, rng)
    np.testing.assert_allclose(linalg.matrix_function(a, lambda w: w), a, atol=1e-9)
    np.testing.assert_allclose(linalg.powm_psd(np.eye(2) / 2, 2), np.eye(2) / 4, atol=1e-15)
    np.testing.assert_allclose(linalg.sqrtm_psd(np.diag([0.81, 0.04])), np.diag([0.9, 0.2]), atol=1e-15)
    root = linalg.sqrtm_psd(a)
    np.testing.assert_allclose(root @ root, a, atol=1e-8)


def test_matrix_function_zero_conventions():
    p = np.diag([1.0, 0.0])
    np.testing.assert_array_equal(linalg.powm_psd(p, 0.5), p)
    np.testing.assert_array_equal(linalg.safe_power([0.0, 4.0], -1.0), [0.0, 0.25])


def test_matrix_function_clips_and_rejects():
    tiny = np.diag([1.0, -5e-9])
    assert linalg.sqrtm_psd(tiny)[1, 1] == 0.0
    with pytest.raises(NotPSD):
        linalg.sqrtm_psd(np.diag([1.0, -1e-6]))


def test_check_density():
    assert linalg.is_density(np.eye(3) / 3)
    assert not linalg.is_density(np.eye(2))
    with pytest.raises(NotPSD):
        linalg.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(NotHermitian):
        linalg.check_density(np.array([[0.5, 0.1], [0.0, 0.5]]))


def test_jensen_examples(rng):
    rho = linalg.random_density(3, rng)
    assert abs(linalg.operator_jensen_sqrt_check(lambda: rho, 10).max_gap) <= 1e-9
    pair = [linalg.ket_projector([1, 0]), linalg.ket_projector([0, 1])] * 50
    rep = linalg.operator_jensen_sqrt_check(pair, 100)
    assert rep.max_gap == pytest.approx(0.5 - 1 / math.sqrt(2), abs=1e-12)
    np.testing.assert_allclose(rep.mean_sqrt, np.eye(2) / 2, atol=1e-12)
    rep = linalg.operator_jensen_sqrt_check(lambda: 3 * linalg.random_density(3, rng), 1000)
    assert rep.passed


def test_norm_ordering_and_submultiplicativity(rng):
    for _ in range(20):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert linalg.operator_norm(a) <= linalg.trace_norm(a) + 1e-10
        lhs, rhs = linalg.trace_norm(a @ b), linalg.trace_norm(a) * linalg.trace_norm(b)
        assert lhs <= rhs * (1 + 1e-9)


def test_trace_norm_duality(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    norm = linalg.trace_norm(a)
    best = max(abs(np.trace(a @ linalg.random_unitary(3, rng))) for _ in range(200))
    assert best <= norm + 1e-9
    assert best >= 0.6 * norm  # 200 Haar draws get close but not exact
    # polar-decomposition witness attains the norm
    u, _, vh = np.linalg.svd(a)
    assert abs(np.trace(a @ (u @ vh).conj().T)) == pytest.approx(norm, abs=1e-9)
    for _ in range(20):
        c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        c /= linalg.operator_norm(c)
        assert abs(np.trace(a @ c)) <= norm + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_trace_distance_of_states_bounded(dim, seed):
    g = np.random.default_rng(seed)
    rho, sigma = linalg.random_density(dim, g), linalg.random_density(dim, g)
    d = linalg.trace_distance(rho, sigma)
    assert 0.0 <= d <= 2.0 + 1e-12
    assert d == pytest.approx(linalg.trace_distance(sigma, rho), abs=1e-12)
