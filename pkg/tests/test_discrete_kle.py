import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import kle


def _gaussian(cov, N, seed):
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(cov)
    return rng.standard_normal((N, cov.shape[0])) @ L.T


def test_vector_kle_diagonal():
    v = kle.vector_kle(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(v.lambdas, [2.0, 1.0])
    np.testing.assert_array_equal(np.abs(v.basis), np.eye(2))


def test_vector_kle_identity_is_basis_agnostic():
    v = kle.vector_kle(np.eye(4))
    np.testing.assert_allclose(v.lambdas, 1.0)
    np.testing.assert_allclose(v.basis.T @ v.basis, np.eye(4), atol=1e-12)
    z = np.array([0.3, -1.0, 2.0, 0.5])
    np.testing.assert_allclose(kle.reconstruct(v, kle.project(v, z)), z, atol=1e-12)


def test_vector_kle_cholesky_reconstruction():
    L = np.array([[1.0, 0, 0], [0.5, 2.0, 0], [-0.3, 0.7, 0.4]])
    cov = L @ L.T
    v = kle.vector_kle(cov)
    assert np.linalg.norm(cov - (v.basis * v.lambdas) @ v.basis.T) <= 1e-10 * np.linalg.norm(cov)
    np.testing.assert_allclose(v.basis.T @ v.basis, np.eye(3), atol=1e-10)


def test_vector_kle_rejects_indefinite():
    with pytest.raises(kle.InvalidArgumentError):
        kle.vector_kle([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(kle.InvalidArgumentError):
        kle.vector_kle(np.eye(2), mean=np.zeros(3))


def test_project_examples():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 5))
    mean = rng.standard_normal(5)
    v = kle.vector_kle(A @ A.T, mean)
    np.testing.assert_array_equal(kle.project(v, mean, 3), np.zeros(3))
    np.testing.assert_allclose(kle.project(v, mean + v.basis[:, 0], 5), [1, 0, 0, 0, 0], atol=1e-14)
    z = rng.standard_normal(5)
    np.testing.assert_allclose(kle.reconstruct(v, kle.project(v, z, 5)), z, atol=1e-10)
    np.testing.assert_array_equal(kle.reconstruct(v, np.zeros(2)), mean)
    np.testing.assert_allclose(kle.reconstruct(v, [1.0]), mean + v.basis[:, 0])
    with pytest.raises(kle.InvalidArgumentError):
        kle.project(v, np.zeros(4), 2)
    with pytest.raises(kle.InvalidArgumentError):
        kle.reconstruct(v, np.zeros(6))


def test_project_batch_rows():
    v = kle.vector_kle(np.diag([3.0, 2.0, 1.0]))
    Z = np.arange(12.0).reshape(4, 3)
    np.testing.assert_allclose(kle.reconstruct(v, kle.project(v, Z)), Z, atol=1e-12)


def test_truncation_error():
    assert kle.truncation_error([3, 2, 1], 1) == 3.0
    assert kle.truncation_error([3, 2, 1], 3) == 0.0


@pytest.mark.slow
def test_truncation_error_monte_carlo():
    cov = np.diag([3.0, 2.0, 1.0])
    v = kle.vector_kle(cov)
    Z = _gaussian(cov, 100_000, 11)
    resid = Z - kle.reconstruct(v, kle.project(v, Z, 1))
    mse = np.mean(np.sum(resid**2, axis=1))
    assert mse == pytest.approx(kle.truncation_error(v.lambdas, 1), rel=0.05)


def test_variance_ratio():
    assert kle.variance_ratio([3, 2, 1], 6, 2) == pytest.approx(5 / 6)
    assert kle.variance_ratio([3, 2, 1], 6, 3) == 1.0
    assert kle.variance_ratio([3, 2, 1], 5.9, 3) == 1.0
    with pytest.raises(kle.InvalidArgumentError):
        kle.variance_ratio([1.0], 0.0, 1)


def test_select_rank():
    assert kle.select_rank([3, 2, 1], 6, 0.8) == 2
    lam = np.array([0.1] * 10)
    assert kle.select_rank(lam, float(np.sum(lam)), 1.0) == 10
    with pytest.raises(kle.InsufficientSpectrumError, match="increase"):
        kle.select_rank([3, 2], 6, 0.9)
    for bad in (0.0, 1.5):
        with pytest.raises(kle.InvalidArgumentError):
            kle.select_rank([3, 2, 1], 6, bad)


@settings(max_examples=200, deadline=None)
@given(
    lam=st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30),
    t=st.floats(0.01, 1.0),
)
def test_select_rank_is_minimal(lam, t):
    lam = np.sort(np.asarray(lam))[::-1]
    total = float(np.sum(lam))
    if total <= 0:
        return
    r = kle.select_rank(lam, total, t)
    tol = 1e-12
    assert kle.variance_ratio(lam, total, r) >= t * (1 - tol)
    if r > 1:
        assert kle.variance_ratio(lam, total, r - 1) < t


def test_ky_fan_equality_and_trailing():
    cov = np.diag([3.0, 2.0, 1.0])
    v = kle.vector_kle(cov)
    assert abs(kle.ky_fan_gap(cov, v.basis[:, :2])) <= 1e-10
    assert kle.ky_fan_gap(cov, v.basis[:, 2:]) == pytest.approx(2.0)
    with pytest.raises(kle.InvalidArgumentError):
        kle.ky_fan_gap(cov, np.ones((3, 1)))


@pytest.mark.parametrize("r", [1, 5, 10])
def test_ky_fan_random_bases(r):
    rng = np.random.default_rng(r)
    A = rng.standard_normal((20, 20))
    cov = A @ A.T
    lam1 = np.linalg.eigvalsh(cov)[-1]
    for _ in range(200):
        Q, _ = np.linalg.qr(rng.standard_normal((20, r)))
        assert kle.ky_fan_gap(cov, Q) >= -1e-10 * lam1


def test_ky_fan_gap_equals_excess_truncation_error():
    # deterministic optimality: eps(U, r) - eps(V, r) with exact traces
    rng = np.random.default_rng(2)
    A = rng.standard_normal((8, 8))
    cov = A @ A.T
    v = kle.vector_kle(cov)
    U, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    for r in range(1, 9):
        eps_u = np.trace(cov) - np.trace(U[:, :r].T @ cov @ U[:, :r])
        eps_v = kle.truncation_error(v.lambdas, r)
        assert eps_u - eps_v == pytest.approx(kle.ky_fan_gap(cov, U[:, :r]), abs=1e-10 * v.lambdas[0])
        assert eps_u - eps_v >= -1e-10 * v.lambdas[0]


def test_empirical_covariance_small():
    mean, cov = kle.empirical_covariance(np.array([[0.0, 0.0], [2.0, 2.0]]))
    np.testing.assert_array_equal(mean, [1.0, 1.0])
    np.testing.assert_array_equal(cov, [[2.0, 2.0], [2.0, 2.0]])


def test_empirical_covariance_constant_and_errors():
    mean, cov = kle.empirical_covariance(np.tile([1.0, -2.0, 3.0], (5, 1)))
    np.testing.assert_array_equal(cov, np.zeros((3, 3)))
    with pytest.raises(kle.InvalidArgumentError):
        kle.empirical_covariance(np.zeros((1, 3)))


@pytest.mark.slow
def test_empirical_covariance_monte_carlo():
    cov = np.diag([2.0, 1.0])
    _, est = kle.empirical_covariance(kle.SampleEnsemble(_gaussian(cov, 100_000, 5), seed=5))
    assert np.max(np.abs(est - cov)) <= 0.05


@pytest.mark.slow
def test_coefficients_decorrelated():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((12, 12))
    cov = A @ A.T / 12
    v = kle.vector_kle(cov)
    N = 100_000
    Z = _gaussian(cov, N, 9)
    coeffs = kle.project(v, Z, 10)
    E = coeffs.T @ coeffs / N
    lam = v.lambdas[:10]
    bound = 5 * np.sqrt(2 * np.outer(lam, lam) / N)
    assert np.all(np.abs(E - np.diag(lam)) <= bound)


def test_variance_decomposition_identity():
    from kle.diagnostics import pythagorean_split

    rng = np.random.default_rng(3)
    cov = np.diag(np.linspace(3, 0.1, 15))
    Z = _gaussian(cov, 1000, 1)
    Q, _ = np.linalg.qr(rng.standard_normal((15, 4)))
    total, captured, resid = pythagorean_split(Z, Q)
    np.testing.assert_allclose(total, captured + resid, rtol=1e-10)
    assert np.mean(total) == pytest.approx(np.mean(captured) + np.mean(resid), rel=1e-10)


def test_ensemble_csv_roundtrip(tmp_path):
    ens = kle.SampleEnsemble(np.random.default_rng(0).standard_normal((4, 3)), seed=0)
    ens.to_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "x_1,x_2,x_3"
    back = kle.SampleEnsemble.from_csv(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.samples, ens.samples)
