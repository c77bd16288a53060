import numpy as np
import pytest

from swlrtr.subspace import (
    SubspaceBasis,
    estimate_noise,
    project,
    reconstruct,
    select_rank_and_basis,
)


def spectral_mixture(dims, rank, seed, noise_sigma=0.0):
    """Cube whose spectra live in a known rank-dimensional subspace."""
    rng = np.random.default_rng(seed)
    abundances = rng.uniform(0.1, 1.0, size=(dims[0], dims[1], rank))
    signatures = rng.uniform(0.1, 1.0, size=(rank, dims[2]))
    data = np.tensordot(abundances, signatures, axes=(2, 0))
    data /= data.max()
    if noise_sigma > 0:
        data = data + rng.normal(size=dims) * noise_sigma
    return data, signatures


class TestEstimateNoise:
    def test_white_gaussian_level(self):
        rng = np.random.default_rng(0)
        clean, _ = spectral_mixture((64, 64, 16), rank=3, seed=1)
        noisy = clean + rng.normal(size=clean.shape) * 0.1
        est = estimate_noise(noisy)
        mean_std = np.mean(np.sqrt(est.band_variances))
        assert 0.08 <= mean_std <= 0.12

    def test_rank1_noiseless_residuals_tiny(self):
        data, _ = spectral_mixture((16, 16, 32), rank=1, seed=2)
        est = estimate_noise(data * 0.5)
        rms = np.sqrt(np.mean(est.residuals**2))
        assert rms < 1e-8

    def test_residual_shape_and_variances(self):
        data, _ = spectral_mixture((8, 9, 5), rank=2, seed=3, noise_sigma=0.05)
        est = estimate_noise(data)
        assert est.residuals.shape == (8, 9, 5)
        assert est.band_variances.shape == (5,)
        expected = np.mean(est.residuals.reshape(-1, 5) ** 2, axis=0)
        assert np.allclose(est.band_variances, expected, rtol=1e-12)

    def test_too_few_bands(self):
        with pytest.raises(ValueError):
            estimate_noise(np.zeros((4, 4, 2)))

    def test_more_bands_than_pixels(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            estimate_noise(rng.normal(size=(2, 3, 10)))


class TestRankSelection:
    def test_recovers_planted_rank(self):
        data, _ = spectral_mixture((32, 32, 16), rank=3, seed=5, noise_sigma=1e-4)
        basis = select_rank_and_basis(data, estimate_noise(data))
        assert basis.k == 3

    def test_pure_noise_small_k(self):
        rng = np.random.default_rng(6)
        data = rng.normal(size=(32, 32, 12)) * 0.1
        basis = select_rank_and_basis(data, estimate_noise(data))
        assert 1 <= basis.k <= 3

    def test_rank1_direction_recovered(self):
        data, signatures = spectral_mixture((16, 16, 10), rank=1, seed=7)
        basis = select_rank_and_basis(data, estimate_noise(data))
        assert basis.k == 1
        v = signatures[0] / np.linalg.norm(signatures[0])
        angle = np.arccos(np.clip(abs(float(basis.a[:, 0] @ v)), -1.0, 1.0))
        assert angle < 1e-6

    def test_fixed_k_override_and_clamp(self):
        data, _ = spectral_mixture((16, 16, 8), rank=2, seed=8, noise_sigma=0.05)
        noise = estimate_noise(data)
        assert select_rank_and_basis(data, noise, k=5).k == 5
        assert select_rank_and_basis(data, noise, k=100).k == 8
        assert select_rank_and_basis(data, noise, k=0).k == 1

    def test_orthonormal_columns(self):
        data, _ = spectral_mixture((16, 16, 12), rank=4, seed=9, noise_sigma=0.02)
        basis = select_rank_and_basis(data, estimate_noise(data), k=6)
        assert np.linalg.norm(basis.a.T @ basis.a - np.eye(6)) < 1e-8

    def test_deterministic(self):
        data, _ = spectral_mixture((16, 16, 10), rank=3, seed=10, noise_sigma=0.05)
        noise = estimate_noise(data)
        a = select_rank_and_basis(data, noise)
        b = select_rank_and_basis(data.copy(), estimate_noise(data.copy()))
        assert a.k == b.k
        assert np.array_equal(a.a, b.a)


class TestProjection:
    def test_identity_basis(self):
        rng = np.random.default_rng(11)
        data = rng.normal(size=(5, 6, 4))
        basis = SubspaceBasis(a=np.eye(4), k=4)
        assert np.allclose(project(data, basis), data, atol=0)

    def test_exact_recovery_of_coefficients(self):
        rng = np.random.default_rng(12)
        a, _ = np.linalg.qr(rng.normal(size=(10, 3)))
        basis = SubspaceBasis(a=a, k=3)
        z0 = rng.normal(size=(6, 7, 3))
        x = reconstruct(z0, basis)
        assert np.max(np.abs(project(x, basis) - z0)) < 1e-12

    def test_projection_matches_least_squares(self):
        rng = np.random.default_rng(13)
        a, _ = np.linalg.qr(rng.normal(size=(8, 3)))
        basis = SubspaceBasis(a=a, k=3)
        data = rng.normal(size=(4, 5, 8))
        projected = reconstruct(project(data, basis), basis)
        flat = data.reshape(-1, 8)
        coeffs, *_ = np.linalg.lstsq(a, flat.T, rcond=None)
        expected = (a @ coeffs).T.reshape(4, 5, 8)
        assert np.max(np.abs(projected - expected)) < 1e-10

    def test_idempotent_and_energy(self):
        rng = np.random.default_rng(14)
        a, _ = np.linalg.qr(rng.normal(size=(9, 4)))
        basis = SubspaceBasis(a=a, k=4)
        data = rng.normal(size=(5, 5, 9))
        once = reconstruct(project(data, basis), basis)
        twice = reconstruct(project(once, basis), basis)
        assert np.max(np.abs(twice - once)) < 1e-12
        assert np.linalg.norm(project(data, basis)) <= np.linalg.norm(data) + 1e-12

    def test_dim_mismatch(self):
        basis = SubspaceBasis(a=np.eye(4), k=4)
        with pytest.raises(ValueError):
            project(np.zeros((3, 3, 5)), basis)
