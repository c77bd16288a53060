"""Spectral subspace estimation and mode-3 projection.

The signal subspace is found in two steps: per-band noise is estimated by
regressing every band on all the others (ridge-regularized least squares
over the unfolded pixels-by-bands matrix), then the dimension is chosen by
the minimum-mean-squared-error trade-off between lost signal power and
retained noise power in each eigen-direction of the estimated signal
correlation matrix.  The returned basis has orthonormal columns, so
projection followed by reconstruction is the orthogonal projector onto its
span.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .tensor import mode_product

RIDGE_SCALE = 1e-6


class NoiseEstimate(NamedTuple):
    residuals: np.ndarray  # n1 x n2 x n3, estimated noise per pixel
    band_variances: np.ndarray  # length n3, residual mean squares


class SubspaceBasis(NamedTuple):
    a: np.ndarray  # n3 x k, orthonormal columns
    k: int


def _as_data(cube) -> np.ndarray:
    data = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    if data.ndim != 3:
        raise ValueError(f"expected a 3-order cube, got ndim={data.ndim}")
    return data


def estimate_noise(cube) -> NoiseEstimate:
    """Estimate additive noise by leave-one-band-out linear regression."""
    data = _as_data(cube)
    n1, n2, n3 = data.shape
    if n3 < 3:
        raise ValueError(f"noise estimation needs at least 3 bands, got {n3}")
    if n1 * n2 < n3:
        raise ValueError(
            f"noise estimation needs at least as many pixels as bands ({n1 * n2} < {n3})"
        )
    r = data.reshape(n1 * n2, n3).T  # bands x pixels
    gram = r @ r.T
    ridge = RIDGE_SCALE * np.trace(gram) / n3
    gram_inv = np.linalg.inv(gram + ridge * np.eye(n3))
    w = np.empty_like(r)
    for i in range(n3):
        # Downdate the full ridge inverse to the leave-band-i normal equations.
        xx = gram_inv - np.outer(gram_inv[:, i], gram_inv[i, :]) / gram_inv[i, i]
        rhs = gram[:, i].copy()
        rhs[i] = 0.0
        beta = xx @ rhs
        beta[i] = 0.0
        w[i, :] = r[i, :] - beta @ r
    variances = np.mean(w**2, axis=1)
    return NoiseEstimate(residuals=w.T.reshape(n1, n2, n3), band_variances=variances)


def select_rank_and_basis(cube, noise: NoiseEstimate, k: int | None = None) -> SubspaceBasis:
    """Pick the subspace dimension and basis.

    Directions are ranked by how much including them lowers the estimated
    reconstruction error (signal power gained minus twice the noise power
    admitted); with ``k`` given, selection is bypassed and the best ``k``
    directions by the same ranking are returned.
    """
    data = _as_data(cube)
    n1, n2, n3 = data.shape
    y = data.reshape(n1 * n2, n3).T
    n_pixels = n1 * n2
    ry = (y @ y.T) / n_pixels
    rn = np.diag(noise.band_variances)
    rx = ry - rn
    eigvals, eigvecs = np.linalg.eigh((rx + rx.T) / 2.0)
    eigvecs = eigvecs[:, np.argsort(eigvals)[::-1]]
    for j in range(n3):  # deterministic sign
        nz = np.flatnonzero(eigvecs[:, j])
        if nz.size and eigvecs[nz[0], j] < 0:
            eigvecs[:, j] = -eigvecs[:, j]
    signal_power = np.einsum("ij,ij->j", eigvecs, ry @ eigvecs)
    noise_power = np.einsum("ij,ij->j", eigvecs, rn @ eigvecs)
    cost = 2.0 * noise_power - signal_power
    if k is None:
        k = max(1, int(np.sum(cost < 0)))
    k = int(np.clip(k, 1, n3))
    order = np.argsort(cost, kind="stable")
    return SubspaceBasis(a=np.ascontiguousarray(eigvecs[:, order[:k]]), k=k)


def project(cube, basis: SubspaceBasis) -> np.ndarray:
    """Reduced image: mode-3 product with the transposed basis (n3 -> k)."""
    return mode_product(_as_data(cube), basis.a.T, 3)


def reconstruct(reduced: np.ndarray, basis: SubspaceBasis) -> np.ndarray:
    """Back to the full spectral space: mode-3 product with the basis (k -> n3)."""
    return mode_product(np.asarray(reduced, dtype=np.float64), basis.a, 3)
