import numpy as np
import pytest

from swlrtr.tensor import TuckerFactors, hosvd, kronecker, mode_product, unfold_mode
from swlrtr.wlrtr import (
    compute_weights,
    denoise_group,
    full_ranks,
    group_objective,
    shrink_core,
    update_factor,
)


def random_orthonormal(rng, d, r):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return q[:, :r]


class TestWeights:
    def test_direct_arithmetic(self):
        w = compute_weights(np.array([0.5]), c=1.0, q=16, eps=1e-300)
        assert w[0] == pytest.approx(8.0)

    def test_zero_sigma_finite(self):
        w = compute_weights(np.array([0.0]), c=2.0, q=4, eps=0.5)
        assert w[0] == pytest.approx(8.0)

    def test_monotone(self):
        sig = np.array([5.0, 3.0, 3.0, 1.0, 0.0])
        w = compute_weights(sig, c=1.3, q=9, eps=1e-6)
        assert np.all(np.diff(w) >= 0)

    def test_invalid_constants(self):
        with pytest.raises(ValueError):
            compute_weights(np.array([1.0]), c=0.0, q=4, eps=1e-6)
        with pytest.raises(ValueError):
            compute_weights(np.array([1.0]), c=1.0, q=4, eps=0.0)


class TestUpdateFactor:
    def test_fixed_point_same_column_space(self):
        rng = np.random.default_rng(0)
        core = rng.normal(size=(3, 3, 2))
        u1 = random_orthonormal(rng, 5, 3)
        u2 = random_orthonormal(rng, 4, 3)
        u3 = random_orthonormal(rng, 3, 2)
        f = TuckerFactors(core=core, u1=u1, u2=u2, u3=u3)
        zi = f.compose()
        new_u1 = update_factor(zi, f, 1)
        # Projector distance equals the sine of the largest principal angle.
        gap = np.linalg.norm(new_u1 @ new_u1.T - u1 @ u1.T, ord=2)
        assert gap < 1e-8

    def test_scalar_group(self):
        zi = np.full((1, 1, 1), -3.7)
        f = hosvd(zi, (1, 1, 1))
        for mode in (1, 2, 3):
            u = update_factor(zi, f, mode)
            assert u.shape == (1, 1)
            assert abs(abs(u[0, 0]) - 1.0) < 1e-12

    def test_procrustes_oracle_angle_sweep(self):
        # Mode-1 factor of a 2 x 4 x 3 group is 2x2 orthonormal, so the
        # optimum can be verified by sweeping rotations and reflections.
        rng = np.random.default_rng(1)
        zi = rng.normal(size=(2, 4, 3))
        f = hosvd(zi, full_ranks(zi.shape))
        u = update_factor(zi, f, 1)
        # Independent construction of the fit matrix via the Kronecker form.
        w = unfold_mode(zi, 1).T @ kronecker(f.u3, f.u2) @ unfold_mode(f.core, 1)
        achieved = float(np.trace(u.T @ w))
        best = -np.inf
        for theta in np.linspace(0.0, 2.0 * np.pi, 20001):
            ct, st = np.cos(theta), np.sin(theta)
            for cand in (
                np.array([[ct, -st], [st, ct]]),
                np.array([[ct, st], [st, -ct]]),
            ):
                best = max(best, float(np.trace(cand.T @ w)))
        assert achieved >= best - 1e-6
        assert np.linalg.norm(u.T @ u - np.eye(2)) < 1e-10

    def test_zero_group_identity_fallback(self):
        zi = np.zeros((4, 3, 2))
        f = hosvd(zi, (2, 2, 2))
        u = update_factor(zi, f, 1)
        assert np.array_equal(u, np.eye(4, 2))

    def test_orthonormal_after_every_update(self):
        rng = np.random.default_rng(2)
        zi = rng.normal(size=(6, 5, 3))
        f = hosvd(zi, (4, 3, 2))
        for mode, r in zip((1, 2, 3), (4, 3, 2)):
            u = update_factor(zi, f, mode)
            assert np.linalg.norm(u.T @ u - np.eye(r)) < 1e-8


class TestShrinkCore:
    def test_examples(self):
        w = np.array([1.0])
        assert shrink_core(np.array([1.0]), w, sigma2=0.6)[0] == pytest.approx(0.7)
        assert shrink_core(np.array([-0.2]), w, sigma2=0.6)[0] == 0.0

    def test_prox_oracle_grid_search(self):
        rng = np.random.default_rng(3)
        o = rng.normal(size=(3, 2, 2))
        w = rng.uniform(0.1, 2.0, size=o.shape)
        sigma2 = 0.8
        out = shrink_core(o, w, sigma2)
        grid = np.linspace(-4.0, 4.0, 160001)
        for idx in np.ndindex(o.shape):
            vals = 0.5 * (o[idx] - grid) ** 2 + (w[idx] * sigma2 / 2.0) * np.abs(grid)
            assert abs(out[idx] - grid[np.argmin(vals)]) < 1e-4

    def test_lipschitz_and_odd(self):
        rng = np.random.default_rng(4)
        w = rng.uniform(0.1, 1.0, size=(4, 4, 2))
        a = rng.normal(size=(4, 4, 2))
        b = rng.normal(size=(4, 4, 2))
        sa = shrink_core(a, w, 0.5)
        sb = shrink_core(b, w, 0.5)
        assert np.all(np.abs(sa - sb) <= np.abs(a - b) + 1e-15)
        assert np.max(np.abs(shrink_core(-a, w, 0.5) + sa)) == 0.0


class TestDenoiseGroup:
    def test_strong_lowrank_passthrough(self):
        rng = np.random.default_rng(5)
        core = np.zeros((4, 4, 2))
        core[0, 0, 0] = 50.0
        core[1, 1, 1] = 30.0
        f = TuckerFactors(
            core=core,
            u1=random_orthonormal(rng, 9, 4),
            u2=random_orthonormal(rng, 8, 4),
            u3=random_orthonormal(rng, 2, 2),
        )
        zi = f.compose()
        res = denoise_group(zi, sigma2=1e-4, c=np.sqrt(2), eps=1e-16)
        assert np.linalg.norm(res.estimate - zi) / np.linalg.norm(zi) < 1e-3

    def test_zero_group(self):
        res = denoise_group(np.zeros((4, 3, 2)), sigma2=0.1, c=1.0, eps=1e-16)
        assert np.array_equal(res.estimate, np.zeros((4, 3, 2)))

    def test_planted_model_monte_carlo(self):
        c = np.sqrt(2)
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            truth = TuckerFactors(
                core=np.diag([8.0, 5.0])[:, :, None] * np.ones((1, 1, 2)),
                u1=random_orthonormal(rng, 12, 2),
                u2=random_orthonormal(rng, 10, 2),
                u3=random_orthonormal(rng, 3, 2),
            ).compose()
            noisy = truth + rng.normal(size=truth.shape) * 0.05
            res = denoise_group(noisy, sigma2=0.05**2, c=c, eps=1e-16)
            if np.linalg.norm(res.estimate - truth) < np.linalg.norm(noisy - truth):
                wins += 1
        assert wins >= 95

    def test_objective_nonincreasing_with_frozen_weights(self):
        rng = np.random.default_rng(6)
        for trial in range(5):
            zi = rng.normal(size=(6, 5, 3)) + rng.normal(size=(6, 1, 1)) * rng.normal(
                size=(1, 5, 3)
            )
            res = denoise_group(
                zi, sigma2=0.3, c=1.0, eps=1e-8, rounds=3, record_objectives=True
            )
            trace = res.objective_trace
            # Each round contributes 5 entries sharing one weight tensor:
            # start, after U1, U2, U3, after core shrinkage.
            assert len(trace) == 15
            for r in range(3):
                chunk = trace[5 * r : 5 * r + 5]
                for a, b in zip(chunk, chunk[1:]):
                    assert b <= a + 1e-9

    def test_orthonormal_factors_at_exit(self):
        rng = np.random.default_rng(7)
        zi = rng.normal(size=(8, 6, 3))
        res = denoise_group(zi, sigma2=0.2, c=1.0, eps=1e-12)
        for u, r in zip(res.factors.factors, full_ranks(zi.shape)):
            assert np.linalg.norm(u.T @ u - np.eye(r)) < 1e-8

    def test_positive_homogeneity_matched_scaling(self):
        rng = np.random.default_rng(8)
        zi = rng.normal(size=(6, 5, 2))
        alpha = 2.0
        base = denoise_group(zi, sigma2=0.09, c=1.2, eps=1e-10)
        scaled = denoise_group(
            alpha * zi, sigma2=alpha**2 * 0.09, c=1.2, eps=alpha * 1e-10
        )
        assert np.max(np.abs(scaled.estimate - alpha * base.estimate)) < 1e-10

    def test_truncated_ranks_option(self):
        rng = np.random.default_rng(9)
        zi = rng.normal(size=(9, 7, 3))
        res = denoise_group(zi, sigma2=0.1, c=1.0, eps=1e-12, ranks=(3, 3, 2))
        assert res.factors.core.shape == (3, 3, 2)
        assert res.estimate.shape == zi.shape

    def test_group_objective_matches_terms(self):
        rng = np.random.default_rng(10)
        zi = rng.normal(size=(4, 4, 2))
        f = hosvd(zi, (2, 2, 1))
        w = compute_weights(f.core, c=1.0, q=4, eps=1e-6)
        val = group_objective(zi, f, w, sigma2=0.5)
        expected = float(np.sum((zi - f.compose()) ** 2)) + 0.5 * float(
            np.sum(w * np.abs(f.core))
        )
        assert val == pytest.approx(expected, rel=1e-12)
