"""Weighted low-rank Tucker shrinkage of one patch group.

Each group tensor is fit as ``core x1 U1 x2 U2 x3 U3`` by alternating exact
block updates: every factor solves its orthogonal Procrustes subproblem
(polar factor of the fit matrix, which includes the current core so each
step is a true minimizer), and the core solves its separable soft-threshold
prox.  Thresholds are inversely proportional to the current core magnitudes,
so dominant structure is kept while small noisy entries are crushed; the
magnitudes feeding the weights come from the plain HOSVD core in the first
round and from the previous shrunk core afterwards.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .tensor import TuckerFactors, hosvd, mode_product, thin_svd, unfold_mode


class GroupEstimate(NamedTuple):
    estimate: np.ndarray  # denoised group tensor, same shape as the input
    factors: TuckerFactors
    weights: np.ndarray  # final weight tensor, one entry per core entry
    objective_trace: list[float] | None = None


def compute_weights(sigma_estimates: np.ndarray, c: float, q: int, eps: float) -> np.ndarray:
    """Inverse-magnitude weights ``c*sqrt(q) / (|sigma| + eps)``."""
    if c <= 0 or q < 1 or eps <= 0:
        raise ValueError(f"need c > 0, q >= 1, eps > 0, got c={c}, q={q}, eps={eps}")
    return c * np.sqrt(q) / (np.abs(np.asarray(sigma_estimates, dtype=np.float64)) + eps)


def update_factor(zi: np.ndarray, factors: TuckerFactors, mode: int) -> np.ndarray:
    """Best orthonormal factor for one mode, everything else frozen.

    Solves max_U trace(U^T W) over column-orthonormal U, with
    ``W = unfold(zi, mode)^T (U_c kron U_b) unfold(core, mode)`` computed via
    mode products; the answer is the polar factor P Q^T of W's thin SVD.
    An all-zero W (empty group) falls back to identity columns.
    """
    others = [m for m in (1, 2, 3) if m != mode]
    projected = zi
    for m in others:
        projected = mode_product(projected, factors.factors[m - 1].T, m)
    w = unfold_mode(projected, mode).T @ unfold_mode(factors.core, mode)
    if not w.any():
        return np.eye(zi.shape[mode - 1], factors.core.shape[mode - 1])
    res = thin_svd(w)
    return res.u @ res.vt


def shrink_core(oi: np.ndarray, weights: np.ndarray, sigma2: float) -> np.ndarray:
    """Entrywise soft threshold of the rotated group at ``weights*sigma2/2``."""
    thresholds = weights * (sigma2 / 2.0)
    return np.sign(oi) * np.maximum(np.abs(oi) - thresholds, 0.0)


def group_objective(zi: np.ndarray, factors: TuckerFactors, weights: np.ndarray, sigma2: float) -> float:
    """Fit error plus the weighted-core penalty, for monotonicity checks."""
    resid = zi - factors.compose()
    return float(np.sum(resid * resid) + sigma2 * np.sum(weights * np.abs(factors.core)))


def full_ranks(shape: tuple[int, int, int]) -> tuple[int, int, int]:
    d1, d2, d3 = shape
    return (min(d1, d2 * d3), min(d2, d1 * d3), min(d3, d1 * d2))


def denoise_group(
    zi: np.ndarray,
    sigma2: float,
    c: float,
    eps: float,
    rounds: int = 2,
    ranks: tuple[int, int, int] | None = None,
    record_objectives: bool = False,
) -> GroupEstimate:
    """Run ``rounds`` of reweight / factor updates / core shrinkage.

    Ranks default to the full Tucker ranks: sparsity comes from shrinking
    the core, not from truncation (truncation is available for speed).
    """
    zi = np.asarray(zi, dtype=np.float64)
    if rounds < 1:
        raise ValueError(f"need at least one round, got {rounds}")
    if ranks is None:
        ranks = full_ranks(zi.shape)
    q = zi.shape[1]
    factors = hosvd(zi, ranks)
    trace: list[float] | None = [] if record_objectives else None
    for _ in range(rounds):
        weights = compute_weights(factors.core, c, q, eps)
        if trace is not None:
            trace.append(group_objective(zi, factors, weights, sigma2))
        for mode in (1, 2, 3):
            new_u = update_factor(zi, factors, mode)
            factors = TuckerFactors(
                core=factors.core,
                u1=new_u if mode == 1 else factors.u1,
                u2=new_u if mode == 2 else factors.u2,
                u3=new_u if mode == 3 else factors.u3,
            )
            if trace is not None:
                trace.append(group_objective(zi, factors, weights, sigma2))
        rotated = zi
        for mode in (1, 2, 3):
            rotated = mode_product(rotated, factors.factors[mode - 1].T, mode)
        factors = factors._replace(core=shrink_core(rotated, weights, sigma2))
        if trace is not None:
            trace.append(group_objective(zi, factors, weights, sigma2))
    return GroupEstimate(
        estimate=factors.compose(), factors=factors, weights=weights, objective_trace=trace
    )
