"""Dense 3-order tensor algebra: unfoldings, mode products, Tucker/HOSVD.

Layout convention (used by every module in this package): a tensor is a
float ndarray of shape ``(d1, d2, d3)`` and modes are numbered 1..3.  The
mode-n unfolding is the *tall* matrix with ``d_n`` columns and
``prod(other dims)`` rows, where the row index enumerates the remaining
modes in column-major order (the earlier remaining mode varies fastest).
Under this convention, for ``y = g x1 U1 x2 U2 x3 U3``,

    unfold(y, 1) == kronecker(U3, U2) @ unfold(g, 1) @ U1.T

and cyclically for modes 2 and 3.  Degenerate (size-1) modes are legal
everywhere.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class SvdResult(NamedTuple):
    """Thin SVD ``m = u @ diag(s) @ vt`` with a deterministic sign choice."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


class TuckerFactors(NamedTuple):
    """Core tensor plus one column-orthonormal factor matrix per mode."""

    core: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    @property
    def factors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.u1, self.u2, self.u3)

    def compose(self) -> np.ndarray:
        """Rebuild the full tensor ``core x1 u1 x2 u2 x3 u3``."""
        out = self.core
        for mode, u in enumerate(self.factors, start=1):
            out = mode_product(out, u, mode)
        return out


def _check_tensor3(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-order tensor, got ndim={t.ndim}")
    return t


def _check_mode(n: int) -> int:
    if n not in (1, 2, 3):
        raise ValueError(f"mode index must be 1, 2 or 3, got {n}")
    return n


def unfold_mode(t: np.ndarray, n: int) -> np.ndarray:
    """Mode-n unfolding: shape ``(prod of other dims, d_n)``, column-major rows."""
    t = _check_tensor3(t)
    _check_mode(n)
    return np.reshape(np.moveaxis(t, n - 1, 2), (-1, t.shape[n - 1]), order="F")


def fold_mode(m: np.ndarray, n: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Exact inverse of :func:`unfold_mode` for a tensor of shape ``dims``."""
    m = np.asarray(m, dtype=np.float64)
    _check_mode(n)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    others = tuple(dims[i] for i in range(3) if i != n - 1)
    expected = (others[0] * others[1], dims[n - 1])
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} does not fold into {dims} along mode {n}")
    return np.moveaxis(np.reshape(m, others + (dims[n - 1],), order="F"), 2, n - 1)


def mode_product(t: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """Mode-n tensor-matrix product; ``u`` has shape (J, d_n), mapping d_n -> J."""
    t = _check_tensor3(t)
    u = np.asarray(u, dtype=np.float64)
    _check_mode(n)
    if u.ndim != 2 or u.shape[1] != t.shape[n - 1]:
        raise ValueError(
            f"matrix of shape {u.shape} cannot multiply mode {n} of tensor {t.shape}"
        )
    return np.moveaxis(np.tensordot(u, t, axes=(1, n - 1)), 0, n - 1)


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with block structure ``[a_ij * b]``."""
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(t, dtype=np.float64)))))


def l1_norm(t: np.ndarray) -> float:
    return float(np.sum(np.abs(np.asarray(t, dtype=np.float64))))


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Determinism: flip each singular pair so the first nonzero entry of the
    # left vector is positive.
    for j in range(u.shape[1]):
        nz = np.flatnonzero(u[:, j])
        if nz.size and u[nz[0], j] < 0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return u, vt


def thin_svd(m: np.ndarray) -> SvdResult:
    """Thin SVD with nonincreasing singular values and fixed sign convention."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    u, vt = _fix_signs(u, vt)
    return SvdResult(u=u, s=s, vt=vt)


def hosvd(t: np.ndarray, ranks: tuple[int, int, int]) -> TuckerFactors:
    """Truncated HOSVD: per-mode orthonormal bases plus the projected core.

    ``ranks[j]`` keeps the leading basis vectors of mode ``j+1``; with full
    ranks the reconstruction is exact (up to roundoff).
    """
    t = _check_tensor3(t)
    if len(ranks) != 3:
        raise ValueError("ranks must be a triple")
    factors = []
    for mode in (1, 2, 3):
        r = ranks[mode - 1]
        if not 1 <= r <= t.shape[mode - 1]:
            raise ValueError(
                f"rank {r} out of range [1, {t.shape[mode - 1]}] for mode {mode}"
            )
        # The mode-n basis lives on the d_n side: right singular vectors of
        # the tall unfolding, i.e. columns of u from its transpose's SVD.
        u = thin_svd(unfold_mode(t, mode).T).u
        factors.append(u[:, :r])
    core = t
    for mode, u in enumerate(factors, start=1):
        core = mode_product(core, u.T, mode)
    return TuckerFactors(core=core, u1=factors[0], u2=factors[1], u3=factors[2])
