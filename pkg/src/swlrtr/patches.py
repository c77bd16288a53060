"""Patch extraction, block matching and group stacking on the reduced image.

A group gathers q similar p x p patches (all reduced bands deep) into a
p^2 x q x k tensor: mode 1 walks the patch pixels in row-major order, mode
2 the matched patches (reference first, then ascending distance), mode 3
the reduced bands.  The gather and its scatter adjoint realize the group
selection operator and its transpose; the normal operator is diagonal, one
multiplicity count per reduced-image element, which is what makes the
aggregation step a per-element division.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class PatchGrid(NamedTuple):
    p: int
    stride: int
    window: int
    refs: list[tuple[int, int]]


class GroupIndex(NamedTuple):
    ref: tuple[int, int]
    coords: list[tuple[int, int]]  # first entry is the reference itself


def _axis_refs(n: int, p: int, stride: int) -> list[int]:
    last = n - p
    refs = list(range(0, last + 1, stride))
    if refs[-1] != last:
        refs.append(last)
    return refs


def build_grid(n1: int, n2: int, p: int, stride: int, window: int = 30) -> PatchGrid:
    """Reference top-lefts at stride intervals, with the last row/column
    forced so the right and bottom borders stay covered.

    The stride is clamped to the patch size; otherwise interior gaps would
    open up and break the every-pixel-covered guarantee.
    """
    if p < 1 or p > min(n1, n2):
        raise ValueError(f"patch size {p} does not fit a {n1}x{n2} image")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    stride = min(stride, p)
    refs = [(x, y) for x in _axis_refs(n1, p, stride) for y in _axis_refs(n2, p, stride)]
    return PatchGrid(p=p, stride=stride, window=window, refs=refs)


def block_match(z: np.ndarray, ref: tuple[int, int], p: int, q: int, window: int) -> GroupIndex:
    """The q most similar patches to ``ref`` inside the search window.

    Similarity is squared Euclidean distance over all p*p*k patch elements;
    ties break by row-major scan order.  The reference is always member 0,
    the remaining q-1 slots go to the best other candidates.
    """
    n1, n2, _ = z.shape
    cx, cy = ref
    if not (0 <= cx <= n1 - p and 0 <= cy <= n2 - p):
        raise ValueError(f"reference {ref} out of bounds for patch size {p}")
    r = window // 2
    x_lo, x_hi = max(0, cx - r), min(n1 - p, cx + r)
    y_lo, y_hi = max(0, cy - r), min(n2 - p, cy + r)
    n_cand = (x_hi - x_lo + 1) * (y_hi - y_lo + 1)
    if n_cand < q:
        raise ValueError(f"window holds {n_cand} candidates, need {q}")

    view = sliding_window_view(z, (p, p), axis=(0, 1))  # (n1-p+1, n2-p+1, k, p, p)
    cand = view[x_lo : x_hi + 1, y_lo : y_hi + 1]
    diff = cand - view[cx, cy]
    dist = np.sum(diff * diff, axis=(2, 3, 4)).ravel()

    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    coords_x = np.repeat(xs, ys.size)
    coords_y = np.tile(ys, xs.size)
    scan = coords_x * n2 + coords_y
    order = np.lexsort((scan, dist))

    coords = [(cx, cy)]
    for idx in order:
        if len(coords) == q:
            break
        xy = (int(coords_x[idx]), int(coords_y[idx]))
        if xy != (cx, cy):
            coords.append(xy)
    return GroupIndex(ref=(cx, cy), coords=coords)


def extract_group(z: np.ndarray, gi: GroupIndex, p: int) -> np.ndarray:
    """Gather the group tensor (p^2 x q x k) from the reduced image."""
    n1, n2, k = z.shape
    out = np.empty((p * p, len(gi.coords), k))
    for j, (x, y) in enumerate(gi.coords):
        if not (0 <= x <= n1 - p and 0 <= y <= n2 - p):
            raise ValueError(f"patch at {(x, y)} out of bounds")
        out[:, j, :] = z[x : x + p, y : y + p, :].reshape(p * p, k)
    return out


def scatter_group(group: np.ndarray, gi: GroupIndex, p: int, shape: tuple[int, int, int]) -> np.ndarray:
    """Adjoint of :func:`extract_group`: scatter-add patches back in place."""
    out = np.zeros(shape)
    for j, (x, y) in enumerate(gi.coords):
        out[x : x + p, y : y + p, :] += group[:, j, :].reshape(p, p, shape[2])
    return out


def group_counts(gi: GroupIndex, p: int, shape: tuple[int, int, int]) -> np.ndarray:
    """Diagonal of the group's normal operator: per-element multiplicity."""
    out = np.zeros(shape)
    for x, y in gi.coords:
        out[x : x + p, y : y + p, :] += 1.0
    return out


def coverage_counts(grid: PatchGrid, shape: tuple[int, int, int]) -> np.ndarray:
    out = np.zeros(shape)
    for x, y in grid.refs:
        out[x : x + grid.p, y : y + grid.p, :] += 1.0
    return out


def scatter_groups(
    entries: Sequence[tuple[GroupIndex, np.ndarray]],
    weights: Sequence[float],
    p: int,
    shape: tuple[int, int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate sum_i w_i R_i^T L_i and the matching weighted counts.

    Groups are folded in list order so repeated runs are bit-identical.
    """
    numerator = np.zeros(shape)
    denominator = np.zeros(shape)
    for (gi, estimate), w in zip(entries, weights):
        for j, (x, y) in enumerate(gi.coords):
            numerator[x : x + p, y : y + p, :] += w * estimate[:, j, :].reshape(p, p, shape[2])
            denominator[x : x + p, y : y + p, :] += w
    return numerator, denominator


def aggregate(
    data_term: np.ndarray,
    entries: Sequence[tuple[GroupIndex, np.ndarray]],
    weights: Sequence[float],
    p: int,
) -> np.ndarray:
    """Closed-form fusion of the data term with all weighted group estimates:
    per element, (data + sum w_i scattered L_i) / (1 + sum w_i counts)."""
    numerator, denominator = scatter_groups(entries, weights, p, data_term.shape)
    return (data_term + numerator) / (1.0 + denominator)
