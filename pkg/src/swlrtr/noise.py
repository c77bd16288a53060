"""Reproducible mixed-noise simulation on clean [0,1] cubes.

Four stacked corruption cases:

    1  zero-mean Gaussian, one sigma for every band
    2  zero-mean Gaussian, per-band sigma drawn once from a range
    3  case 2 plus salt-and-pepper impulses (pixels forced to 0 or 1 with
       equal probability) on a random subset of bands
    4  case 3 plus deadlines: one full-height vertical stripe per selected
       band, width drawn from a range, set to 0; half the stripes land on
       impulse bands, half on the remaining bands

Gaussian values are not clipped afterwards (clipping would bias the noise
level); impulses and deadlines overwrite whatever is there.  The same seed
always produces bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .io import HsiCube


@dataclass(frozen=True)
class NoiseSpec:
    case: int
    sigma: float | tuple[float, float] = 0.1
    impulse_bands: int = 20
    impulse_fraction: float = 0.2
    deadline_bands: int = 20
    deadline_width: tuple[int, int] = (1, 3)
    seed: int = 0

    def __post_init__(self):
        if self.case not in (1, 2, 3, 4):
            raise ValueError(f"noise case must be 1..4, got {self.case}")
        lo, hi = self.sigma if isinstance(self.sigma, tuple) else (self.sigma, self.sigma)
        if lo < 0 or hi < lo:
            raise ValueError(f"invalid sigma {self.sigma}")
        if not 0.0 <= self.impulse_fraction <= 1.0:
            raise ValueError(f"impulse fraction must be in [0,1], got {self.impulse_fraction}")
        if self.deadline_width[0] < 1 or self.deadline_width[1] < self.deadline_width[0]:
            raise ValueError(f"invalid deadline width range {self.deadline_width}")


@dataclass
class NoiseTruth:
    """What was actually injected, for support-recovery checks."""

    sigma_per_band: np.ndarray
    impulse_bands: list[int] = field(default_factory=list)
    deadline_bands: list[int] = field(default_factory=list)
    impulse_mask: np.ndarray = None  # type: ignore[assignment]
    deadline_mask: np.ndarray = None  # type: ignore[assignment]
    sparse_delta: np.ndarray = None  # type: ignore[assignment]

    @property
    def sparse_mask(self) -> np.ndarray:
        return self.impulse_mask | self.deadline_mask


def case_spec(case: int, seed: int, **overrides) -> NoiseSpec:
    """The default parameters for each case, with keyword overrides."""
    params: dict = {"case": case, "seed": seed}
    params["sigma"] = 0.1 if case == 1 else (0.1, 0.2)
    params.update(overrides)
    return NoiseSpec(**params)


def add_case_noise(clean: HsiCube, spec: NoiseSpec) -> tuple[HsiCube, NoiseTruth]:
    data = clean.data
    if data.min() < 0.0 or data.max() > 1.0:
        raise ValueError("clean cube must be normalized to [0,1] before noise injection")
    n1, n2, n3 = data.shape
    if spec.case >= 3 and spec.impulse_bands > n3:
        raise ValueError(f"impulse band count {spec.impulse_bands} exceeds {n3} bands")
    if spec.case >= 4 and spec.deadline_bands > n3:
        raise ValueError(f"deadline band count {spec.deadline_bands} exceeds {n3} bands")

    rng = np.random.default_rng(spec.seed)

    if isinstance(spec.sigma, tuple):
        lo, hi = spec.sigma
        sigma = rng.uniform(lo, hi, size=n3)
    else:
        sigma = np.full(n3, float(spec.sigma))
    noisy = data + rng.normal(size=data.shape) * sigma[None, None, :]
    gaussian_only = noisy.copy()

    truth = NoiseTruth(
        sigma_per_band=sigma,
        impulse_mask=np.zeros(data.shape, dtype=bool),
        deadline_mask=np.zeros(data.shape, dtype=bool),
    )

    if spec.case >= 3 and spec.impulse_bands > 0:
        bands = sorted(rng.choice(n3, size=spec.impulse_bands, replace=False).tolist())
        truth.impulse_bands = bands
        for b in bands:
            hit = rng.random((n1, n2)) < spec.impulse_fraction
            values = np.where(rng.random((n1, n2)) < 0.5, 0.0, 1.0)
            noisy[:, :, b] = np.where(hit, values, noisy[:, :, b])
            truth.impulse_mask[:, :, b] = hit

    if spec.case >= 4 and spec.deadline_bands > 0:
        from_impulse = min(spec.deadline_bands // 2, len(truth.impulse_bands))
        rest = [b for b in range(n3) if b not in truth.impulse_bands]
        from_rest = min(spec.deadline_bands - from_impulse, len(rest))
        chosen = []
        if from_impulse:
            chosen += rng.choice(truth.impulse_bands, size=from_impulse, replace=False).tolist()
        if from_rest:
            chosen += rng.choice(rest, size=from_rest, replace=False).tolist()
        truth.deadline_bands = sorted(chosen)
        wlo, whi = spec.deadline_width
        for b in truth.deadline_bands:
            width = int(rng.integers(wlo, whi + 1))
            width = min(width, n2)
            start = int(rng.integers(0, n2 - width + 1))
            noisy[:, start : start + width, b] = 0.0
            truth.deadline_mask[:, start : start + width, b] = True

    truth.sparse_delta = noisy - gaussian_only
    return HsiCube(data=noisy, value_range=clean.value_range), truth
