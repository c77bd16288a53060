"""Band-averaged quality indices for denoising runs.

PSNR uses peak 1 on normalized data.  SSIM is the mean over all 8x8
sliding windows with uniform weighting, population statistics and the
usual stabilizers C1=(0.01*L)^2, C2=(0.03*L)^2, L=1; values from other
toolkits may differ slightly, comparisons should stay within this
implementation.  The relative global error uses a resolution ratio of 1,
and spectral angles are reported in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .io import write_csv

SSIM_WINDOW = 8
SSIM_C1 = (0.01 * 1.0) ** 2
SSIM_C2 = (0.03 * 1.0) ** 2


@dataclass
class MetricsReport:
    psnr: np.ndarray  # per band, dB
    ssim: np.ndarray  # per band
    ergas: float
    msa: float
    runtime_seconds: float = 0.0
    skipped_spectra: int = 0
    mpsnr: float = field(init=False)
    mssim: float = field(init=False)

    def __post_init__(self):
        self.mpsnr = float(np.mean(self.psnr))
        self.mssim = float(np.mean(self.ssim))


def _as_data(cube) -> np.ndarray:
    return np.asarray(getattr(cube, "data", cube), dtype=np.float64)


def _check_same_dims(ref, test):
    if ref.shape != test.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {test.shape}")


def psnr_band(ref_band: np.ndarray, test_band: np.ndarray, peak: float = 1.0) -> float:
    _check_same_dims(ref_band, test_band)
    mse = float(np.mean((ref_band - test_band) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def _window_sums(band: np.ndarray, w: int) -> np.ndarray:
    """Sums over every w x w sliding window via a 2-D cumulative table."""
    c = np.cumsum(np.cumsum(band, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    return c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]


def ssim_band(ref_band: np.ndarray, test_band: np.ndarray) -> float:
    _check_same_dims(ref_band, test_band)
    w = SSIM_WINDOW
    if ref_band.shape[0] < w or ref_band.shape[1] < w:
        raise ValueError(f"band smaller than the {w}x{w} SSIM window")
    n = float(w * w)
    mu_x = _window_sums(ref_band, w) / n
    mu_y = _window_sums(test_band, w) / n
    var_x = _window_sums(ref_band**2, w) / n - mu_x**2
    var_y = _window_sums(test_band**2, w) / n - mu_y**2
    cov = _window_sums(ref_band * test_band, w) / n - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


def ergas(ref, test) -> float:
    ref = _as_data(ref)
    test = _as_data(test)
    _check_same_dims(ref, test)
    means = np.mean(ref, axis=(0, 1))
    if np.any(means == 0.0):
        raise ValueError("reference band with zero mean")
    mse = np.mean((ref - test) ** 2, axis=(0, 1))
    return float(100.0 * np.sqrt(np.mean(mse / means**2)))


def msa(ref, test) -> float:
    """Mean spectral angle over pixels, in radians; zero spectra are skipped."""
    return _msa_with_count(ref, test)[0]


def _msa_with_count(ref, test) -> tuple[float, int]:
    ref = _as_data(ref)
    test = _as_data(test)
    _check_same_dims(ref, test)
    flat_r = ref.reshape(-1, ref.shape[2])
    flat_t = test.reshape(-1, test.shape[2])
    norm_r = np.linalg.norm(flat_r, axis=1)
    norm_t = np.linalg.norm(flat_t, axis=1)
    valid = (norm_r > 0) & (norm_t > 0)
    skipped = int(np.sum(~valid))
    if not np.any(valid):
        raise ValueError("no valid spectra to compare")
    cosines = np.sum(flat_r[valid] * flat_t[valid], axis=1) / (norm_r[valid] * norm_t[valid])
    angles = np.arccos(np.clip(cosines, -1.0, 1.0))
    return float(np.mean(angles)), skipped


def evaluate(ref, test, runtime_seconds: float = 0.0) -> MetricsReport:
    """All indices at once, per band where applicable."""
    ref = _as_data(ref)
    test = _as_data(test)
    _check_same_dims(ref, test)
    bands = ref.shape[2]
    psnr = np.array([psnr_band(ref[:, :, b], test[:, :, b]) for b in range(bands)])
    ssim = np.array([ssim_band(ref[:, :, b], test[:, :, b]) for b in range(bands)])
    angle, skipped = _msa_with_count(ref, test)
    return MetricsReport(
        psnr=psnr,
        ssim=ssim,
        ergas=ergas(ref, test),
        msa=angle,
        runtime_seconds=runtime_seconds,
        skipped_spectra=skipped,
    )


def write_report_csv(report: MetricsReport, path) -> None:
    """One row per band, then a summary row carrying the cube-level indices."""
    header = ["band", "psnr_db", "ssim", "ergas", "msa_rad", "runtime_s"]
    rows: list[list] = [
        [b + 1, report.psnr[b], report.ssim[b], "", "", ""] for b in range(len(report.psnr))
    ]
    rows.append(
        ["mean", report.mpsnr, report.mssim, report.ergas, report.msa, report.runtime_seconds]
    )
    write_csv(path, header, rows)
