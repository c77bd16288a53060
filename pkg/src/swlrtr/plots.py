"""Figure rendering for the report paths, next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_diagnostics(iterations, path) -> None:
    """Objective and band-mean PSNR against the outer iteration."""
    its = [rec.iteration for rec in iterations]
    fig, ax_obj = plt.subplots(figsize=(6, 4))
    ax_obj.plot(its, [rec.objective for rec in iterations], "o-", color="tab:blue")
    ax_obj.set_xlabel("outer iteration")
    ax_obj.set_ylabel("objective", color="tab:blue")
    ax_obj.set_xticks(its)
    if any(rec.mpsnr is not None for rec in iterations):
        ax_psnr = ax_obj.twinx()
        ax_psnr.plot(its, [rec.mpsnr for rec in iterations], "s--", color="tab:red")
        ax_psnr.set_ylabel("MPSNR (dB)", color="tab:red")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_band_metrics(report, path) -> None:
    """Per-band PSNR and SSIM curves."""
    bands = np.arange(1, len(report.psnr) + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(bands, report.psnr, "-", color="tab:blue")
    ax1.set_xlabel("band")
    ax1.set_ylabel("PSNR (dB)")
    ax2.plot(bands, report.ssim, "-", color="tab:green")
    ax2.set_xlabel("band")
    ax2.set_ylabel("SSIM")
    fig.suptitle(f"MPSNR {report.mpsnr:.2f} dB,  MSSIM {report.mssim:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_bench(rows, path) -> None:
    """Stage wall time against the spatial size, one line per stage."""
    stages = sorted({r["stage"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for stage in stages:
        pts = sorted(
            (r["n1"] * r["n2"], r["seconds"]) for r in rows if r["stage"] == stage
        )
        ax.plot([p for p, _ in pts], [s for _, s in pts], "o-", label=stage)
    ax.set_xlabel("pixels per band")
    ax.set_ylabel("seconds")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
