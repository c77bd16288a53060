"""Command-line driver: simulate noise, denoise, compare cubes, benchmark.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.  Every
command writes a JSON manifest next to its primary output with the resolved
parameters; re-running the recorded command reproduces the outputs
bit-identically.

Heavy imports happen after argument parsing so --threads (or the
SWLRTR_THREADS fallback) can cap the BLAS thread pools, which must be set
in the environment before the numeric stack loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path


class UsageError(Exception):
    """Config or argument problem: exit code 2."""


def _apply_threads(threads: int | None) -> None:
    if threads is None:
        env = os.environ.get("SWLRTR_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise UsageError(f"--threads must be >= 1, got {threads}")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swlrtr", description="Mixed-noise removal for hyperspectral cubes"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="inject a simulated noise case into a clean cube")
    sim.add_argument("clean", help="clean cube file (values in [0,1])")
    sim.add_argument("--case", type=int, required=True, choices=(1, 2, 3, 4))
    sim.add_argument("--seed", type=int, required=True, help="mandatory for reproducibility")
    sim.add_argument("--out", required=True, help="noisy cube output path")
    sim.add_argument("--impulse-bands", type=int, default=20)
    sim.add_argument("--deadline-bands", type=int, default=20)
    sim.add_argument("--threads", type=int, default=None)

    den = sub.add_parser("denoise", help="run the full denoising pipeline")
    den.add_argument("noisy", help="noisy cube file")
    den.add_argument("--out", required=True, help="denoised cube output path")
    den.add_argument("--config", help="key = value config file")
    den.add_argument("--truth", help="ground-truth cube for quality metrics")
    den.add_argument("--k", type=int, default=None)
    den.add_argument("--p", type=int, default=None)
    den.add_argument("--q", type=int, default=None)
    den.add_argument("--lambda1", type=float, default=None)
    den.add_argument("--lambda2", type=float, default=None)
    den.add_argument("--alpha", type=float, default=None)
    den.add_argument("--beta", type=float, default=None)
    den.add_argument("--iters", type=int, default=None, help="outer iterations")
    den.add_argument("--seed", type=int, default=None, help="recorded in the manifest")
    den.add_argument("--threads", type=int, default=None)

    met = sub.add_parser("metrics", help="quality indices between two cubes")
    met.add_argument("reference")
    met.add_argument("test")
    met.add_argument("--out", required=True, help="CSV report path")
    met.add_argument("--threads", type=int, default=None)

    ben = sub.add_parser("bench", help="time the pipeline stages across cube sizes")
    ben.add_argument("--sizes", required=True, help="comma list like 32x32x16,48x48x16")
    ben.add_argument("--out", required=True, help="CSV output path")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--config", help="key = value config file")
    ben.add_argument("--threads", type=int, default=None)
    return parser


_CONFIG_KEYS = {
    "p": int,
    "q": int,
    "k": int,
    "lambda1": float,
    "lambda2": float,
    "alpha": float,
    "beta": float,
    "c": float,
    "eps": float,
    "iters": int,
    "core_rounds": int,
    "max_cycles": int,
    "tol": float,
    "stride": int,
    "window": int,
    "sigma_per_group": lambda v: v.lower() in ("1", "true", "yes"),
}

_FLAG_TO_FIELD = {"iters": "outer_iters"}


def resolve_config(args) -> "SolverConfig":
    from .io import read_config
    from .solver import SolverConfig

    values: dict = {}
    problems: list[str] = []
    if getattr(args, "config", None):
        try:
            raw = read_config(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        for key, text in raw.items():
            if key not in _CONFIG_KEYS:
                problems.append(f"unknown config key {key!r}")
                continue
            try:
                values[_FLAG_TO_FIELD.get(key, key)] = _CONFIG_KEYS[key](text)
            except ValueError:
                problems.append(f"bad value for {key!r}: {text!r}")
    for flag in ("k", "p", "q", "lambda1", "lambda2", "alpha", "beta", "iters"):
        given = getattr(args, flag, None)
        if given is not None:
            values[_FLAG_TO_FIELD.get(flag, flag)] = given
    cfg = SolverConfig(**values) if not problems else None
    if cfg is not None:
        problems.extend(cfg.validate())
    if problems:
        raise UsageError("config errors: " + "; ".join(problems))
    return cfg


def _write_manifest(primary_out: str, command: str, args_dict: dict, outputs: list[str], seconds: float, config=None) -> None:
    manifest = {
        "command": command,
        "arguments": args_dict,
        "outputs": outputs,
        "wall_seconds": seconds,
    }
    if config is not None:
        manifest["config"] = {
            k: (v if not isinstance(v, tuple) else list(v)) for k, v in vars(config).items()
        }
    Path(str(primary_out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def cmd_simulate(args) -> int:
    from .io import HsiCube, read_cube, write_cube
    from .noise import case_spec, add_case_noise

    start = time.perf_counter()
    clean = read_cube(args.clean)
    overrides = {}
    if args.case >= 3:
        overrides["impulse_bands"] = args.impulse_bands
    if args.case >= 4:
        overrides["deadline_bands"] = args.deadline_bands
    spec = case_spec(args.case, seed=args.seed, **overrides)
    noisy, truth = add_case_noise(clean, spec)

    write_cube(noisy, args.out)
    sparse_path = str(args.out) + ".sparse"
    mask_path = str(args.out) + ".mask"
    write_cube(HsiCube(data=truth.sparse_delta, value_range=(0.0, 1.0)), sparse_path)
    write_cube(
        HsiCube(data=truth.sparse_mask.astype(float), value_range=(0.0, 1.0)),
        mask_path,
        dtype="float32",
    )
    truth_path = str(args.out) + ".truth.json"
    Path(truth_path).write_text(
        json.dumps(
            {
                "case": spec.case,
                "seed": spec.seed,
                "sigma_per_band": truth.sigma_per_band.tolist(),
                "impulse_bands": truth.impulse_bands,
                "deadline_bands": truth.deadline_bands,
            },
            indent=2,
        )
        + "\n"
    )
    outputs = [str(args.out), sparse_path, mask_path, truth_path]
    _write_manifest(
        args.out,
        "simulate",
        {"clean": args.clean, "case": args.case, "seed": args.seed,
         "impulse_bands": args.impulse_bands, "deadline_bands": args.deadline_bands},
        outputs,
        time.perf_counter() - start,
    )
    print(f"wrote {args.out} (case {args.case}, seed {args.seed})")
    return 0


def cmd_denoise(args) -> int:
    from .io import HsiCube, read_cube, write_cube, write_csv
    from .metrics import evaluate, write_report_csv
    from .plots import render_band_metrics, render_diagnostics
    from .solver import denoise

    cfg = resolve_config(args)
    start = time.perf_counter()
    noisy = read_cube(args.noisy)
    truth = read_cube(args.truth) if args.truth else None

    x, s, diag = denoise(noisy.data, cfg, truth=None if truth is None else truth.data)
    elapsed = time.perf_counter() - start

    write_cube(HsiCube(data=x, value_range=noisy.value_range), args.out)
    sparse_path = str(args.out) + ".sparse"
    write_cube(HsiCube(data=s, value_range=noisy.value_range), sparse_path)

    diag_csv = str(args.out) + ".diagnostics.csv"
    rows = [
        [rec.iteration, rec.objective, "" if rec.mpsnr is None else rec.mpsnr,
         rec.k, rec.sigma2, rec.cycles, rec.seconds]
        for rec in diag.iterations
    ]
    write_csv(diag_csv, ["iteration", "objective", "mpsnr_db", "k", "sigma2", "cycles", "seconds"], rows)
    diag_png = str(args.out) + ".diagnostics.png"
    render_diagnostics(diag.iterations, diag_png)

    outputs = [str(args.out), sparse_path, diag_csv, diag_png]
    if truth is not None:
        report = evaluate(truth.data, x, runtime_seconds=elapsed)
        metrics_csv = str(args.out) + ".metrics.csv"
        write_report_csv(report, metrics_csv)
        bands_png = str(args.out) + ".bands.png"
        render_band_metrics(report, bands_png)
        outputs += [metrics_csv, bands_png]
        print(
            f"MPSNR {report.mpsnr:.4f} dB  MSSIM {report.mssim:.4f}  "
            f"ERGAS {report.ergas:.3f}  MSA {report.msa:.4f} rad"
        )

    args_dict = {
        "noisy": args.noisy, "truth": args.truth, "config": args.config, "seed": args.seed,
    }
    _write_manifest(args.out, "denoise", args_dict, outputs, elapsed, config=cfg)
    print(f"wrote {args.out} in {elapsed:.1f}s")
    return 0


def cmd_metrics(args) -> int:
    from .io import read_cube
    from .metrics import evaluate, write_report_csv
    from .plots import render_band_metrics

    start = time.perf_counter()
    ref = read_cube(args.reference)
    test = read_cube(args.test)
    report = evaluate(ref.data, test.data, runtime_seconds=time.perf_counter() - start)
    write_report_csv(report, args.out)
    png = str(args.out) + ".png"
    render_band_metrics(report, png)
    _write_manifest(
        args.out,
        "metrics",
        {"reference": args.reference, "test": args.test},
        [str(args.out), png],
        time.perf_counter() - start,
    )
    print(
        f"MPSNR {report.mpsnr:.4f} dB  MSSIM {report.mssim:.4f}  "
        f"ERGAS {report.ergas:.3f}  MSA {report.msa:.4f} rad"
    )
    return 0


def _parse_sizes(text: str) -> list[tuple[int, int, int]]:
    sizes = []
    for token in filter(None, (t.strip() for t in text.split(","))):
        parts = token.lower().split("x")
        if len(parts) != 3:
            raise UsageError(f"bad size {token!r}, expected n1xn2xn3")
        try:
            sizes.append(tuple(int(v) for v in parts))
        except ValueError:
            raise UsageError(f"bad size {token!r}, expected integers") from None
    if not sizes:
        raise UsageError("--sizes must list at least one cube size")
    return sizes


def cmd_bench(args) -> int:
    import numpy as np

    from .io import HsiCube, write_csv
    from .noise import add_case_noise, case_spec
    from .plots import render_bench
    from .solver import denoise

    sizes = _parse_sizes(args.sizes)
    cfg = resolve_config(args)
    start = time.perf_counter()
    rows = []
    for n1, n2, n3 in sizes:
        rng = np.random.default_rng(args.seed)
        abund = rng.uniform(0.1, 1.0, size=(n1, n2, 3))
        sig = rng.uniform(0.1, 1.0, size=(3, n3))
        clean = np.tensordot(abund, sig, axes=(2, 0))
        clean /= clean.max()
        noisy, _ = add_case_noise(HsiCube(data=clean), case_spec(1, seed=args.seed))
        _, _, diag = denoise(noisy.data, cfg)
        for stage, seconds in sorted(diag.stage_seconds.items()):
            rows.append({"n1": n1, "n2": n2, "n3": n3, "stage": stage, "seconds": seconds})
        rows.append({"n1": n1, "n2": n2, "n3": n3, "stage": "total", "seconds": diag.total_seconds})
    write_csv(
        args.out,
        ["n1", "n2", "n3", "stage", "seconds"],
        [[r["n1"], r["n2"], r["n3"], r["stage"], r["seconds"]] for r in rows],
    )
    png = str(args.out) + ".png"
    render_bench(rows, png)
    _write_manifest(
        args.out,
        "bench",
        {"sizes": args.sizes, "seed": args.seed, "config": args.config},
        [str(args.out), png],
        time.perf_counter() - start,
        config=cfg,
    )
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "denoise": cmd_denoise,
    "metrics": cmd_metrics,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(getattr(args, "threads", None))
        return _COMMANDS[args.command](args)
    except (UsageError, FileNotFoundError) as exc:
        # bad arguments, bad config, or a path that does not exist
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
