"""Mixed-noise removal for hyperspectral cubes: spectral subspace projection,
nonlocal patch grouping, weighted low-rank Tucker shrinkage, and an
alternating-minimization outer loop, plus noise simulators and quality
metrics for evaluating runs."""

from .io import HsiCube, denormalize, normalize, read_config, read_cube, write_cube
from .metrics import MetricsReport, ergas, evaluate, msa, psnr_band, ssim_band
from .noise import NoiseSpec, NoiseTruth, add_case_noise, case_spec
from .patches import (
    GroupIndex,
    PatchGrid,
    aggregate,
    block_match,
    build_grid,
    extract_group,
    scatter_group,
)
from .solver import (
    SolverConfig,
    SolveDiagnostics,
    denoise,
    iterate_regularization,
    objective,
    soft_threshold,
    update_basis,
    update_reduced,
    update_sparse,
)
from .subspace import (
    NoiseEstimate,
    SubspaceBasis,
    estimate_noise,
    project,
    reconstruct,
    select_rank_and_basis,
)
from .tensor import (
    SvdResult,
    TuckerFactors,
    fold_mode,
    frobenius_norm,
    hosvd,
    kronecker,
    l1_norm,
    mode_product,
    thin_svd,
    unfold_mode,
)
from .wlrtr import GroupEstimate, compute_weights, denoise_group, shrink_core, update_factor

__version__ = "0.1.0"
