"""Hyperspectral super-resolution by global-local low-rank estimation.

The package fuses a low-spatial-resolution hyperspectral image with a
high-spatial-resolution multispectral image of the same scene. The
latent image is recovered by minimising a data-fit term plus smoothed
Schatten-p penalties on the whole image and on its patches, using
majorise-minimise solvers with extrapolated projected-gradient steps.
"""

from .estimators import LowRankFusion, NuclearNormFusion
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    FormatError,
    GenerationError,
    GloriaError,
)
from .metrics import MetricsReport, ergas, evaluate, psnr, sam, sam_map_to_pgm, uiqi
from .operators import (
    HSImage,
    NoiseSpec,
    SpatialResponse,
    SpectralResponse,
    band_groups,
    build_spatial_response,
    build_spectral_response,
    degrade,
    wald_simulate,
)
from .patches import PatchLayout, grid_layout, random_rect_layout
from .schatten import (
    RankTableRow,
    SchattenParams,
    WeightMatrix,
    approx_rank,
    phi,
    psi,
    rank_table,
    weight,
)
from .solvers import (
    Problem,
    SolveReport,
    build_problem,
    default_gamma,
    exact_mm_solve,
    extrapolation_step,
    gloria_solve,
    grad_loss,
    lipschitz,
    loss,
    majorant_gradient,
    majorant_value,
    nnm_solve,
    nominal_pg_solve,
    objective,
    project_box,
    svt,
    weights_at,
)
from .synth import apply_ev, gen_abundances, gen_endmembers, gen_scene

__version__ = "0.1.0"

__all__ = [
    "HSImage",
    "SpectralResponse",
    "SpatialResponse",
    "NoiseSpec",
    "band_groups",
    "build_spectral_response",
    "build_spatial_response",
    "degrade",
    "wald_simulate",
    "PatchLayout",
    "grid_layout",
    "random_rect_layout",
    "SchattenParams",
    "WeightMatrix",
    "phi",
    "psi",
    "weight",
    "approx_rank",
    "rank_table",
    "RankTableRow",
    "Problem",
    "SolveReport",
    "build_problem",
    "default_gamma",
    "loss",
    "grad_loss",
    "objective",
    "weights_at",
    "majorant_value",
    "majorant_gradient",
    "lipschitz",
    "project_box",
    "extrapolation_step",
    "gloria_solve",
    "nominal_pg_solve",
    "exact_mm_solve",
    "nnm_solve",
    "svt",
    "psnr",
    "sam",
    "ergas",
    "uiqi",
    "evaluate",
    "MetricsReport",
    "sam_map_to_pgm",
    "gen_endmembers",
    "apply_ev",
    "gen_abundances",
    "gen_scene",
    "LowRankFusion",
    "NuclearNormFusion",
    "GloriaError",
    "ConfigError",
    "ConvergenceError",
    "DivergenceError",
    "FormatError",
    "GenerationError",
    "__version__",
]
