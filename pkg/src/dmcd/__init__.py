"""Directional mean curvature demixing.

Given a blurred, noisy grayscale image and the blur kernel that produced it,
the solver splits the image into a piecewise-smooth part, an oriented
texture part, a fine-scale residual, and noise, while undoing the blur.
The package also provides the directional filter banks and multiscale frame
systems the solver is built from, plus evaluation metrics and a small
experiment pipeline with a command line front end.
"""

from .diffops import (
    DirectionBank,
    backward_diff,
    backward_diff_at,
    direction_symbol,
    directional_curvature,
    directional_laplacian,
    divergence,
    dmc_norm,
    forward_diff,
    forward_diff_at,
    gradient,
)
from .frames import (
    CoefficientPyramid,
    FrameSet,
    MultiscaleFrameSet,
    analyze,
    build_multiscale,
    build_u_frames,
    build_xi_theta,
    cst,
    export_spectra,
    sup_coeff,
    synthesize,
)
from .grid import (
    angular_frequencies,
    circular_convolve,
    dft2,
    idft2,
    time_reverse,
)
from .metrics import (
    MetricsReport,
    mec,
    mse,
    qq_export,
    qq_pairs,
    qq_r_squared,
    sparsity,
)
from .pipeline import (
    ExperimentConfig,
    add_noise,
    load_image,
    make_blur_kernel,
    parse_config,
    parse_config_text,
    parse_kernel_spec,
    run_experiment,
    save_image,
)
from .prox import l1_ball_project, shrink, vector_shrink
from .solver import (
    Decomposition,
    SolverParams,
    SolverState,
    demix,
    init_state,
    load_state,
    relative_error,
    save_state,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientPyramid",
    "Decomposition",
    "DirectionBank",
    "ExperimentConfig",
    "FrameSet",
    "MetricsReport",
    "MultiscaleFrameSet",
    "SolverParams",
    "SolverState",
    "add_noise",
    "analyze",
    "angular_frequencies",
    "backward_diff",
    "backward_diff_at",
    "build_multiscale",
    "build_u_frames",
    "build_xi_theta",
    "circular_convolve",
    "cst",
    "demix",
    "dft2",
    "direction_symbol",
    "directional_curvature",
    "directional_laplacian",
    "divergence",
    "dmc_norm",
    "export_spectra",
    "forward_diff",
    "forward_diff_at",
    "gradient",
    "idft2",
    "init_state",
    "l1_ball_project",
    "load_image",
    "load_state",
    "make_blur_kernel",
    "mec",
    "mse",
    "parse_config",
    "parse_config_text",
    "parse_kernel_spec",
    "qq_export",
    "qq_pairs",
    "qq_r_squared",
    "relative_error",
    "run_experiment",
    "save_image",
    "save_state",
    "shrink",
    "sparsity",
    "sup_coeff",
    "synthesize",
    "time_reverse",
    "vector_shrink",
    "__version__",
]
