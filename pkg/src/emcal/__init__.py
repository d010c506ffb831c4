"""Section thickness and in-plane stretching estimation for image stacks.

The pipeline regresses physical distance on pairwise image dissimilarity
(learned per in-plane axis from shifted patches), predicts the spacing of
adjacent sections from their dissimilarity, and quantifies XY anisotropy as
the stretching coefficient gamma_yx.
"""

from .anisotropy import (
    GammaEstimate,
    RotationScan,
    estimate_gamma,
    gamma_for_planes,
    rotate_plane,
    rotation_scan,
)
from .calibration import CalibrationResult, build_axis_dataset, calibrate, train_axis_model
from .config import CalibrationConfig, RunConfig
from .core import Axis, ImagePlane, ImageStack, Resolution, normalize_intensities
from .dissimilarity import (
    DissimilarityDataset,
    PatchPairSample,
    pair_dissimilarity,
    sample_shifted_pairs,
    sdi,
)
from .errors import (
    DataFormatError,
    DegenerateDataError,
    EmcalError,
    FactorizationError,
    FitConvergenceError,
)
from .gp import (
    GpModel,
    Hyperparameters,
    PowerLawFit,
    Prediction,
    default_hyperparameters,
    fit_power_law_lm,
    log_marginal_likelihood,
    power_law_mean,
    predict,
    predict_many,
    se_kernel,
    train_gp,
)
from .plotting import emit_distance_dissimilarity_plot
from .stack_io import RunArtifacts, load_calibration, load_stack, save_calibration, write_reports
from .synthetic import (
    PatternConfig,
    VolumeConfig,
    compress_y,
    gen_isotropic_volume,
    gen_radial_pattern,
    slice_volume,
)
from .thickness import (
    SweepPoint,
    ThicknessEstimate,
    ThicknessReport,
    estimate_stack_thickness,
    size_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "CalibrationConfig",
    "CalibrationResult",
    "DataFormatError",
    "DegenerateDataError",
    "DissimilarityDataset",
    "EmcalError",
    "FactorizationError",
    "FitConvergenceError",
    "GammaEstimate",
    "GpModel",
    "Hyperparameters",
    "ImagePlane",
    "ImageStack",
    "PatchPairSample",
    "PatternConfig",
    "PowerLawFit",
    "Prediction",
    "Resolution",
    "RotationScan",
    "RunArtifacts",
    "RunConfig",
    "SweepPoint",
    "ThicknessEstimate",
    "ThicknessReport",
    "VolumeConfig",
    "build_axis_dataset",
    "calibrate",
    "compress_y",
    "default_hyperparameters",
    "emit_distance_dissimilarity_plot",
    "estimate_gamma",
    "estimate_stack_thickness",
    "fit_power_law_lm",
    "gamma_for_planes",
    "gen_isotropic_volume",
    "gen_radial_pattern",
    "load_calibration",
    "load_stack",
    "log_marginal_likelihood",
    "normalize_intensities",
    "pair_dissimilarity",
    "power_law_mean",
    "predict",
    "predict_many",
    "rotate_plane",
    "rotation_scan",
    "sample_shifted_pairs",
    "save_calibration",
    "sdi",
    "se_kernel",
    "size_sweep",
    "slice_volume",
    "train_axis_model",
    "train_gp",
    "write_reports",
]
