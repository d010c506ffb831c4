"""Per-axis calibration: dataset construction, regressor training, axis choice.

Calibration learns two distance-dissimilarity regressors (one per in-plane
axis) from shifted patch pairs, estimates the stretching coefficient through
the X regressor and selects the axis to use for thickness estimation: X when
gamma_yx <= 1 (Y relatively compressed), Y otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anisotropy import GammaEstimate, estimate_gamma
from .config import CalibrationConfig
from .core import Axis, ImagePlane, ImageStack
from .dissimilarity import DissimilarityDataset, sample_shifted_pairs
from .errors import DegenerateDataError
from .gp import GpModel, PowerLawFit, default_hyperparameters, fit_power_law_lm, train_gp
from .util import DATASET_STREAM, child_seed


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Both axis regressors plus the stretching estimate and axis choice."""

    fx: GpModel
    fy: GpModel
    fit_x: PowerLawFit
    fit_y: PowerLawFit
    gamma_yx: float
    chosen_axis: Axis
    dataset_x: DissimilarityDataset
    dataset_y: DissimilarityDataset
    gamma_detail: GammaEstimate

    def __post_init__(self):
        if not self.gamma_yx > 0.0:
            raise ValueError(f"gamma_yx must be positive, got {self.gamma_yx}")
        expected = Axis.X if self.gamma_yx <= 1.0 else Axis.Y
        if self.chosen_axis is not expected:
            raise ValueError(
                f"chosen_axis {self.chosen_axis} inconsistent with gamma_yx={self.gamma_yx}"
            )

    def model_for(self, axis: Axis) -> GpModel:
        return self.fx if axis is Axis.X else self.fy


def build_axis_dataset(
    planes: Sequence[ImagePlane], axis: Axis, cfg: CalibrationConfig
) -> DissimilarityDataset:
    """Concatenate shifted-pair samples from every calibration plane."""
    planes = list(planes)
    if not planes:
        raise ValueError("need at least one plane to build a dataset")
    patch_w, patch_h = cfg.patch_shape(planes[0])
    samples = []
    for idx, plane in enumerate(planes):
        seed = child_seed(cfg.seed, DATASET_STREAM, axis.tag, idx)
        samples.extend(
            sample_shifted_pairs(
                plane,
                axis,
                cfg.max_shift_px,
                patch_w,
                patch_h,
                cfg.positions_per_shift,
                seed,
            )
        )
    return DissimilarityDataset(
        samples=tuple(samples),
        axis=axis,
        patch_width_px=patch_w,
        patch_height_px=patch_h,
        source_count=len(planes),
    )


def train_axis_model(
    dataset: DissimilarityDataset, cfg: CalibrationConfig
) -> tuple[GpModel, PowerLawFit]:
    """Fit the power-law mean and train the GP for one axis dataset."""
    if len(dataset) == 0:
        raise DegenerateDataError(f"{dataset.axis.value} dataset is empty")
    s = dataset.dissimilarities
    d = dataset.distances_nm
    if np.unique(s).size < 2:
        raise DegenerateDataError(
            f"{dataset.axis.value} dataset is degenerate: all dissimilarities equal {s[0]:.6g}"
        )
    fit = fit_power_law_lm(s, d)
    hyper = default_hyperparameters(
        fit, sigma=cfg.sigma, ell=cfg.ell, noise_var=cfg.noise_var
    )
    return train_gp(s, d, hyper), fit


def calibrate(stack: ImageStack, cfg: CalibrationConfig) -> CalibrationResult:
    """Build both axis datasets, train both regressors and pick the axis."""
    indices = cfg.plane_indices(len(stack))
    planes = [stack.planes[i] for i in indices]
    dataset_x = build_axis_dataset(planes, Axis.X, cfg)
    dataset_y = build_axis_dataset(planes, Axis.Y, cfg)
    fx, fit_x = train_axis_model(dataset_x, cfg)
    fy, fit_y = train_axis_model(dataset_y, cfg)
    gamma = estimate_gamma(fx, planes, cfg)
    chosen = Axis.X if gamma.gamma_yx <= 1.0 else Axis.Y
    return CalibrationResult(
        fx=fx,
        fy=fy,
        fit_x=fit_x,
        fit_y=fit_y,
        gamma_yx=gamma.gamma_yx,
        chosen_axis=chosen,
        dataset_x=dataset_x,
        dataset_y=dataset_y,
        gamma_detail=gamma,
    )
