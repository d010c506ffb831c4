"""Per-pair section thickness estimation and the patch-size sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import CalibrationConfig
from .core import Axis, ImageStack
from .dissimilarity import pair_dissimilarity
from .gp import GpModel, predict
from .util import PAIR_STREAM, child_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThicknessEstimate:
    """Predicted distance between sections k and k+1, attributed to section k."""

    pair_index: int
    dissimilarity: float
    thickness_nm: float
    std_nm: float


@dataclass(frozen=True, eq=False)
class ThicknessReport:
    """All per-pair estimates plus their summary statistics."""

    estimates: tuple[ThicknessEstimate, ...]
    mean_nm: float
    std_nm: float
    axis_used: Axis | None = None
    gamma_yx: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimates", tuple(self.estimates))


@dataclass(frozen=True)
class SweepPoint:
    """Thickness summary at one patch size."""

    size_px: int
    mean_nm: float
    std_nm: float


def estimate_stack_thickness(
    stack: ImageStack,
    model: GpModel,
    cfg: CalibrationConfig,
    axis_used: Axis | None = None,
    gamma_yx: float | None = None,
) -> ThicknessReport:
    """Predict the thickness of every adjacent pair in the stack.

    Each pair's dissimilarity is the mean SDI over seeded co-located patches,
    pushed through the regressor's predictive distribution. Negative
    predictive means are reported as-is (with a log warning), never clamped.
    """
    if len(stack) < 2:
        raise ValueError(f"need at least two planes, got {len(stack)}")
    patch_w, patch_h = cfg.patch_shape(stack.planes[0])
    estimates = []
    for k in range(len(stack) - 1):
        seed = child_seed(cfg.seed, PAIR_STREAM, k)
        s = pair_dissimilarity(stack, k, patch_w, patch_h, cfg.positions_per_shift, seed)
        pred = predict(model, s)
        if pred.mean < 0.0:
            log.warning(
                "pair %d: negative predicted thickness %.4g nm (dissimilarity %.4g)",
                k,
                pred.mean,
                s,
            )
        estimates.append(
            ThicknessEstimate(
                pair_index=k,
                dissimilarity=s,
                thickness_nm=pred.mean,
                std_nm=pred.std,
            )
        )
    means = np.array([e.thickness_nm for e in estimates])
    spread = float(np.std(means, ddof=1)) if means.size > 1 else 0.0
    return ThicknessReport(
        estimates=tuple(estimates),
        mean_nm=float(np.mean(means)),
        std_nm=spread,
        axis_used=axis_used,
        gamma_yx=gamma_yx,
    )


def size_sweep(
    stack: ImageStack, cfg: CalibrationConfig, sizes_px: Sequence[int]
) -> list[SweepPoint]:
    """Thickness summaries over square patch sizes, recalibrating per size."""
    from .calibration import calibrate

    sizes = [int(s) for s in sizes_px]
    if not sizes:
        raise ValueError("size list must not be empty")
    points = []
    for size in sizes:
        cfg_size = replace(cfg, patch_w_px=size, patch_h_px=size)
        result = calibrate(stack, cfg_size)
        report = estimate_stack_thickness(
            stack,
            result.model_for(result.chosen_axis),
            cfg_size,
            axis_used=result.chosen_axis,
            gamma_yx=result.gamma_yx,
        )
        points.append(SweepPoint(size_px=size, mean_nm=report.mean_nm, std_nm=report.std_nm))
    return points
