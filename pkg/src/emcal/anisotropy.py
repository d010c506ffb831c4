"""Stretching-coefficient estimation and rotation scanning.

The stretching coefficient gamma_yx measures how compressed the Y axis is
relative to the X axis. It is obtained by pushing the dissimilarity of a
one-pixel Y shift through the X-axis distance regressor: the predicted
distance, expressed in X-pixel units, is the apparent length n_hat of one
Y pixel, and gamma_yx = aspect_ratio / n_hat. Values below 1 mean Y is
relatively compressed.

Because the in-plane axes are an arbitrary choice, ``rotation_scan``
re-estimates gamma for a range of candidate axis orientations; the minimum
of the curve marks the orientation whose X axis is least stretched.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .config import CalibrationConfig
from .core import ImagePlane, ImageStack
from .dissimilarity import sdi
from .errors import EmcalError
from .gp import GpModel, predict
from .util import GAMMA_STREAM, make_rng, child_seed, worker_count

_TRIG_SNAP = 1e-12


@dataclass(frozen=True)
class GammaEstimate:
    """Aggregated stretching coefficient with per-plane detail.

    The identity gamma_yx * n_hat_yx == aspect_ratio holds by construction
    (up to floating-point rounding).
    """

    gamma_yx: float
    n_hat_yx: float
    aspect_ratio: float
    per_plane_values: tuple[float, ...]
    std: float

    def __post_init__(self):
        if not self.gamma_yx > 0.0:
            raise ValueError(f"gamma_yx must be positive, got {self.gamma_yx}")
        object.__setattr__(self, "per_plane_values", tuple(self.per_plane_values))


@dataclass(frozen=True)
class RotationScan:
    """Gamma estimates over candidate axis orientations."""

    angles_deg: tuple[float, ...]
    gammas: tuple[float, ...]
    gamma_star: float
    angle_star: float

    def __post_init__(self):
        object.__setattr__(self, "angles_deg", tuple(self.angles_deg))
        object.__setattr__(self, "gammas", tuple(self.gammas))
        if len(self.angles_deg) != len(self.gammas):
            raise ValueError("angle and gamma lists must have equal length")
        if self.gammas and self.gamma_star != min(self.gammas):
            raise ValueError("gamma_star must be the minimum of the curve")


def estimate_gamma(
    fx: GpModel, planes: Sequence[ImagePlane], cfg: CalibrationConfig
) -> GammaEstimate:
    """Estimate the stretching coefficient gamma_yx from one-pixel Y shifts.

    For each plane the mean SDI of seeded patch pairs offset by exactly one
    pixel along Y is mapped through the X-axis regressor ``fx`` to a distance,
    giving the apparent Y pixel length in X-pixel units. Per-plane gammas are
    averaged; the spread across planes is reported as ``std``.
    """
    planes = list(planes)
    if not planes:
        raise ValueError("need at least one plane to estimate gamma")
    res = planes[0].resolution
    aspect = res.aspect_ratio
    per_plane: list[float] = []
    for idx, plane in enumerate(planes):
        patch_w, patch_h = cfg.patch_shape(plane)
        if patch_h + 1 > plane.height:
            raise ValueError(
                f"patch height {patch_h} leaves no room for a one-pixel Y shift "
                f"in a {plane.height}-pixel-tall image"
            )
        rng = make_rng(child_seed(cfg.seed, GAMMA_STREAM, idx))
        vals = plane.values
        sdis = np.empty(cfg.positions_per_shift, dtype=np.float64)
        for j in range(cfg.positions_per_shift):
            x = int(rng.integers(0, plane.width - patch_w + 1))
            y = int(rng.integers(0, plane.height - patch_h - 1 + 1))
            a = vals[y : y + patch_h, x : x + patch_w]
            b = vals[y + 1 : y + 1 + patch_h, x : x + patch_w]
            sdis[j] = sdi(a, b)
        s_plane = float(np.mean(sdis))
        d_hat = predict(fx, s_plane).mean
        if d_hat <= 0.0:
            raise EmcalError(
                f"regressor predicted a non-positive distance ({d_hat:.4g} nm) for a "
                "one-pixel shift; it is inconsistent with the imagery"
            )
        n_hat_plane = d_hat / res.dx
        per_plane.append(aspect / n_hat_plane)
    gamma = float(np.mean(per_plane))
    return GammaEstimate(
        gamma_yx=gamma,
        n_hat_yx=aspect / gamma,
        aspect_ratio=aspect,
        per_plane_values=tuple(per_plane),
        std=float(np.std(per_plane)),
    )


def _largest_axis_aligned_crop(w: float, h: float, cos_a: float, sin_a: float) -> tuple[float, float]:
    """Largest centered axis-aligned rectangle inside a rotated w x h rectangle.

    ``w`` and ``h`` are continuous extents; the result is (crop_w, crop_h).
    """
    sa, ca = abs(sin_a), abs(cos_a)
    if sa < _TRIG_SNAP:
        return w, h
    if ca < _TRIG_SNAP:
        return h, w
    short = min(w, h)
    if short <= 2.0 * sa * ca * max(w, h) or abs(sa - ca) < 1e-10:
        # Fully constrained by the short side: two crop corners touch the
        # midpoints of the rotated rectangle's long edges.
        half = 0.5 * short
        if w >= h:
            return half / sa, half / ca
        return half / ca, half / sa
    cos2 = ca * ca - sa * sa
    return (w * ca - h * sa) / cos2, (h * ca - w * sa) / cos2


def rotate_plane(img: ImagePlane, angle_deg: float) -> ImagePlane:
    """Rotate image content about its center and crop to the valid interior.

    Bilinear resampling; the output is the largest centered axis-aligned
    rectangle that lies fully inside the rotated footprint, so it contains no
    invalid pixels. Positive angles move content from the +X direction toward
    +Y (downward on screen). Resolution metadata is preserved.
    """
    angle = float(angle_deg) % 360.0
    if angle == 0.0:
        return img
    theta = math.radians(angle)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    if abs(cos_t) < _TRIG_SNAP:
        cos_t = 0.0
    if abs(sin_t) < _TRIG_SNAP:
        sin_t = 0.0
    if abs(abs(cos_t) - 1.0) < _TRIG_SNAP:
        cos_t = math.copysign(1.0, cos_t)
    if abs(abs(sin_t) - 1.0) < _TRIG_SNAP:
        sin_t = math.copysign(1.0, sin_t)

    extent_w = img.width - 1.0
    extent_h = img.height - 1.0
    crop_w_f, crop_h_f = _largest_axis_aligned_crop(extent_w, extent_h, cos_t, sin_t)
    crop_w = int(math.floor(crop_w_f + 1e-9)) + 1
    crop_h = int(math.floor(crop_h_f + 1e-9)) + 1
    if crop_w < 2 or crop_h < 2:
        raise ValueError(
            f"rotating a {img.width}x{img.height} image by {angle_deg} deg leaves a "
            f"{crop_w}x{crop_h} crop; need at least 2x2"
        )

    xo = np.arange(crop_w, dtype=np.float64) - (crop_w - 1) / 2.0
    yo = np.arange(crop_h, dtype=np.float64) - (crop_h - 1) / 2.0
    xg, yg = np.meshgrid(xo, yo)
    # Inverse map: source position of each output pixel.
    xs = cos_t * xg - sin_t * yg + extent_w / 2.0
    ys = sin_t * xg + cos_t * yg + extent_h / 2.0
    out = map_coordinates(img.values, [ys, xs], order=1, mode="nearest")
    return ImagePlane(np.clip(out, 0.0, 1.0), img.resolution)


def gamma_for_planes(planes: Sequence[ImagePlane], cfg: CalibrationConfig) -> GammaEstimate:
    """Train an X-axis regressor on the given planes and estimate gamma from it."""
    from .calibration import build_axis_dataset, train_axis_model
    from .core import Axis

    dataset = build_axis_dataset(planes, Axis.X, cfg)
    fx, _ = train_axis_model(dataset, cfg)
    return estimate_gamma(fx, planes, cfg)


def rotation_scan(
    stack: ImageStack, angles_deg: Sequence[float], cfg: CalibrationConfig
) -> RotationScan:
    """Estimate gamma_yx for a list of candidate axis orientations.

    Each angle names the orientation of the candidate X axis within the input
    planes; the calibration planes are resampled so that this axis becomes
    horizontal, the X regressor is retrained on the resampled data and gamma
    is re-estimated. The minimum of the curve marks the least-stretched axis.
    """
    angles = [float(a) for a in angles_deg]
    if not angles:
        raise ValueError("angle list must not be empty")
    for a in angles:
        if not 0.0 <= a < 180.0:
            raise ValueError(f"scan angles must lie in [0, 180), got {a}")
    indices = cfg.plane_indices(len(stack))
    planes = [stack.planes[i] for i in indices]

    def gamma_at(angle: float) -> float:
        rotated = [rotate_plane(p, -angle) for p in planes]
        return gamma_for_planes(rotated, cfg).gamma_yx

    with ThreadPoolExecutor(max_workers=worker_count(len(angles))) as pool:
        gammas = list(pool.map(gamma_at, angles))
    best = int(np.argmin(gammas))
    return RotationScan(
        angles_deg=tuple(angles),
        gammas=tuple(gammas),
        gamma_star=gammas[best],
        angle_star=angles[best],
    )
