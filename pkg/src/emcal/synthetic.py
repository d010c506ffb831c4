"""Synthetic validation imagery.

Three generator families back the built-in validation suite:

* radial-gradient disk patterns whose in-plane statistics are isotropic,
* controlled compression of a pattern along Y (the stretching ground truth),
* isotropic smoothed-noise volumes sliced at known spacings (the thickness
  ground truth).

All generators are pure functions of their configuration, seed included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import ImagePlane, ImageStack, Resolution
from .util import make_rng

_PLACEMENT_RETRY_FACTOR = 100


@dataclass(frozen=True)
class PatternConfig:
    """Radial-gradient disk pattern parameters."""

    width_px: int = 1000
    height_px: int = 1000
    disk_count: int = 300
    radius_min_px: float = 8.0
    radius_max_px: float = 25.0
    peak: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.width_px < 4 or self.height_px < 4:
            raise ValueError("pattern must be at least 4x4 pixels")
        if self.disk_count < 1:
            raise ValueError(f"disk_count must be >= 1, got {self.disk_count}")
        if self.radius_min_px < 2.0:
            raise ValueError(f"minimum radius must be >= 2 px, got {self.radius_min_px}")
        if self.radius_max_px < self.radius_min_px:
            raise ValueError("radius_max_px must be >= radius_min_px")
        if not 0.0 < self.peak <= 1.0:
            raise ValueError(f"peak intensity must lie in (0, 1], got {self.peak}")


@dataclass(frozen=True)
class VolumeConfig:
    """Isotropic smoothed-noise volume parameters."""

    dims: tuple[int, int, int] = (128, 128, 128)  # (x, y, z) voxels
    smoothing_vx: float = 4.0
    voxel_nm: float = 5.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if len(self.dims) != 3 or any(v < 16 for v in self.dims):
            raise ValueError(f"volume dims must be >= 16 voxels per axis, got {self.dims}")
        if self.smoothing_vx < 1.0:
            raise ValueError(f"smoothing scale must be >= 1 voxel, got {self.smoothing_vx}")
        if self.voxel_nm <= 0.0:
            raise ValueError(f"voxel size must be positive, got {self.voxel_nm}")


def gen_radial_pattern(cfg: PatternConfig, resolution: Resolution | None = None) -> ImagePlane:
    """Seeded pattern of disks whose intensity falls linearly from peak to 0.

    Disk placement is uniform over positions where the disk fits entirely
    inside the image; overlaps compose by maximum. Requesting radii that can
    never fit raises after a bounded number of retries.
    """
    if resolution is None:
        resolution = Resolution(10.0, 10.0)
    rng = make_rng(cfg.seed)
    img = np.zeros((cfg.height_px, cfg.width_px), dtype=np.float64)
    max_fit = (min(cfg.width_px, cfg.height_px) - 1) / 2.0
    placed = 0
    attempts = 0
    budget = _PLACEMENT_RETRY_FACTOR * cfg.disk_count
    while placed < cfg.disk_count:
        attempts += 1
        if attempts > budget:
            raise ValueError(
                f"could not place {cfg.disk_count} disks with radii "
                f"[{cfg.radius_min_px}, {cfg.radius_max_px}] in a "
                f"{cfg.width_px}x{cfg.height_px} image after {budget} attempts"
            )
        radius = float(rng.uniform(cfg.radius_min_px, cfg.radius_max_px))
        if radius > max_fit:
            continue
        cx = float(rng.uniform(radius, cfg.width_px - 1 - radius))
        cy = float(rng.uniform(radius, cfg.height_px - 1 - radius))
        x0 = int(math.floor(cx - radius))
        x1 = int(math.ceil(cx + radius)) + 1
        y0 = int(math.floor(cy - radius))
        y1 = int(math.ceil(cy + radius)) + 1
        yy = np.arange(y0, y1, dtype=np.float64)[:, None]
        xx = np.arange(x0, x1, dtype=np.float64)[None, :]
        dist = np.hypot(xx - cx, yy - cy)
        disk = np.clip(cfg.peak * (1.0 - dist / radius), 0.0, None)
        region = img[y0:y1, x0:x1]
        np.maximum(region, disk, out=region)
        placed += 1
    return ImagePlane(img, resolution)


def compress_y(img: ImagePlane, factor: float) -> ImagePlane:
    """Rescale the image content along Y by ``factor`` in (0, 1].

    Output height is round(height * factor); rows are resampled linearly at
    pixel centers. The stored resolution is left unchanged: the compression
    is treated as a latent distortion to be recovered from the statistics.
    """
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"compression factor must lie in (0, 1], got {factor}")
    if factor == 1.0:
        return img
    height = img.height
    out_h = int(math.floor(height * factor + 0.5))
    if out_h < 2:
        raise ValueError(f"compressed height {out_h} is below the 2-pixel minimum")
    scale = height / out_h
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * scale - 0.5
    ys = np.clip(ys, 0.0, height - 1)
    lo = np.floor(ys).astype(np.intp)
    hi = np.minimum(lo + 1, height - 1)
    w = (ys - lo)[:, None]
    vals = img.values
    out = vals[lo, :] * (1.0 - w) + vals[hi, :] * w
    return ImagePlane(np.clip(out, 0.0, 1.0), img.resolution)


def gen_isotropic_volume(cfg: VolumeConfig) -> np.ndarray:
    """Seeded white noise smoothed by an isotropic Gaussian, scaled to [0, 1].

    Returned array has shape (z, y, x). Periodic boundary handling keeps the
    statistics stationary right up to the faces.
    """
    nx, ny, nz = cfg.dims
    rng = make_rng(cfg.seed)
    noise = rng.standard_normal((nz, ny, nx))
    smooth = gaussian_filter(noise, sigma=cfg.smoothing_vx, mode="wrap")
    lo = float(smooth.min())
    hi = float(smooth.max())
    if hi <= lo:
        raise ValueError("degenerate volume: smoothing removed all variation")
    return (smooth - lo) / (hi - lo)


def slice_volume(volume: np.ndarray, spacing_voxels: int, voxel_nm: float) -> ImageStack:
    """Extract planes at z = 0, spacing, 2*spacing, ... from a (z, y, x) volume."""
    if spacing_voxels < 1:
        raise ValueError(f"spacing must be >= 1 voxel, got {spacing_voxels}")
    if volume.ndim != 3:
        raise ValueError(f"volume must be 3-D, got shape {volume.shape}")
    planes_raw = volume[::spacing_voxels]
    if planes_raw.shape[0] < 2:
        raise ValueError(
            f"spacing {spacing_voxels} leaves {planes_raw.shape[0]} plane(s); need at least 2"
        )
    res = Resolution(voxel_nm, voxel_nm)
    planes = tuple(ImagePlane(p, res) for p in planes_raw)
    return ImageStack(planes, nominal_spacing_nm=spacing_voxels * voxel_nm)
