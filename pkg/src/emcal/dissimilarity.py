"""Pairwise image dissimilarity and shifted-patch sampling.

The dissimilarity measure is the standard deviation of pixelwise intensity
differences (SDI) between two equally sized regions. Training pairs for the
distance-dissimilarity regression come from patches of a single image offset
by a known number of pixels along one in-plane axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Axis, ImagePlane, ImageStack
from .util import make_rng


def sdi(a: np.ndarray, b: np.ndarray) -> float:
    """Standard deviation of pixelwise intensity differences.

    Returns sqrt(mean((a - b)^2)) over two regions of identical shape.
    Symmetric in its arguments and zero exactly when the regions agree
    elementwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"region shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("regions must contain at least one pixel")
    diff = a - b
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class PatchPairSample:
    """One (distance, dissimilarity) training point from an in-plane shift."""

    distance_px: int
    distance_nm: float
    dissimilarity: float
    axis: Axis

    def __post_init__(self):
        if self.distance_px < 1:
            raise ValueError(f"shift must be >= 1 pixel, got {self.distance_px}")
        if self.distance_nm <= 0.0:
            raise ValueError(f"distance must be positive, got {self.distance_nm}")
        if self.dissimilarity < 0.0:
            raise ValueError(f"dissimilarity must be non-negative, got {self.dissimilarity}")


@dataclass(frozen=True, eq=False)
class DissimilarityDataset:
    """Training points for one axis plus the sampling geometry that made them."""

    samples: tuple[PatchPairSample, ...]
    axis: Axis
    patch_width_px: int
    patch_height_px: int
    source_count: int

    def __post_init__(self):
        samples = tuple(self.samples)
        for s in samples:
            if s.axis is not self.axis:
                raise ValueError(f"sample axis {s.axis} does not match dataset axis {self.axis}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dissimilarities(self) -> np.ndarray:
        return np.array([s.dissimilarity for s in self.samples], dtype=np.float64)

    @property
    def distances_nm(self) -> np.ndarray:
        return np.array([s.distance_nm for s in self.samples], dtype=np.float64)


def _check_patch_fits(width: int, height: int, patch_w: int, patch_h: int) -> None:
    if patch_w < 1 or patch_h < 1:
        raise ValueError(f"patch must be at least 1x1, got {patch_w}x{patch_h}")
    if patch_w > width or patch_h > height:
        raise ValueError(
            f"patch {patch_w}x{patch_h} does not fit a {width}x{height} image"
        )


def sample_shifted_pairs(
    img: ImagePlane,
    axis: Axis,
    max_shift_px: int,
    patch_w_px: int,
    patch_h_px: int,
    positions_per_shift: int,
    seed: int,
) -> list[PatchPairSample]:
    """Sample SDI values between patch pairs offset by 1..max_shift_px pixels.

    For every shift n, ``positions_per_shift`` anchor positions are drawn
    uniformly (seeded) from the region where both patches fit. The output
    order is (shift, position index) and is bit-identical across runs for a
    fixed seed.
    """
    if max_shift_px < 1:
        raise ValueError(f"max_shift_px must be >= 1, got {max_shift_px}")
    if positions_per_shift < 1:
        raise ValueError(f"positions_per_shift must be >= 1, got {positions_per_shift}")
    _check_patch_fits(img.width, img.height, patch_w_px, patch_h_px)

    if axis is Axis.X:
        max_feasible = img.width - patch_w_px
    else:
        max_feasible = img.height - patch_h_px
    if max_shift_px > max_feasible:
        raise ValueError(
            f"max_shift_px={max_shift_px} with patch {patch_w_px}x{patch_h_px} does not fit "
            f"a {img.width}x{img.height} image along {axis.value}; "
            f"maximum feasible shift is {max_feasible}"
        )

    rng = make_rng(seed)
    pitch = img.resolution.along(axis)
    vals = img.values
    samples: list[PatchPairSample] = []
    for n in range(1, max_shift_px + 1):
        for _ in range(positions_per_shift):
            if axis is Axis.X:
                x = int(rng.integers(0, img.width - patch_w_px - n + 1))
                y = int(rng.integers(0, img.height - patch_h_px + 1))
                a = vals[y : y + patch_h_px, x : x + patch_w_px]
                b = vals[y : y + patch_h_px, x + n : x + n + patch_w_px]
            else:
                x = int(rng.integers(0, img.width - patch_w_px + 1))
                y = int(rng.integers(0, img.height - patch_h_px - n + 1))
                a = vals[y : y + patch_h_px, x : x + patch_w_px]
                b = vals[y + n : y + n + patch_h_px, x : x + patch_w_px]
            samples.append(
                PatchPairSample(
                    distance_px=n,
                    distance_nm=n * pitch,
                    dissimilarity=sdi(a, b),
                    axis=axis,
                )
            )
    return samples


def pair_dissimilarity(
    stack: ImageStack,
    k: int,
    patch_w_px: int,
    patch_h_px: int,
    positions: int,
    seed: int,
) -> float:
    """Mean SDI over co-located patch pairs drawn from planes k and k+1."""
    if not 0 <= k < len(stack) - 1:
        raise ValueError(f"pair index {k} out of range for a stack of {len(stack)} planes")
    if positions < 1:
        raise ValueError(f"positions must be >= 1, got {positions}")
    _check_patch_fits(stack.width, stack.height, patch_w_px, patch_h_px)

    rng = make_rng(seed)
    top = stack.planes[k].values
    bottom = stack.planes[k + 1].values
    values = np.empty(positions, dtype=np.float64)
    for j in range(positions):
        x = int(rng.integers(0, stack.width - patch_w_px + 1))
        y = int(rng.integers(0, stack.height - patch_h_px + 1))
        a = top[y : y + patch_h_px, x : x + patch_w_px]
        b = bottom[y : y + patch_h_px, x : x + patch_w_px]
        values[j] = sdi(a, b)
    return float(np.mean(values))
