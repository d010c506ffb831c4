"""Core image-domain types: physical resolution, grayscale planes, stacks.

All types are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Axis(str, Enum):
    """In-plane image axis."""

    X = "x"
    Y = "y"

    @property
    def tag(self) -> int:
        return 0 if self is Axis.X else 1


@dataclass(frozen=True)
class Resolution:
    """Physical pixel pitch, nanometers per pixel along each axis."""

    dx: float
    dy: float

    def __post_init__(self):
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))
        if not (self.dx > 0.0 and self.dy > 0.0):
            raise ValueError(f"pixel pitch must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def aspect_ratio(self) -> float:
        """Pixel aspect ratio dy/dx (dimensionless)."""
        return self.dy / self.dx

    def along(self, axis: Axis) -> float:
        return self.dx if axis is Axis.X else self.dy


def normalize_intensities(values: np.ndarray) -> np.ndarray:
    """Map raw pixel values to float64 intensities in [0, 1].

    8-bit input maps v -> v/255, 16-bit maps v -> v/65535. Floating input must
    already lie in [0, 1] and passes through unchanged, so normalization is
    idempotent.
    """
    arr = np.asarray(values)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    if np.issubdtype(arr.dtype, np.floating):
        out = arr.astype(np.float64)
        if out.size and not bool(((out >= 0.0) & (out <= 1.0)).all()):
            raise ValueError("floating intensities must already lie in [0, 1]")
        return out
    raise TypeError(
        f"unsupported intensity dtype {arr.dtype}; expected uint8, uint16 or float in [0, 1]"
    )


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """One grayscale section with intensities normalized to [0, 1].

    Pixel (x, y) means (column, row) with the origin at the top-left, so
    ``values[y, x]`` is the intensity at that pixel. ``values`` is row-major
    and read-only.
    """

    values: np.ndarray
    resolution: Resolution

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"plane values must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("plane must contain at least one pixel")
        if not bool(((arr >= 0.0) & (arr <= 1.0)).all()):
            raise ValueError("intensities must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_raw(cls, values: np.ndarray, resolution: Resolution) -> "ImagePlane":
        """Build a plane from raw 8/16-bit or float pixel data."""
        return cls(normalize_intensities(values), resolution)


@dataclass(frozen=True, eq=False)
class ImageStack:
    """Ordered planes sharing dimensions and resolution."""

    planes: tuple[ImagePlane, ...]
    nominal_spacing_nm: float | None = None

    def __post_init__(self):
        planes = tuple(self.planes)
        if not planes:
            raise ValueError("a stack needs at least one plane")
        first = planes[0]
        for i, plane in enumerate(planes[1:], start=1):
            if (plane.width, plane.height) != (first.width, first.height):
                raise ValueError(
                    f"plane {i} is {plane.width}x{plane.height}, "
                    f"expected {first.width}x{first.height}"
                )
            if plane.resolution != first.resolution:
                raise ValueError(
                    f"plane {i} resolution {plane.resolution} differs from {first.resolution}"
                )
        object.__setattr__(self, "planes", planes)
        if self.nominal_spacing_nm is not None:
            object.__setattr__(self, "nominal_spacing_nm", float(self.nominal_spacing_nm))

    def __len__(self) -> int:
        return len(self.planes)

    @property
    def resolution(self) -> Resolution:
        return self.planes[0].resolution

    @property
    def width(self) -> int:
        return self.planes[0].width

    @property
    def height(self) -> int:
        return self.planes[0].height
