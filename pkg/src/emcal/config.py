"""Dataclass configuration for calibration runs and the CLI."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .core import ImagePlane

# Patches below roughly 7x7 micrometers pick up locally oriented structure,
# so the default patch size is that area expressed in pixels.
DEFAULT_PATCH_UM = 7.0


@dataclass(frozen=True)
class CalibrationConfig:
    """Sampling geometry, seeding and hyperparameter overrides for one run.

    ``patch_w_px``/``patch_h_px`` take precedence when set; otherwise the
    patch size is derived from ``patch_um`` at the plane's resolution and
    clamped (with a warning) when the image is smaller.
    """

    max_shift_px: int = 20
    patch_w_px: int | None = None
    patch_h_px: int | None = None
    patch_um: float = DEFAULT_PATCH_UM
    positions_per_shift: int = 20
    seed: int = 0
    calibration_plane_indices: tuple[int, ...] | None = None
    sigma: float = 1.0
    ell: float | None = None
    noise_var: float | None = None

    def __post_init__(self):
        if self.max_shift_px < 1:
            raise ValueError(f"max_shift_px must be >= 1, got {self.max_shift_px}")
        if self.positions_per_shift < 1:
            raise ValueError(f"positions_per_shift must be >= 1, got {self.positions_per_shift}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.patch_um <= 0.0:
            raise ValueError(f"patch_um must be positive, got {self.patch_um}")
        for name in ("patch_w_px", "patch_h_px"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.calibration_plane_indices is not None:
            object.__setattr__(
                self,
                "calibration_plane_indices",
                tuple(int(i) for i in self.calibration_plane_indices),
            )

    def plane_indices(self, plane_count: int) -> tuple[int, ...]:
        """Calibration plane indices, defaulting to every plane in the stack."""
        if self.calibration_plane_indices is None:
            return tuple(range(plane_count))
        for i in self.calibration_plane_indices:
            if not 0 <= i < plane_count:
                raise ValueError(
                    f"calibration plane index {i} out of range for {plane_count} planes"
                )
        return self.calibration_plane_indices

    def patch_shape(self, plane: ImagePlane) -> tuple[int, int]:
        """Resolve the (width, height) patch in pixels for one plane.

        Explicit pixel sizes pass through unchanged; micrometer-derived
        defaults are clamped so that patch plus maximum shift still fits.
        """
        res = plane.resolution
        patch_w = self.patch_w_px
        patch_h = self.patch_h_px
        if patch_w is None:
            patch_w = max(int(round(self.patch_um * 1000.0 / res.dx)), 1)
            limit = plane.width - self.max_shift_px
            if patch_w > limit:
                clamped = max(limit, 2)
                warnings.warn(
                    f"patch width {patch_w} px ({self.patch_um} um) clamped to {clamped} px "
                    f"for a {plane.width}-pixel-wide image",
                    stacklevel=2,
                )
                patch_w = clamped
        if patch_h is None:
            patch_h = max(int(round(self.patch_um * 1000.0 / res.dy)), 1)
            limit = plane.height - self.max_shift_px
            if patch_h > limit:
                clamped = max(limit, 2)
                warnings.warn(
                    f"patch height {patch_h} px ({self.patch_um} um) clamped to {clamped} px "
                    f"for a {plane.height}-pixel-tall image",
                    stacklevel=2,
                )
                patch_h = clamped
        if patch_w > plane.width or patch_h > plane.height:
            raise ValueError(
                f"patch {patch_w}x{patch_h} does not fit a {plane.width}x{plane.height} image"
            )
        return patch_w, patch_h


@dataclass(frozen=True)
class RunConfig:
    """Parsed command-line run description."""

    inputs: tuple[str, ...]
    dx: float
    dy: float
    out_dir: Path
    patch_px: int | None = None
    patch_um: float = DEFAULT_PATCH_UM
    max_shift_px: int = 20
    positions_per_shift: int = 20
    seed: int = 0
    angles_deg: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.dx <= 0.0 or self.dy <= 0.0:
            raise ValueError(f"pixel pitch must be positive, got dx={self.dx}, dy={self.dy}")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    def calibration_config(self) -> CalibrationConfig:
        return CalibrationConfig(
            max_shift_px=self.max_shift_px,
            patch_w_px=self.patch_px,
            patch_h_px=self.patch_px,
            patch_um=self.patch_um,
            positions_per_shift=self.positions_per_shift,
            seed=self.seed,
        )
