"""Stack ingestion, model persistence and report emission.

File formats are deliberately plain: grayscale PNG/TIFF/PGM in, CSV and JSON
out. Floats in CSV files carry 17 significant digits so 64-bit values
round-trip losslessly; all files are written atomically (temp + rename).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .anisotropy import GammaEstimate, RotationScan
from .calibration import CalibrationResult
from .config import CalibrationConfig
from .core import Axis, ImagePlane, ImageStack, Resolution
from .dissimilarity import DissimilarityDataset
from .errors import DataFormatError
from .gp import GpModel, Hyperparameters, PowerLawFit, train_gp
from .thickness import SweepPoint, ThicknessReport

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

THICKNESS_HEADER = ["pair_index", "dissimilarity", "thickness_nm", "std_nm"]
ANISOTROPY_HEADER = ["plane_index", "gamma_yx"]
ROTATION_HEADER = ["angle_deg", "gamma_yx"]
DATASET_HEADER = ["axis", "distance_px", "distance_nm", "dissimilarity"]
SWEEP_HEADER = ["size_px", "mean_nm", "std_nm"]

_ATTRIBUTION_NOTE = (
    "thickness for pair k is attributed to section k (the slab between the "
    "imaged surfaces k and k+1)"
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """RFC-4180-style CSV with newline line endings and 17-digit floats."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def _natural_key(name: str) -> tuple:
    parts = re.split(r"(\d+)", name)
    return tuple(int(p) if p.isdigit() else p for p in parts)


def _read_gray_array(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            mode = img.mode
            arr = np.asarray(img)
    except UnidentifiedImageError as exc:
        raise DataFormatError(f"unsupported image format in {path}") from exc
    if mode == "L":
        return arr.astype(np.uint8)
    if mode in ("I;16", "I;16B", "I;16L"):
        return arr.astype(np.uint16)
    if mode == "I":
        # 16-bit PNG/PGM data surfaces as 32-bit integers in some readers.
        if arr.min() < 0 or arr.max() > 65535:
            raise DataFormatError(
                f"{path}: integer image exceeds the 16-bit range; only 8/16-bit supported"
            )
        return arr.astype(np.uint16)
    raise DataFormatError(
        f"unsupported image mode '{mode}' in {path}; expected 8- or 16-bit grayscale"
    )


def load_stack(paths: Sequence[str | Path], dx: float, dy: float) -> ImageStack:
    """Load grayscale files as a stack, ordered by natural-numeric filename sort."""
    if not paths:
        raise DataFormatError("no input files given")
    ordered = sorted((Path(p) for p in paths), key=lambda p: _natural_key(p.name))
    res = Resolution(dx, dy)
    planes = []
    shape = None
    for path in ordered:
        if not path.exists():
            raise DataFormatError(f"input file does not exist: {path}")
        arr = _read_gray_array(path)
        if arr.ndim != 2:
            raise DataFormatError(f"{path}: expected a single-channel image, got shape {arr.shape}")
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DataFormatError(
                f"{path}: dimensions {arr.shape[1]}x{arr.shape[0]} differ from the first "
                f"file's {shape[1]}x{shape[0]}"
            )
        planes.append(ImagePlane.from_raw(arr, res))
    return ImageStack(tuple(planes))


def write_plane_png(path: Path, plane: ImagePlane) -> Path:
    """Write a plane as a 16-bit grayscale PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = np.round(plane.values * 65535.0).astype(np.uint16)
    img = Image.fromarray(raw)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        img.save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def config_hash(cfg: CalibrationConfig) -> str:
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _model_to_dict(
    model: GpModel,
    fit: PowerLawFit,
    axis: Axis,
    resolution: Resolution,
    seed: int,
    cfg_hash: str,
) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "axis": axis.value,
        "resolution": {"dx": resolution.dx, "dy": resolution.dy},
        "hyperparameters": {
            "sigma": model.hyper.sigma,
            "ell": model.hyper.ell,
            "a": model.hyper.a,
            "b": model.hyper.b,
            "noise_var": model.hyper.noise_var,
        },
        "hyperprior": {
            "mu_a": fit.mu_a,
            "sigma_a": fit.sigma_a,
            "mu_b": fit.mu_b,
            "sigma_b": fit.sigma_b,
        },
        "training": {
            "dissimilarity": model.train_s.tolist(),
            "distance_nm": model.train_d.tolist(),
        },
        "provenance": {"seed": seed, "config_hash": cfg_hash},
    }


def _model_from_dict(doc: dict) -> tuple[GpModel, PowerLawFit, Axis, Resolution]:
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"unsupported model format_version {version}")
    hp = doc["hyperparameters"]
    hyper = Hyperparameters(
        sigma=float(hp["sigma"]),
        ell=float(hp["ell"]),
        a=float(hp["a"]),
        b=float(hp["b"]),
        noise_var=float(hp["noise_var"]),
    )
    prior = doc["hyperprior"]
    fit = PowerLawFit(
        a=hyper.a,
        b=hyper.b,
        mu_a=float(prior["mu_a"]),
        sigma_a=float(prior["sigma_a"]),
        mu_b=float(prior["mu_b"]),
        sigma_b=float(prior["sigma_b"]),
    )
    train = doc["training"]
    model = train_gp(train["dissimilarity"], train["distance_nm"], hyper)
    axis = Axis(doc["axis"])
    res = Resolution(doc["resolution"]["dx"], doc["resolution"]["dy"])
    return model, fit, axis, res


@dataclass(frozen=True, eq=False)
class LoadedCalibration:
    """Calibration file contents rebuilt into usable models."""

    models: dict[Axis, GpModel]
    fits: dict[Axis, PowerLawFit]
    gamma_yx: float
    chosen_axis: Axis
    resolution: Resolution
    seed: int

    def model_for(self, axis: Axis) -> GpModel:
        return self.models[axis]


def save_calibration(
    path: Path, result: CalibrationResult, cfg: CalibrationConfig, resolution: Resolution
) -> Path:
    cfg_hash = config_hash(cfg)
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "gamma_yx": result.gamma_yx,
        "chosen_axis": result.chosen_axis.value,
        "provenance": {"seed": cfg.seed, "config_hash": cfg_hash},
        "models": {
            "x": _model_to_dict(result.fx, result.fit_x, Axis.X, resolution, cfg.seed, cfg_hash),
            "y": _model_to_dict(result.fy, result.fit_y, Axis.Y, resolution, cfg.seed, cfg_hash),
        },
    }
    _atomic_write_text(Path(path), json.dumps(doc, indent=2) + "\n")
    return Path(path)


def load_calibration(path: Path) -> LoadedCalibration:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read calibration file {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"unsupported calibration format_version {version}")
    models: dict[Axis, GpModel] = {}
    fits: dict[Axis, PowerLawFit] = {}
    resolution = None
    for key in ("x", "y"):
        model, fit, axis, res = _model_from_dict(doc["models"][key])
        models[axis] = model
        fits[axis] = fit
        resolution = res
    return LoadedCalibration(
        models=models,
        fits=fits,
        gamma_yx=float(doc["gamma_yx"]),
        chosen_axis=Axis(doc["chosen_axis"]),
        resolution=resolution,
        seed=int(doc["provenance"]["seed"]),
    )


def write_dataset_csv(path: Path, dataset: DissimilarityDataset) -> Path:
    rows = [
        (s.axis.value, s.distance_px, s.distance_nm, s.dissimilarity) for s in dataset.samples
    ]
    return write_csv(path, DATASET_HEADER, rows)


def write_thickness_csv(path: Path, report: ThicknessReport) -> Path:
    rows = [
        (e.pair_index, e.dissimilarity, e.thickness_nm, e.std_nm) for e in report.estimates
    ]
    return write_csv(path, THICKNESS_HEADER, rows)


def write_thickness_summary(path: Path, report: ThicknessReport) -> Path:
    doc = {
        "pair_count": len(report.estimates),
        "mean_nm": report.mean_nm,
        "std_nm": report.std_nm,
        "axis_used": report.axis_used.value if report.axis_used else None,
        "gamma_yx": report.gamma_yx,
        "attribution": _ATTRIBUTION_NOTE,
    }
    _atomic_write_text(Path(path), json.dumps(doc, indent=2) + "\n")
    return Path(path)


def write_anisotropy_csv(path: Path, gamma: GammaEstimate) -> Path:
    rows = [(i, g) for i, g in enumerate(gamma.per_plane_values)]
    return write_csv(path, ANISOTROPY_HEADER, rows)


def write_rotation_csv(path: Path, scan: RotationScan) -> Path:
    rows = list(zip(scan.angles_deg, scan.gammas))
    return write_csv(path, ROTATION_HEADER, rows)


def write_sweep_csv(path: Path, points: Sequence[SweepPoint]) -> Path:
    rows = [(p.size_px, p.mean_nm, p.std_nm) for p in points]
    return write_csv(path, SWEEP_HEADER, rows)


@dataclass
class RunArtifacts:
    """Everything one CLI run may want persisted."""

    calibration: CalibrationResult | None = None
    config: CalibrationConfig | None = None
    resolution: Resolution | None = None
    thickness: ThicknessReport | None = None
    gamma: GammaEstimate | None = None
    rotation: RotationScan | None = None
    sweep: Sequence[SweepPoint] | None = None


def write_reports(artifacts: RunArtifacts, out_dir: Path) -> list[Path]:
    """Emit every present artifact into ``out_dir``; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if artifacts.calibration is not None:
        cfg = artifacts.config if artifacts.config is not None else CalibrationConfig()
        res = artifacts.resolution
        if res is None:
            raise ValueError("resolution is required to persist a calibration")
        written.append(
            save_calibration(out_dir / "calibration.json", artifacts.calibration, cfg, res)
        )
        written.append(
            write_dataset_csv(out_dir / "dataset_x.csv", artifacts.calibration.dataset_x)
        )
        written.append(
            write_dataset_csv(out_dir / "dataset_y.csv", artifacts.calibration.dataset_y)
        )
    if artifacts.thickness is not None:
        written.append(write_thickness_csv(out_dir / "thickness.csv", artifacts.thickness))
        written.append(
            write_thickness_summary(out_dir / "thickness_summary.json", artifacts.thickness)
        )
    if artifacts.gamma is not None:
        written.append(write_anisotropy_csv(out_dir / "anisotropy.csv", artifacts.gamma))
    if artifacts.rotation is not None:
        if artifacts.rotation.angles_deg:
            written.append(write_rotation_csv(out_dir / "rotation_scan.csv", artifacts.rotation))
        else:
            log.warning("rotation scan is empty; rotation_scan.csv not emitted")
    if artifacts.sweep is not None:
        written.append(write_sweep_csv(out_dir / "size_sweep.csv", artifacts.sweep))
    return written
