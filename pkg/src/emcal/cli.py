"""Command-line interface.

Subcommands: calibrate, thickness, anisotropy, rotation-scan, size-sweep,
synth (pattern/volume/stack) and validate. Exit codes: 0 success, 1 usage
error, 2 data error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import glob
import logging
import sys
from pathlib import Path
from typing import Sequence

from .anisotropy import estimate_gamma, rotation_scan
from .calibration import calibrate
from .config import DEFAULT_PATCH_UM, RunConfig
from .core import Axis, ImageStack
from .errors import EmcalError
from .plotting import emit_distance_dissimilarity_plot
from .stack_io import (
    RunArtifacts,
    load_calibration,
    load_stack,
    write_plane_png,
    write_reports,
)
from .synthetic import PatternConfig, VolumeConfig, compress_y, gen_isotropic_volume, gen_radial_pattern, slice_volume
from .thickness import estimate_stack_thickness, size_sweep
from .util import child_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VALIDATION = 3

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(message)


def _parse_angles(spec: str) -> tuple[float, ...]:
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise _UsageError(f"angle range must be start:stop:step, got '{spec}'")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise _UsageError("angle step must be positive")
        angles = []
        a = start
        while a < stop - 1e-9:
            angles.append(round(a, 9))
            a += step
        return tuple(angles)
    return tuple(float(p) for p in spec.split(",") if p.strip())


def _expand_inputs(patterns: Sequence[str]) -> list[str]:
    files: list[str] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern))
        if matches:
            files.extend(matches)
        elif Path(pattern).exists():
            files.append(pattern)
        else:
            raise EmcalError(f"no input files match '{pattern}'")
    return files


def _add_stack_args(parser: argparse.ArgumentParser, need_out: bool = True) -> None:
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="PATH", help="input image files or globs")
    parser.add_argument("--dx", type=float, required=True, help="pixel pitch along X (nm)")
    parser.add_argument("--dy", type=float, required=True, help="pixel pitch along Y (nm)")
    parser.add_argument("--patch-px", type=int, default=None, help="square patch size (px)")
    parser.add_argument("--patch-um", type=float, default=DEFAULT_PATCH_UM,
                        help="square patch size (um), used when --patch-px is absent")
    parser.add_argument("--max-shift", type=int, default=20, help="maximum shift (px)")
    parser.add_argument("--positions", type=int, default=20, help="patch positions per shift")
    parser.add_argument("--seed", type=int, default=0, help="seed for all sampling")
    if need_out:
        parser.add_argument("--out", type=Path, required=True, help="output directory")


def _run_config(ns, angles: tuple[float, ...] = ()) -> RunConfig:
    try:
        return RunConfig(
            inputs=tuple(ns.inputs),
            dx=ns.dx,
            dy=ns.dy,
            out_dir=getattr(ns, "out", Path(".")),
            patch_px=ns.patch_px,
            patch_um=ns.patch_um,
            max_shift_px=ns.max_shift,
            positions_per_shift=ns.positions,
            seed=ns.seed,
            angles_deg=angles,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _load_stack_for(run: RunConfig) -> ImageStack:
    return load_stack(_expand_inputs(run.inputs), run.dx, run.dy)


def _cmd_calibrate(ns) -> int:
    run = _run_config(ns)
    stack = _load_stack_for(run)
    cfg = run.calibration_config()
    result = calibrate(stack, cfg)
    write_reports(
        RunArtifacts(calibration=result, config=cfg, resolution=stack.resolution),
        run.out_dir,
    )
    emit_distance_dissimilarity_plot(result.fx, result.dataset_x, run.out_dir / "curve_x.svg")
    emit_distance_dissimilarity_plot(result.fy, result.dataset_y, run.out_dir / "curve_y.svg")
    print(
        f"calibrated {len(stack)} plane(s): gamma_yx={result.gamma_yx:.6g}, "
        f"chosen axis {result.chosen_axis.value}"
    )
    print(f"wrote {run.out_dir / 'calibration.json'}")
    return EXIT_OK


def _pick_axis(ns_axis: str, chosen: Axis) -> Axis:
    if ns_axis == "auto":
        return chosen
    return Axis(ns_axis)


def _cmd_thickness(ns) -> int:
    run = _run_config(ns)
    stack = _load_stack_for(run)
    cfg = run.calibration_config()
    if ns.model is not None:
        loaded = load_calibration(ns.model)
        axis = _pick_axis(ns.axis, loaded.chosen_axis)
        model = loaded.model_for(axis)
        gamma = loaded.gamma_yx
    else:
        result = calibrate(stack, cfg)
        axis = _pick_axis(ns.axis, result.chosen_axis)
        model = result.model_for(axis)
        gamma = result.gamma_yx
    report = estimate_stack_thickness(stack, model, cfg, axis_used=axis, gamma_yx=gamma)
    write_reports(RunArtifacts(thickness=report), run.out_dir)
    print(
        f"{len(report.estimates)} pair(s): mean {report.mean_nm:.4g} nm, "
        f"spread {report.std_nm:.4g} nm (axis {axis.value})"
    )
    return EXIT_OK


def _cmd_anisotropy(ns) -> int:
    run = _run_config(ns)
    stack = _load_stack_for(run)
    cfg = run.calibration_config()
    loaded = load_calibration(ns.model)
    gamma = estimate_gamma(loaded.model_for(Axis.X), list(stack.planes), cfg)
    write_reports(RunArtifacts(gamma=gamma), run.out_dir)
    print(f"gamma_yx = {gamma.gamma_yx:.6g} +/- {gamma.std:.3g} over {len(stack)} plane(s)")
    return EXIT_OK


def _cmd_rotation_scan(ns) -> int:
    angles = _parse_angles(ns.angles)
    run = _run_config(ns, angles)
    stack = _load_stack_for(run)
    cfg = run.calibration_config()
    scan = rotation_scan(stack, list(angles), cfg)
    write_reports(RunArtifacts(rotation=scan), run.out_dir)
    print(f"gamma* = {scan.gamma_star:.6g} at {scan.angle_star:g} deg")
    return EXIT_OK


def _cmd_size_sweep(ns) -> int:
    run = _run_config(ns)
    stack = _load_stack_for(run)
    cfg = run.calibration_config()
    sizes = [int(s) for s in ns.sizes.split(",") if s.strip()]
    if not sizes:
        raise _UsageError("--sizes must list at least one patch size")
    points = size_sweep(stack, cfg, sizes)
    write_reports(RunArtifacts(sweep=points), run.out_dir)
    for p in points:
        print(f"size {p.size_px:4d} px: {p.mean_nm:.4g} +/- {p.std_nm:.4g} nm")
    return EXIT_OK


def _cmd_synth_pattern(ns) -> int:
    cfg = PatternConfig(
        width_px=ns.width,
        height_px=ns.height,
        disk_count=ns.disks,
        radius_min_px=ns.r_min,
        radius_max_px=ns.r_max,
        seed=ns.seed,
    )
    plane = gen_radial_pattern(cfg)
    if ns.compress_y is not None:
        plane = compress_y(plane, ns.compress_y)
    out = write_plane_png(ns.out, plane)
    print(f"wrote {out} ({plane.width}x{plane.height})")
    return EXIT_OK


def _synth_volume_stack(ns, spacing: int) -> int:
    cfg = VolumeConfig(
        dims=(ns.size, ns.size, ns.size),
        smoothing_vx=ns.smooth,
        voxel_nm=ns.voxel_nm,
        seed=ns.seed,
    )
    volume = gen_isotropic_volume(cfg)
    stack = slice_volume(volume, spacing, cfg.voxel_nm)
    out_dir = Path(ns.out)
    for i, plane in enumerate(stack.planes):
        write_plane_png(out_dir / f"sec_{i:04d}.png", plane)
    print(
        f"wrote {len(stack)} plane(s) to {out_dir} "
        f"(nominal spacing {stack.nominal_spacing_nm:g} nm)"
    )
    return EXIT_OK


def _cmd_synth_volume(ns) -> int:
    return _synth_volume_stack(ns, spacing=1)


def _cmd_synth_stack(ns) -> int:
    return _synth_volume_stack(ns, spacing=ns.spacing)


def _cmd_validate(ns) -> int:
    from .validate import run_validation

    results = run_validation(ns.seed)
    for r in results:
        marker = "PASS" if r.passed else "FAIL"
        print(f"[{marker}] {r.name} ({r.runtime_s:.1f}s): {r.detail}")
    if all(r.passed for r in results):
        print(f"{len(results)}/{len(results)} criteria passed")
        return EXIT_OK
    failed = sum(1 for r in results if not r.passed)
    print(f"{failed}/{len(results)} criteria FAILED", file=sys.stderr)
    return EXIT_VALIDATION


def build_parser() -> _Parser:
    parser = _Parser(prog="emcal", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("calibrate", help="train both axis regressors and estimate gamma")
    _add_stack_args(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("thickness", help="estimate per-pair section thickness")
    _add_stack_args(p)
    p.add_argument("--model", type=Path, default=None, help="calibration JSON to reuse")
    p.add_argument("--axis", choices=("auto", "x", "y"), default="auto",
                   help="regressor axis to use")
    p.set_defaults(func=_cmd_thickness)

    p = sub.add_parser("anisotropy", help="estimate gamma_yx per plane with a saved model")
    _add_stack_args(p)
    p.add_argument("--model", type=Path, required=True, help="calibration JSON")
    p.set_defaults(func=_cmd_anisotropy)

    p = sub.add_parser("rotation-scan", help="scan gamma over axis orientations")
    _add_stack_args(p)
    p.add_argument("--angles", default="0:180:10", help="angles as start:stop:step or a,b,c")
    p.set_defaults(func=_cmd_rotation_scan)

    p = sub.add_parser("size-sweep", help="thickness summary over patch sizes")
    _add_stack_args(p)
    p.add_argument("--sizes", required=True, help="comma-separated patch sizes (px)")
    p.set_defaults(func=_cmd_size_sweep)

    p = sub.add_parser("synth", help="generate synthetic fixtures")
    synth_sub = p.add_subparsers(dest="synth_command", parser_class=_Parser)

    sp = synth_sub.add_parser("pattern", help="radial-gradient disk pattern (16-bit PNG)")
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--width", type=int, default=1000)
    sp.add_argument("--height", type=int, default=1000)
    sp.add_argument("--disks", type=int, default=300)
    sp.add_argument("--r-min", type=float, default=8.0)
    sp.add_argument("--r-max", type=float, default=25.0)
    sp.add_argument("--compress-y", type=float, default=None,
                    help="optional Y compression factor in (0, 1]")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_synth_pattern)

    sp = synth_sub.add_parser("volume", help="isotropic smoothed-noise volume as PNG slices")
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--size", type=int, default=64, help="cube edge (voxels)")
    sp.add_argument("--smooth", type=float, default=4.0, help="Gaussian scale (voxels)")
    sp.add_argument("--voxel-nm", type=float, default=5.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_synth_volume)

    sp = synth_sub.add_parser("stack", help="volume sliced at a known spacing")
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--smooth", type=float, default=4.0)
    sp.add_argument("--voxel-nm", type=float, default=5.0)
    sp.add_argument("--spacing", type=int, default=2, help="slice spacing (voxels)")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_synth_stack)

    p = sub.add_parser("validate", help="run the built-in synthetic validation suite")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_validate)

    return parser


def cli_dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(list(argv))
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help prints and exits 0
        return int(exc.code or 0)
    if getattr(ns, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return ns.func(ns)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EmcalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
