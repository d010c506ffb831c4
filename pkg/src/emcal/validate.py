"""Built-in synthetic validation suite.

Every check here is an end-to-end criterion with an independent oracle:
dense linear-algebra solutions for the GP, noiseless generated curves for the
power-law fitter, dyadic-valued images for exact SDI identities, and
compressed or sliced synthetic imagery with known ground truth for the
stretching and thickness pipelines. ``run_validation`` executes the whole
suite twice and additionally verifies that the two passes are bit-identical.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .anisotropy import gamma_for_planes, rotate_plane, rotation_scan
from .calibration import calibrate
from .config import CalibrationConfig
from .core import Axis, ImagePlane, ImageStack, Resolution
from .dissimilarity import sample_shifted_pairs, sdi
from .gp import (
    Hyperparameters,
    fit_power_law_lm,
    log_marginal_likelihood,
    power_law_mean,
    predict_many,
    train_gp,
)
from .synthetic import PatternConfig, VolumeConfig, compress_y, gen_isotropic_volume, gen_radial_pattern, slice_volume
from .thickness import estimate_stack_thickness
from .util import child_seed


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    digest: str
    runtime_s: float


class _Digest:
    def __init__(self):
        self._hash = hashlib.sha256()

    def add(self, *values) -> None:
        for v in values:
            if isinstance(v, (np.ndarray, list, tuple)):
                for item in np.asarray(v, dtype=np.float64).ravel():
                    self._hash.update(format(float(item), ".17g").encode())
            else:
                self._hash.update(format(float(v), ".17g").encode())

    def hexdigest(self) -> str:
        return self._hash.hexdigest()


def dense_gp_oracle(
    s: np.ndarray, d: np.ndarray, hyper: Hyperparameters, s_star: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean/variance by dense solves, no factorization reuse."""
    s = np.asarray(s, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    s_star = np.atleast_1d(np.asarray(s_star, dtype=np.float64))
    gram = hyper.sigma**2 * np.exp(-0.5 * ((s[:, None] - s[None, :]) / hyper.ell) ** 2)
    gram = gram + hyper.noise_var * np.eye(s.size)
    resid = d - power_law_mean(s, hyper.a, hyper.b)
    k_star = hyper.sigma**2 * np.exp(-0.5 * ((s[:, None] - s_star[None, :]) / hyper.ell) ** 2)
    mean = power_law_mean(s_star, hyper.a, hyper.b) + k_star.T @ np.linalg.solve(gram, resid)
    var = hyper.sigma**2 + hyper.noise_var - np.sum(k_star * np.linalg.solve(gram, k_star), axis=0)
    return mean, var


def dense_lml_oracle(s: np.ndarray, d: np.ndarray, hyper: Hyperparameters) -> float:
    """Log marginal likelihood via a dense log-determinant."""
    s = np.asarray(s, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    gram = hyper.sigma**2 * np.exp(-0.5 * ((s[:, None] - s[None, :]) / hyper.ell) ** 2)
    gram = gram + hyper.noise_var * np.eye(s.size)
    resid = d - power_law_mean(s, hyper.a, hyper.b)
    _, logdet = np.linalg.slogdet(gram)
    return float(
        -0.5 * resid @ np.linalg.solve(gram, resid)
        - 0.5 * logdet
        - 0.5 * s.size * math.log(2.0 * math.pi)
    )


def _criterion_gp_oracle(seed: int) -> tuple[bool, str, str]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    digest = _Digest()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 41))
        s = np.sort(rng.uniform(0.0, 1.0, n))
        d = rng.uniform(1.0, 100.0, n)
        hyper = Hyperparameters(
            sigma=float(rng.uniform(0.5, 2.0)),
            ell=float(rng.uniform(0.05, 0.5)),
            a=float(rng.uniform(0.0, 5.0)),
            b=float(rng.uniform(0.5, 2.0)),
            noise_var=float(rng.uniform(1e-4, 1e-2)),
        )
        model = train_gp(s, d, hyper)
        s_star = rng.uniform(0.0, float(s.max()) * 1.2, 20)
        mean, std = predict_many(model, s_star)
        var = std**2 + 0.0
        mean_o, var_o = dense_gp_oracle(s, d, hyper, s_star)
        lml = log_marginal_likelihood(model)
        lml_o = dense_lml_oracle(s, d, hyper)
        floor = 1e-6 * float(np.max(np.abs(d)))
        rel_mean = float(np.max(np.abs(mean - mean_o) / np.maximum(np.abs(mean_o), floor)))
        rel_var = float(np.max(np.abs(var - var_o) / np.maximum(np.abs(var_o), 1e-12)))
        rel_lml = abs(lml - lml_o) / max(1.0, abs(lml_o))
        worst = max(worst, rel_mean, rel_var, rel_lml)
        digest.add(mean, var, lml)
    passed = worst <= 1e-8
    return passed, f"max relative error {worst:.3e} over 50 datasets", digest.hexdigest()


def _criterion_lm_recovery(seed: int) -> tuple[bool, str, str]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 102]))
    digest = _Digest()
    worst = 0.0
    s = np.linspace(0.05, 2.0, 30)
    for _ in range(20):
        a_true = float(rng.uniform(0.5, 5.0))
        b_true = float(rng.uniform(0.5, 2.0))
        d = a_true * s**b_true
        fit = fit_power_law_lm(s, d)
        worst = max(worst, abs(fit.a - a_true), abs(fit.b - b_true))
        digest.add(fit.a, fit.b)
    passed = worst <= 1e-4
    return passed, f"max absolute parameter error {worst:.3e} over 20 fits", digest.hexdigest()


def _criterion_sdi_invariants(seed: int) -> tuple[bool, str, str]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 103]))
    digest = _Digest()
    res = Resolution(4.0, 4.0)
    failures = []
    for i in range(100):
        h = int(rng.integers(3, 13))
        w = int(rng.integers(3, 13))
        # Dyadic intensities keep every arithmetic step exact in float64.
        a = rng.integers(0, 256, (h, w)).astype(np.float64) / 256.0
        b = rng.integers(0, 256, (h, w)).astype(np.float64) / 256.0
        shift = float(rng.integers(1, 65)) / 256.0
        scale = float(2.0 ** rng.integers(-2, 3))

        value = sdi(a, b)
        digest.add(value)
        if value != sdi(b, a):
            failures.append(f"instance {i}: symmetry")
        if sdi(a, a) != 0.0:
            failures.append(f"instance {i}: sdi(a,a) != 0")
        if not np.array_equal(a, b) and value <= 0.0:
            failures.append(f"instance {i}: definiteness")
        if sdi(a + shift, b + shift) != value:
            failures.append(f"instance {i}: shift invariance")
        if sdi(scale * a, scale * b) != scale * value:
            failures.append(f"instance {i}: positive scaling")

        # Ramp identity: a linear-in-x image shifted by n pixels differs by
        # the constant n * delta, so the SDI equals n * delta exactly.
        delta = float(rng.integers(1, 9)) / 2048.0
        width = int(rng.integers(24, 41))
        height = int(rng.integers(12, 25))
        ramp = np.tile(np.arange(width, dtype=np.float64) * delta, (height, 1))
        plane = ImagePlane(ramp, res)
        max_shift = int(rng.integers(1, 7))
        samples = sample_shifted_pairs(plane, Axis.X, max_shift, 8, 8, 3, seed=int(rng.integers(0, 2**31)))
        for smp in samples:
            digest.add(smp.dissimilarity)
            if smp.dissimilarity != smp.distance_px * delta:
                failures.append(f"instance {i}: ramp identity at n={smp.distance_px}")
    passed = not failures
    detail = "all identities exact on 100 instances" if passed else "; ".join(failures[:4])
    return passed, detail, digest.hexdigest()


def _gamma_pipeline_config(seed: int) -> CalibrationConfig:
    return CalibrationConfig(
        max_shift_px=12,
        patch_w_px=64,
        patch_h_px=64,
        positions_per_shift=24,
        seed=seed,
    )


def _criterion_gamma_recovery(seed: int) -> tuple[bool, str, str]:
    digest = _Digest()
    factors = (1.0, 0.75, 0.5)
    averages = {}
    for factor in factors:
        values = []
        for rep in range(5):
            pattern_seed = child_seed(seed, 104, rep)
            pattern = gen_radial_pattern(
                PatternConfig(
                    width_px=640,
                    height_px=640,
                    disk_count=160,
                    radius_min_px=8.0,
                    radius_max_px=24.0,
                    seed=pattern_seed,
                )
            )
            plane = compress_y(pattern, factor)
            cfg = _gamma_pipeline_config(child_seed(seed, 105, rep))
            values.append(gamma_for_planes([plane], cfg).gamma_yx)
        averages[factor] = float(np.mean(values))
        digest.add(values)
    ok_1 = 0.95 <= averages[1.0] <= 1.05
    ok_75 = 0.68 <= averages[0.75] <= 0.80
    ok_50 = 0.50 < averages[0.5] <= 0.70
    passed = ok_1 and ok_75 and ok_50
    detail = (
        f"gamma(1.0)={averages[1.0]:.3f}, gamma(0.75)={averages[0.75]:.3f}, "
        f"gamma(0.5)={averages[0.5]:.3f} (5 seeds each)"
    )
    return passed, detail, digest.hexdigest()


def _criterion_thickness_recovery(seed: int) -> tuple[bool, str, str]:
    digest = _Digest()
    volume = gen_isotropic_volume(
        VolumeConfig(dims=(128, 128, 128), smoothing_vx=4.0, voxel_nm=5.0, seed=child_seed(seed, 106))
    )
    problems = []
    summaries = []
    for spacing in (1, 2, 4):
        stack = slice_volume(volume, spacing, 5.0)
        indices = tuple(sorted(set(np.linspace(0, len(stack) - 1, 6).astype(int).tolist())))
        cfg = CalibrationConfig(
            max_shift_px=12,
            patch_w_px=48,
            patch_h_px=48,
            positions_per_shift=12,
            seed=child_seed(seed, 107, spacing),
            calibration_plane_indices=indices,
        )
        result = calibrate(stack, cfg)
        report = estimate_stack_thickness(
            stack,
            result.model_for(result.chosen_axis),
            cfg,
            axis_used=result.chosen_axis,
            gamma_yx=result.gamma_yx,
        )
        expected = spacing * 5.0
        rel_err = abs(report.mean_nm - expected) / expected
        spread = report.std_nm / report.mean_nm if report.mean_nm > 0 else float("inf")
        summaries.append(f"{expected:g}nm -> {report.mean_nm:.2f}+/-{report.std_nm:.2f}")
        digest.add(report.mean_nm, report.std_nm)
        if rel_err > 0.10:
            problems.append(f"spacing {spacing}: mean off by {100 * rel_err:.1f}%")
        if spread > 0.6:
            problems.append(f"spacing {spacing}: std/mean {spread:.2f} > 0.6")
    passed = not problems
    detail = "; ".join(summaries) if passed else "; ".join(problems)
    return passed, detail, digest.hexdigest()


def _angle_distance_mod180(a: float, b: float) -> float:
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)


def _criterion_rotation_scan(seed: int) -> tuple[bool, str, str]:
    digest = _Digest()
    angles = [float(a) for a in range(0, 180, 10)]
    problems = []

    pattern = gen_radial_pattern(
        PatternConfig(
            width_px=768,
            height_px=768,
            disk_count=220,
            radius_min_px=8.0,
            radius_max_px=24.0,
            seed=child_seed(seed, 108),
        )
    )
    tilted = rotate_plane(compress_y(pattern, 0.7), 30.0)
    cfg = CalibrationConfig(
        max_shift_px=8,
        patch_w_px=48,
        patch_h_px=48,
        positions_per_shift=16,
        seed=child_seed(seed, 109),
    )
    scan = rotation_scan(ImageStack((tilted,)), angles, cfg)
    digest.add(scan.gammas)
    off = _angle_distance_mod180(scan.angle_star, 30.0)
    if off > 10.0:
        problems.append(f"argmin at {scan.angle_star:g} deg, {off:g} deg from the 30 deg target")

    control = gen_radial_pattern(
        PatternConfig(
            width_px=640,
            height_px=640,
            disk_count=160,
            radius_min_px=8.0,
            radius_max_px=24.0,
            seed=child_seed(seed, 110),
        )
    )
    scan_iso = rotation_scan(ImageStack((control,)), angles, cfg)
    digest.add(scan_iso.gammas)
    flat_max = float(np.max(np.abs(np.asarray(scan_iso.gammas) - 1.0)))
    if flat_max > 0.05:
        problems.append(f"isotropic control deviates from 1 by {flat_max:.3f}")

    passed = not problems
    detail = (
        f"argmin {scan.angle_star:g} deg (target 30); control flat within {flat_max:.3f}"
        if passed
        else "; ".join(problems)
    )
    return passed, detail, digest.hexdigest()


def _criterion_gamma_identity(seed: int) -> tuple[bool, str, str]:
    digest = _Digest()
    worst = 0.0
    estimates = []
    pattern = gen_radial_pattern(
        PatternConfig(
            width_px=512,
            height_px=512,
            disk_count=120,
            radius_min_px=8.0,
            radius_max_px=20.0,
            seed=child_seed(seed, 111),
        )
    )
    for dx, dy in ((10.0, 10.0), (5.0, 10.0), (8.0, 4.0)):
        plane = ImagePlane(pattern.values, Resolution(dx, dy))
        cfg = CalibrationConfig(
            max_shift_px=8,
            patch_w_px=48,
            patch_h_px=48,
            positions_per_shift=16,
            seed=child_seed(seed, 112),
        )
        estimates.append(gamma_for_planes([plane], cfg))
    for est in estimates:
        digest.add(est.gamma_yx, est.n_hat_yx)
        err = abs(est.gamma_yx * est.n_hat_yx - est.aspect_ratio) / est.aspect_ratio
        worst = max(worst, err)
    passed = worst <= 1e-14
    return passed, f"max identity error {worst:.2e} (tolerance 1e-14)", digest.hexdigest()


_CRITERIA: list[tuple[str, float, Callable[[int], tuple[bool, str, str]]]] = [
    ("gp-oracle-equivalence", 5.0, _criterion_gp_oracle),
    ("lm-power-law-recovery", 5.0, _criterion_lm_recovery),
    ("sdi-invariants", 0.0, _criterion_sdi_invariants),
    ("gamma-recovery", 120.0, _criterion_gamma_recovery),
    ("thickness-recovery", 180.0, _criterion_thickness_recovery),
    ("rotation-scan-localization", 180.0, _criterion_rotation_scan),
    ("gamma-identity", 0.0, _criterion_gamma_identity),
]


def run_criteria(seed: int) -> list[CriterionResult]:
    """Run criteria once; runtime budgets (where stated) are part of the check."""
    results = []
    for name, budget, fn in _CRITERIA:
        start = time.perf_counter()
        passed, detail, digest = fn(seed)
        runtime = time.perf_counter() - start
        if budget and runtime > budget:
            passed = False
            detail += f"; runtime {runtime:.1f}s exceeded the {budget:g}s budget"
        results.append(CriterionResult(name, passed, detail, digest, runtime))
    return results


def run_validation(seed: int = 7) -> list[CriterionResult]:
    """Run the full suite twice and check the two passes are bit-identical."""
    start = time.perf_counter()
    first = run_criteria(seed)
    second = run_criteria(seed)
    mismatched = [a.name for a, b in zip(first, second) if a.digest != b.digest]
    runtime = time.perf_counter() - start
    repro = CriterionResult(
        name="reproducibility",
        passed=not mismatched,
        detail=(
            "two runs bit-identical"
            if not mismatched
            else "digest mismatch in: " + ", ".join(mismatched)
        ),
        digest=hashlib.sha256("".join(r.digest for r in first).encode()).hexdigest(),
        runtime_s=runtime,
    )
    return first + [repro]
