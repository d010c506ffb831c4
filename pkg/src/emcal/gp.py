"""Gaussian-process regression of distance on image dissimilarity.

The regressor uses a squared-exponential covariance over dissimilarity values
and a power-law mean ``m(s) = a * s**b``. The mean parameters (and Gaussian
hyperprior widths around them) come from a Levenberg-Marquardt least-squares
fit; the signal scale and length scale are fixed, configurable constants.
Training factorizes the kernel matrix once (Cholesky), after which predictions
and the log marginal likelihood are cheap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import FactorizationError, FitConvergenceError

SIGNAL_SIGMA_DEFAULT = 1.0
# Length scale tuned for dissimilarities expressed in 8-bit intensity units;
# divide by 255 when intensities are normalized to [0, 1].
LENGTH_SCALE_RAW = 10.0
LENGTH_SCALE_NORMALIZED = LENGTH_SCALE_RAW / 255.0
NOISE_VAR_FRACTION = 1e-6
_JITTER_CAP_FRACTION = 1e-2


@dataclass(frozen=True)
class Hyperparameters:
    """GP hyperparameters: kernel scale/width, mean-law coefficients, noise."""

    sigma: float
    ell: float
    a: float
    b: float
    noise_var: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.ell > 0.0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.noise_var < 0.0:
            raise ValueError(f"noise_var must be non-negative, got {self.noise_var}")
        if self.a < 0.0:
            raise ValueError(f"power-law coefficient must be non-negative, got {self.a}")


@dataclass(frozen=True)
class PowerLawFit:
    """Point estimates of the power law plus Gaussian hyperprior widths."""

    a: float
    b: float
    mu_a: float
    sigma_a: float
    mu_b: float
    sigma_b: float

    def __post_init__(self):
        if self.sigma_a < 0.0 or self.sigma_b < 0.0:
            raise ValueError("hyperprior widths must be non-negative")


@dataclass(frozen=True)
class Prediction:
    """Predictive Gaussian over distance at one test dissimilarity."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0.0:
            raise ValueError(f"predictive std must be non-negative, got {self.std}")


@dataclass(frozen=True, eq=False)
class GpModel:
    """Trained regressor: hyperparameters, training data, kernel factor.

    ``chol`` is the lower-triangular Cholesky factor of K + noise_var * I and
    ``alpha`` solves (K + noise_var * I) alpha = train_d - m(train_s). The
    stored ``hyper.noise_var`` is the effective value actually factorized,
    which may exceed the requested one after jitter escalation.
    """

    hyper: Hyperparameters
    train_s: np.ndarray
    train_d: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray

    def __len__(self) -> int:
        return self.train_s.size


def se_kernel(s1, s2, hyper: Hyperparameters):
    """Squared-exponential covariance sigma^2 * exp(-(s1-s2)^2 / (2 ell^2))."""
    diff = np.asarray(s1, dtype=np.float64) - np.asarray(s2, dtype=np.float64)
    val = hyper.sigma**2 * np.exp(-0.5 * (diff / hyper.ell) ** 2)
    return float(val) if np.ndim(val) == 0 else val


def power_law_mean(s, a: float, b: float):
    """Mean function a * s**b with the convention m(0) = 0 for b > 0."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0.0):
        raise ValueError("dissimilarity must be non-negative")
    if b <= 0.0 and np.any(s_arr == 0.0):
        raise ValueError("mean undefined at s = 0 with a non-positive exponent")
    out = np.zeros_like(s_arr, dtype=np.float64)
    pos = s_arr > 0.0
    out[pos] = a * s_arr[pos] ** b
    return float(out) if np.ndim(s) == 0 else out


def _power_law_model(s: np.ndarray, a: float, b: float) -> np.ndarray:
    # Fitting-time variant: keeps the m(0) = 0 convention for any exponent so
    # intermediate LM iterates with b <= 0 stay finite.
    out = np.zeros_like(s)
    pos = s > 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        out[pos] = a * np.power(s[pos], b)
    return out


def _power_law_jacobian(s: np.ndarray, a: float, b: float) -> np.ndarray:
    jac = np.zeros((s.size, 2))
    pos = s > 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        sb = np.power(s[pos], b)
        jac[pos, 0] = sb
        jac[pos, 1] = a * sb * np.log(s[pos])
    return jac


def _initial_power_law_guess(s: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    # Log-log least squares on strictly positive points.
    mask = (s > 0.0) & (d > 0.0)
    if mask.sum() >= 2 and np.unique(s[mask]).size >= 2:
        slope, intercept = np.polyfit(np.log(s[mask]), np.log(d[mask]), 1)
        return float(np.exp(intercept)), float(slope)
    pos = s > 0.0
    if pos.any():
        scale = float(np.mean(d[pos]) / np.mean(s[pos]))
        return max(scale, 1e-12), 1.0
    return 1.0, 1.0


def fit_power_law_lm(
    s,
    d,
    init: tuple[float, float] | None = None,
    max_iter: int = 200,
    rel_tol: float = 1e-10,
) -> PowerLawFit:
    """Fit d ~ a * s**b by damped least squares (Levenberg-Marquardt).

    Damping starts at 1e-3 and is divided/multiplied by 10 on accepted and
    rejected steps; iteration stops once the relative residual change drops
    below ``rel_tol``. Hyperprior widths sigma_a/sigma_b come from the
    residual-variance-scaled inverse Gauss-Newton Hessian at the optimum.

    Raises FitConvergenceError (carrying the last iterate and residual) if no
    acceptable step exists after ``max_iter`` iterations.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    d = np.asarray(d, dtype=np.float64).ravel()
    if s.size != d.size:
        raise ValueError(f"input lengths differ: {s.size} vs {d.size}")
    if s.size < 2:
        raise ValueError(f"need at least 2 points to fit a power law, got {s.size}")
    if np.any(s < 0.0) or np.any(d < 0.0):
        raise ValueError("power-law fitting requires non-negative inputs and targets")
    if np.unique(s).size < 2:
        raise ValueError("cannot fit a power law when all inputs coincide")

    params = np.array(init if init is not None else _initial_power_law_guess(s, d))
    resid = d - _power_law_model(s, *params)
    sse = float(resid @ resid)
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        jac = _power_law_jacobian(s, *params)
        grad = jac.T @ resid
        if np.max(np.abs(grad)) <= 1e-14 * max(1.0, math.sqrt(sse)):
            converged = True
            break
        jtj = jac.T @ jac
        damping = np.diag(np.maximum(np.diag(jtj), 1e-12))
        try:
            step = np.linalg.solve(jtj + lam * damping, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jtj + lam * damping, grad, rcond=None)[0]
        candidate = params + step
        resid_new = d - _power_law_model(s, *candidate)
        sse_new = float(resid_new @ resid_new)
        if np.isfinite(sse_new) and sse_new < sse:
            change = sse - sse_new
            params, resid, sse = candidate, resid_new, sse_new
            lam = max(lam / 10.0, 1e-14)
            if change <= rel_tol * max(sse, 1e-300):
                converged = True
                break
        else:
            if np.isfinite(sse_new) and abs(sse - sse_new) <= rel_tol * max(sse, 1e-300):
                converged = True
                break
            lam *= 10.0
            if lam > 1e12:
                raise FitConvergenceError(
                    f"damping exhausted at residual {math.sqrt(sse):.6g} "
                    f"(a={params[0]:.6g}, b={params[1]:.6g})",
                    a=float(params[0]),
                    b=float(params[1]),
                    residual=math.sqrt(sse),
                )
    if not converged:
        raise FitConvergenceError(
            f"no convergence after {max_iter} iterations, residual {math.sqrt(sse):.6g} "
            f"(a={params[0]:.6g}, b={params[1]:.6g})",
            a=float(params[0]),
            b=float(params[1]),
            residual=math.sqrt(sse),
        )

    a, b = float(params[0]), float(params[1])
    if b <= 0.0:
        warnings.warn(
            f"fitted exponent b={b:.4g} is not physical for a dissimilarity "
            "curve rising from the origin",
            stacklevel=2,
        )
    jac = _power_law_jacobian(s, a, b)
    jtj = jac.T @ jac
    dof = max(s.size - 2, 1)
    resid_var = sse / dof
    try:
        cov = resid_var * np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = resid_var * np.linalg.pinv(jtj)
    sigma_a = math.sqrt(max(float(cov[0, 0]), 0.0))
    sigma_b = math.sqrt(max(float(cov[1, 1]), 0.0))
    return PowerLawFit(a=a, b=b, mu_a=a, sigma_a=sigma_a, mu_b=b, sigma_b=sigma_b)


def default_hyperparameters(
    fit: PowerLawFit,
    sigma: float = SIGNAL_SIGMA_DEFAULT,
    ell: float | None = None,
    noise_var: float | None = None,
    normalized_intensities: bool = True,
) -> Hyperparameters:
    """Assemble hyperparameters around a fitted power-law mean."""
    if ell is None:
        ell = LENGTH_SCALE_NORMALIZED if normalized_intensities else LENGTH_SCALE_RAW
    if noise_var is None:
        noise_var = NOISE_VAR_FRACTION * sigma**2
    return Hyperparameters(sigma=sigma, ell=ell, a=fit.a, b=fit.b, noise_var=noise_var)


def _kernel_matrix(s: np.ndarray, hyper: Hyperparameters) -> np.ndarray:
    diff = s[:, None] - s[None, :]
    return hyper.sigma**2 * np.exp(-0.5 * (diff / hyper.ell) ** 2)


def _factorize_with_jitter(
    kernel: np.ndarray, noise_var: float, sigma: float
) -> tuple[np.ndarray, float]:
    """Cholesky-factorize K + nv*I, escalating jitter x10 while it fails."""
    n = kernel.shape[0]
    eye = np.eye(n)
    tried = noise_var
    try:
        return np.linalg.cholesky(kernel + noise_var * eye), noise_var
    except np.linalg.LinAlgError:
        pass
    jitter = NOISE_VAR_FRACTION * sigma**2
    cap = _JITTER_CAP_FRACTION * sigma**2
    while jitter <= cap * (1.0 + 1e-12):
        tried = noise_var + jitter
        try:
            chol = np.linalg.cholesky(kernel + tried * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
            continue
        warnings.warn(
            f"kernel factorization required jitter escalation to noise_var={tried:.3e}",
            stacklevel=3,
        )
        return chol, tried
    cond = float(np.linalg.cond(kernel + tried * eye))
    raise FactorizationError(
        f"kernel matrix is not positive definite even with noise_var={tried:.3e}; "
        f"condition estimate {cond:.3e}"
    )


def train_gp(train_s, train_d, hyper: Hyperparameters) -> GpModel:
    """Train the regressor: build K, factorize K + noise_var*I, solve alpha."""
    s = np.array(train_s, dtype=np.float64, copy=True).ravel()
    d = np.array(train_d, dtype=np.float64, copy=True).ravel()
    if s.size == 0:
        raise ValueError("training dataset is empty")
    if s.size != d.size:
        raise ValueError(f"input lengths differ: {s.size} vs {d.size}")
    kernel = _kernel_matrix(s, hyper)
    chol, effective_noise = _factorize_with_jitter(kernel, hyper.noise_var, hyper.sigma)
    if effective_noise != hyper.noise_var:
        hyper = replace(hyper, noise_var=effective_noise)
    resid = d - power_law_mean(s, hyper.a, hyper.b)
    alpha = cho_solve((chol, True), resid)
    for arr in (s, d, chol, alpha):
        arr.setflags(write=False)
    return GpModel(hyper=hyper, train_s=s, train_d=d, chol=chol, alpha=alpha)


def predict_many(model: GpModel, s_stars) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and standard deviations at an array of test inputs."""
    s_stars = np.atleast_1d(np.asarray(s_stars, dtype=np.float64))
    if np.any(s_stars < 0.0):
        raise ValueError("test dissimilarity must be non-negative")
    hyper = model.hyper
    k_star = hyper.sigma**2 * np.exp(
        -0.5 * ((model.train_s[:, None] - s_stars[None, :]) / hyper.ell) ** 2
    )
    mean = power_law_mean(s_stars, hyper.a, hyper.b) + k_star.T @ model.alpha
    v = solve_triangular(model.chol, k_star, lower=True)
    var = hyper.sigma**2 + hyper.noise_var - np.sum(v * v, axis=0)
    std = np.sqrt(np.clip(var, 0.0, None))
    return mean, std


def predict(model: GpModel, s_star: float) -> Prediction:
    """Predictive distribution for the distance at one test dissimilarity."""
    mean, std = predict_many(model, float(s_star))
    return Prediction(mean=float(mean[0]), std=float(std[0]))


def log_marginal_likelihood(model: GpModel) -> float:
    """Log evidence of the training targets under the trained model."""
    resid = model.train_d - power_law_mean(model.train_s, model.hyper.a, model.hyper.b)
    n = model.train_s.size
    return float(
        -0.5 * resid @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
