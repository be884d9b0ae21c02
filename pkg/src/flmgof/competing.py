"""Benchmark tests for the no-effect null: functional F-test and a
kernel-smoothing statistic, both calibrated by the golden wild bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bootstrap import draw_multipliers, pvalue_from_replicates
from .errors import ConfigError
from .fcore import FunctionalSample, ResponseVector

PCV_QUANTILES = tuple(np.arange(1, 11) * 0.05)  # 0.05 .. 0.50


@dataclass(frozen=True)
class KernelConfig:
    """Kernel-test settings: bandwidth is a positive float or 'pcv'."""

    bandwidth: float | str = "pcv"
    quantiles: tuple = PCV_QUANTILES

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "pcv":
                raise ConfigError(f"bandwidth must be positive or 'pcv', got {self.bandwidth!r}")
        elif self.bandwidth <= 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class CompetingResult:
    statistic: float
    replicates: np.ndarray | None
    p_value: float
    B: int
    seed: int
    method: str
    bandwidth: float | None = None


def _gauss_kernel(t: np.ndarray) -> np.ndarray:
    # 2 * standard normal density at |t|
    return np.sqrt(2.0 / np.pi) * np.exp(-0.5 * t * t)


def f_test_statistic(xs: FunctionalSample, ys: ResponseVector) -> float:
    """Quadrature L2 norm of the empirical curve-response covariance."""
    if xs.n < 2:
        raise ConfigError("covariance statistic needs n >= 2")
    xc = xs.values - xs.values.mean(axis=0, keepdims=True)
    yc = ys.values - ys.values.mean()
    cov_curve = yc @ xc / xs.n
    return float(np.sqrt(max(cov_curve @ (xs.grid.weights * cov_curve), 0.0)))


def pairwise_l2_distances(xs: FunctionalSample) -> np.ndarray:
    """Matrix of quadrature L2 distances between all curve pairs."""
    weighted = xs.values * xs.grid.weights
    gram = weighted @ xs.values.T
    sq = np.diag(gram)
    d2 = np.maximum(sq[:, None] + sq[None, :] - (gram + gram.T), 0.0)
    return np.sqrt(d2)


def pcv_bandwidth(xs: FunctionalSample, ys: ResponseVector, grid_of_h=None) -> float:
    """Bandwidth minimizing the leave-one-out kernel-regression error.

    The default grid holds the 5%..50% quantiles of the positive pairwise
    distances; ties in the error curve resolve to the first minimum.
    """
    dist = pairwise_l2_distances(xs)
    if grid_of_h is None:
        off = dist[~np.eye(xs.n, dtype=bool)]
        grid_of_h = np.quantile(off, PCV_QUANTILES)
    grid_of_h = [float(h) for h in np.atleast_1d(grid_of_h)]
    if not grid_of_h:
        raise ConfigError("empty bandwidth grid")
    best_h, best_err = None, np.inf
    y = ys.values
    for h in grid_of_h:
        if h <= 0:
            continue
        weights = _gauss_kernel(dist / h)
        np.fill_diagonal(weights, 0.0)
        denom = weights.sum(axis=1)
        if np.any(denom <= 0):
            continue
        pred = weights @ y / denom
        err = float(np.mean((y - pred) ** 2))
        if err < best_err:
            best_h, best_err = h, err
    if best_h is None:
        raise ConfigError("every candidate bandwidth produced empty neighborhoods")
    return best_h


def kernel_test_statistic(
    xs: FunctionalSample, ys: ResponseVector, cfg: KernelConfig | None = None
) -> float:
    """Squared kernel-weighted residual sums under the no-effect null,
    averaged over the sample (the integral over the covariate law is
    replaced by the empirical mean; weight function uniform)."""
    cfg = cfg or KernelConfig()
    h = cfg.bandwidth if isinstance(cfg.bandwidth, float) else pcv_bandwidth(xs, ys)
    if h <= 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    weights = _gauss_kernel(pairwise_l2_distances(xs) / h)
    sums = weights @ ys.values
    return float(sums @ sums / xs.n)


def calibrate_competing(
    method: str,
    xs: FunctionalSample,
    ys: ResponseVector,
    B: int,
    seed: int,
    cfg: KernelConfig | None = None,
    keep_replicates: bool = True,
) -> CompetingResult:
    """Golden wild bootstrap for 'ftest' or 'kernel'.

    Bootstrap responses are multiplier-perturbed centered responses (the
    residuals of the no-effect null); the kernel bandwidth is resolved once
    on the original sample and frozen across replicates.
    """
    if B < 1:
        raise ConfigError("need at least one bootstrap replicate")
    if method not in ("ftest", "kernel"):
        raise ConfigError(f"unknown competing method {method!r}")
    rng = np.random.default_rng(seed)
    y_resid = ys.values - ys.values.mean()
    mult = draw_multipliers(B * xs.n, rng).reshape(B, xs.n)
    y_star = mult * y_resid[None, :]
    bandwidth = None
    if method == "ftest":
        statistic = f_test_statistic(xs, ys)
        yc_star = y_star - y_star.mean(axis=1, keepdims=True)
        cov_curves = yc_star @ xs.values / xs.n  # centering of X is implicit: rows of yc_star sum to 0
        reps = np.sqrt(np.maximum((cov_curves * cov_curves) @ xs.grid.weights, 0.0))
    else:
        cfg = cfg or KernelConfig()
        bandwidth = cfg.bandwidth if isinstance(cfg.bandwidth, float) else pcv_bandwidth(xs, ys)
        frozen = KernelConfig(bandwidth=bandwidth)
        statistic = kernel_test_statistic(xs, ys, frozen)
        weights = _gauss_kernel(pairwise_l2_distances(xs) / bandwidth)
        sums = y_star @ weights.T
        reps = np.einsum("bi,bi->b", sums, sums) / xs.n
    return CompetingResult(
        statistic=float(statistic),
        replicates=reps if keep_replicates else None,
        p_value=pvalue_from_replicates(statistic, reps),
        B=B,
        seed=seed,
        method=method,
        bandwidth=bandwidth,
    )
