"""Wild-bootstrap calibration of the statistic's null distribution.

Residuals are perturbed by i.i.d. two-point multipliers with atoms
(1 - sqrt(5))/2 and (1 + sqrt(5))/2 (the golden-ratio law, mean 0 and
variance 1 exactly). The composite branch refits through the precomputed
annihilator matrix; the angle-sum components are never rebuilt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .flm import FlmFit
from .pcvm import PcvmComponents, pcvm_statistic, pcvm_statistics

GOLDEN_ATOM_LOW = (1.0 - math.sqrt(5.0)) / 2.0
GOLDEN_ATOM_HIGH = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_PROB_LOW = (5.0 + math.sqrt(5.0)) / 10.0


@dataclass(frozen=True)
class CalibrationResult:
    """Observed statistic, bootstrap replicates, and the Monte Carlo p-value."""

    statistic: float
    replicates: np.ndarray | None
    p_value: float
    B: int
    seed: int


def draw_multipliers(n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the golden two-point multiplier law."""
    if n < 1:
        raise ConfigError("need at least one multiplier")
    low = rng.random(n) < GOLDEN_PROB_LOW
    return np.where(low, GOLDEN_ATOM_LOW, GOLDEN_ATOM_HIGH)


def pvalue_from_replicates(statistic: float, replicates: np.ndarray) -> float:
    """Share of replicates at or above the observed statistic."""
    replicates = np.asarray(replicates, dtype=float)
    return float(np.count_nonzero(replicates >= statistic) / replicates.size)


def _calibrate(statistic, replicate_residuals, comps, B, seed, keep_replicates):
    reps = pcvm_statistics(replicate_residuals, comps)
    p_value = pvalue_from_replicates(statistic, reps)
    return CalibrationResult(
        statistic=float(statistic),
        replicates=reps if keep_replicates else None,
        p_value=p_value,
        B=B,
        seed=seed,
    )


def calibrate_composite(
    fit: FlmFit,
    comps: PcvmComponents,
    B: int,
    seed: int,
    keep_replicates: bool = True,
) -> CalibrationResult:
    """Calibrate the composite-hypothesis test by residual wild bootstrap.

    Each replicate multiplies the fitted residuals by fresh golden
    multipliers and re-derives the refitted residuals through the stored
    annihilator M. Since M maps the fitted values to zero, M Y* = M eps*,
    so only the perturbed residuals are pushed through M.
    """
    if B < 1:
        raise ConfigError("need at least one bootstrap replicate")
    if comps.n != fit.n:
        raise ConfigError("components and fit were built from different samples")
    rng = np.random.default_rng(seed)
    statistic = pcvm_statistic(fit.residuals, comps)
    mult = draw_multipliers(B * fit.n, rng).reshape(B, fit.n)
    eps_star = mult * fit.residuals[None, :]
    refit = eps_star @ fit.annihilator.T
    return _calibrate(statistic, refit, comps, B, seed, keep_replicates)


def calibrate_simple(
    residuals: np.ndarray,
    comps: PcvmComponents,
    B: int,
    seed: int,
    keep_replicates: bool = True,
    recenter: bool = False,
) -> CalibrationResult:
    """Calibrate the simple-hypothesis test: no refitting, multipliers only.

    Set recenter=True only when the observed residuals were empirically
    mean-centered; the perturbed residuals are then re-centered the same
    way so both sides of the comparison satisfy the same constraint.
    """
    if B < 1:
        raise ConfigError("need at least one bootstrap replicate")
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size != comps.n:
        raise ConfigError("residual length does not match the components")
    rng = np.random.default_rng(seed)
    statistic = pcvm_statistic(residuals, comps)
    mult = draw_multipliers(B * comps.n, rng).reshape(B, comps.n)
    eps_star = mult * residuals[None, :]
    if recenter:
        eps_star = eps_star - eps_star.mean(axis=1, keepdims=True)
    return _calibrate(statistic, eps_star, comps, B, seed, keep_replicates)
