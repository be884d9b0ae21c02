"""Projected Cramer-von Mises statistic in closed form.

The statistic is a quadratic form n^-2 eps' A eps in the model residuals.
Entry (i, j) of A aggregates, over every anchor observation r, the surface
area of the spherical wedge where the two difference vectors x'_i - x'_r and
x'_j - x'_r both project nonpositively; x' = R x maps basis coefficients to
a Euclidean frame through the Cholesky factor of the Gram matrix. Wedge
area factors into the wedge angle times pi^(p/2-1)/Gamma(p/2), so only the
angle sums are stored (packed upper triangle, O(n^2) memory; the n^3
intermediate is never materialized).

A Monte Carlo oracle evaluating the underlying projected functional by
uniform direction sampling is included for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dspmv

from . import kernels
from .basis import CoefficientSet
from .errors import ConfigError, NumericError
from .fcore import _readonly

TIE_RTOL = 1e-12


def transform_coefficients(coeffs: CoefficientSet) -> np.ndarray:
    """Rows R x_k of the coefficient matrix; identity for orthonormal bases."""
    return coeffs.coeffs @ coeffs.basis.chol.T


def wedge_angle(a: np.ndarray, b: np.ndarray, tol: float) -> float:
    """Width of the wedge spanned by the normal hyperplanes of a and b.

    Tie cases: both vectors within tol of zero -> 2*pi (whole sphere);
    exactly one zero, or a == b within tol -> pi (hemisphere); otherwise
    |pi - arccos(cos)| with the cosine clamped to [-1, 1].
    """
    if tol < 0:
        raise ConfigError("tie tolerance must be nonnegative")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericError("non-finite input to wedge_angle")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= tol and nb <= tol:
        return 2.0 * math.pi
    if na <= tol or nb <= tol or float(np.linalg.norm(a - b)) <= tol:
        return math.pi
    cos = float(a @ b) / (na * nb)
    cos = min(1.0, max(-1.0, cos))
    return abs(math.pi - math.acos(cos))


def default_tie_tolerance(xprime: np.ndarray) -> float:
    """Tie tolerance scaled to the coordinate spread of the points."""
    if xprime.size == 0:
        return 0.0
    spread = float(xprime.max() - xprime.min()) if xprime.shape[0] > 1 else 0.0
    return TIE_RTOL * spread


def geometry_factor(p: int, det_chol: float) -> float:
    """pi^(p/2-1) / Gamma(p/2) scaled by det(R)^-1."""
    if p > 300:
        raise ConfigError(f"dimension p={p} overflows the wedge surface factor")
    if det_chol <= 0:
        raise NumericError("Cholesky determinant must be positive")
    return math.pi ** (p / 2.0 - 1.0) / math.gamma(p / 2.0) / det_chol


def sphere_surface(p: int) -> float:
    """Surface area of the unit sphere in R^p."""
    return 2.0 * math.pi ** (p / 2.0) / math.gamma(p / 2.0)


@dataclass(frozen=True)
class PcvmComponents:
    """Angle sums plus the scalar geometry factor; shared by all replicates."""

    n: int
    p: int
    angle_sums: np.ndarray  # packed upper triangle, entry (i<=j) at i + j(j+1)/2
    factor: float

    def diagonal(self) -> np.ndarray:
        idx = np.arange(self.n)
        return self.angle_sums[idx + (idx * (idx + 1)) // 2]

    def full_matrix(self) -> np.ndarray:
        iu, ju = np.triu_indices(self.n)
        full = np.zeros((self.n, self.n))
        full[iu, ju] = self.angle_sums[iu + (ju * (ju + 1)) // 2]
        return full + np.triu(full, 1).T

    def quadratic_form(self, eps: np.ndarray) -> float:
        """eps' A0 eps through the packed symmetric storage."""
        eps = np.asarray(eps, dtype=float)
        if eps.size != self.n:
            raise ConfigError(f"residual length {eps.size} does not match n={self.n}")
        return float(eps @ dspmv(self.n, 1.0, self.angle_sums, eps))

    def quadratic_forms(self, eps_matrix: np.ndarray) -> np.ndarray:
        """Row-wise eps' A0 eps for a batch of residual vectors."""
        eps_matrix = np.atleast_2d(np.asarray(eps_matrix, dtype=float))
        if eps_matrix.shape[1] != self.n:
            raise ConfigError(f"residual width {eps_matrix.shape[1]} does not match n={self.n}")
        full = self.full_matrix()
        return np.einsum("bi,ij,bj->b", eps_matrix, full, eps_matrix)


def build_components(
    xprime: np.ndarray, tol: float | None = None, det_chol: float = 1.0
) -> PcvmComponents:
    """Aggregate the wedge angles over all anchors for the given point set."""
    xprime = np.ascontiguousarray(np.atleast_2d(xprime), dtype=float)
    if not np.all(np.isfinite(xprime)):
        raise NumericError("non-finite coefficients in the statistic geometry")
    n, p = xprime.shape
    if n < 1:
        raise ConfigError("need at least one observation")
    factor = geometry_factor(p, det_chol)
    if tol is None:
        tol = default_tie_tolerance(xprime)
    packed = kernels.angle_sums_packed(xprime, tol)
    return PcvmComponents(n=n, p=p, angle_sums=_readonly(packed), factor=factor)


def components_from_coefficients(coeffs: CoefficientSet, tol: float | None = None) -> PcvmComponents:
    """Convenience wrapper: transform coefficients, then aggregate angles."""
    xprime = transform_coefficients(coeffs)
    return build_components(xprime, tol=tol, det_chol=coeffs.basis.det_chol())


def pcvm_statistic(residuals: np.ndarray, comps: PcvmComponents) -> float:
    """n^-2 times the geometry-weighted quadratic form in the residuals."""
    residuals = np.asarray(residuals, dtype=float)
    value = comps.factor * comps.quadratic_form(residuals) / comps.n**2
    if value < 0:
        scale = max(1.0, float(residuals @ residuals) * comps.factor)
        if value < -1e-12 * scale:
            raise NumericError(f"statistic came out negative: {value}")
        value = 0.0
    return value


def pcvm_statistics(residual_matrix: np.ndarray, comps: PcvmComponents) -> np.ndarray:
    """Vectorized pcvm_statistic over rows of a residual matrix."""
    vals = comps.factor * comps.quadratic_forms(residual_matrix) / comps.n**2
    return np.maximum(vals, 0.0)


def pcvm_oracle(
    xprime: np.ndarray,
    residuals: np.ndarray,
    directions: int = 20_000,
    seed: int = 0,
    det_chol: float = 1.0,
    return_stderr: bool = False,
):
    """Monte Carlo evaluation of the projected functional.

    Draws uniform directions on the p-sphere, forms the squared partial sums
    of residuals ordered by the projected points, averages over the
    empirical jump measure, and rescales by the sphere surface. Converges
    to pcvm_statistic as the direction count grows; kept deliberately
    independent of the closed form for testing.
    """
    if directions < 1_000:
        raise ConfigError("oracle needs at least 1000 directions")
    xprime = np.atleast_2d(np.asarray(xprime, dtype=float))
    residuals = np.asarray(residuals, dtype=float)
    n, p = xprime.shape
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((directions, p))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    proj = xprime @ g.T  # n x directions
    per_direction = np.zeros(directions)
    for r in range(n):
        partial = residuals @ (proj <= proj[r][None, :])
        per_direction += partial * partial
    per_direction /= n * n
    scale = sphere_surface(p) / det_chol
    value = scale * float(per_direction.mean())
    if return_stderr:
        stderr = scale * float(per_direction.std(ddof=1)) / math.sqrt(directions)
        return value, stderr
    return value
