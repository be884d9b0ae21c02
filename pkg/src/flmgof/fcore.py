"""Discretized curves and quadrature-based L2 geometry on a fixed grid.

Curves live on a shared grid of abscissae; all inner products are quadrature
approximations of the L2 inner product. Equidistant grids with an even number
of intervals get composite Simpson weights (exact for cubics, and exact for
the Fourier products used elsewhere); any other grid falls back to the
per-interval trapezoid rule. Both weight sets are nonnegative and sum to the
grid span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError


def _quadrature_weights(points: np.ndarray) -> np.ndarray:
    n = points.size
    diffs = np.diff(points)
    equidistant = np.allclose(diffs, diffs[0], rtol=1e-12, atol=1e-14)
    if equidistant and n >= 3 and (n - 1) % 2 == 0:
        h = (points[-1] - points[0]) / (n - 1)
        w = np.empty(n)
        w[0] = w[-1] = h / 3.0
        w[1:-1:2] = 4.0 * h / 3.0
        w[2:-1:2] = 2.0 * h / 3.0
        return w
    w = np.zeros(n)
    w[:-1] += 0.5 * diffs
    w[1:] += 0.5 * diffs
    return w


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Ordered abscissae on [a, b] together with quadrature weights."""

    points: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise ConfigError("grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise NumericError("grid points must be finite")
        if not np.all(np.diff(pts) > 0):
            raise ConfigError("grid points must be strictly increasing")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(_quadrature_weights(pts)))

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0, num: int = 201) -> "Grid":
        return cls(np.linspace(a, b, num))

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def span(self) -> float:
        return float(self.points[-1] - self.points[0])

    def cache_token(self) -> bytes:
        """Stable byte key for caching objects derived from this grid."""
        return self.points.tobytes()

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.cache_token())


@dataclass(frozen=True)
class FunctionalSample:
    """n curves evaluated on a common grid, stored as an n x T matrix."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[1] != self.grid.size:
            raise ConfigError(
                f"curve matrix has {vals.shape[1]} columns, grid has {self.grid.size} points"
            )
        if vals.shape[0] < 1:
            raise ConfigError("sample needs at least one curve")
        if not np.all(np.isfinite(vals)):
            raise NumericError("curve values must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ResponseVector:
    """Scalar responses paired row-by-row with a FunctionalSample."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise NumericError("responses must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def n(self) -> int:
        return self.values.size


def _check_same_grid(grid: Grid, f: np.ndarray, g: np.ndarray | None = None):
    if f.shape[-1] != grid.size:
        raise ConfigError(f"curve length {f.shape[-1]} does not match grid size {grid.size}")
    if g is not None and g.shape[-1] != grid.size:
        raise ConfigError(f"curve length {g.shape[-1]} does not match grid size {grid.size}")


def inner_product(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """Quadrature approximation of the L2 inner product of two curves."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_same_grid(grid, f, g)
    return float(np.dot(grid.weights, f * g))


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    """Quadrature L2 norm, sqrt(<f, f>)."""
    return float(np.sqrt(max(inner_product(grid, f, f), 0.0)))


def center_sample(
    xs: FunctionalSample, ys: ResponseVector
) -> tuple[FunctionalSample, ResponseVector]:
    """Subtract the pointwise mean curve and the mean response.

    Requires at least two observations; the centered outputs have zero
    column means and zero response mean.
    """
    if xs.n < 2:
        raise ConfigError("centering needs at least 2 observations")
    if xs.n != ys.n:
        raise ConfigError(f"sample has {xs.n} curves but {ys.n} responses")
    centered_vals = xs.values - xs.values.mean(axis=0, keepdims=True)
    centered_ys = ys.values - ys.values.mean()
    return FunctionalSample(xs.grid, centered_vals), ResponseVector(centered_ys)
