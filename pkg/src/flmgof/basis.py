"""Truncated basis systems on a grid and automatic dimension selection.

Four kinds are supported: fixed B-spline and Fourier systems, and the
data-driven principal-component (fpc) and partial-least-squares (fpls)
systems. Every system carries its evaluation matrix on the grid, the Gram
matrix of quadrature inner products, and the upper Cholesky factor used to
map coefficients to an isometric Euclidean frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.interpolate import BSpline

from .errors import ConfigError, NumericError
from .fcore import FunctionalSample, Grid, ResponseVector, _readonly

DEFAULT_BSPLINE_ORDER = 4
BSPLINE_CANDIDATES = tuple(range(5, 21))
COMPONENT_CANDIDATES = tuple(range(1, 11))


@dataclass(frozen=True)
class BasisSystem:
    """A p-truncated basis: evaluation matrix, Gram matrix, Cholesky factor."""

    kind: str
    p: int
    grid: Grid
    eval: np.ndarray            # p x T, rows are basis functions on the grid
    gram: np.ndarray            # p x p matrix of quadrature inner products
    chol: np.ndarray            # upper triangular R with gram = R.T @ R
    order: int | None = None    # spline order, None for other kinds
    eigenvalues: np.ndarray | None = None  # fpc only, decreasing
    truncated: bool = False     # fpls only: fewer components than requested

    @property
    def is_orthonormal(self) -> bool:
        return self.kind in ("fourier", "fpc", "fpls")

    def det_chol(self) -> float:
        """det(R) = det(gram)^(1/2); its inverse enters the test geometry."""
        return float(np.prod(np.diag(self.chol)))


@dataclass(frozen=True)
class CoefficientSet:
    """Least-squares basis coefficients of a sample, one row per curve."""

    coeffs: np.ndarray  # n x p
    basis: BasisSystem

    def reconstruct(self) -> np.ndarray:
        """Evaluate the truncated representations back on the grid (n x T)."""
        return self.coeffs @ self.basis.eval


def _make_system(kind, grid, eval_matrix, order=None, eigenvalues=None, truncated=False):
    eval_matrix = np.atleast_2d(np.asarray(eval_matrix, dtype=float))
    p = eval_matrix.shape[0]
    weighted = eval_matrix * grid.weights
    gram = weighted @ eval_matrix.T
    gram = 0.5 * (gram + gram.T)
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 1e-10 * eigs[-1]:
        raise NumericError(
            f"ill-conditioned {kind} basis: eigenvalue ratio {eigs[0] / eigs[-1]:.2e}"
        )
    chol = scipy.linalg.cholesky(gram, lower=False)
    return BasisSystem(
        kind=kind,
        p=p,
        grid=grid,
        eval=_readonly(eval_matrix),
        gram=_readonly(gram),
        chol=_readonly(chol),
        order=order,
        eigenvalues=None if eigenvalues is None else _readonly(eigenvalues),
        truncated=truncated,
    )


def _fourier_eval(p: int, grid: Grid) -> np.ndarray:
    # constant + sin/cos pairs, scaled to unit quadrature L2 norm
    a, span = grid.points[0], grid.span
    u = (grid.points - a) / span
    rows = [np.full(grid.size, 1.0 / np.sqrt(span))]
    for j in range(1, (p - 1) // 2 + 1):
        rows.append(np.sqrt(2.0 / span) * np.sin(2.0 * np.pi * j * u))
        rows.append(np.sqrt(2.0 / span) * np.cos(2.0 * np.pi * j * u))
    return np.vstack(rows)


def _bspline_eval(p: int, grid: Grid, order: int) -> np.ndarray:
    degree = order - 1
    a, b = grid.points[0], grid.points[-1]
    breakpoints = np.linspace(a, b, p - order + 2)
    knots = np.concatenate([np.full(degree, a), breakpoints, np.full(degree, b)])
    design = BSpline.design_matrix(grid.points, knots, degree, extrapolate=False)
    return design.toarray().T


def build_basis(kind: str, p: int, grid: Grid, order: int = DEFAULT_BSPLINE_ORDER) -> BasisSystem:
    """Construct a fixed (fourier or bspline) basis of dimension p.

    Fourier needs odd p (constant plus full sin/cos pairs); B-splines need
    p >= order and use equidistant knots over the grid span.
    """
    if p < 1:
        raise ConfigError(f"basis dimension must be positive, got {p}")
    if kind == "fourier":
        if p % 2 == 0:
            raise ConfigError(f"fourier basis needs odd p, got {p}")
        return _make_system("fourier", grid, _fourier_eval(p, grid))
    if kind == "bspline":
        if order < 2:
            raise ConfigError(f"spline order must be >= 2, got {order}")
        if p < order:
            raise ConfigError(f"bspline basis needs p >= order, got p={p}, order={order}")
        return _make_system("bspline", grid, _bspline_eval(p, grid, order), order=order)
    raise ConfigError(f"unknown basis kind {kind!r}")


_BASIS_CACHE: dict = {}
_BASIS_CACHE_MAX = 128


def build_basis_cached(kind: str, p: int, grid: Grid, order: int = DEFAULT_BSPLINE_ORDER):
    """build_basis with memoization; fixed bases depend only on (kind, p, order, grid)."""
    key = (kind, p, order, grid.cache_token())
    hit = _BASIS_CACHE.get(key)
    if hit is None:
        if len(_BASIS_CACHE) >= _BASIS_CACHE_MAX:
            _BASIS_CACHE.clear()
        hit = _BASIS_CACHE[key] = build_basis(kind, p, grid, order=order)
    return hit


def project_sample(xs: FunctionalSample, basis: BasisSystem) -> CoefficientSet:
    """Least-squares coefficients of each curve in the given basis."""
    if xs.grid != basis.grid:
        raise ConfigError("sample and basis grids differ")
    rhs = basis.eval @ (xs.grid.weights[:, None] * xs.values.T)  # p x n
    coeffs = scipy.linalg.cho_solve((basis.chol, False), rhs).T
    return CoefficientSet(coeffs=_readonly(coeffs), basis=basis)


def _fix_signs(rows: np.ndarray) -> np.ndarray:
    # make the largest-magnitude loading of each component positive
    out = rows.copy()
    for k in range(out.shape[0]):
        j = np.argmax(np.abs(out[k]))
        if out[k, j] < 0:
            out[k] = -out[k]
    return out


def fpc_basis(xs: FunctionalSample, p: int) -> BasisSystem:
    """Principal components of the empirical covariance operator.

    Curves are assumed centered. Components are orthonormal in the
    quadrature inner product and ordered by decreasing eigenvalue.
    """
    n, T = xs.values.shape
    max_p = min(n - 1, T)
    if p < 1 or p > max_p:
        raise ConfigError(f"fpc rank limit: p={p} not in [1, {max_p}] for n={n}, T={T}")
    sqrt_w = np.sqrt(xs.grid.weights)
    a = (xs.values * sqrt_w) / np.sqrt(n)
    _, svals, vt = np.linalg.svd(a, full_matrices=False)
    eig = svals[:p] ** 2
    components = _fix_signs(vt[:p] / sqrt_w)
    return _make_system("fpc", xs.grid, components, eigenvalues=eig)


def fpls_basis(xs: FunctionalSample, ys: ResponseVector, p: int) -> BasisSystem:
    """Partial-least-squares components of (curves, response).

    Standard single-response recursion: each weight function maximizes
    squared sample covariance with the current response residual, curves and
    response are deflated on the extracted score, and the weight functions
    are re-orthonormalized at the end (quadrature inner product). If the
    response covariance vanishes before p components are found, the system
    is returned shorter with truncated=True.
    """
    if p < 1:
        raise ConfigError(f"fpls needs p >= 1, got {p}")
    if xs.n != ys.n:
        raise ConfigError(f"sample has {xs.n} curves but {ys.n} responses")
    w = xs.grid.weights
    x_work = xs.values.copy()
    y_work = ys.values.copy()
    components = []
    cov_scale = None
    for _ in range(p):
        cov_curve = y_work @ x_work / xs.n
        cov_norm = np.sqrt(max(cov_curve @ (w * cov_curve), 0.0))
        if cov_scale is None:
            cov_scale = cov_norm
        if cov_norm <= 1e-12 * max(cov_scale, 1e-12):
            break
        direction = cov_curve / cov_norm
        scores = x_work @ (w * direction)
        ss = scores @ scores
        if ss <= 0:
            break
        loading = scores @ x_work / ss
        x_work = x_work - np.outer(scores, loading)
        y_work = y_work - scores * (scores @ y_work / ss)
        components.append(direction)
    if not components:
        raise NumericError("response has zero covariance with the curves; no components")
    comp = np.vstack(components)
    # modified Gram-Schmidt in the quadrature inner product
    for k in range(comp.shape[0]):
        for j in range(k):
            comp[k] -= (comp[j] @ (w * comp[k])) * comp[j]
        norm = np.sqrt(comp[k] @ (w * comp[k]))
        if norm <= 1e-12:
            comp = comp[:k]
            break
        comp[k] /= norm
    if comp.shape[0] == 0:
        raise NumericError("partial-least-squares components collapsed during orthonormalization")
    return _make_system("fpls", xs.grid, comp, truncated=comp.shape[0] < p)


@dataclass(frozen=True)
class CandidateFit:
    """Per-candidate quantities needed by the selection criteria."""

    p: int
    n: int
    rss: float
    df: float
    press: float | None = None  # sum of squared leave-one-out residuals


def _criterion_value(method: str, cand: CandidateFit) -> float:
    if method == "gcv":
        # classical squared-denominator form; the linear-denominator variant
        # under-penalizes and measurably inflates the test's finite-sample size
        shrink = 1.0 - cand.df / cand.n
        if shrink <= 0:
            raise ConfigError(f"gcv undefined for p={cand.p}: df >= n")
        return cand.rss / (cand.n * shrink * shrink)
    if method == "pcv":
        if cand.press is None:
            raise ConfigError("pcv requires leave-one-out residuals")
        return cand.press / cand.n
    if method == "bic":
        return cand.n * np.log(max(cand.rss, 1e-300) / cand.n) + cand.p * np.log(cand.n)
    raise ConfigError(f"unknown selection method {method!r}")


def select_dimension(method: str, candidates, evaluate) -> int:
    """Pick the candidate dimension minimizing the requested criterion.

    evaluate(p) returns a CandidateFit or None for an infeasible candidate;
    ties and flat stretches resolve to the first minimum.
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("empty candidate list for dimension selection")
    best_p, best_val = None, np.inf
    for p in candidates:
        cand = evaluate(p)
        if cand is None:
            continue
        try:
            val = _criterion_value(method, cand)
        except (ConfigError, NumericError):
            continue
        if np.isfinite(val) and val < best_val:
            best_p, best_val = p, val
    if best_p is None:
        raise ConfigError(f"no feasible candidate among {candidates} for method {method!r}")
    return best_p


def select_dimension_representation(
    xs: FunctionalSample,
    kind: str = "bspline",
    candidates=None,
    order: int = DEFAULT_BSPLINE_ORDER,
) -> int:
    """Dimension for representing curves alone (no response involved).

    Uses the classical smoothing criterion: pooled squared reconstruction
    error divided by (1 - p/T)^2, minimized over the candidates.
    """
    T = xs.grid.size
    if candidates is None:
        candidates = COMPONENT_CANDIDATES if kind == "fpc" else BSPLINE_CANDIDATES
    candidates = [p for p in candidates if p < T]
    if not candidates:
        raise ConfigError("no representation candidates below the grid size")

    if kind == "fpc":
        p_hi = min(max(candidates), xs.n - 1, T)
        parent = fpc_basis(xs, p_hi)
        scores = project_sample(xs, parent).coeffs
        total = float(np.sum((xs.values * xs.values) @ xs.grid.weights))
        explained = np.cumsum(np.sum(scores * scores, axis=0))
        rss_at = {p: max(total - float(explained[p - 1]), 0.0)
                  for p in candidates if p <= p_hi}
    else:
        rss_at = {}
        for p in candidates:
            try:
                basis = build_basis_cached(kind, p, xs.grid, order=order)
            except (ConfigError, NumericError):
                continue
            resid = xs.values - project_sample(xs, basis).reconstruct()
            rss_at[p] = float(np.sum((resid * resid) @ xs.grid.weights))

    best_p, best_val = None, np.inf
    for p in candidates:
        if p not in rss_at:
            continue
        val = (rss_at[p] / T) / (1.0 - p / T) ** 2
        if np.isfinite(val) and val < best_val:
            best_p, best_val = p, val
    if best_p is None:
        raise ConfigError(f"no feasible representation dimension among {list(candidates)}")
    return best_p
