"""Fitting the functional linear model by basis representation.

The scalar response is regressed on the design Z = C J, where C holds the
curve coefficients and J the cross-Gram matrix between the curve basis and
the coefficient-function basis (J equals the Gram matrix when both bases
coincide, the default). The fit exposes the residuals and the annihilator
matrix I - Z (Z'Z)^-1 Z', both reused verbatim by the bootstrap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import (
    BSPLINE_CANDIDATES,
    COMPONENT_CANDIDATES,
    DEFAULT_BSPLINE_ORDER,
    BasisSystem,
    CandidateFit,
    CoefficientSet,
    build_basis_cached,
    fpc_basis,
    fpls_basis,
    project_sample,
    select_dimension,
)
from .errors import ConfigError, NumericError
from .fcore import FunctionalSample, Grid, ResponseVector, _readonly

DEFAULT_SELECTORS = {"bspline": "gcv", "fourier": "gcv", "fpc": "bic", "fpls": "pcv"}


@dataclass(frozen=True)
class BetaFunction:
    """A coefficient function: grid evaluation plus optional basis form."""

    grid: Grid
    values: np.ndarray
    basis: BasisSystem | None = None
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != self.grid.size:
            raise ConfigError("coefficient function length does not match grid")
        object.__setattr__(self, "values", _readonly(vals))

    @classmethod
    def from_coefficients(cls, basis: BasisSystem, coeffs: np.ndarray) -> "BetaFunction":
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        return cls(grid=basis.grid, values=coeffs @ basis.eval, basis=basis, coeffs=coeffs)

    @classmethod
    def zero(cls, grid: Grid) -> "BetaFunction":
        return cls(grid=grid, values=np.zeros(grid.size))


def build_design(coeffs: CoefficientSet, beta_basis: BasisSystem) -> np.ndarray:
    """Design matrix Z = C J with J the cross-Gram of the two bases."""
    if coeffs.basis.grid != beta_basis.grid:
        raise ConfigError("curve basis and coefficient-function basis grids differ")
    if beta_basis is coeffs.basis:
        cross = coeffs.basis.gram
    else:
        cross = (coeffs.basis.eval * coeffs.basis.grid.weights) @ beta_basis.eval.T
    return coeffs.coeffs @ cross


@dataclass(frozen=True)
class FlmFit:
    """Least-squares fit of the functional linear model."""

    basis: BasisSystem
    coeffs: CoefficientSet
    b: np.ndarray                 # coefficient vector of the fitted beta
    design: np.ndarray            # n x p matrix Z
    fitted: np.ndarray
    residuals: np.ndarray
    annihilator: np.ndarray       # I - Z (Z'Z)^-1 Z'
    df: float
    selected_p: int
    selector: str | None = None
    _q: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    def beta(self) -> BetaFunction:
        return BetaFunction.from_coefficients(self.basis, self.b)


def _lstsq_qr(design: np.ndarray, y: np.ndarray, p_label):
    """Thin-QR least squares; returns (b, fitted, residuals, Q)."""
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= 1e-10 * max(diag.max(), 1e-300):
        raise NumericError(f"singular design matrix for p={p_label}")
    qty = q.T @ y
    b = scipy.linalg.solve_triangular(r, qty, lower=False)
    fitted = design @ b
    return b, fitted, y - fitted, q


def _fit_fixed_design(design: np.ndarray, y: np.ndarray, p_label) -> dict:
    b, fitted, residuals, q = _lstsq_qr(design, y, p_label)
    return {"b": b, "fitted": fitted, "residuals": residuals, "q": q}


def _hat_diag(q: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", q, q)


@dataclass(frozen=True)
class EstimatorConfig:
    """How to build the basis and choose its dimension for a fit."""

    kind: str = "bspline"
    p: int | None = None             # fixed dimension; None selects automatically
    selector: str | None = None      # gcv | pcv | bic; None -> kind default
    candidates: tuple = ()           # empty -> kind default grid
    order: int = DEFAULT_BSPLINE_ORDER

    def resolved_selector(self) -> str:
        return self.selector or DEFAULT_SELECTORS[self.kind]

    def resolved_candidates(self, n: int, T: int) -> list[int]:
        if self.candidates:
            grid = list(self.candidates)
        elif self.kind in ("bspline", "fourier"):
            grid = list(BSPLINE_CANDIDATES)
        else:
            grid = list(COMPONENT_CANDIDATES)
        hi = n - 1 if self.kind != "fpc" else min(n - 1, T)
        return [p for p in grid if 1 <= p < n and p <= hi]


def _centered_curves(xs: FunctionalSample) -> FunctionalSample:
    return FunctionalSample(xs.grid, xs.values - xs.values.mean(axis=0, keepdims=True))


def _basis_for_p(xs, ys, cfg: EstimatorConfig, p: int) -> BasisSystem:
    # data-driven systems are defined through centered moments
    if cfg.kind in ("bspline", "fourier"):
        return build_basis_cached(cfg.kind, p, xs.grid, order=cfg.order)
    if cfg.kind == "fpc":
        return fpc_basis(_centered_curves(xs), p)
    if cfg.kind == "fpls":
        return fpls_basis(_centered_curves(xs), ResponseVector(ys.values - ys.values.mean()), p)
    raise ConfigError(f"unknown estimator kind {cfg.kind!r}")


def _truncate_system(basis: BasisSystem, p: int) -> BasisSystem:
    """Leading-p subsystem of a nested (fpc/fpls) system."""
    from .basis import _make_system

    eig = None if basis.eigenvalues is None else basis.eigenvalues[:p]
    return _make_system(basis.kind, basis.grid, basis.eval[:p], eigenvalues=eig,
                        truncated=basis.truncated)


def _fpls_pcv_press(xs: FunctionalSample, ys: ResponseVector, candidates) -> dict:
    """Leave-one-out squared prediction errors for fpls, per candidate p.

    The components are response-adaptive, so the hat-matrix shortcut is
    over-optimistic here; each fold genuinely rebuilds the component system
    from the remaining observations, mirroring the full-sample fit (raw
    scores, no intercept; directions from centered fold moments).
    """
    n = xs.n
    w = xs.grid.weights
    p_max = max(candidates)
    press = {p: 0.0 for p in candidates}
    complete = {p: True for p in candidates}
    index = np.arange(n)
    for i in range(n):
        mask = index != i
        fold_xs = FunctionalSample(xs.grid, xs.values[mask])
        fold_ys = ResponseVector(ys.values[mask])
        try:
            basis = _basis_for_p(fold_xs, fold_ys, EstimatorConfig(kind="fpls"),
                                 min(p_max, n - 2))
        except (ConfigError, NumericError):
            for p in candidates:
                complete[p] = False
            continue
        weighted = basis.eval * w
        train_scores = fold_xs.values @ weighted.T
        test_scores = weighted @ xs.values[i]
        y_train = fold_ys.values
        for p in candidates:
            if p > basis.p:
                complete[p] = False
                continue
            coef, *_ = np.linalg.lstsq(train_scores[:, :p], y_train, rcond=None)
            err = ys.values[i] - test_scores[:p] @ coef
            press[p] += err * err
    return {p: press[p] for p in candidates if complete[p]}


def fit_flm(xs: FunctionalSample, ys: ResponseVector, config: EstimatorConfig | None = None) -> FlmFit:
    """Fit Y = <X, beta> + eps on centered data, selecting p when not fixed.

    The same basis represents the curves and the coefficient function. For
    automatic selection, each candidate p is scored by the configured
    criterion (gcv, pcv or bic) on its own fit; leave-one-out residuals for
    pcv come from the standard hat-matrix identity on the fixed design.
    """
    config = config or EstimatorConfig()
    if xs.n != ys.n:
        raise ConfigError(f"sample has {xs.n} curves but {ys.n} responses")
    y = ys.values
    n, T = xs.values.shape

    # data-driven systems are nested: build once at the largest p, then slice
    parent: BasisSystem | None = None

    def system_at(p: int) -> BasisSystem:
        nonlocal parent
        if config.kind in ("fpc", "fpls"):
            if parent is None or parent.p < p:
                parent = _basis_for_p(xs, ys, config, p)
            if parent.p < p:
                raise ConfigError(f"only {parent.p} components available, needed {p}")
            return parent if parent.p == p else _truncate_system(parent, p)
        return _basis_for_p(xs, ys, config, p)

    if config.p is not None:
        selected_p = config.p
        selector = None
        if not (1 <= selected_p < n):
            raise ConfigError(f"fixed p={selected_p} infeasible for n={n}")
    else:
        selector = config.resolved_selector()
        candidates = config.resolved_candidates(n, T)
        if not candidates:
            raise ConfigError(f"no feasible candidate dimensions for n={n}, kind={config.kind}")
        if config.kind in ("fpc", "fpls"):
            try:
                parent = _basis_for_p(xs, ys, config, max(candidates))
            except (ConfigError, NumericError):
                parent = None
            if parent is not None:
                candidates = [p for p in candidates if p <= parent.p]

        loo_press = (
            _fpls_pcv_press(xs, ys, candidates)
            if (selector == "pcv" and config.kind == "fpls")
            else None
        )

        def evaluate(p):
            try:
                basis = system_at(p)
                coeffs = project_sample(xs, basis)
                design = build_design(coeffs, basis)
                parts = _fit_fixed_design(design, y, p)
            except (ConfigError, NumericError):
                return None
            rss = float(parts["residuals"] @ parts["residuals"])
            press = None
            if selector == "pcv":
                if loo_press is not None:
                    if p not in loo_press:
                        return None
                    press = loo_press[p]
                else:
                    leverage = _hat_diag(parts["q"])
                    denom = 1.0 - leverage
                    if np.any(denom <= 1e-10):
                        return None
                    loo = parts["residuals"] / denom
                    press = float(loo @ loo)
            return CandidateFit(p=p, n=n, rss=rss, df=float(p), press=press)

        selected_p = select_dimension(selector, candidates, evaluate)

    basis = system_at(selected_p)
    if basis.p != selected_p:  # fpls may have truncated below the fixed request
        selected_p = basis.p
    coeffs = project_sample(xs, basis)
    design = build_design(coeffs, basis)
    parts = _fit_fixed_design(design, y, selected_p)
    q = parts["q"]
    annihilator = np.eye(n) - q @ q.T
    return FlmFit(
        basis=basis,
        coeffs=coeffs,
        b=_readonly(parts["b"]),
        design=_readonly(design),
        fitted=_readonly(parts["fitted"]),
        residuals=_readonly(parts["residuals"]),
        annihilator=_readonly(annihilator),
        df=float(selected_p),
        selected_p=int(selected_p),
        selector=selector,
        _q=_readonly(q),
    )


def residuals_simple(
    xs: FunctionalSample,
    ys: ResponseVector,
    beta0: BetaFunction,
    basis: BasisSystem,
) -> tuple[np.ndarray, CoefficientSet]:
    """Residuals under a fully specified coefficient function.

    Both the curves and beta0 are pushed through the same p-truncated basis,
    so the residual is Y_i - x_i' Psi b0.
    """
    if xs.grid != basis.grid or beta0.grid != basis.grid:
        raise ConfigError("sample, beta0 and basis must share one grid")
    coeffs = project_sample(xs, basis)
    beta_sample = FunctionalSample(basis.grid, beta0.values[None, :])
    b0 = project_sample(beta_sample, basis).coeffs[0]
    eps = ys.values - coeffs.coeffs @ (basis.gram @ b0)
    return eps, coeffs
