"""End-to-end test execution and the graphical diagnostic process.

test_from_sample runs one test (the projected Cramer-von Mises test, the
functional F-test, or the kernel test) on in-memory data; run_test wraps it
with dataset-level configuration and report assembly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .basis import build_basis, fpc_basis, select_dimension_representation
from .bootstrap import CalibrationResult, calibrate_composite, calibrate_simple, draw_multipliers
from .competing import CompetingResult, KernelConfig, calibrate_competing
from .errors import ConfigError
from .fcore import FunctionalSample, Grid, ResponseVector, center_sample
from .flm import BetaFunction, EstimatorConfig, fit_flm, residuals_simple
from .pcvm import components_from_coefficients
from .simulation import OuParams, simulate_ou

SCHEMA = "flm-gof/1"

P_POLICIES = ("auto", "auto-gcv", "auto-pcv", "auto-bic")


def _parse_p_policy(p_policy):
    """Returns (fixed_p or None, selector or None)."""
    if isinstance(p_policy, int):
        return p_policy, None
    text = str(p_policy).strip()
    if text in P_POLICIES:
        return None, None if text == "auto" else text.removeprefix("auto-")
    try:
        return int(text), None
    except ValueError:
        raise ConfigError(
            f"p policy must be one of {P_POLICIES} or an integer, got {p_policy!r}"
        ) from None


@dataclass(frozen=True)
class TestOutcome:
    method: str
    hypothesis: str
    statistic: float
    p_value: float
    B: int
    seed: int
    estimator: str | None = None
    selected_p: int | None = None
    bandwidth: float | None = None
    replicates: np.ndarray | None = None


def _simple_basis(xs, ys, estimator, fixed_p, selector):
    if estimator == "fpls":
        raise ConfigError("the simple hypothesis needs a response-free basis; use bspline or fpc")
    if selector in ("pcv", "bic"):
        raise ConfigError(
            "the simple hypothesis selects p by curve-representation gcv; use auto, auto-gcv or a fixed p"
        )
    centered = FunctionalSample(xs.grid, xs.values - xs.values.mean(axis=0, keepdims=True))
    if fixed_p is None:
        p = select_dimension_representation(centered if estimator == "fpc" else xs, kind=estimator)
    else:
        p = fixed_p
    if estimator == "fpc":
        return fpc_basis(centered, p)
    return build_basis(estimator, p, xs.grid)


def test_from_sample(
    xs: FunctionalSample,
    ys: ResponseVector,
    hypothesis: str = "composite",
    method: str = "pcvm",
    estimator: str = "bspline",
    p_policy="auto",
    B: int = 1000,
    seed: int = 0,
    beta0: BetaFunction | None = None,
    bandwidth="pcv",
    center: bool = False,
    keep_replicates: bool = True,
) -> TestOutcome:
    """Run one goodness-of-fit test on an in-memory sample.

    The model treats the variables as centered in the population sense; by
    default no empirical centering is applied (location deviations are part
    of what the test should detect). With center=True both variables are
    mean-centered first and the simple-hypothesis bootstrap mirrors the
    constraint.
    """
    if hypothesis not in ("simple", "composite"):
        raise ConfigError(f"hypothesis must be simple or composite, got {hypothesis!r}")
    if xs.n != ys.n:
        raise ConfigError(f"sample has {xs.n} curves but {ys.n} responses")

    if method in ("ftest", "kernel"):
        cfg = KernelConfig(bandwidth=bandwidth) if method == "kernel" else None
        res: CompetingResult = calibrate_competing(
            method, xs, ys, B=B, seed=seed, cfg=cfg, keep_replicates=keep_replicates
        )
        return TestOutcome(
            method=method,
            hypothesis="simple",
            statistic=res.statistic,
            p_value=res.p_value,
            B=B,
            seed=seed,
            bandwidth=res.bandwidth,
            replicates=res.replicates,
        )
    if method != "pcvm":
        raise ConfigError(f"unknown method {method!r}")

    fixed_p, selector = _parse_p_policy(p_policy)
    if center:
        xs, ys = center_sample(xs, ys)

    if hypothesis == "composite":
        cfg = EstimatorConfig(kind=estimator, p=fixed_p, selector=selector)
        fit = fit_flm(xs, ys, cfg)
        comps = components_from_coefficients(fit.coeffs)
        res: CalibrationResult = calibrate_composite(
            fit, comps, B=B, seed=seed, keep_replicates=keep_replicates
        )
        selected_p = fit.selected_p
    else:
        basis = _simple_basis(xs, ys, estimator, fixed_p, selector)
        beta0 = beta0 or BetaFunction.zero(xs.grid)
        eps, coeffs = residuals_simple(xs, ys, beta0, basis)
        comps = components_from_coefficients(coeffs)
        res = calibrate_simple(
            eps, comps, B=B, seed=seed, keep_replicates=keep_replicates, recenter=center
        )
        selected_p = basis.p

    return TestOutcome(
        method="pcvm",
        hypothesis=hypothesis,
        statistic=res.statistic,
        p_value=res.p_value,
        B=B,
        seed=seed,
        estimator=estimator,
        selected_p=selected_p,
        replicates=res.replicates,
    )


@dataclass(frozen=True)
class RunConfig:
    """Configuration echoed into every report."""

    hypothesis: str = "composite"
    method: str = "pcvm"
    estimator: str = "bspline"
    p_policy: str = "auto"
    B: int = 1000
    seed: int = 0
    bandwidth: float | str = "pcv"
    center: bool = False
    include_timings: bool = False

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "method": self.method,
            "estimator": self.estimator,
            "p_policy": str(self.p_policy),
            "B": self.B,
            "seed": self.seed,
            "bandwidth": self.bandwidth,
            "center": self.center,
            "include_timings": self.include_timings,
        }


@dataclass(frozen=True)
class TestReport:
    """Serializable outcome of one test run."""

    method: str
    hypothesis: str
    estimator: str | None
    selected_p: int | None
    statistic: float
    p_value: float
    B: int
    seed: int
    n: int
    grid_size: int
    config: dict
    timings: dict = field(default_factory=dict)
    schema: str = SCHEMA
    backend: str = ""

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "method": self.method,
            "hypothesis": self.hypothesis,
            "estimator": self.estimator,
            "selected_p": self.selected_p,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "B": self.B,
            "seed": self.seed,
            "n": self.n,
            "grid_size": self.grid_size,
            "backend": self.backend,
            "config": dict(self.config),
            "timings": dict(self.timings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        if data.get("schema") != SCHEMA:
            raise ConfigError(f"unsupported report schema {data.get('schema')!r}")
        fields = {k: data[k] for k in (
            "method", "hypothesis", "estimator", "selected_p", "statistic",
            "p_value", "B", "seed", "n", "grid_size", "config", "timings",
        )}
        return cls(schema=data["schema"], backend=data.get("backend", ""), **fields)


def run_test(
    xs: FunctionalSample,
    ys: ResponseVector,
    config: RunConfig,
    beta0: BetaFunction | None = None,
) -> TestReport:
    """Full pipeline: center, represent, build geometry, bootstrap, report."""
    t0 = time.perf_counter()
    outcome = test_from_sample(
        xs,
        ys,
        hypothesis=config.hypothesis,
        method=config.method,
        estimator=config.estimator,
        p_policy=config.p_policy,
        B=config.B,
        seed=config.seed,
        beta0=beta0,
        bandwidth=config.bandwidth,
        center=config.center,
        keep_replicates=False,
    )
    timings = {"total_seconds": time.perf_counter() - t0} if config.include_timings else {}
    return TestReport(
        method=outcome.method,
        hypothesis=outcome.hypothesis,
        estimator=outcome.estimator,
        selected_p=outcome.selected_p,
        statistic=outcome.statistic,
        p_value=outcome.p_value,
        B=config.B,
        seed=config.seed,
        n=xs.n,
        grid_size=xs.grid.size,
        config=config.to_dict(),
        timings=timings,
        backend=kernels.backend(),
    )


@dataclass(frozen=True)
class DiagnosticTrajectories:
    """Projection-averaged residual partial-sum process and its bootstrap band."""

    u: np.ndarray               # sorted evaluation points
    observed: np.ndarray        # process values at u
    bootstrap: np.ndarray       # B x len(u)
    G: int
    metadata: dict = field(default_factory=dict)


def compute_diagnostic(
    xs: FunctionalSample,
    residuals: np.ndarray,
    annihilator: np.ndarray | None = None,
    G: int = 200,
    B: int = 100,
    seed: int = 0,
    max_points: int = 512,
) -> DiagnosticTrajectories:
    """Average the residual-marked partial-sum process over random projectors.

    Projectors are unit-norm Ornstein-Uhlenbeck paths. The evaluation grid
    pools the projected values of all curves (the exact jump points),
    thinned to at most max_points by empirical quantiles. Bootstrap
    trajectories perturb the residuals by golden multipliers, refit through
    the annihilator when one is supplied (composite case).
    """
    if G < 1:
        raise ConfigError("need at least one projection")
    if B < 0:
        raise ConfigError("bootstrap count cannot be negative")
    residuals = np.asarray(residuals, dtype=float).ravel()
    if residuals.size != xs.n:
        raise ConfigError("residual length does not match the sample")
    rng = np.random.default_rng(seed)
    projectors = simulate_ou(OuParams(), G, xs.grid, rng).values
    norms = np.sqrt(np.maximum((projectors * projectors) @ xs.grid.weights, 1e-300))
    projectors /= norms[:, None]

    proj = (xs.values * xs.grid.weights) @ projectors.T  # n x G
    pooled = np.sort(proj.ravel())
    if pooled.size > max_points:
        u = np.quantile(pooled, np.linspace(0.0, 1.0, max_points), method="inverted_cdf")
        u = np.sort(u)
    else:
        u = pooled

    mult = draw_multipliers(B * xs.n, rng).reshape(B, xs.n) if B else np.zeros((0, xs.n))
    boot_resid = mult * residuals[None, :]
    if annihilator is not None and B:
        boot_resid = boot_resid @ annihilator.T
    all_resid = np.vstack([residuals[None, :], boot_resid])  # (B+1) x n

    total = np.zeros((B + 1, u.size))
    scale = 1.0 / np.sqrt(xs.n)
    for g in range(G):
        order = np.argsort(proj[:, g], kind="stable")
        jumps = proj[order, g]
        cums = np.cumsum(all_resid[:, order], axis=1)
        counts = np.searchsorted(jumps, u, side="right")
        vals = np.zeros((B + 1, u.size))
        positive = counts > 0
        vals[:, positive] = cums[:, counts[positive] - 1]
        total += vals
    total *= scale / G
    return DiagnosticTrajectories(
        u=u,
        observed=total[0],
        bootstrap=total[1:],
        G=G,
        metadata={
            "projector": "ou-unit-norm",
            "theta": OuParams().theta,
            "sigma": OuParams().sigma,
            "B": B,
            "seed": seed,
            "hypothesis": "composite" if annihilator is not None else "simple",
        },
    )
