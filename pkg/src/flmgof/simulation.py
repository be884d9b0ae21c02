"""Ornstein-Uhlenbeck data generation, the simulation scenarios, and the
Monte Carlo size/power harness.

Scenario responses follow Y = <X, beta> + delta <X, X> + eps. The named
scenarios come in two families: 'simple' deviations around the no-effect
null (two linear blocks plus a quadratic block) and 'composite' quadratic
deviations around three functional linear models. Curve streams are shared
across scenarios at equal Monte Carlo index for variance reduction; noise
and bootstrap streams are scenario-specific.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .errors import ConfigError, NumericError
from .fcore import FunctionalSample, Grid, ResponseVector

OU_THETA = 1.0 / 3.0
OU_SIGMA = 1.0
NOISE_SD = 0.1
EXP_RATE = 10.0

LINEAR_SLOPES = (0.25, 0.65, 1.00)          # simple block 1
SINE_AMPLITUDES = (0.10, 0.20, 0.50)        # simple block 2
QUAD_WEIGHTS_SIMPLE = (0.005, 0.010, 0.015)  # simple block 3
QUAD_WEIGHTS_COMPOSITE = (0.01, 0.05, 0.10)

# Alternative amplitude calibration. The documented constants above do not
# reproduce the reported operating points for some deviations; the sets below
# are calibrated against the reported power tables (sine amplitudes also match
# the reported signal-to-noise ratios exactly, under the stationary covariate
# law). Selected with levels="reported".
REPORTED_SINE_AMPLITUDES = (0.10, 0.30, 0.50)
REPORTED_QUAD_WEIGHTS_SIMPLE = (0.01, 0.02, 0.03)
REPORTED_QUAD_WEIGHTS_COMPOSITE = (0.005, 0.025, 0.05)

COMPOSITE_BETAS = {
    1: lambda t: np.sin(2 * np.pi * t) - np.cos(2 * np.pi * t),
    2: lambda t: t - (t - 0.75) ** 2,
    3: lambda t: t + np.cos(2 * np.pi * t),
}


@dataclass(frozen=True)
class OuParams:
    """Ornstein-Uhlenbeck law: started at zero by default, or stationary.

    The zero-start covariance (sigma^2/2theta) e^(-theta(s+t)) (e^(2theta min(s,t)) - 1)
    vanishes at t = 0 and grows toward the stationary level. The stationary
    variant has constant variance sigma^2/(2 theta) and covariance decaying
    in |s - t|; the reported simulation values reproduce under this variant.
    """

    theta: float = OU_THETA
    sigma: float = OU_SIGMA
    mean: np.ndarray | None = None  # curve on the grid; None is zero
    stationary: bool = False

    def __post_init__(self):
        if self.theta <= 0 or self.sigma <= 0:
            raise ConfigError("theta and sigma must be positive")


def ou_covariance(params: OuParams, grid: Grid) -> np.ndarray:
    """Covariance matrix of the process at the grid points."""
    s = grid.points[:, None]
    t = grid.points[None, :]
    scale = params.sigma**2 / (2.0 * params.theta)
    if params.stationary:
        return scale * np.exp(-params.theta * np.abs(s - t))
    return scale * np.exp(-params.theta * (s + t)) * (
        np.exp(2.0 * params.theta * np.minimum(s, t)) - 1.0
    )


_OU_FACTOR_CACHE: dict = {}


def _ou_factor(params: OuParams, grid: Grid):
    """Cholesky factor of the covariance, zero-variance points handled apart."""
    key = (params.theta, params.sigma, params.stationary, grid.cache_token())
    hit = _OU_FACTOR_CACHE.get(key)
    if hit is not None:
        return hit
    cov = ou_covariance(params, grid)
    alive = np.diag(cov) > 0.0
    sub = cov[np.ix_(alive, alive)]
    factor = None
    for jitter in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            factor = np.linalg.cholesky(sub + jitter * np.eye(sub.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    if factor is None:
        raise NumericError("covariance matrix is not positive definite even after jitter")
    if len(_OU_FACTOR_CACHE) > 16:
        _OU_FACTOR_CACHE.clear()
    _OU_FACTOR_CACHE[key] = (alive, factor)
    return alive, factor


def simulate_ou(
    params: OuParams, n: int, grid: Grid, rng: np.random.Generator
) -> FunctionalSample:
    """n i.i.d. Gaussian paths with the exact covariance at the grid points."""
    if n < 1:
        raise ConfigError("need at least one path")
    alive, factor = _ou_factor(params, grid)
    z = rng.standard_normal((n, int(alive.sum())))
    values = np.zeros((n, grid.size))
    values[:, alive] = z @ factor.T
    if params.mean is not None:
        values = values + np.asarray(params.mean, dtype=float)[None, :]
    return FunctionalSample(grid, values)


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation scenario: coefficient function, quadratic weight, noise."""

    name: str
    hypothesis: str                      # 'simple' or 'composite'
    beta: object | None                  # callable t -> values, or None for zero
    quad_weight: float = 0.0
    noise: str = "gaussian"              # 'gaussian' or 'exponential'
    sigma: float = NOISE_SD

    def beta_on(self, grid: Grid) -> np.ndarray:
        if self.beta is None:
            return np.zeros(grid.size)
        return np.asarray(self.beta(grid.points), dtype=float)

    def is_null(self) -> bool:
        if self.hypothesis == "simple":
            return self.beta is None and self.quad_weight == 0.0
        return self.quad_weight == 0.0


def _levels(levels: str):
    if levels == "published":
        return SINE_AMPLITUDES, QUAD_WEIGHTS_SIMPLE, QUAD_WEIGHTS_COMPOSITE
    if levels == "reported":
        return (REPORTED_SINE_AMPLITUDES, REPORTED_QUAD_WEIGHTS_SIMPLE,
                REPORTED_QUAD_WEIGHTS_COMPOSITE)
    raise ConfigError(f"levels must be 'published' or 'reported', got {levels!r}")


def make_scenario(
    hypothesis: str, j: int, k: int, noise: str = "gaussian", levels: str = "published"
) -> ScenarioSpec:
    """Named scenario H{j},{k}; j indexes the block/model, k the deviation."""
    if noise not in ("gaussian", "exponential"):
        raise ConfigError(f"unknown noise kind {noise!r}")
    sine_amp, quad_simple, quad_composite = _levels(levels)
    if hypothesis == "simple":
        if j == 0:
            if k != 0:
                raise ConfigError("the no-effect null is H0, use j=0, k=0")
            return ScenarioSpec("H0", "simple", None, 0.0, noise)
        if j not in (1, 2, 3) or k not in (1, 2, 3):
            raise ConfigError(f"simple scenarios use j in 1..3, k in 1..3, got j={j}, k={k}")
        if j == 1:
            gamma = LINEAR_SLOPES[k - 1]
            beta = lambda t, g=gamma: g * (t - 0.5)
            return ScenarioSpec(f"H{j},{k}", "simple", beta, 0.0, noise)
        if j == 2:
            eta = sine_amp[k - 1]
            beta = lambda t, e=eta: e * np.sin(2 * np.pi * t**3) ** 3
            return ScenarioSpec(f"H{j},{k}", "simple", beta, 0.0, noise)
        return ScenarioSpec(f"H{j},{k}", "simple", None, quad_simple[k - 1], noise)
    if hypothesis == "composite":
        if j not in (1, 2, 3) or k not in (0, 1, 2, 3):
            raise ConfigError(f"composite scenarios use j in 1..3, k in 0..3, got j={j}, k={k}")
        delta = 0.0 if k == 0 else quad_composite[k - 1]
        return ScenarioSpec(f"H{j},{k}", "composite", COMPOSITE_BETAS[j], delta, noise)
    raise ConfigError(f"unknown hypothesis {hypothesis!r}")


def parse_scenario_name(
    name: str, hypothesis: str, noise: str = "gaussian", levels: str = "published"
) -> ScenarioSpec:
    """Parse labels like 'H0', 'H1,3' or 'H2_1' into a ScenarioSpec."""
    label = name.strip().upper().replace("_", ",")
    if not label.startswith("H"):
        raise ConfigError(f"scenario names look like 'H1,3', got {name!r}")
    body = label[1:]
    if body == "0":
        return make_scenario("simple", 0, 0, noise, levels) if hypothesis == "simple" else \
            make_scenario("composite", 1, 0, noise, levels)
    try:
        j_str, k_str = body.split(",")
        return make_scenario(hypothesis, int(j_str), int(k_str), noise, levels)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot parse scenario name {name!r}") from exc


def draw_noise(spec: ScenarioSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.noise == "gaussian":
        return rng.normal(0.0, spec.sigma, size=n)
    # exponential with the matching sd, recentred to mean zero
    return rng.exponential(1.0 / EXP_RATE, size=n) - 1.0 / EXP_RATE


def regression_function(xs: FunctionalSample, spec: ScenarioSpec) -> np.ndarray:
    """m(X_i) = <X_i, beta> + delta <X_i, X_i> by quadrature, all curves."""
    w = xs.grid.weights
    out = xs.values @ (w * spec.beta_on(xs.grid))
    if spec.quad_weight != 0.0:
        out = out + spec.quad_weight * ((xs.values * xs.values) @ w)
    return out


def scenario_response(
    xs: FunctionalSample, spec: ScenarioSpec, rng: np.random.Generator
) -> ResponseVector:
    return ResponseVector(regression_function(xs, spec) + draw_noise(spec, xs.n, rng))


def snr(
    spec: ScenarioSpec,
    mc_curves: int = 10_000,
    seed: int = 0,
    grid: Grid | None = None,
    params: OuParams | None = None,
) -> float:
    """Noise share sigma^2 / (sigma^2 + E[m(X)^2]), E[.] by Monte Carlo."""
    if mc_curves < 1_000:
        raise ConfigError("snr estimation needs at least 1000 curves")
    grid = grid or Grid.uniform()
    params = params or OuParams()
    xs = simulate_ou(params, mc_curves, grid, np.random.default_rng(seed))
    m = regression_function(xs, spec)
    s2 = spec.sigma**2
    return s2 / (s2 + float(np.mean(m * m)))


def _stream_seed(master_seed: int, *tags) -> np.random.SeedSequence:
    """Documented substream scheme: crc32 of each string tag, ints verbatim."""
    entropy = [int(master_seed) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            entropy.append(zlib.crc32(tag.encode("utf-8")))
        else:
            entropy.append(int(tag) & 0xFFFFFFFF)
    return np.random.SeedSequence(entropy)


def stream_rng(master_seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(_stream_seed(master_seed, *tags))


def stream_int(master_seed: int, *tags) -> int:
    return int(_stream_seed(master_seed, *tags).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class PowerStudyConfig:
    hypothesis: str = "composite"
    scenarios: tuple = ("H1,0",)
    methods: tuple = ("pcvm",)
    estimators: tuple = ("bspline",)     # used by the pcvm method only
    ns: tuple = (100,)
    M: int = 100
    B: int = 200
    alphas: tuple = (0.10, 0.05, 0.01)
    seed: int = 0
    noise: str = "gaussian"
    bandwidth: float | str = "pcv"       # kernel method
    p_policy: str = "auto"
    grid_size: int = 201
    ou_stationary: bool = False          # reported-values mode for the covariate law
    levels: str = "published"            # deviation amplitudes: published | reported
    workers: int | None = None           # None -> FLMGOF_WORKERS or 1

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, int(self.workers))
        return max(1, int(os.environ.get("FLMGOF_WORKERS", "1")))


def paper_scale(config: PowerStudyConfig) -> PowerStudyConfig:
    """Full-scale variant (M = B = 1000); hours of compute, not a CI target."""
    return replace(config, M=1000, B=1000)


@dataclass
class PowerTable:
    """Rejection rates keyed by (scenario, method, estimator, n, alpha)."""

    rows: list = field(default_factory=list)
    M: int = 0
    B: int = 0
    config: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def add(self, scenario, method, estimator, n, alpha, p_policy, rejections):
        good = [r for r in rejections if r is not None]
        m_eff = len(good)
        rate = float(np.mean(good)) if m_eff else float("nan")
        se = float(np.sqrt(rate * (1.0 - rate) / m_eff)) if m_eff else float("nan")
        self.rows.append(
            {
                "scenario": scenario,
                "method": method,
                "estimator": estimator,
                "n": n,
                "alpha": alpha,
                "p_policy": p_policy,
                "rate": rate,
                "se": se,
                "M_effective": m_eff,
            }
        )

    def rate(self, scenario, method, estimator, n, alpha) -> float:
        for row in self.rows:
            if (
                row["scenario"] == scenario
                and row["method"] == method
                and row["estimator"] == estimator
                and row["n"] == n
                and abs(row["alpha"] - alpha) < 1e-12
            ):
                return row["rate"]
        raise KeyError((scenario, method, estimator, n, alpha))


def _replicate_pvalues(config: PowerStudyConfig, n: int, mc_index: int) -> dict:
    """p-values of every (scenario, method, estimator) cell for one dataset.

    The curve stream depends on (seed, n, mc_index) only, so every scenario
    sees the same curves at the same Monte Carlo index.
    """
    from .pipeline import test_from_sample  # local import to keep joblib pickling light

    grid = Grid.uniform(num=config.grid_size)
    params = OuParams(stationary=config.ou_stationary)
    curves = simulate_ou(params, n, grid, stream_rng(config.seed, "curves", n, mc_index))
    out = {}
    for scen_name in config.scenarios:
        spec = parse_scenario_name(scen_name, config.hypothesis, config.noise, config.levels)
        noise_rng = stream_rng(config.seed, "noise", spec.name, spec.hypothesis, n, mc_index)
        ys = scenario_response(curves, spec, noise_rng)
        for method in config.methods:
            estimators = config.estimators if method == "pcvm" else ("-",)
            for est in estimators:
                boot_seed = stream_int(
                    config.seed, "boot", spec.name, spec.hypothesis, method, est, n, mc_index
                )
                try:
                    result = test_from_sample(
                        curves,
                        ys,
                        hypothesis=config.hypothesis,
                        method=method,
                        estimator=est if est != "-" else "bspline",
                        p_policy=config.p_policy,
                        B=config.B,
                        seed=boot_seed,
                        bandwidth=config.bandwidth,
                        keep_replicates=False,
                    )
                    out[(spec.name, method, est)] = result.p_value
                except Exception as exc:  # cell failures recorded, not fatal
                    out[(spec.name, method, est)] = ("error", f"{type(exc).__name__}: {exc}")
    return out


def run_power_study(config: PowerStudyConfig) -> PowerTable:
    """Monte Carlo rejection rates for every configured cell."""
    if config.M < 1 or config.B < 1:
        raise ConfigError("M and B must be at least 1")
    if not config.scenarios:
        raise ConfigError("scenario list is empty")
    table = PowerTable(M=config.M, B=config.B, config=_config_echo(config))
    workers = config.resolved_workers()
    for n in config.ns:
        runner = Parallel(n_jobs=workers, batch_size="auto") if workers > 1 else None
        jobs = (delayed(_replicate_pvalues)(config, n, mc) for mc in range(config.M))
        results = runner(jobs) if runner else [_replicate_pvalues(config, n, mc) for mc in range(config.M)]
        keys = sorted({k for res in results for k in res}, key=str)
        for scenario, method, est in keys:
            pvals = [res.get((scenario, method, est)) for res in results]
            for mc, pv in enumerate(pvals):
                if isinstance(pv, tuple):
                    table.failures.append(
                        {"scenario": scenario, "method": method, "estimator": est,
                         "n": n, "mc_index": mc, "error": pv[1]}
                    )
            for alpha in config.alphas:
                rejections = [
                    None if (pv is None or isinstance(pv, tuple)) else (pv < alpha)
                    for pv in pvals
                ]
                table.add(scenario, method, est, n, alpha, config.p_policy, rejections)
    return table


def _config_echo(config: PowerStudyConfig) -> dict:
    return {
        "hypothesis": config.hypothesis,
        "scenarios": list(config.scenarios),
        "methods": list(config.methods),
        "estimators": list(config.estimators),
        "ns": list(config.ns),
        "M": config.M,
        "B": config.B,
        "alphas": list(config.alphas),
        "seed": config.seed,
        "noise": config.noise,
        "bandwidth": config.bandwidth,
        "p_policy": config.p_policy,
        "grid_size": config.grid_size,
        "ou_stationary": config.ou_stationary,
        "levels": config.levels,
    }
