"""Data generation, scenarios, snr, and the Monte Carlo study driver."""

import numpy as np
import pytest

from flmgof import (
    ConfigError,
    Grid,
    OuParams,
    PowerStudyConfig,
    ou_covariance,
    paper_scale,
    run_power_study,
    scenario_response,
    simulate_ou,
    snr,
)
from flmgof.simulation import (
    EXP_RATE,
    LINEAR_SLOPES,
    QUAD_WEIGHTS_COMPOSITE,
    QUAD_WEIGHTS_SIMPLE,
    SINE_AMPLITUDES,
    draw_noise,
    make_scenario,
    parse_scenario_name,
    regression_function,
    stream_rng,
)


@pytest.fixture(scope="module")
def grid():
    return Grid.uniform()


class TestOuSimulation:
    def test_paths_start_at_zero(self, grid):
        xs = simulate_ou(OuParams(), 200, grid, np.random.default_rng(80))
        assert np.abs(xs.values[:, 0]).max() <= 1e-6

    def test_variance_at_one(self, grid):
        # analytic value from the covariance at s = t = 1
        params = OuParams()
        expected = params.sigma**2 / (2 * params.theta) * (1 - np.exp(-2 * params.theta))
        xs = simulate_ou(params, 5000, grid, np.random.default_rng(81))
        sample_var = xs.values[:, -1].var(ddof=1)
        se = expected * np.sqrt(2.0 / 4999)
        assert abs(sample_var - expected) <= 3 * se

    def test_cross_covariance(self, grid):
        params = OuParams()
        cov = ou_covariance(params, grid)
        i = np.searchsorted(grid.points, 0.25)
        j = np.searchsorted(grid.points, 0.75)
        xs = simulate_ou(params, 5000, grid, np.random.default_rng(82))
        a, b = xs.values[:, i], xs.values[:, j]
        sample = np.mean(a * b) - a.mean() * b.mean()
        se = np.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / 4999)
        assert abs(sample - cov[i, j]) <= 3 * se

    def test_stationary_variant_constant_variance(self, grid):
        params = OuParams(stationary=True)
        cov = ou_covariance(params, grid)
        level = params.sigma**2 / (2 * params.theta)
        assert np.allclose(np.diag(cov), level, atol=1e-12)
        xs = simulate_ou(params, 4000, grid, np.random.default_rng(83))
        mid = xs.values[:, grid.size // 2]
        assert abs(mid.var(ddof=1) - level) <= 3 * level * np.sqrt(2.0 / 3999)

    def test_mean_curve_added(self, grid):
        mean = np.sin(grid.points)
        xs = simulate_ou(OuParams(mean=mean), 2000, grid, np.random.default_rng(84))
        assert np.abs(xs.values.mean(axis=0) - mean).max() <= 0.1

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            OuParams(theta=0.0)


class TestScenarios:
    def test_named_constants(self):
        assert LINEAR_SLOPES == (0.25, 0.65, 1.00)
        assert SINE_AMPLITUDES == (0.10, 0.20, 0.50)
        assert QUAD_WEIGHTS_SIMPLE == (0.005, 0.010, 0.015)
        assert QUAD_WEIGHTS_COMPOSITE == (0.01, 0.05, 0.10)

    def test_simple_block_shapes(self, grid):
        t = grid.points
        assert np.allclose(make_scenario("simple", 1, 2).beta_on(grid), 0.65 * (t - 0.5))
        assert np.allclose(
            make_scenario("simple", 2, 3).beta_on(grid), 0.5 * np.sin(2 * np.pi * t**3) ** 3
        )
        spec = make_scenario("simple", 3, 1)
        assert spec.beta is None and spec.quad_weight == 0.005

    def test_composite_betas(self, grid):
        t = grid.points
        assert np.allclose(
            make_scenario("composite", 1, 0).beta_on(grid),
            np.sin(2 * np.pi * t) - np.cos(2 * np.pi * t),
        )
        assert np.allclose(make_scenario("composite", 2, 0).beta_on(grid), t - (t - 0.75) ** 2)
        assert np.allclose(
            make_scenario("composite", 3, 0).beta_on(grid), t + np.cos(2 * np.pi * t)
        )
        assert make_scenario("composite", 2, 2).quad_weight == 0.05

    def test_parse_names(self):
        assert parse_scenario_name("H0", "simple").name == "H0"
        assert parse_scenario_name("h1,3", "composite").quad_weight == 0.10
        assert parse_scenario_name("H2_1", "simple").name == "H2,1"
        with pytest.raises(ConfigError):
            parse_scenario_name("X1", "simple")

    def test_zero_signal_zero_noise_limit(self, grid):
        spec = make_scenario("simple", 0, 0)
        xs = simulate_ou(OuParams(), 50, grid, np.random.default_rng(85))
        m = regression_function(xs, spec)
        assert np.abs(m).max() == 0.0

    def test_response_quadrature(self, grid):
        spec = make_scenario("composite", 1, 2)
        xs = simulate_ou(OuParams(), 10, grid, np.random.default_rng(86))
        m = regression_function(xs, spec)
        beta = spec.beta_on(grid)
        for i in range(10):
            direct = np.dot(grid.weights, xs.values[i] * beta)
            direct += spec.quad_weight * np.dot(grid.weights, xs.values[i] ** 2)
            assert m[i] == pytest.approx(direct, rel=1e-12)

    def test_exponential_noise_moments(self):
        rng = np.random.default_rng(87)
        spec = make_scenario("simple", 0, 0, noise="exponential")
        draws = draw_noise(spec, 1_000_000, rng)
        assert abs(draws.mean()) <= 0.002
        assert abs(draws.std() - 1.0 / EXP_RATE) <= 0.002


class TestSnr:
    def test_no_signal_is_one(self):
        assert snr(make_scenario("simple", 0, 0), mc_curves=1000, seed=0) == 1.0

    def test_mc_matches_quadrature_oracle(self, grid):
        # oracle: E<X,beta>^2 = b' W C W b through the covariance matrix
        params = OuParams(stationary=True)
        cov = ou_covariance(params, grid)
        spec = make_scenario("simple", 1, 3)
        beta = spec.beta_on(grid)
        w = grid.weights
        exact = float(beta @ (w * (cov @ (w * beta))))
        expected = spec.sigma**2 / (spec.sigma**2 + exact)
        est = snr(spec, mc_curves=40_000, seed=1, params=params)
        assert est == pytest.approx(expected, abs=0.01)

    def test_reported_reference_values(self):
        # stationary covariate law reproduces the reported ratios
        params = OuParams(stationary=True)
        for hyp, j, k, ref in (
            ("simple", 1, 3, 0.579),
            ("composite", 1, 0, 0.177),
            ("composite", 2, 0, 0.050),
            ("composite", 3, 0, 0.029),
        ):
            est = snr(make_scenario(hyp, j, k), mc_curves=40_000, seed=2, params=params)
            assert est == pytest.approx(ref, abs=0.03)

    def test_minimum_curves(self):
        with pytest.raises(ConfigError):
            snr(make_scenario("simple", 0, 0), mc_curves=10)


class TestStreams:
    def test_curve_stream_shared_across_scenarios(self):
        a = stream_rng(7, "curves", 50, 3).standard_normal(5)
        b = stream_rng(7, "curves", 50, 3).standard_normal(5)
        assert np.array_equal(a, b)
        c = stream_rng(7, "curves", 50, 4).standard_normal(5)
        assert not np.array_equal(a, c)


class TestPowerStudy:
    def test_degenerate_single_replicate(self):
        cfg = PowerStudyConfig(
            hypothesis="composite", scenarios=("H1,0",), estimators=("fpc",),
            ns=(30,), M=1, B=20, seed=5, grid_size=101,
        )
        table = run_power_study(cfg)
        rates = {row["alpha"]: row["rate"] for row in table.rows}
        assert set(rates.values()) <= {0.0, 1.0}
        assert table.M == 1 and table.B == 20

    def test_deterministic_across_worker_counts(self):
        base = dict(
            hypothesis="composite", scenarios=("H1,0",), estimators=("bspline",),
            ns=(30,), M=6, B=50, seed=6, grid_size=101,
        )
        t1 = run_power_study(PowerStudyConfig(**base, workers=1))
        t2 = run_power_study(PowerStudyConfig(**base, workers=2))
        assert t1.rows == t2.rows

    def test_failures_recorded_not_fatal(self):
        # n below every bspline candidate forces per-cell errors
        cfg = PowerStudyConfig(
            hypothesis="composite", scenarios=("H1,0",), estimators=("bspline",),
            ns=(4,), M=2, B=10, seed=7, grid_size=51,
        )
        table = run_power_study(cfg)
        assert len(table.failures) == 2
        assert all(np.isnan(row["rate"]) for row in table.rows)

    def test_paper_scale_mode(self):
        cfg = paper_scale(PowerStudyConfig(M=10, B=10))
        assert cfg.M == 1000 and cfg.B == 1000

    def test_rate_lookup_and_se(self):
        cfg = PowerStudyConfig(
            hypothesis="simple", scenarios=("H0",), estimators=("fpc",),
            ns=(30,), M=4, B=20, seed=8, grid_size=101,
        )
        table = run_power_study(cfg)
        rate = table.rate("H0", "pcvm", "fpc", 30, 0.05)
        row = next(r for r in table.rows if abs(r["alpha"] - 0.05) < 1e-9)
        assert row["se"] == pytest.approx(np.sqrt(rate * (1 - rate) / 4))
