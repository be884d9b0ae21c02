"""End-to-end test execution and the diagnostic process."""

import numpy as np
import pytest

from flmgof import (
    ConfigError,
    EstimatorConfig,
    FunctionalSample,
    Grid,
    ResponseVector,
    compute_diagnostic,
    fit_flm,
    simulate_ou,
    test_from_sample,
)
from flmgof.simulation import OuParams, make_scenario, scenario_response, stream_rng


@pytest.fixture(scope="module")
def grid():
    return Grid.uniform(num=101)


class TestTestFromSample:
    def test_null_pvalues_uniformish(self, grid):
        # over 100 data/test seeds, the share of p-values above one half
        # stays inside the binomial band for median coverage
        above = 0
        spec = make_scenario("simple", 0, 0)
        for seed in range(100):
            rng = stream_rng(900, "data", seed)
            xs = simulate_ou(OuParams(), 50, grid, rng)
            ys = scenario_response(xs, spec, rng)
            out = test_from_sample(xs, ys, hypothesis="simple", B=100, seed=seed)
            above += out.p_value > 0.5
        assert 35 <= above <= 65

    def test_strong_alternative_rejects_across_seeds(self, grid):
        spec = make_scenario("composite", 1, 3)  # strong quadratic deviation
        rng = stream_rng(901, "data")
        xs = simulate_ou(OuParams(stationary=True), 100, grid, rng)
        ys = scenario_response(xs, spec, rng)
        rejections = 0
        for seed in range(100):
            out = test_from_sample(xs, ys, hypothesis="composite", estimator="bspline",
                                   B=200, seed=seed)
            rejections += out.p_value < 0.05
        assert rejections >= 95

    def test_unknown_configs_raise(self, grid):
        xs = simulate_ou(OuParams(), 20, grid, np.random.default_rng(94))
        ys = ResponseVector(np.zeros(20))
        with pytest.raises(ConfigError):
            test_from_sample(xs, ys, hypothesis="both")
        with pytest.raises(ConfigError):
            test_from_sample(xs, ys, method="anova")
        with pytest.raises(ConfigError):
            test_from_sample(xs, ys, hypothesis="simple", p_policy="auto-bic")
        with pytest.raises(ConfigError):
            test_from_sample(xs, ys, p_policy="auto-everything")

    def test_fixed_p_policy(self, grid):
        rng = np.random.default_rng(95)
        xs = simulate_ou(OuParams(), 30, grid, rng)
        ys = ResponseVector(0.1 * rng.standard_normal(30))
        out = test_from_sample(xs, ys, hypothesis="composite", estimator="fpc",
                               p_policy="4", B=30, seed=0)
        assert out.selected_p == 4

    def test_competing_methods_run(self, grid):
        rng = np.random.default_rng(96)
        xs = simulate_ou(OuParams(), 25, grid, rng)
        ys = ResponseVector(0.1 * rng.standard_normal(25))
        for method in ("ftest", "kernel"):
            out = test_from_sample(xs, ys, method=method, B=40, seed=1)
            assert out.method == method
            assert 0.0 <= out.p_value <= 1.0


class TestDiagnostic:
    def test_zero_residuals_flat(self, grid):
        xs = simulate_ou(OuParams(), 20, grid, np.random.default_rng(97))
        diag = compute_diagnostic(xs, np.zeros(20), G=10, B=5, seed=0)
        assert np.abs(diag.observed).max() == 0.0
        assert np.abs(diag.bootstrap).max() == 0.0

    def test_rightmost_value_is_scaled_residual_sum(self, grid):
        rng = np.random.default_rng(98)
        xs = simulate_ou(OuParams(), 30, grid, rng)
        eps = rng.standard_normal(30)
        diag = compute_diagnostic(xs, eps, G=25, B=3, seed=1)
        # at the largest pooled point every indicator is one, for every path
        assert diag.observed[-1] == pytest.approx(eps.sum() / np.sqrt(30), abs=1e-10)

    def test_grid_capped_by_quantile_thinning(self, grid):
        rng = np.random.default_rng(99)
        xs = simulate_ou(OuParams(), 50, grid, rng)
        diag = compute_diagnostic(xs, rng.standard_normal(50), G=40, B=2, seed=2,
                                  max_points=128)
        assert diag.u.size == 128
        assert np.all(np.diff(diag.u) >= 0)

    def test_envelope_coverage_under_null(self, grid):
        # the observed path should sit inside the pointwise 95% bootstrap band
        # for most evaluation points, for a majority of seeds
        good = 0
        spec = make_scenario("simple", 0, 0)
        for seed in range(50):
            rng = stream_rng(902, "diag", seed)
            xs = simulate_ou(OuParams(), 40, grid, rng)
            ys = scenario_response(xs, spec, rng)
            diag = compute_diagnostic(xs, ys.values, G=48, B=60, seed=seed, max_points=64)
            lo = np.quantile(diag.bootstrap, 0.025, axis=0)
            hi = np.quantile(diag.bootstrap, 0.975, axis=0)
            coverage = np.mean((diag.observed >= lo) & (diag.observed <= hi))
            good += coverage >= 0.90
        assert good > 25

    def test_composite_refits_through_annihilator(self, grid):
        rng = np.random.default_rng(903)
        xs = simulate_ou(OuParams(), 40, grid, rng)
        beta = grid.points - 0.5
        y = xs.values @ (grid.weights * beta) + 0.1 * rng.standard_normal(40)
        fit = fit_flm(xs, ResponseVector(y), EstimatorConfig(kind="bspline", p=6))
        diag = compute_diagnostic(xs, fit.residuals, annihilator=fit.annihilator,
                                  G=16, B=8, seed=3)
        assert diag.metadata["hypothesis"] == "composite"
        assert diag.bootstrap.shape == (8, diag.u.size)

    def test_validation(self, grid):
        xs = simulate_ou(OuParams(), 10, grid, np.random.default_rng(904))
        with pytest.raises(ConfigError):
            compute_diagnostic(xs, np.zeros(10), G=0, B=5)
        with pytest.raises(ConfigError):
            compute_diagnostic(xs, np.zeros(9), G=5, B=5)
