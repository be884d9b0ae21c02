"""Grid containers and quadrature L2 geometry."""

import numpy as np
import pytest

from flmgof import ConfigError, FunctionalSample, Grid, ResponseVector, center_sample
from flmgof import inner_product, l2_norm
from flmgof.errors import NumericError


def richardson_trapezoid(f, a=0.0, b=1.0, levels=12):
    """Trapezoid refined by Richardson extrapolation; independent oracle."""
    estimates = []
    for k in range(levels):
        num = 2**k + 1
        t = np.linspace(a, b, num)
        estimates.append(np.trapezoid(f(t), t))
    # one extrapolation pass per level
    table = list(estimates)
    factor = 4.0
    while len(table) > 1:
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
        factor *= 4.0
    return table[0]


class TestGrid:
    def test_uniform_default(self):
        g = Grid.uniform()
        assert g.size == 201
        assert g.points[0] == 0.0 and g.points[-1] == 1.0

    def test_weights_nonnegative_sum_to_span(self):
        for g in (Grid.uniform(), Grid.uniform(0, 2, 51), Grid(np.array([0.0, 0.1, 0.4, 1.0]))):
            assert np.all(g.weights >= 0)
            assert np.isclose(g.weights.sum(), g.span, atol=1e-12)

    def test_rejects_bad_grids(self):
        with pytest.raises(ConfigError):
            Grid(np.array([0.0]))
        with pytest.raises(ConfigError):
            Grid(np.array([0.0, 0.5, 0.5, 1.0]))
        with pytest.raises(NumericError):
            Grid(np.array([0.0, np.nan, 1.0]))

    def test_points_immutable(self):
        g = Grid.uniform()
        with pytest.raises(ValueError):
            g.points[0] = 5.0


class TestContainers:
    def test_sample_shape_validation(self):
        g = Grid.uniform(num=11)
        with pytest.raises(ConfigError):
            FunctionalSample(g, np.zeros((3, 10)))
        with pytest.raises(NumericError):
            FunctionalSample(g, np.full((2, 11), np.inf))

    def test_response_validation(self):
        with pytest.raises(NumericError):
            ResponseVector(np.array([1.0, np.nan]))


class TestInnerProduct:
    def test_constant_one(self):
        g = Grid.uniform()
        ones = np.ones(g.size)
        assert inner_product(g, ones, ones) == pytest.approx(1.0, abs=1e-12)

    def test_sin_cos_orthogonal(self):
        g = Grid.uniform()
        f = np.sin(2 * np.pi * g.points)
        h = np.cos(2 * np.pi * g.points)
        assert abs(inner_product(g, f, h)) < 1e-6

    def test_t_squared_against_oracle(self):
        # oracle value for integral of t*t on [0, 1]
        expected = richardson_trapezoid(lambda t: t * t)
        assert expected == pytest.approx(1.0 / 3.0, abs=1e-10)
        g = Grid.uniform()
        assert inner_product(g, g.points, g.points) == pytest.approx(expected, abs=1e-6)

    def test_grid_mismatch(self):
        g = Grid.uniform(num=11)
        with pytest.raises(ConfigError):
            inner_product(g, np.zeros(11), np.zeros(12))

    def test_symmetry_and_bilinearity(self):
        rng = np.random.default_rng(0)
        g = Grid.uniform(num=51)
        f, h, k = rng.standard_normal((3, 51))
        assert inner_product(g, f, h) == inner_product(g, h, f)
        lhs = inner_product(g, 2.0 * f + 3.0 * k, h)
        rhs = 2.0 * inner_product(g, f, h) + 3.0 * inner_product(g, k, h)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(1)
        g = Grid.uniform()
        for _ in range(25):
            f, h = rng.standard_normal((2, g.size))
            assert abs(inner_product(g, f, h)) <= l2_norm(g, f) * l2_norm(g, h) + 1e-12

    def test_polynomial_exactness(self):
        # composite Simpson on 201 points: products up to degree 3 are exact
        g = Grid.uniform()
        t = g.points
        cases = [
            (np.ones_like(t), t, 1.0 / 2.0),
            (t, t, 1.0 / 3.0),
            (t, t * t, 1.0 / 4.0),
            (t * t, t, 1.0 / 4.0),
        ]
        for f, h, exact in cases:
            assert inner_product(g, f, h) == pytest.approx(exact, abs=1e-10)


class TestNorm:
    def test_zero_function(self):
        g = Grid.uniform()
        assert l2_norm(g, np.zeros(g.size)) == 0.0

    def test_constant_two(self):
        g = Grid.uniform()
        assert l2_norm(g, np.full(g.size, 2.0)) == pytest.approx(2.0, abs=1e-12)

    def test_identity_function_against_oracle(self):
        expected = np.sqrt(richardson_trapezoid(lambda t: t * t))
        g = Grid.uniform()
        assert l2_norm(g, g.points) == pytest.approx(expected, abs=1e-6)


class TestCenterSample:
    def test_already_centered_unchanged(self):
        rng = np.random.default_rng(2)
        g = Grid.uniform(num=21)
        vals = rng.standard_normal((4, 21))
        vals -= vals.mean(axis=0)
        ys = rng.standard_normal(4)
        ys -= ys.mean()
        cx, cy = center_sample(FunctionalSample(g, vals), ResponseVector(ys))
        assert np.allclose(cx.values, vals, atol=1e-12)
        assert np.allclose(cy.values, ys, atol=1e-12)

    def test_identical_rows_go_to_zero(self):
        g = Grid.uniform(num=21)
        vals = np.tile(np.sin(g.points), (3, 1))
        cx, cy = center_sample(FunctionalSample(g, vals), ResponseVector(np.full(3, 7.0)))
        assert np.allclose(cx.values, 0.0, atol=1e-12)
        assert np.allclose(cy.values, 0.0, atol=1e-12)

    def test_random_curves_column_means_vanish(self):
        rng = np.random.default_rng(3)
        g = Grid.uniform(num=31)
        xs = FunctionalSample(g, rng.standard_normal((3, 31)))
        ys = ResponseVector(rng.standard_normal(3))
        cx, cy = center_sample(xs, ys)
        # oracle: direct mean subtraction
        assert np.allclose(cx.values, xs.values - xs.values.mean(axis=0), atol=1e-14)
        assert np.max(np.abs(cx.values.mean(axis=0))) <= 1e-12
        assert abs(cy.values.mean()) <= 1e-12

    def test_needs_two_observations(self):
        g = Grid.uniform(num=5)
        with pytest.raises(ConfigError):
            center_sample(FunctionalSample(g, np.ones((1, 5))), ResponseVector([1.0]))
