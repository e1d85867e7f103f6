"""Volume-preserving chart: determinant algebra, contraction solve, certificates."""

import numpy as np
import pytest
from helpers import random_divfree

from eulerlab import ConvergenceError, GridSpec, ValidationError, field_from_values, sobolev_norm
from eulerlab.chart import (
    ChartProblem,
    chart_map,
    determinant_residual,
    nonlinearity_P,
    solve_phi,
)
from eulerlab.complex_time import taylor_from_circle
from eulerlab.lagrangian import jacobian


@pytest.fixture(scope="module")
def grid():
    return GridSpec(16)


@pytest.fixture(scope="module")
def mesh(grid):
    return grid.meshgrid()


def zero_scalar(grid):
    return field_from_values(grid, np.zeros((grid.n,) * 3))


class TestDeterminantResidual:
    def test_identity_map(self, grid):
        v = field_from_values(grid, np.zeros((3,) + (grid.n,) * 3))
        r = determinant_residual(v, zero_scalar(grid))
        assert np.max(np.abs(r.coeffs)) < 1e-15

    def test_nilpotent_shear(self, grid, mesh):
        X, Y, _ = mesh
        v = field_from_values(grid, 0.05 * np.stack([np.sin(Y), 0 * X, 0 * X]))
        r = determinant_residual(v, zero_scalar(grid))
        assert np.max(np.abs(r.values())) < 1e-15

    def test_two_mode_minor(self, grid, mesh):
        # hand expansion of the only surviving 2x2 principal minor
        X, Y, _ = mesh
        eps = 0.05
        v = field_from_values(grid, eps * np.stack([np.sin(Y), np.sin(X), 0 * X]))
        r = determinant_residual(v, zero_scalar(grid))
        expected = -(eps**2) * np.cos(X) * np.cos(Y)
        assert np.max(np.abs(r.values() - expected)) < 1e-14


class TestNonlinearity:
    def test_zero(self, grid):
        v = field_from_values(grid, np.zeros((3,) + (grid.n,) * 3))
        p = nonlinearity_P(v, zero_scalar(grid))
        assert np.max(np.abs(p.coeffs)) < 1e-15

    def test_two_mode_minor_sign(self, grid, mesh):
        X, Y, _ = mesh
        eps = 0.05
        v = field_from_values(grid, eps * np.stack([np.sin(Y), np.sin(X), 0 * X]))
        p = nonlinearity_P(v, zero_scalar(grid))
        expected = eps**2 * np.cos(X) * np.cos(Y)
        assert np.max(np.abs(p.values() - expected)) < 1e-14

    def test_laplacian_minus_P_is_residual(self, grid):
        # algebraic identity det(I+A)-1 = lap(phi) - P for divergence-free v
        rng = np.random.default_rng(21)
        v = 0.05 * random_divfree(grid, rng, band=2)
        phi_vals = 0.02 * (
            np.cos(grid.meshgrid()[0]) * np.cos(2 * grid.meshgrid()[1])
            + np.sin(grid.meshgrid()[2])
        )
        phi = field_from_values(grid, phi_vals)
        lap = field_from_values(grid, np.zeros((grid.n,) * 3))
        lap_coeffs = -grid.k_squared * phi.coeffs
        residual = determinant_residual(v, phi)
        p = nonlinearity_P(v, phi)
        diff = residual.coeffs - (lap_coeffs - p.coeffs)
        assert np.max(np.abs(diff)) < 1e-12


class TestSolvePhi:
    def test_zero_input_one_iteration(self, grid):
        v = field_from_values(grid, np.zeros((3,) + (grid.n,) * 3))
        sol = solve_phi(ChartProblem(v))
        assert sol.iterations == 1
        assert np.max(np.abs(sol.phi.coeffs)) == 0.0

    def test_nilpotent_shear_needs_no_correction(self, grid, mesh):
        X, Y, _ = mesh
        v = field_from_values(grid, 0.05 * np.stack([np.sin(Y), 0 * X, 0 * X]))
        sol = solve_phi(ChartProblem(v))
        assert np.max(np.abs(sol.phi.coeffs)) < 1e-12

    def test_two_mode_perturbative_value(self, mesh, grid):
        # leading orders solved by hand: lap(phi2) = eps^2 cos x1 cos x2 and
        # lap(phi3) = -(eps^3/4)(sin 2x1 sin x2 + sin x1 sin 2x2)
        X, Y, _ = mesh
        eps = 0.05
        v = field_from_values(grid, eps * np.stack([np.sin(Y), np.sin(X), 0 * X]))
        sol = solve_phi(ChartProblem(v, radius=0.25))
        phi2 = -(eps**2 / 2.0) * np.cos(X) * np.cos(Y)
        phi3 = (eps**3 / 20.0) * (np.sin(2 * X) * np.sin(Y) + np.sin(X) * np.sin(2 * Y))
        assert np.max(np.abs(sol.phi.values() - (phi2 + phi3))) < 1e-6

    def test_outside_radius_rejected(self, grid, mesh):
        X, Y, _ = mesh
        v = field_from_values(grid, 0.2 * np.stack([np.sin(Y), np.sin(X), 0 * X]))
        with pytest.raises(ValidationError):
            solve_phi(ChartProblem(v))

    def test_divergent_input_rejected(self, grid, mesh):
        X, _, _ = mesh
        v = field_from_values(grid, 0.01 * np.stack([np.sin(X), 0 * X, 0 * X]))
        with pytest.raises(ValidationError):
            solve_phi(ChartProblem(v))

    def test_iteration_cap_reports_history(self, grid):
        rng = np.random.default_rng(5)
        v = random_divfree(grid, rng, norm=0.05)
        with pytest.raises(ConvergenceError) as err:
            solve_phi(ChartProblem(v, tol=1e-30, max_iter=3))
        assert len(err.value.history) == 3

    def test_contraction_monotone(self, grid):
        rng = np.random.default_rng(31)
        v = random_divfree(grid, rng, norm=0.05)
        sol = solve_phi(ChartProblem(v))
        ups = sol.update_norms
        assert all(b <= 0.5 * a for a, b in zip(ups[1:], ups[2:]))

    def test_quadratic_smallness(self, grid):
        rng = np.random.default_rng(32)
        v = random_divfree(grid, rng, norm=1.0)
        eps = np.array([0.01, 0.02, 0.04])
        norms = [
            sobolev_norm(solve_phi(ChartProblem(e * v)).phi, 2.6 + 1.0) for e in eps
        ]
        slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
        assert slope >= 1.9


class TestChartMap:
    def test_zero(self, grid):
        v = field_from_values(grid, np.zeros((3,) + (grid.n,) * 3))
        d = chart_map(ChartProblem(v))
        assert np.max(np.abs(d.coeffs)) == 0.0

    def test_nilpotent_shear_passthrough(self, grid, mesh):
        X, Y, _ = mesh
        v = field_from_values(grid, 0.05 * np.stack([np.sin(Y), 0 * X, 0 * X]))
        d = chart_map(ChartProblem(v))
        assert np.max(np.abs(d.coeffs - v.coeffs)) < 1e-13

    def test_random_map_is_volume_preserving(self):
        grid = GridSpec(32)
        rng = np.random.default_rng(33)
        v = random_divfree(grid, rng, norm=0.05)
        sol = solve_phi(ChartProblem(v))
        assert sol.det_residual <= 10.0 * 1e-12
        # certificate recomputed from the returned map
        bundle = jacobian(sol.displacement)
        assert bundle.det_deviation() <= 1e-10

    def test_mean_free(self, grid):
        rng = np.random.default_rng(34)
        v = random_divfree(grid, rng, norm=0.05)
        d = chart_map(ChartProblem(v))
        assert np.max(np.abs(d.field.mean())) < 1e-14


class TestChartAnalyticity:
    def test_complex_input_accepted(self, grid):
        rng = np.random.default_rng(35)
        v = random_divfree(grid, rng, norm=0.03)
        w = random_divfree(grid, rng, norm=0.03)
        vc = v + 1j * 0.3 * w
        sol = solve_phi(ChartProblem(vc))
        assert sol.det_residual < 1e-10

    def test_cauchy_coefficients_stable_across_radii(self, grid):
        # phi(eps v) sampled on complex eps-circles of two radii: the
        # extracted series must agree, evidence the correspondence is analytic
        rng = np.random.default_rng(36)
        v = random_divfree(grid, rng, norm=1.0)
        order = 4

        def series_at(radius):
            m = 2 * order + 2
            eps = radius * np.exp(2j * np.pi * np.arange(m) / m)
            samples = np.array(
                [solve_phi(ChartProblem(e * v)).phi.coeffs for e in eps]
            )
            return taylor_from_circle(samples, radius, order)

        s1 = series_at(0.03)
        s2 = series_at(0.015)
        scale = max(np.max(np.abs(s1.coeffs[k])) for k in range(order // 2 + 1))
        drift = max(
            np.max(np.abs(s1.coeffs[k] - s2.coeffs[k])) for k in range(order // 2 + 1)
        )
        assert drift <= 1e-6 * scale
