"""Report pipeline on toy and small fluid problems, plus the parameter probe."""

import json
import math

import numpy as np
import pytest

from eulerlab import GridSpec
from eulerlab.complex_time import AnalyticOde
from eulerlab.config import FlowProblem
from eulerlab.diagnostics import (
    DiagnosticsReport,
    analyticity_report,
    parameter_analyticity_probe,
    parameter_circle_series,
    toy_quadratic_ode,
)
from eulerlab.flows import abc_flow, taylor_green


class TestToyReport:
    def test_quadratic_toy_full_pipeline(self):
        problem = FlowProblem(
            grid=GridSpec(8), rho=0.5, order=12,
            ray_steps=200, monodromy_steps=400, picard_tol=1e-12,
        )
        report = analyticity_report(problem, toy=toy_quadratic_ode())
        assert report.mode == "toy"
        assert all(s["status"] == "ok" for s in report.stages.values())
        # geometric series of 1/(1-t): unit radius, tiny loop error
        assert abs(report.radius["radius"] - 1.0) < 0.02
        assert report.monodromy["loop_error"] <= 1e-7
        assert report.cross_radius["drift"] <= 1e-6
        coeffs = report.picard["coeff_norms"]
        assert all(abs(c - 1.0) < 1e-9 for c in coeffs[1:])

    def test_failed_stage_skips_rest(self):
        # rho beyond the pole: the base ray blows up, rays stage fails
        problem = FlowProblem(grid=GridSpec(8), rho=1.3, order=6)
        report = analyticity_report(problem, toy=toy_quadratic_ode())
        statuses = [report.stages[k]["status"] for k in report.stages]
        assert "failed" in statuses
        failed_at = statuses.index("failed")
        assert all(s == "skipped" for s in statuses[failed_at + 1:])

    def test_report_json_roundtrip(self, tmp_path):
        problem = FlowProblem(grid=GridSpec(8), rho=0.4, order=6)
        report = analyticity_report(problem, toy=toy_quadratic_ode())
        paths = report.write(tmp_path)
        data = json.loads(paths["report"].read_text())
        assert data["schema"] == "eulerlab/diagnostics/1"
        assert data["mode"] == "toy"
        assert data["picard"]["order"] == 6


class TestFluidReport:
    @pytest.fixture(scope="class")
    @staticmethod
    def report_and_problem():
        problem = FlowProblem(
            grid=GridSpec(8), initial="taylor_green", amplitude=0.05,
            rho=0.05, order=4, ray_steps=40, monodromy_steps=60,
            ray_angles=10, picard_tol=1e-8, report_solver_tol=1e-8,
            dt=0.0125, seed=7,
        )
        return analyticity_report(problem), problem

    def test_all_stages_ok(self, report_and_problem):
        report, _ = report_and_problem
        assert all(s["status"] == "ok" for s in report.stages.values()), report.stages

    def test_particle_radii_positive(self, report_and_problem):
        report, _ = report_and_problem
        assert len(report.particles) == 16
        for entry in report.particles:
            est = entry["radius"]
            assert est["infinite"] or est["lower"] > 0.0

    def test_oracle_agreement(self, report_and_problem):
        report, _ = report_and_problem
        assert report.oracle["velocity_discrepancy"] < 1e-4
        assert report.oracle["vorticity_transport_error"] < 1e-4
        assert report.real_slice["det_drift"] < 1e-6

    def test_trajectories_csv(self, report_and_problem, tmp_path):
        report, problem = report_and_problem
        paths = report.write(tmp_path)
        lines = paths["trajectories"].read_text().strip().splitlines()
        header = lines[0].split(",")
        assert header == ["t_re", "t_im", "particle_id",
                          "x1_re", "x1_im", "x2_re", "x2_im", "x3_re", "x3_im"]
        angles = max(problem.ray_angles, 2 * problem.order + 2)
        assert len(lines) == 1 + angles * 16

    def test_zero_vorticity_all_orders_vanish(self):
        problem = FlowProblem(
            grid=GridSpec(8), initial="abc", amplitude=0.0,
            rho=0.05, order=4, ray_steps=40, monodromy_steps=60,
        )
        report = analyticity_report(problem)
        assert all(s["status"] == "ok" for s in report.stages.values())
        assert max(report.picard["coeff_norms"][1:]) < 1e-14
        assert report.radius["infinite"]


class TestRealSliceConsistency:
    def test_zero_angle_ray_matches_real_evolution(self):
        # same method, same steps: the theta = 0 ray and the real-time
        # march must agree to solver-jitter level
        from eulerlab import curl
        from eulerlab.complex_time import ray_integrate
        from eulerlab.diagnostics import fluid_ode
        from eulerlab.flows import evolve_displacement, taylor_green

        grid = GridSpec(16)
        u0 = taylor_green(grid) * 0.1
        w0 = curl(u0)
        rho, steps = 0.05, 10
        ray = ray_integrate(fluid_ode(w0, 2.6, 1e-10), 0.0, rho, steps)
        traj = evolve_displacement(w0, rho, rho / steps, tol=1e-10)
        assert ray.ok and traj.ok
        diff = np.max(np.abs(ray.endpoint - traj.final.coeffs))
        assert diff < 1e-8


class TestPicardRhsFailure:
    def test_failure_marker_identifies_node(self):
        from eulerlab import EvaluationFailure
        from eulerlab.complex_time import picard_disk

        calls = {"n": 0}

        def flaky(x):
            calls["n"] += 1
            if calls["n"] > 10:
                raise RuntimeError("synthetic blow-up")
            return x * x

        ode = AnalyticOde(rhs=flaky, x0=np.asarray(1.0 + 0.0j))
        with pytest.raises(EvaluationFailure) as err:
            picard_disk(ode, rho=0.4, order=4, tol=1e-12)
        assert err.value.node is not None
        assert err.value.t is not None


class TestParameterProbe:
    def test_zero_perturbation(self):
        grid = GridSpec(8)
        v = taylor_green(grid) * 0.04
        w = taylor_green(grid) * 0.0
        probe = parameter_analyticity_probe(v, w, 0.1, order=2, steps=10, tol=1e-8)
        norms = probe.coeff_norms["full"]
        assert max(norms[1:]) < 1e-8 * max(norms[0], 1.0)

    def test_exponential_surrogate(self):
        # map y -> e^y via its own ODE solve; circle extraction in the
        # parameter must recover 1/k!
        from eulerlab.complex_time import ray_integrate

        def surrogate(y):
            ode = AnalyticOde(rhs=lambda x: y * x, x0=np.asarray(1.0 + 0.0j))
            return ray_integrate(ode, 0.0, 1.0, steps=120).endpoint

        series = parameter_circle_series(surrogate, radius=0.5, order=8)
        expected = np.array([1.0 / math.factorial(k) for k in range(9)])
        assert np.max(np.abs(series.coeffs - expected)) < 1e-8

    def test_fluid_probe_small(self):
        grid = GridSpec(8)
        v = taylor_green(grid) * 0.04
        w = abc_flow(grid) * 0.04
        probe = parameter_analyticity_probe(v, w, 0.1, order=2, steps=10, tol=1e-7)
        assert probe.drift < 1e-4
        assert probe.to_dict()["eps_radius"] == 0.1
