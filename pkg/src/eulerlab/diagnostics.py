"""Analyticity diagnostics: the full pipeline and its report artifacts.

The report runs, in order: Picard iteration of the displacement ODE over the
complex-time disk, ray integration over a fan of complex directions, a
monodromy loop (with step doubling), Taylor extraction on two circles,
root-test radius estimates (global and per tracked particle), and the
independent Eulerian cross-checks. Every stage lands in a self-describing
JSON document; particle positions over the complex circle go to a CSV.

A failed stage is recorded and the remaining stages are skipped, so a report
always comes back.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import BACKEND
from .complex_time import (
    AnalyticOde,
    TaylorSeries,
    monodromy_check,
    picard_disk,
    radius_estimate,
    ray_integrate,
    taylor_from_circle,
)
from .config import FlowProblem
from .errors import EulerLabError
from .flows import (
    corner_and_random_points,
    euler_reference_evolve,
    exp_map,
    kinetic_energy,
)
from .lagrangian import DisplacementMap, jacobian, pushforward_vorticity, solve_velocity
from .spectral import (
    SpectralField,
    curl,
    eval_at_points,
    field_from_coeffs,
    sobolev_norm,
)


def _tail_start(order: int) -> int:
    """Latest-possible start of the root-test tail that still leaves 4 points."""
    return max(1, min(order // 2, order - 3))


def fluid_ode(w0: SpectralField, s: float, tol: float, max_iter: int = 200) -> AnalyticOde:
    """The displacement ODE d' = U(d) as an abstract analytic ODE.

    States are raw displacement coefficient blocks; the norm is the H^s norm
    of the displacement field. Velocity solves are warm-started from the
    previous evaluation (correct regardless, just faster along a path).
    """
    grid = w0.grid
    warm = {"U": None}

    def rhs(coeffs):
        d = DisplacementMap(field_from_coeffs(grid, coeffs, hermitian=None))
        sol = solve_velocity(d, w0, tol=tol, max_iter=max_iter, s=s, U0=warm["U"])
        warm["U"] = sol.U
        return sol.U.coeffs

    def norm(coeffs):
        return sobolev_norm(SpectralField(grid, np.ascontiguousarray(coeffs), False), s)

    x0 = np.zeros((3, grid.n, grid.n, grid.n), dtype=np.complex128)
    return AnalyticOde(rhs=rhs, x0=x0, norm=norm)


def velocity_cross_check(d: DisplacementMap, w0: SpectralField, u_ref: SpectralField,
                         s: float = 2.6, tol: float = 1e-10) -> float:
    """max |U(x) - u_ref(g(x))| over the grid: Lagrangian vs Eulerian answer."""
    grid = d.grid
    U = solve_velocity(d, w0, tol=tol, s=s).U
    gpts = grid.points().astype(complex) + eval_at_points(d.field, grid.points())
    ref_at = eval_at_points(u_ref, gpts)
    u_vals = np.moveaxis(U.values().reshape(3, -1), 0, 1)
    return float(np.max(np.abs(u_vals - ref_at)))


def vorticity_transport_error(d: DisplacementMap, w0: SpectralField,
                              u_ref: SpectralField) -> float:
    """max |J(x) w0(x) - (curl u_ref)(g(x))|: the transport identity across solvers."""
    grid = d.grid
    lhs = pushforward_vorticity(d, w0)
    gpts = grid.points().astype(complex) + eval_at_points(d.field, grid.points())
    rhs = eval_at_points(curl(u_ref), gpts)
    lhs_vals = np.moveaxis(lhs.values().reshape(3, -1), 0, 1)
    return float(np.max(np.abs(lhs_vals - rhs)))


# ---------------------------------------------------------------------------
# report document


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.complexfloating, complex)):
        return {"re": float(value.real), "im": float(value.imag)}
    return value


@dataclass
class DiagnosticsReport:
    """Everything the pipeline measured, plus per-stage status."""

    mode: str
    config: dict
    stages: dict = field(default_factory=dict)
    picard: dict | None = None
    radius: dict | None = None
    cross_radius: dict | None = None
    monodromy: dict | None = None
    real_slice: dict | None = None
    oracle: dict | None = None
    particles: list | None = None
    trajectory_rows: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "schema": "eulerlab/diagnostics/1",
                "kernel_backend": BACKEND,
                "mode": self.mode,
                "config": self.config,
                "stages": self.stages,
                "picard": self.picard,
                "radius": self.radius,
                "cross_radius": self.cross_radius,
                "monodromy": self.monodromy,
                "real_slice": self.real_slice,
                "oracle": self.oracle,
                "particles": self.particles,
            }
        )

    def write(self, out_dir) -> dict:
        """Write report.json (and trajectories.csv if rows exist); returns paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "report.json"
        report_path.write_text(json.dumps(self.to_dict(), indent=2))
        paths = {"report": report_path}
        if self.trajectory_rows:
            csv_path = out / "trajectories.csv"
            with csv_path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["t_re", "t_im", "particle_id", "x1_re", "x1_im",
                     "x2_re", "x2_im", "x3_re", "x3_im"]
                )
                writer.writerows(self.trajectory_rows)
            paths["trajectories"] = csv_path
        return paths

    def stage_ok(self, name: str) -> bool:
        return self.stages.get(name, {}).get("status") == "ok"


def _run_stage(report: DiagnosticsReport, name: str, fn):
    """Run one pipeline stage unless an earlier one failed."""
    if any(s.get("status") == "failed" for s in report.stages.values()):
        report.stages[name] = {"status": "skipped"}
        return None
    try:
        result = fn()
        report.stages[name] = {"status": "ok"}
        return result
    except EulerLabError as exc:
        report.stages[name] = {"status": "failed", "error": str(exc)}
        return None


# ---------------------------------------------------------------------------
# the pipeline


def analyticity_report(problem: FlowProblem, toy: AnalyticOde | None = None) -> DiagnosticsReport:
    """Run the full diagnostics pipeline.

    With ``toy`` given, the same machinery runs against that ODE instead of
    the fluid (no particles, no Eulerian oracle) -- used to validate the
    pipeline against closed forms.
    """
    mode = "toy" if toy is not None else "fluid"
    report = DiagnosticsReport(mode=mode, config=problem.to_dict())
    rho, order = problem.rho, problem.order
    state: dict = {}

    def setup():
        if toy is not None:
            state["ode"] = toy
            state["norm"] = toy.norm
            return
        u0 = problem.initial_velocity()
        w0 = curl(u0)
        ode = fluid_ode(w0, problem.s, problem.report_solver_tol, problem.max_iter)
        state.update(ode=ode, norm=ode.norm, u0=u0, w0=w0)

    def picard_stage():
        series = picard_disk(
            state["ode"], rho, order,
            tol=problem.picard_tol, max_sweeps=problem.max_sweeps,
        )
        state["series"] = series
        report.picard = {
            "rho": rho,
            "order": order,
            "sweeps": series.sweeps,
            "update_norms": list(series.update_norms),
            "coeff_norms": series.coeff_norms(state["norm"]),
            "source": series.source,
        }
        est = radius_estimate(series, tail_start=_tail_start(order), norm=state["norm"])
        report.radius = est.to_dict()
        state["radius"] = est

    def rays_stage():
        angles = max(problem.ray_angles, 2 * order + 2)
        steps = problem.ray_steps + (problem.ray_steps % 2)
        endpoints, midpoints = [], []
        for j in range(angles):
            theta = 2.0 * np.pi * j / angles
            ray = ray_integrate(state["ode"], theta, rho, steps)
            if not ray.ok:
                raise EulerLabError(f"ray at angle {theta:.4f} failed: {ray.error}")
            endpoints.append(ray.endpoint)
            midpoints.append(ray.states[steps // 2])
        state["ray_endpoints"] = np.array(endpoints)
        state["ray_midpoints"] = np.array(midpoints)
        state["ray_angles"] = angles

    def monodromy_stage():
        coarse = monodromy_check(state["ode"], rho, problem.monodromy_steps)
        fine = monodromy_check(state["ode"], rho, 2 * problem.monodromy_steps)
        if not (coarse.ok and fine.ok):
            raise EulerLabError(
                f"monodromy loop failed: {coarse.error or fine.error}"
            )
        report.monodromy = {
            "rho": rho,
            "steps": problem.monodromy_steps,
            "loop_error": coarse.loop_error,
            "loop_error_doubled_steps": fine.loop_error,
            "step_doubling_delta": abs(coarse.loop_error - fine.loop_error),
        }

    def circle_stage():
        full = taylor_from_circle(state["ray_endpoints"], rho, order)
        half = taylor_from_circle(state["ray_midpoints"], rho / 2.0, order)
        state["circle_series"] = full
        norm = state["norm"]
        k_max = max(1, order // 2)
        scale = max(max(norm(full.coeffs[k]) for k in range(k_max + 1)), 1e-300)
        drift = max(
            norm(full.coeffs[k] - half.coeffs[k]) for k in range(k_max + 1)
        )
        report.cross_radius = {
            "rho": rho,
            "compared_orders": k_max,
            "drift": drift / scale,
            "coeff_norms_full": full.coeff_norms(norm),
            "coeff_norms_half": half.coeff_norms(norm),
        }

    def particles_stage():
        if toy is not None:
            return
        pts = corner_and_random_points(problem.seed)
        series: TaylorSeries = state["series"]
        grid = problem.grid
        entries = []
        coeff_fields = [
            field_from_coeffs(grid, series.coeffs[k], hermitian=None)
            for k in range(order + 1)
        ]
        position_coeffs = np.array(
            [eval_at_points(f, pts.astype(complex)) for f in coeff_fields]
        )  # (order+1, n_particles, 3)
        for i, p in enumerate(pts):
            pc = position_coeffs[:, i, :].copy()
            pc[0] += p
            pseries = TaylorSeries(pc, rho, "picard")
            est = radius_estimate(pseries, tail_start=_tail_start(order))
            entries.append(
                {"id": i, "point": list(p), "radius": est.to_dict()}
            )
        report.particles = entries

        # positions over the complex circle, one row per (angle, particle)
        angles = state["ray_angles"]
        for j in range(angles):
            t = rho * np.exp(2j * np.pi * j / angles)
            dfield = field_from_coeffs(grid, state["ray_endpoints"][j], hermitian=None)
            positions = pts.astype(complex) + eval_at_points(dfield, pts.astype(complex))
            for i in range(pts.shape[0]):
                x = positions[i]
                report.trajectory_rows.append(
                    [t.real, t.imag, i,
                     x[0].real, x[0].imag, x[1].real, x[1].imag, x[2].real, x[2].imag]
                )

    def oracle_stage():
        if toy is not None:
            return
        grid = problem.grid
        u0, w0 = state["u0"], state["w0"]
        d_end = DisplacementMap(
            field_from_coeffs(grid, state["ray_endpoints"][0], hermitian=None)
        )
        steps = max(int(round(rho / problem.dt)), 8)
        u_ref = euler_reference_evolve(u0, rho, rho / steps)
        report.oracle = {
            "t": rho,
            "velocity_discrepancy": velocity_cross_check(
                d_end, w0, u_ref, s=problem.s, tol=problem.report_solver_tol
            ),
            "vorticity_transport_error": vorticity_transport_error(d_end, w0, u_ref),
            "reference_energy_drift": abs(kinetic_energy(u_ref) - kinetic_energy(u0))
            / max(kinetic_energy(u0), 1e-300),
        }
        # real-slice bookkeeping along the theta = 0 ray
        sol = solve_velocity(d_end, w0, tol=problem.report_solver_tol, s=problem.s)
        report.real_slice = {
            "t": rho,
            "energy_drift": abs(kinetic_energy(sol.U) - kinetic_energy(u0))
            / max(kinetic_energy(u0), 1e-300),
            "det_drift": jacobian(d_end).det_deviation(),
        }

    _run_stage(report, "setup", setup)
    _run_stage(report, "picard", picard_stage)
    _run_stage(report, "rays", rays_stage)
    _run_stage(report, "monodromy", monodromy_stage)
    _run_stage(report, "circle", circle_stage)
    _run_stage(report, "particles", particles_stage)
    _run_stage(report, "oracle", oracle_stage)
    return report


def toy_quadratic_ode(x0: float = 1.0) -> AnalyticOde:
    """dx/dt = x^2: closed-form pole at t = 1/x0, radius of convergence 1/|x0|."""
    return AnalyticOde(
        rhs=lambda x: x * x,
        x0=np.asarray(complex(x0)),
        norm=lambda x: float(abs(x)),
    )


# ---------------------------------------------------------------------------
# parameter-direction analyticity probe


def parameter_circle_series(map_fn, radius: float, order: int) -> TaylorSeries:
    """Cauchy extraction of eps -> map_fn(eps) over the circle |eps| = radius."""
    m = 2 * order + 2
    nodes = radius * np.exp(2j * np.pi * np.arange(m) / m)
    samples = np.array([np.asarray(map_fn(e), dtype=np.complex128) for e in nodes])
    return taylor_from_circle(samples, radius, order)


@dataclass
class ProbeReport:
    """Cross-radius drift of the time-1 map's dependence on its argument."""

    eps_radius: float
    order: int
    drift: float
    coeff_norms: dict

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "schema": "eulerlab/exp-probe/1",
                "eps_radius": self.eps_radius,
                "order": self.order,
                "drift": self.drift,
                "coeff_norms": self.coeff_norms,
            }
        )


def parameter_analyticity_probe(
    v: SpectralField,
    w: SpectralField,
    eps_radius: float,
    order: int = 4,
    steps: int = 50,
    s: float = 2.6,
    tol: float = 1e-10,
) -> ProbeReport:
    """Sample eps -> exp_map(v + eps w) on two circles and compare series.

    Complexified initial data is the whole point: eps runs over complex
    circles of radius ``eps_radius`` and ``eps_radius/2``; agreement of the
    extracted coefficients is the numerical analyticity evidence for the
    time-1 map in its argument.
    """

    def time_one_map(eps):
        return exp_map(v + complex(eps) * w, steps=steps, s=s, tol=tol).coeffs

    grid = v.grid

    def norm(c):
        return sobolev_norm(SpectralField(grid, np.ascontiguousarray(c), False), s)

    full = parameter_circle_series(time_one_map, eps_radius, order)
    half = parameter_circle_series(time_one_map, eps_radius / 2.0, order)
    k_max = max(1, order // 2)
    scale = max(max(norm(full.coeffs[k]) for k in range(k_max + 1)), 1e-300)
    drift = max(norm(full.coeffs[k] - half.coeffs[k]) for k in range(k_max + 1)) / scale
    return ProbeReport(
        eps_radius=eps_radius,
        order=order,
        drift=drift,
        coeff_norms={
            "full": full.coeff_norms(norm),
            "half": half.coeff_norms(norm),
        },
    )
