"""Command-line surface.

Subcommands: chart, evolve, picard, rays, report, probe-exp, oracle.
Global flags (before the subcommand): --config, --out, --seed, --grid, --tol.
Exit codes: 0 success, 2 validation failure, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .chart import ChartProblem, solve_phi
from .complex_time import picard_disk, ray_integrate
from .config import FlowProblem
from .diagnostics import analyticity_report, fluid_ode, parameter_analyticity_probe, toy_quadratic_ode
from .errors import EulerLabError, ValidationError
from .flows import (
    corner_and_random_points,
    euler_reference_evolve,
    evolve_real,
    initial_condition,
    kinetic_energy,
    validate_initial,
)
from .snapshot import save_field
from .spectral import GridSpec, SpectralField, curl, eval_at_points, field_from_coeffs, sobolev_norm


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulerlab",
        description="spectral diagnostics for complex-time analyticity of ideal flow",
    )
    parser.add_argument("--config", type=str, help="JSON problem description")
    parser.add_argument("--out", type=str, help="output directory (default: out)")
    parser.add_argument("--seed", type=int, help="seed for random data and particles")
    parser.add_argument("--grid", type=int, help="grid points per dimension")
    parser.add_argument("--tol", type=float, help="velocity-solve tolerance")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chart", help="volume-preserving correction of a displacement")
    p.add_argument("--initial", type=str, help="displacement family (default from config)")
    p.add_argument("--amplitude", type=float, help="displacement scaling")

    p = sub.add_parser("evolve", help="real-time Lagrangian evolution")
    p.add_argument("--t-end", type=float, default=0.5)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("picard", help="Picard sweeps over the complex-time disk")
    p.add_argument("--rho", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--spill-states", action="store_true",
                   help="also write each series coefficient as a field snapshot")

    p = sub.add_parser("rays", help="integrate along complex-time rays")
    p.add_argument("--rho", type=float)
    p.add_argument("--angles", type=int)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("report", help="full analyticity diagnostics")
    p.add_argument("--rho", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--toy", action="store_true",
                   help="run the pipeline against the quadratic toy ODE")

    p = sub.add_parser("probe-exp", help="analyticity of the time-1 map in its argument")
    p.add_argument("--eps-radius", type=float, default=0.2)
    p.add_argument("--amplitude", type=float, help="base-field scaling")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--perturbation", type=str, default="abc",
                   help="family of the perturbation direction")
    p.add_argument("--perturbation-amplitude", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=50)

    p = sub.add_parser("oracle", help="independent Eulerian reference run")
    p.add_argument("--t-end", type=float, default=0.2)
    p.add_argument("--dt", type=float)

    return parser


def _problem_from_args(args) -> FlowProblem:
    problem = FlowProblem.from_json(args.config) if args.config else FlowProblem()
    overrides = {}
    if args.grid is not None:
        overrides["grid"] = GridSpec(args.grid)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tol is not None:
        overrides["solver_tol"] = args.tol
        overrides["report_solver_tol"] = args.tol
    if args.out is not None:
        overrides["out_dir"] = args.out
    for name in ("rho", "order", "dt"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return problem.with_overrides(**overrides) if overrides else problem


def _write_json(out_dir: Path, name: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2))
    return path


def _cmd_chart(problem: FlowProblem, args, out: Path) -> int:
    if args.initial is not None:
        problem = problem.with_overrides(initial=args.initial)
    if args.amplitude is not None:
        problem = problem.with_overrides(amplitude=args.amplitude)
    v = problem.initial_velocity()
    solution = solve_phi(ChartProblem(v, s=problem.s, tol=problem.chart_tol))
    save_field(solution.phi, out / "chart_phi")
    save_field(solution.displacement.field, out / "chart_displacement")
    _write_json(out, "chart.json", {
        "initial": problem.initial,
        "amplitude": problem.amplitude,
        "input_norm": sobolev_norm(v, problem.s),
        "iterations": solution.iterations,
        "det_residual": solution.det_residual,
        "update_norms": list(solution.update_norms),
    })
    print(f"chart: converged in {solution.iterations} iterations, "
          f"max |det - 1| = {solution.det_residual:.3e}")
    return 0


def _cmd_evolve(problem: FlowProblem, args, out: Path) -> int:
    dt = args.dt if args.dt is not None else problem.dt
    traj = evolve_real(problem, args.t_end, dt)
    rows = []
    for ti, t in enumerate(traj.times):
        for pid in range(traj.particle_paths.shape[0]):
            x = traj.particle_paths[pid, ti]
            rows.append([t, 0.0, pid, x[0].real, x[0].imag,
                         x[1].real, x[1].imag, x[2].real, x[2].imag])
    out.mkdir(parents=True, exist_ok=True)
    with (out / "trajectories.csv").open("w") as fh:
        fh.write("t_re,t_im,particle_id,x1_re,x1_im,x2_re,x2_im,x3_re,x3_im\n")
        for row in rows:
            fh.write(",".join(f"{v}" for v in row) + "\n")
    save_field(traj.final.field, out / "evolve_final_displacement")
    e0 = traj.energies[0]
    summary = {
        "t_end": args.t_end,
        "dt": dt,
        "ok": traj.ok,
        "failure_time": traj.failure_time,
        "energy_drift": float(np.max(np.abs(traj.energies - e0)) / e0) if e0 > 0 else 0.0,
        "det_drift": float(np.max(traj.det_drift)),
    }
    _write_json(out, "evolve.json", summary)
    if not traj.ok:
        print(f"evolve: failed at t = {traj.failure_time}: {traj.failure_reason}",
              file=sys.stderr)
        return 3
    print(f"evolve: t = {args.t_end}, energy drift {summary['energy_drift']:.3e}, "
          f"det drift {summary['det_drift']:.3e}")
    return 0


def _fluid_setup(problem: FlowProblem):
    u0 = problem.initial_velocity()
    w0 = curl(u0)
    ode = fluid_ode(w0, problem.s, problem.report_solver_tol, problem.max_iter)
    return u0, w0, ode


def _cmd_picard(problem: FlowProblem, args, out: Path) -> int:
    _, _, ode = _fluid_setup(problem)
    series = picard_disk(ode, problem.rho, problem.order,
                         tol=problem.picard_tol, max_sweeps=problem.max_sweeps)
    payload = {
        "rho": series.rho,
        "order": series.order,
        "coeff_norms": series.coeff_norms(ode.norm),
        "source": series.source,
        "sweeps": series.sweeps,
        "update_norms": list(series.update_norms),
    }
    _write_json(out, "picard.json", payload)
    if args.spill_states:
        for k in range(series.order + 1):
            f = field_from_coeffs(problem.grid, series.coeffs[k], hermitian=None)
            save_field(f, out / f"picard_coeff_{k:02d}")
    print(f"picard: {series.sweeps} sweeps, final update "
          f"{series.update_norms[-1]:.3e}")
    return 0


def _cmd_rays(problem: FlowProblem, args, out: Path) -> int:
    _, _, ode = _fluid_setup(problem)
    angles = args.angles if args.angles is not None else problem.ray_angles
    steps = args.steps if args.steps is not None else problem.ray_steps
    particles = corner_and_random_points(problem.seed)
    rows = []
    norms = []
    for j in range(angles):
        theta = 2.0 * np.pi * j / angles
        ray = ray_integrate(ode, theta, problem.rho, steps)
        if not ray.ok:
            print(f"rays: ray at angle {theta:.4f} failed: {ray.error}", file=sys.stderr)
            return 3
        t = problem.rho * np.exp(1j * theta)
        dfield = field_from_coeffs(problem.grid, ray.endpoint, hermitian=None)
        positions = particles.astype(complex) + eval_at_points(
            dfield, particles.astype(complex)
        )
        for pid in range(particles.shape[0]):
            x = positions[pid]
            rows.append([t.real, t.imag, pid, x[0].real, x[0].imag,
                         x[1].real, x[1].imag, x[2].real, x[2].imag])
        norms.append(ode.norm(ray.endpoint))
    out.mkdir(parents=True, exist_ok=True)
    with (out / "trajectories.csv").open("w") as fh:
        fh.write("t_re,t_im,particle_id,x1_re,x1_im,x2_re,x2_im,x3_re,x3_im\n")
        for row in rows:
            fh.write(",".join(f"{v}" for v in row) + "\n")
    _write_json(out, "rays.json", {
        "rho": problem.rho, "angles": angles, "steps": steps,
        "endpoint_norms": norms,
    })
    print(f"rays: {angles} rays to |t| = {problem.rho}, "
          f"max endpoint norm {max(norms):.3e}")
    return 0


def _cmd_report(problem: FlowProblem, args, out: Path) -> int:
    toy = toy_quadratic_ode() if args.toy else None
    report = analyticity_report(problem, toy=toy)
    report.write(out)
    failed = [k for k, v in report.stages.items() if v.get("status") == "failed"]
    if failed:
        print(f"report: stage {failed[0]!r} failed: "
              f"{report.stages[failed[0]].get('error')}", file=sys.stderr)
        return 3
    radius = report.radius or {}
    r_text = "inf" if radius.get("infinite") else f"{radius.get('radius'):.4g}"
    print(f"report: radius estimate {r_text}, "
          f"monodromy loop error {report.monodromy['loop_error']:.3e}, "
          f"cross-radius drift {report.cross_radius['drift']:.3e}")
    return 0


def _cmd_probe_exp(problem: FlowProblem, args, out: Path) -> int:
    if args.amplitude is not None:
        problem = problem.with_overrides(amplitude=args.amplitude)
    v = problem.initial_velocity()
    w = initial_condition(problem.grid, args.perturbation,
                          {"seed": problem.seed}) * args.perturbation_amplitude
    validate_initial(w, band_limit=max(1, problem.grid.n // 8), s=problem.s)
    probe = parameter_analyticity_probe(
        v, w, args.eps_radius, order=args.order, steps=args.steps,
        s=problem.s, tol=problem.solver_tol,
    )
    _write_json(out, "probe_exp.json", probe.to_dict())
    print(f"probe-exp: eps radius {args.eps_radius}, drift {probe.drift:.3e}")
    return 0


def _cmd_oracle(problem: FlowProblem, args, out: Path) -> int:
    u0 = problem.initial_velocity()
    dt = args.dt if args.dt is not None else problem.dt
    u = euler_reference_evolve(u0, args.t_end, dt)
    save_field(u, out / "oracle_velocity")
    drift = abs(kinetic_energy(u) - kinetic_energy(u0)) / max(kinetic_energy(u0), 1e-300)
    _write_json(out, "oracle.json", {
        "t_end": args.t_end, "dt": dt, "energy_drift": drift,
    })
    print(f"oracle: t = {args.t_end}, energy drift {drift:.3e}")
    return 0


_COMMANDS = {
    "chart": _cmd_chart,
    "evolve": _cmd_evolve,
    "picard": _cmd_picard,
    "rays": _cmd_rays,
    "report": _cmd_report,
    "probe-exp": _cmd_probe_exp,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        problem = _problem_from_args(args)
        out = Path(problem.out_dir)
        return _COMMANDS[args.command](problem, args, out)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except EulerLabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
