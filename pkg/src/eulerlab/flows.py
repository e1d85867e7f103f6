"""Initial-condition library and the three time integrators.

* ``evolve_displacement`` advances the label-to-position displacement d with
  the material velocity solve as right-hand side (4th-order in time),
  recording energy, volume drift, and tracked particle positions.
* ``exp_map`` is the time-1 flow of that equation: initial velocity in,
  volume-preserving map out.
* ``euler_reference_evolve`` is the independent cross-check: a plain
  dealiased pseudo-spectral integration of the velocity equation in
  rotational form, never touching Lagrangian machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UNIFORM_FLOW_MESSAGE, ValidationError
from .lagrangian import DisplacementMap, jacobian, solve_velocity
from .spectral import (
    DEFAULT_SOBOLEV_INDEX,
    GridSpec,
    SpectralField,
    coeffs_from_phys,
    curl,
    differentiate,
    eval_at_points,
    field_from_coeffs,
    field_from_values,
    l2_norm,
    phys_from_coeffs,
    project_div_free,
    sobolev_norm,
    zero_field,
)

# ---------------------------------------------------------------------------
# initial conditions


def taylor_green(grid: GridSpec) -> SpectralField:
    X, Y, Z = grid.meshgrid()
    vals = np.stack(
        [
            np.sin(X) * np.cos(Y) * np.cos(Z),
            -np.cos(X) * np.sin(Y) * np.cos(Z),
            np.zeros_like(X),
        ]
    )
    return field_from_values(grid, vals)


def abc_flow(grid: GridSpec, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> SpectralField:
    """Beltrami eigenfield of the curl: curl u = u."""
    X, Y, Z = grid.meshgrid()
    vals = np.stack(
        [
            A * np.sin(Z) + C * np.cos(Y),
            B * np.sin(X) + A * np.cos(Z),
            C * np.sin(Y) + B * np.cos(X),
        ]
    )
    return field_from_values(grid, vals)


def random_band(grid: GridSpec, seed: int, band: int | None = None, s=DEFAULT_SOBOLEV_INDEX) -> SpectralField:
    """Seeded random divergence-free field, unit H^s norm, band-limited."""
    band = band if band is not None else max(1, grid.n // 8)
    rng = np.random.default_rng(seed)
    n = grid.n
    raw = rng.standard_normal((3, n, n, n)) + 1j * rng.standard_normal((3, n, n, n))
    k = grid.axis_modes
    keep = np.abs(k) <= band
    raw *= np.einsum("i,j,k->ijk", keep, keep, keep)
    f = field_from_coeffs(grid, raw, hermitian=False)
    real_vals = f.values().real
    f = project_div_free(field_from_values(grid, real_vals))
    return f * (1.0 / sobolev_norm(f, s))


def uniform_flow(grid: GridSpec, w=(1.0, 0.0, 0.0)) -> SpectralField:
    """Spatially constant velocity; always rejected by the admission check."""
    n = grid.n
    vals = np.broadcast_to(np.asarray(w, dtype=float).reshape(3, 1, 1, 1), (3, n, n, n))
    return field_from_values(grid, np.array(vals))


_FAMILIES = {
    "taylor_green": lambda grid, params: taylor_green(grid),
    "abc": lambda grid, params: abc_flow(
        grid, params.get("A", 1.0), params.get("B", 1.0), params.get("C", 1.0)
    ),
    "random_band": lambda grid, params: random_band(
        grid, int(params.get("seed", 0)), params.get("band")
    ),
    "uniform": lambda grid, params: uniform_flow(grid, params.get("w", (1.0, 0.0, 0.0))),
}


def initial_condition(grid: GridSpec, name: str, params: dict | None = None) -> SpectralField:
    try:
        family = _FAMILIES[name]
    except KeyError:
        raise ValidationError(
            f"unknown initial condition {name!r}; choose from {sorted(_FAMILIES)}"
        ) from None
    return family(grid, params or {})


def validate_initial(u0: SpectralField, band_limit: int | None = None, s=DEFAULT_SOBOLEV_INDEX):
    """Admission check: zero mean (uniform guard), divergence-free, band-limited."""
    scale = max(np.max(np.abs(u0.coeffs)), 1e-300)
    if np.max(np.abs(u0.mean())) > 1e-10 * max(1.0, scale):
        raise ValidationError(UNIFORM_FLOW_MESSAGE)
    if sobolev_norm(differentiate(u0, "div"), 0.0) > 1e-10 * max(1.0, scale):
        raise ValidationError("initial velocity must be divergence-free")
    if band_limit is not None:
        kx, ky, kz, _ = u0.grid.mode_mesh
        outside = (np.abs(kx) > band_limit) | (np.abs(ky) > band_limit) | (
            np.abs(kz) > band_limit
        )
        spill = float(np.max(np.abs(u0.coeffs[:, outside]))) if outside.any() else 0.0
        if spill > 1e-13 * scale:
            raise ValidationError(
                f"initial velocity carries modes beyond |k_i| <= {band_limit}"
            )


def corner_and_random_points(seed: int, extra: int = 8) -> np.ndarray:
    """Default tracked particles: the 8 points with coords in {0, pi}, plus
    ``extra`` pseudo-random points drawn from the seed."""
    corners = np.array(
        [[a, b, c] for a in (0.0, np.pi) for b in (0.0, np.pi) for c in (0.0, np.pi)]
    )
    rng = np.random.default_rng(seed)
    randoms = rng.uniform(0.0, 2.0 * np.pi, size=(extra, 3))
    return np.vstack([corners, randoms])


# ---------------------------------------------------------------------------
# kinetic energy (mean-value convention)


def kinetic_energy(u: SpectralField) -> float:
    return 0.5 * l2_norm(u) ** 2


# ---------------------------------------------------------------------------
# Lagrangian evolution


@dataclass(frozen=True)
class FlowTrajectory:
    """Recorded history of a displacement evolution."""

    times: np.ndarray
    displacements: list
    energies: np.ndarray
    det_drift: np.ndarray
    particle_points: np.ndarray
    particle_paths: np.ndarray  # (n_particles, n_times, 3), complex
    ok: bool = True
    failure_time: float | None = None
    failure_reason: str | None = None

    @property
    def final(self) -> DisplacementMap:
        return self.displacements[-1]


def evolve_displacement(
    w0: SpectralField,
    t_end: float,
    dt: float,
    s=DEFAULT_SOBOLEV_INDEX,
    tol: float = 1e-10,
    max_iter: int = 200,
    particles: np.ndarray | None = None,
) -> FlowTrajectory:
    """March d' = U(d) from the identity map with classical RK4.

    Solves are warm-started from the previous stage. Failure of a stage
    truncates the trajectory and records the failure time rather than
    raising.
    """
    if dt <= 0:
        raise ValidationError("time step must be positive")
    grid = w0.grid
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-12 * max(t_end, 1.0):
        raise ValidationError("t_end must be an integer multiple of dt")
    if particles is None:
        particles = np.zeros((0, 3))
    particles = np.asarray(particles, dtype=float)

    warm = {"U": None}

    def rhs(coeffs):
        d = DisplacementMap(field_from_coeffs(grid, coeffs, hermitian=None))
        sol = solve_velocity(d, w0, tol=tol, max_iter=max_iter, s=s, U0=warm["U"])
        warm["U"] = sol.U
        return sol.U, sol.U.coeffs

    times = [0.0]
    d0 = DisplacementMap(zero_field(grid, "vector3"))
    displacements = [d0]
    state = d0.coeffs.copy()

    def particle_positions(coeffs):
        if particles.shape[0] == 0:
            return np.zeros((0, 3), dtype=complex)
        f = field_from_coeffs(grid, coeffs, hermitian=None)
        return particles + eval_at_points(f, particles.astype(complex))

    paths = [particle_positions(state)]
    try:
        U_now, _ = rhs(state)
    except (ConvergenceError, ValidationError) as exc:
        return FlowTrajectory(
            np.array(times), displacements, np.zeros(1), np.zeros(1),
            particles, np.array(paths).transpose(1, 0, 2),
            ok=False, failure_time=0.0, failure_reason=str(exc),
        )
    energies = [kinetic_energy(U_now)]
    det_drift = [jacobian(displacements[0]).det_deviation()]

    for step in range(steps):
        t = step * dt
        try:
            _, k1 = rhs(state)
            _, k2 = rhs(state + 0.5 * dt * k1)
            _, k3 = rhs(state + 0.5 * dt * k2)
            _, k4 = rhs(state + dt * k3)
        except (ConvergenceError, ValidationError) as exc:
            return FlowTrajectory(
                np.array(times), displacements, np.array(energies),
                np.array(det_drift), particles, np.array(paths).transpose(1, 0, 2),
                ok=False, failure_time=t, failure_reason=str(exc),
            )
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        d = DisplacementMap(field_from_coeffs(grid, state, hermitian=None))
        displacements.append(d)
        times.append(t + dt)
        U_now, _ = rhs(state)
        energies.append(kinetic_energy(U_now))
        det_drift.append(jacobian(d).det_deviation())
        paths.append(particle_positions(state))

    return FlowTrajectory(
        np.array(times), displacements, np.array(energies), np.array(det_drift),
        particles, np.array(paths).transpose(1, 0, 2),
    )


def evolve_real(problem, t_end: float, dt: float) -> FlowTrajectory:
    """Real-time evolution of a flow problem with its tracked particles."""
    u0 = problem.initial_velocity()
    w0 = curl(u0)
    return evolve_displacement(
        w0,
        t_end,
        dt,
        s=problem.s,
        tol=problem.solver_tol,
        max_iter=problem.max_iter,
        particles=corner_and_random_points(problem.seed),
    )


def exp_map(
    v: SpectralField,
    steps: int = 50,
    s=DEFAULT_SOBOLEV_INDEX,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> DisplacementMap:
    """Time-1 flow map of the initial velocity v (geodesic exponential).

    Scaling the argument scales time: exp_map(t*v) is the time-t
    configuration of the flow started from v.
    """
    traj = evolve_displacement(curl(v), 1.0, 1.0 / steps, s=s, tol=tol, max_iter=max_iter)
    if not traj.ok:
        raise ConvergenceError(
            f"exponential map integration failed at t = {traj.failure_time}: "
            f"{traj.failure_reason}"
        )
    return traj.final


# ---------------------------------------------------------------------------
# independent Eulerian reference solver


def euler_reference_evolve(u0: SpectralField, t_end: float, dt: float) -> SpectralField:
    """Pseudo-spectral velocity-equation integration in rotational form.

    du/dt = P(u x curl u) with Leray projection P and dealiased products;
    4th-order one-step in time. Used only as an oracle against the
    Lagrangian pipeline.
    """
    if dt <= 0:
        raise ValidationError("time step must be positive")
    grid = u0.grid
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-12 * max(t_end, 1.0):
        raise ValidationError("t_end must be an integer multiple of dt")
    mask = grid.dealias_mask
    kx, ky, kz, k2 = grid.mode_mesh

    def rhs(c):
        w = np.stack(
            [
                1j * (ky * c[2] - kz * c[1]),
                1j * (kz * c[0] - kx * c[2]),
                1j * (kx * c[1] - ky * c[0]),
            ]
        )
        u_phys = phys_from_coeffs(c)
        w_phys = phys_from_coeffs(w)
        cross = np.stack(
            [
                u_phys[1] * w_phys[2] - u_phys[2] * w_phys[1],
                u_phys[2] * w_phys[0] - u_phys[0] * w_phys[2],
                u_phys[0] * w_phys[1] - u_phys[1] * w_phys[0],
            ]
        )
        f = coeffs_from_phys(cross) * mask
        inv = np.zeros_like(k2)
        np.divide(1.0, k2, out=inv, where=k2 > 0)
        kdotf = kx * f[0] + ky * f[1] + kz * f[2]
        f = np.stack(
            [f[0] - kx * kdotf * inv, f[1] - ky * kdotf * inv, f[2] - kz * kdotf * inv]
        )
        f[:, 0, 0, 0] = 0.0
        return f

    c = u0.coeffs.copy()
    for step in range(steps):
        k1 = rhs(c)
        k2_ = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2_)
        k4 = rhs(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2_ + 2.0 * k3 + k4)
        if not np.all(np.isfinite(c)):
            raise ConvergenceError(
                f"reference solve blew up at t = {(step + 1) * dt:.6g}"
            )
    return SpectralField(grid, c, u0.hermitian)
