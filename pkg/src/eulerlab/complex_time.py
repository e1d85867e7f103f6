"""Complex-time integration, Picard disks, and Cauchy-circle diagnostics.

Generic over the state: a state is any complex NumPy array (a scalar ODE
state is a 0-d array, a fluid state the displacement coefficient block), and
the caller supplies the norm. The machinery provides

* ray integration of dx/dt = f(x) along a fixed complex direction,
* Picard sweeps over a disk |t| <= rho, with iterates held as degree-K
  polynomials recovered from circle collocation,
* Taylor-coefficient extraction from circle samples (discrete Cauchy
  formula),
* a root-test radius-of-convergence estimate,
* a monodromy check around the circle, whose loop error measures whether the
  continuation is single-valued on the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, EvaluationFailure, ValidationError


def _euclidean(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))


@dataclass(frozen=True)
class AnalyticOde:
    """Autonomous ODE dx/dt = rhs(x) with analytic right-hand side."""

    rhs: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    norm: Callable[[np.ndarray], float] = _euclidean

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=np.complex128))


@dataclass(frozen=True)
class RayPath:
    """States along t = s * exp(i theta), s in [0, rho]."""

    theta: float
    rho: float
    s: np.ndarray
    states: np.ndarray
    ok: bool = True
    error: Optional[str] = None

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class TaylorSeries:
    """Truncated power series whose coefficients are states.

    ``coeffs[k]`` multiplies t^k; ``rho`` is the extraction radius and
    ``source`` records how the series was produced ('picard' or 'circle').
    """

    coeffs: np.ndarray
    rho: float
    source: str
    sweeps: int = 0
    update_norms: tuple = ()

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    def evaluate(self, t: complex) -> np.ndarray:
        acc = self.coeffs[-1].copy()
        for k in range(self.order - 1, -1, -1):
            acc = acc * t + self.coeffs[k]
        return acc

    def coeff_norms(self, norm: Callable[[np.ndarray], float] = _euclidean):
        return [norm(c) for c in self.coeffs]


@dataclass(frozen=True)
class RadiusEstimate:
    """Root-test radius with a crude interval from the fit's standard error."""

    radius: float
    lower: float
    upper: float
    slope: float
    stderr: float
    points_used: int
    infinite: bool = False

    def to_dict(self) -> dict:
        return {
            "radius": None if self.infinite else self.radius,
            "lower": None if self.infinite else self.lower,
            "upper": None if self.infinite else self.upper,
            "slope": self.slope,
            "stderr": self.stderr,
            "points_used": self.points_used,
            "infinite": self.infinite,
        }


@dataclass(frozen=True)
class MonodromyReport:
    """Result of continuing once around the circle |t| = rho."""

    rho: float
    loop_error: float
    angles: np.ndarray
    samples: np.ndarray
    base_state: np.ndarray
    ok: bool = True
    error: Optional[str] = None


def _finite(x: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(x)))


def ray_integrate(ode: AnalyticOde, theta: float, rho: float, steps: int) -> RayPath:
    """Classical 4th-order integration of dx/ds = e^(i theta) rhs(x).

    Returns steps+1 states on the uniform s-grid of [0, rho]. A failing or
    non-finite right-hand side truncates the path and marks it failed
    instead of raising.
    """
    if steps < 4:
        raise ValidationError("ray integration needs at least 4 steps")
    if rho <= 0:
        raise ValidationError("ray radius must be positive")
    direction = np.exp(1j * theta)
    h = rho / steps
    s_grid = np.linspace(0.0, rho, steps + 1)
    x = ode.x0.copy()
    states = [x.copy()]

    def f(y):
        return direction * np.asarray(ode.rhs(y), dtype=np.complex128)

    for step in range(steps):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                k1 = f(x)
                k2 = f(x + 0.5 * h * k1)
                k3 = f(x + 0.5 * h * k2)
                k4 = f(x + h * k3)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except Exception as exc:  # deliberate: failure becomes a marker
            return RayPath(
                theta, rho, s_grid[: step + 1], np.array(states), False,
                f"rhs evaluation failed at step {step}: {exc}",
            )
        if not _finite(x):
            return RayPath(
                theta, rho, s_grid[: step + 1], np.array(states), False,
                f"state became non-finite at step {step + 1}",
            )
        states.append(x.copy())
    return RayPath(theta, rho, s_grid, np.array(states))


def _circle_nodes(rho: float, count: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(count) / count
    return rho * np.exp(1j * angles)


def _poly_at_nodes(coeffs: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    powers = nodes[:, None] ** np.arange(coeffs.shape[0])[None, :]
    return np.tensordot(powers, coeffs, axes=(1, 0))


def _coeffs_from_samples(samples: np.ndarray, rho: float, order: int) -> np.ndarray:
    m = samples.shape[0]
    j = np.arange(m)
    k = np.arange(order + 1)
    dft = np.exp(-2j * np.pi * np.outer(k, j) / m) / m
    coeffs = np.tensordot(dft, samples, axes=(1, 0))
    scale = rho ** (-k.astype(float))
    return coeffs * scale.reshape((order + 1,) + (1,) * (samples.ndim - 1))


def picard_disk(
    ode: AnalyticOde,
    rho: float,
    order: int,
    tol: float = 1e-10,
    max_sweeps: int | None = None,
    coeff_history: list | None = None,
) -> TaylorSeries:
    """Picard iteration on the disk |t| <= rho with polynomial iterates.

    Each sweep evaluates rhs at the M = 2*order+2 circle nodes, recovers the
    degree-M-1 polynomial of rhs(x_n(t)) by the discrete Cauchy formula,
    integrates termwise (coefficient k picks up 1/(k+1); the constant term is
    x0) and truncates to degree ``order``. Sweeps stop when the sup-over-
    nodes update norm falls below ``tol``. The triangular structure of
    Picard fixes coefficient k from sweep k on, so converged prefixes stop
    moving long before the tail does.
    """
    if rho <= 0:
        raise ValidationError("disk radius must be positive")
    if order < 1:
        raise ValidationError("order must be at least 1")
    if max_sweeps is None:
        max_sweeps = order + 8
    m = 2 * order + 2
    nodes = _circle_nodes(rho, m)

    shape = ode.x0.shape
    coeffs = np.zeros((order + 1,) + shape, dtype=np.complex128)
    coeffs[0] = ode.x0
    updates: list[float] = []
    for sweep in range(1, max_sweeps + 1):
        states = _poly_at_nodes(coeffs, nodes)
        rhs_states = np.empty_like(states)
        for j in range(m):
            try:
                rhs_states[j] = np.asarray(ode.rhs(states[j]), dtype=np.complex128)
            except Exception as exc:
                raise EvaluationFailure(
                    f"rhs failed at collocation node {j} (t = {nodes[j]:.6g}): {exc}",
                    node=j,
                    t=nodes[j],
                ) from exc
        b = _coeffs_from_samples(rhs_states, rho, order)
        new_coeffs = np.zeros_like(coeffs)
        new_coeffs[0] = ode.x0
        for k in range(order):
            new_coeffs[k + 1] = b[k] / (k + 1.0)
        new_states = _poly_at_nodes(new_coeffs, nodes)
        update = max(ode.norm(new_states[j] - states[j]) for j in range(m))
        updates.append(update)
        coeffs = new_coeffs
        if coeff_history is not None:
            coeff_history.append(coeffs.copy())
        if update <= tol:
            return TaylorSeries(coeffs, rho, "picard", sweep, tuple(updates))
    raise ConvergenceError(
        f"Picard sweeps did not reach tol={tol:.1e} within {max_sweeps} sweeps",
        history=updates,
    )


def taylor_from_circle(samples, rho: float, order: int) -> TaylorSeries:
    """Taylor coefficients from equispaced samples on |t| = rho.

    ``samples`` holds M >= 2*order+2 states at t_j = rho e^(2 pi i j / M),
    starting at angle 0. Exact for polynomials that the M-point grid
    resolves without aliasing.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    m = samples.shape[0]
    if m < 2 * order + 2:
        raise ValidationError(
            f"need at least {2 * order + 2} circle samples for order {order}, got {m}"
        )
    coeffs = _coeffs_from_samples(samples, rho, order)
    return TaylorSeries(coeffs, rho, "circle")


def radius_estimate(
    series: TaylorSeries,
    tail_start: int,
    norm: Callable[[np.ndarray], float] = _euclidean,
) -> RadiusEstimate:
    """Root-test fit over the series tail.

    Least squares of log |a_k| against k gives slope -log(1/R); the slope's
    standard error maps to the returned interval. An all-zero tail, or a
    significantly concave log-decay (factorial-like coefficients), is
    reported as an infinite radius.
    """
    norms = np.array(series.coeff_norms(norm), dtype=float)
    if norms.size < tail_start + 4:
        raise ValidationError(
            f"series too short: need at least {tail_start + 4} coefficients"
        )
    ks = np.arange(tail_start, norms.size, dtype=float)
    tail = norms[tail_start:]
    floor = np.max(norms) * 1e-300 if np.max(norms) > 0 else 0.0
    positive = tail > floor
    if positive.sum() == 0:
        return RadiusEstimate(math.inf, math.inf, math.inf, -math.inf, 0.0, 0, True)
    ks = ks[positive]
    logs = np.log(tail[positive])
    if ks.size < 4:
        return RadiusEstimate(math.inf, math.inf, math.inf, -math.inf, 0.0, int(ks.size), True)

    (slope, intercept), cov = np.polyfit(ks, logs, 1, cov=True)
    stderr = float(np.sqrt(max(cov[0, 0], 0.0)))

    # factorial-type decay shows up as strong downward curvature
    if ks.size >= 5:
        quad = np.polyfit(ks, logs, 2)
        resid = logs - np.polyval(quad, ks)
        dof = max(ks.size - 3, 1)
        sigma2 = float(resid @ resid) / dof
        xm = ks - ks.mean()
        denom = float(np.sum(xm**4) - (np.sum(xm**2) ** 2) / ks.size)
        q_err = math.sqrt(sigma2 / denom) if denom > 0 else math.inf
        if quad[0] < -0.02 and quad[0] + 2.0 * q_err < 0.0:
            return RadiusEstimate(
                math.inf, math.inf, math.inf, float(slope), stderr, int(ks.size), True
            )

    radius = math.exp(-slope)
    lower = math.exp(-(slope + stderr))
    upper = math.exp(-(slope - stderr))
    return RadiusEstimate(radius, lower, upper, float(slope), stderr, int(ks.size))


def monodromy_check(
    ode: AnalyticOde,
    rho: float,
    steps: int,
    record_angles: int = 16,
) -> MonodromyReport:
    """Continue the solution once around |t| = rho and measure the gap.

    The base state x(rho) comes from the real ray; the loop then integrates
    dx/d(theta) = i rho e^(i theta) rhs(x) from 0 to 2 pi with the classical
    4th-order scheme. For a single-valued holomorphic continuation the loop
    closes; branch points inside the circle leave an O(1) gap.
    """
    ray = ray_integrate(ode, 0.0, rho, steps)
    if not ray.ok:
        empty = np.zeros((0,) + ode.x0.shape, dtype=np.complex128)
        return MonodromyReport(
            rho, math.inf, np.zeros(0), empty, ray.endpoint, False,
            f"base ray failed: {ray.error}",
        )
    base = ray.endpoint

    h = 2.0 * np.pi / steps
    record_every = max(1, steps // max(record_angles, 1))

    def f(y, theta):
        return (
            1j * rho * np.exp(1j * theta) * np.asarray(ode.rhs(y), dtype=np.complex128)
        )

    x = base.copy()
    angles = [0.0]
    samples = [x.copy()]
    for step in range(steps):
        theta = step * h
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                k1 = f(x, theta)
                k2 = f(x + 0.5 * h * k1, theta + 0.5 * h)
                k3 = f(x + 0.5 * h * k2, theta + 0.5 * h)
                k4 = f(x + h * k3, theta + h)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except Exception as exc:
            return MonodromyReport(
                rho, math.inf, np.array(angles), np.array(samples), base, False,
                f"rhs failed at angle step {step}: {exc}",
            )
        if not _finite(x):
            return MonodromyReport(
                rho, math.inf, np.array(angles), np.array(samples), base, False,
                f"state became non-finite at angle step {step + 1}",
            )
        if (step + 1) % record_every == 0 or step + 1 == steps:
            angles.append((step + 1) * h)
            samples.append(x.copy())
    loop_error = ode.norm(x - base)
    return MonodromyReport(rho, loop_error, np.array(angles), np.array(samples), base)
