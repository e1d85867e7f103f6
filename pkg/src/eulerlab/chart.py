"""Volume-preserving correction of near-identity maps.

A divergence-free displacement v does not give a volume-preserving map
x -> x + v(x) by itself. Adding a gradient term fixes that: with
A = grad v + hess(phi),

    det(I + A) - 1 = tr A + e2(A) + e3(A),

and since tr A = div v + lap(phi) = lap(phi) for divergence-free v, the unit
Jacobian condition becomes the fixed-point problem

    phi = lap_inv(P(grad v, hess phi)),   P = -(e2(A) + det A),

whose right side is quadratic-plus-cubic in small data, hence a contraction
on a ball. The additive constant in phi is fixed by zero mean. All of it
works verbatim for complex-valued v, which is how complexified states reuse
the chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError
from .lagrangian import DisplacementMap
from .spectral import (
    DEFAULT_SOBOLEV_INDEX,
    SpectralField,
    _s_value,
    coeffs_from_phys,
    div,
    grad,
    laplace_inv,
    phys_from_coeffs,
    sobolev_norm,
)


@dataclass(frozen=True)
class ChartProblem:
    """Input displacement and the knobs of the contraction solve."""

    v: SpectralField
    s: float = DEFAULT_SOBOLEV_INDEX
    tol: float = 1e-12
    max_iter: int = 60
    radius: float = 0.1

    def __post_init__(self):
        if not self.v.is_vector:
            raise ValidationError("chart input must be a vector field")


@dataclass(frozen=True)
class ChartSolution:
    """Converged gradient correction and the resulting map."""

    phi: SpectralField
    displacement: DisplacementMap
    det_residual: float
    iterations: int
    update_norms: tuple


def _gradient_tensor_phys(v: SpectralField) -> np.ndarray:
    kx, ky, kz, _ = v.grid.mode_mesh
    c = v.coeffs
    out = np.empty((3, 3) + c.shape[1:], dtype=np.complex128)
    ks = (kx, ky, kz)
    for i in range(3):
        for j in range(3):
            out[i, j] = 1j * ks[j] * c[i]
    return phys_from_coeffs(out)


def _hessian_phys(phi: SpectralField) -> np.ndarray:
    kx, ky, kz, _ = phi.grid.mode_mesh
    c = phi.coeffs
    ks = (kx, ky, kz)
    out = np.empty((3, 3) + c.shape, dtype=np.complex128)
    for i in range(3):
        for j in range(i, 3):
            out[i, j] = -ks[i] * ks[j] * c
            out[j, i] = out[i, j]
    return phys_from_coeffs(out)


def _minors_and_det_coeffs(A: np.ndarray, grid) -> tuple[np.ndarray, np.ndarray]:
    """Dealiased spectral coefficients of e2(A) and det(A).

    e2 is the sum of principal 2x2 minors (quadratic); det(A) is assembled
    as two successive dealiased products so the cubic term sees the same
    truncation discipline as everything else.
    """
    mask = grid.dealias_mask
    m2_phys = (
        A[0, 0] * A[1, 1]
        - A[0, 1] * A[1, 0]
        + A[0, 0] * A[2, 2]
        - A[0, 2] * A[2, 0]
        + A[1, 1] * A[2, 2]
        - A[1, 2] * A[2, 1]
    )
    m2 = coeffs_from_phys(m2_phys) * mask

    cof = np.stack(
        [
            A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1],
            A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0],
            A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0],
        ]
    )
    cof = phys_from_coeffs(coeffs_from_phys(cof) * mask)
    det_phys = A[0, 0] * cof[0] - A[0, 1] * cof[1] + A[0, 2] * cof[2]
    det = coeffs_from_phys(det_phys) * mask
    return m2, det


def determinant_residual(v: SpectralField, phi: SpectralField) -> SpectralField:
    """det(I + grad v + hess phi) - 1 as a scalar field."""
    A = _gradient_tensor_phys(v) + _hessian_phys(phi)
    m2, det = _minors_and_det_coeffs(A, v.grid)
    lap_phi = -phi.grid.k_squared * phi.coeffs
    trace = div(v).coeffs + lap_phi
    herm = v.hermitian and phi.hermitian
    return SpectralField(v.grid, trace + m2 + det, herm)


def nonlinearity_P(v: SpectralField, phi: SpectralField) -> SpectralField:
    """P = -(e2 + e3) of A = grad v + hess phi.

    Sign fixed so that, for divergence-free v, the unit-determinant condition
    reads lap(phi) = P and the fixed point is phi = lap_inv(P).
    """
    A = _gradient_tensor_phys(v) + _hessian_phys(phi)
    m2, det = _minors_and_det_coeffs(A, v.grid)
    herm = v.hermitian and phi.hermitian
    return SpectralField(v.grid, -(m2 + det), herm)


def _validate_problem(p: ChartProblem):
    sv = _s_value(p.s)
    vnorm = sobolev_norm(p.v, sv)
    scale = max(1.0, vnorm)
    if sobolev_norm(div(p.v), max(sv - 1.0, 0.0)) > 1e-10 * scale:
        raise ValidationError("chart input must be divergence-free")
    if np.max(np.abs(p.v.mean())) > 1e-10 * scale:
        raise ValidationError("chart input must have zero mean")
    if vnorm >= p.radius:
        raise ValidationError(
            f"|v|_s = {vnorm:.3e} is outside the contraction radius {p.radius}"
        )


def solve_phi(p: ChartProblem) -> ChartSolution:
    """Contract phi -> lap_inv(P(grad v, hess phi)) to the fixed point.

    Stops when successive iterates are within ``tol`` in H^(s+1); the
    returned solution carries the max pointwise |det - 1| certificate of the
    corrected map.
    """
    _validate_problem(p)
    sv = _s_value(p.s)
    grid = p.v.grid
    herm = p.v.hermitian

    grad_v = _gradient_tensor_phys(p.v)
    phi = SpectralField(grid, np.zeros_like(p.v.coeffs[0]), herm)
    updates = []
    for iteration in range(1, p.max_iter + 1):
        A = grad_v + _hessian_phys(phi)
        m2, det = _minors_and_det_coeffs(A, grid)
        rhs = -(m2 + det)
        rhs[0, 0, 0] = 0.0  # exact zero-mean up to aliasing dust
        new_phi = laplace_inv(SpectralField(grid, rhs, herm), tol=None)
        step = sobolev_norm(new_phi - phi, sv + 1.0)
        updates.append(step)
        phi = new_phi
        if step <= p.tol:
            break
    else:
        raise ConvergenceError(
            f"chart iteration did not contract to {p.tol:.1e} within "
            f"{p.max_iter} sweeps",
            history=updates,
        )

    displacement = DisplacementMap(p.v + grad(phi))
    residual = determinant_residual(p.v, phi)
    det_residual = float(np.max(np.abs(phys_from_coeffs(residual.coeffs))))
    return ChartSolution(phi, displacement, det_residual, len(updates), tuple(updates))


def chart_map(p: ChartProblem) -> DisplacementMap:
    """The volume-preserving displacement v + grad(phi(v))."""
    return solve_phi(p).displacement
