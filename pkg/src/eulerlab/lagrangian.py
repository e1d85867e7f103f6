"""Velocity solve in Lagrangian coordinates for near-identity maps.

Everything here works with the map g(x) = x + d(x) through its displacement
d alone. Given the initial vorticity w0, the mid-flow velocity in material
coordinates, U = u o g, solves the conjugated system

    curl_g U = J . w0      (vorticity transport seen from the labels)
    div_g  U = 0           (the image field is divergence-free)

where J = I + grad d and curl_g / div_g are the spatial curl and divergence
written through the chain rule, with J^-1 realised as adj(J)/det(J). No
composition with g^-1 is ever formed: the operators are rational in grad d
and linear in grad U, so they stay inside one spectral representation and
continue verbatim to complex-valued d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, SingularMapError, ValidationError
from .spectral import (
    DEFAULT_SOBOLEV_INDEX,
    GridSpec,
    SpectralField,
    _s_value,
    coeffs_from_phys,
    curl_inv,
    differentiate,
    grad,
    laplace_inv,
    phys_from_coeffs,
    project_div_free,
    sobolev_norm,
    zero_field,
)

# below this pointwise |det J| the map is treated as folded/singular
_DET_FLOOR = 1e-6


@dataclass(frozen=True)
class DisplacementMap:
    """The displacement d = g - Id of a near-identity map of the torus.

    Mean-free by contract (maps preserve the center of mass); complex
    coefficient arrays represent complexified maps.
    """

    field: SpectralField

    def __post_init__(self):
        if not self.field.is_vector:
            raise ValidationError("a displacement map needs a vector field")
        scale = max(1.0, float(np.max(np.abs(self.field.coeffs))))
        if np.max(np.abs(self.field.mean())) > 1e-8 * scale:
            raise ValidationError("displacement map must have zero mean")

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def coeffs(self) -> np.ndarray:
        return self.field.coeffs

    def map_points(self, pts) -> np.ndarray:
        """g(p) = p + d(p) for a batch of (possibly complex) points."""
        from .spectral import eval_at_points

        pts = np.atleast_2d(np.asarray(pts, dtype=np.complex128))
        return pts + eval_at_points(self.field, pts)


def identity_map(grid: GridSpec) -> DisplacementMap:
    return DisplacementMap(zero_field(grid, "vector3"))


@dataclass(frozen=True)
class JacobianBundle:
    """J = I + grad d with its adjugate and determinant, on the grid.

    ``J`` is raw; ``adj`` entries are dealiased quadratic cofactors and
    ``det`` a two-stage dealiased cubic, all stored as physical samples.
    """

    grid: GridSpec
    J: np.ndarray
    adj: np.ndarray
    det: np.ndarray
    hermitian: bool
    _jinv_cache: list = field(default_factory=list, repr=False, compare=False)

    def grad_inf(self) -> float:
        """Max-norm of grad d over entries and grid points."""
        eye = np.eye(3)[:, :, None, None, None]
        return float(np.max(np.abs(self.J - eye)))

    def det_deviation(self) -> float:
        return float(np.max(np.abs(self.det - 1.0)))

    def adjugate_defect(self) -> float:
        """Pointwise residual of J . adj(J) = det(J) I."""
        prod = np.einsum("im...,mj...->ij...", self.J, self.adj)
        eye = np.eye(3)[:, :, None, None, None]
        return float(np.max(np.abs(prod - self.det * eye)))

    def jinv(self) -> np.ndarray:
        """J^-1 = adj(J)/det(J); raises if det vanishes on the grid."""
        if not self._jinv_cache:
            if float(np.min(np.abs(self.det))) < _DET_FLOOR:
                raise SingularMapError(
                    "Jacobian determinant vanishes on the grid; the map has folded"
                )
            self._jinv_cache.append(self.adj / self.det)
        return self._jinv_cache[0]


def _gradient_phys(f: SpectralField) -> np.ndarray:
    """(3, 3, n, n, n) physical samples of d(f_i)/d(x_j) for a vector field."""
    kx, ky, kz, _ = f.grid.mode_mesh
    c = f.coeffs
    stacks = np.empty((3, 3) + c.shape[1:], dtype=np.complex128)
    for i in range(3):
        stacks[i, 0] = 1j * kx * c[i]
        stacks[i, 1] = 1j * ky * c[i]
        stacks[i, 2] = 1j * kz * c[i]
    return phys_from_coeffs(stacks)


def _dealias_phys(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Mask a batch of physical fields through spectral space and come back."""
    return phys_from_coeffs(coeffs_from_phys(values) * grid.dealias_mask)


def jacobian(d: DisplacementMap) -> JacobianBundle:
    """Assemble J, adj(J) (dealiased cofactors) and det(J) for g = Id + d."""
    grid = d.grid
    G = _gradient_phys(d.field)
    eye = np.eye(3)[:, :, None, None, None]
    J = G + eye

    cof = np.empty_like(J)
    cof[0, 0] = J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    cof[0, 1] = -(J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
    cof[0, 2] = J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0]
    cof[1, 0] = -(J[0, 1] * J[2, 2] - J[0, 2] * J[2, 1])
    cof[1, 1] = J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
    cof[1, 2] = -(J[0, 0] * J[2, 1] - J[0, 1] * J[2, 0])
    cof[2, 0] = J[0, 1] * J[1, 2] - J[0, 2] * J[1, 1]
    cof[2, 1] = -(J[0, 0] * J[1, 2] - J[0, 2] * J[1, 0])
    cof[2, 2] = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    cof = _dealias_phys(cof, grid)

    det = J[0, 0] * cof[0, 0] + J[0, 1] * cof[0, 1] + J[0, 2] * cof[0, 2]
    det = _dealias_phys(det, grid)

    adj = np.swapaxes(cof, 0, 1).copy()
    return JacobianBundle(grid, J, adj, det, d.field.hermitian)


def pushforward_vorticity(
    d: DisplacementMap,
    w0: SpectralField,
    bundle: JacobianBundle | None = None,
    volume_consistent: bool = False,
) -> SpectralField:
    """Transport the initial vorticity by the map: x -> J(x) . w0(x).

    With ``volume_consistent=True`` the result is divided by det(J), the
    Piola form whose conjugated divergence vanishes identically for any
    near-identity map. The two coincide exactly on unit-determinant maps;
    the velocity solve uses the Piola form so its linear system stays
    consistent even when an intermediate map is off the unit-determinant
    manifold by integration error.
    """
    if bundle is None:
        bundle = jacobian(d)
    w_phys = phys_from_coeffs(w0.coeffs)
    out = np.einsum("ij...,j...->i...", bundle.J, w_phys)
    if volume_consistent:
        if float(np.min(np.abs(bundle.det))) < _DET_FLOOR:
            raise SingularMapError(
                "Jacobian determinant vanishes on the grid; the map has folded"
            )
        out = out / bundle.det
    coeffs = coeffs_from_phys(out) * bundle.grid.dealias_mask
    return SpectralField(bundle.grid, coeffs, bundle.hermitian and w0.hermitian)


def _conjugated_pair(bundle: JacobianBundle, U: SpectralField):
    """curl and divergence of the image field, computed in label coordinates.

    Shares grad U and the matrix contraction between the two operators; this
    is the inner loop of the velocity solve.
    """
    jinv = bundle.jinv()
    GU = _gradient_phys(U)
    B = np.einsum("im...,mj...->ij...", GU, jinv)
    stacked = np.stack(
        [
            B[2, 1] - B[1, 2],
            B[0, 2] - B[2, 0],
            B[1, 0] - B[0, 1],
            B[0, 0] + B[1, 1] + B[2, 2],
        ]
    )
    coeffs = coeffs_from_phys(stacked) * bundle.grid.dealias_mask
    herm = bundle.hermitian and U.hermitian
    curl_f = SpectralField(bundle.grid, coeffs[:3], herm)
    div_f = SpectralField(bundle.grid, coeffs[3], herm)
    return curl_f, div_f


def conjugated_curl(
    d: DisplacementMap, U: SpectralField, bundle: JacobianBundle | None = None
) -> SpectralField:
    """(curl of the image field) read at the labels; curl U when d = 0."""
    if bundle is None:
        bundle = jacobian(d)
    return _conjugated_pair(bundle, U)[0]


def conjugated_div(
    d: DisplacementMap, U: SpectralField, bundle: JacobianBundle | None = None
) -> SpectralField:
    """(div of the image field) read at the labels; div U when d = 0.

    Its vanishing is the membership constraint for admissible U.
    """
    if bundle is None:
        bundle = jacobian(d)
    return _conjugated_pair(bundle, U)[1]


@dataclass(frozen=True)
class VelocitySolve:
    """Result of the conjugated velocity solve."""

    U: SpectralField
    residual_curl: float
    residual_div: float
    iterations: int
    history: tuple


def _validate_vorticity(w0: SpectralField, s: float, tol: float):
    if not w0.is_vector:
        raise ValidationError("vorticity must be a vector field")
    dnorm = sobolev_norm(differentiate(w0, "div"), max(s - 1.0, 0.0))
    scale = max(1.0, sobolev_norm(w0, max(s - 1.0, 0.0)))
    if dnorm > tol * scale:
        raise ValidationError(f"vorticity is not divergence-free: {dnorm:.3e}")
    if np.max(np.abs(w0.mean())) > tol * scale:
        raise ValidationError("vorticity must have zero mean")


def solve_velocity(
    d: DisplacementMap,
    w0: SpectralField,
    tol: float = 1e-10,
    max_iter: int = 200,
    s=DEFAULT_SOBOLEV_INDEX,
    U0: SpectralField | None = None,
    bundle: JacobianBundle | None = None,
) -> VelocitySolve:
    """Solve curl_g U = J.w0, div_g U = 0 for the material velocity U.

    Stationary residual correction preconditioned by the identity-map
    operators: each sweep adds curl_inv(P(curl defect)) + grad(lap_inv(div
    defect)). For d = 0 the first sweep is exact; for small grad d the error
    contracts by O(|grad d|) per sweep. Residuals are H^(s-1) norms of the
    two defects; both must drop below ``tol``.

    The curl target is the volume-consistent transport J.w0/det(J), which
    equals the plain pushforward J.w0 on unit-determinant maps and keeps the
    constrained system exactly solvable off them (where the plain form is
    inconsistent at the size of the volume defect).
    """
    sv = _s_value(s)
    _validate_vorticity(w0, sv, 1e-8)
    if bundle is None:
        bundle = jacobian(d)
    gi = bundle.grad_inf()
    if gi > 0.5:
        raise ValidationError(
            f"map leaves the perturbative regime: |grad d|_inf = {gi:.3f} > 0.5"
        )
    target = pushforward_vorticity(d, w0, bundle, volume_consistent=True)

    herm = bundle.hermitian and w0.hermitian
    if U0 is None:
        U = zero_field(d.grid, "vector3")
    else:
        U = SpectralField(d.grid, U0.coeffs, U0.hermitian and herm)

    history = []
    for iteration in range(max_iter + 1):
        curl_f, div_f = _conjugated_pair(bundle, U)
        r_curl = target - curl_f
        r_div = -div_f
        nc = sobolev_norm(r_curl, sv - 1.0)
        nd = sobolev_norm(r_div, sv - 1.0)
        history.append((nc, nd))
        if nc <= tol and nd <= tol:
            return VelocitySolve(U, nc, nd, iteration, tuple(history))
        # k=0 modes carry integration-error dust only; both inverses need them clean
        rc = project_div_free(r_curl)
        rd_coeffs = r_div.coeffs.copy()
        rd_coeffs[0, 0, 0] = 0.0
        rd = SpectralField(r_div.grid, rd_coeffs, r_div.hermitian)
        U = U + curl_inv(rc, tol=None) + grad(laplace_inv(rd, tol=None))
    raise ConvergenceError(
        f"velocity solve did not reach tol={tol:.1e} in {max_iter} sweeps "
        f"(last residuals {nc:.3e}, {nd:.3e})",
        history=history,
    )
