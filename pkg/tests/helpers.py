"""Shared test apparatus: random admissible fields and composition oracles.

The composition oracles are the one place the inverse map g^-1 is formed;
production code never composes with it. They give the independent route to
the conjugated operators: build the spatial field u(y) = U(g^-1(y)) by brute
force and differentiate it where needed.
"""

import numpy as np

from eulerlab import (
    curl_inv,
    eval_at_points,
    field_from_coeffs,
    project_div_free,
    sobolev_norm,
)
from eulerlab.lagrangian import jacobian


def random_divfree(grid, rng, band=None, s=2.6, norm=None, complex_part=0.0):
    """Random divergence-free zero-mean field, band-limited to max |k_i| <= band.

    If ``norm`` is given the field is scaled to that H^s norm. A nonzero
    ``complex_part`` adds an independent imaginary component (complexified
    field).
    """
    band = band if band is not None else grid.n // 8
    n = grid.n
    shape = (3, n, n, n)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if complex_part:
        raw = raw + complex_part * (
            1j * rng.standard_normal(shape) - rng.standard_normal(shape)
        ) * 1j
    k = grid.axis_modes
    keep = np.abs(k) <= band
    band_mask = np.einsum("i,j,k->ijk", keep, keep, keep)
    raw = raw * band_mask
    f = field_from_coeffs(grid, raw, hermitian=False)
    if complex_part == 0.0:
        # symmetrise: keep the real physical part only
        f = field_from_coeffs(grid, np.fft.fftn(f.values().real, axes=(-3, -2, -1)) / n**3)
    f = project_div_free(f)
    if norm is not None:
        current = sobolev_norm(f, s)
        f = f * (norm / current)
    return f


def invert_map_points(d, pts, tol=1e-13, max_iter=60):
    """Solve g(x) = y for x by the fixed point x <- y - d(x)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.complex128))
    x = pts.copy()
    for _ in range(max_iter):
        step = pts - eval_at_points(d.field, x)
        delta = np.max(np.abs(step - x))
        x = step
        if delta < tol:
            break
    return x


def eulerian_velocity_from_material(d, w0, s=2.6):
    """Recover the spatial velocity u from (d, w0) by brute-force composition.

    Steps: evaluate the transported vorticity J(x) w0(x) at x = g^-1(y) for
    every grid point y, project the interpolant, invert the curl spectrally.
    """
    from eulerlab._kernels import eval_modes

    grid = d.grid
    bundle = jacobian(d)
    ypts = grid.points().astype(np.complex128)
    xpts = invert_map_points(d, ypts)

    # evaluate all nine Jacobian entries and the vorticity at the preimages
    j_coeffs = np.fft.fftn(bundle.J, axes=(-3, -2, -1)).reshape((9,) + (grid.n,) * 3) / grid.n**3
    j_at = eval_modes(j_coeffs, grid.axis_modes, xpts).reshape(3, 3, -1)
    w_at = eval_at_points(w0, xpts).T  # (3, npts)
    w_e = np.einsum("ijp,jp->ip", j_at, w_at).reshape((3,) + (grid.n,) * 3)

    w_field = field_from_coeffs(
        grid, np.fft.fftn(w_e, axes=(-3, -2, -1)) / grid.n**3, hermitian=None
    )
    return curl_inv(project_div_free(w_field), tol=None, s=s)


def material_velocity_oracle(d, w0, s=2.6):
    """U = u o g with u built by :func:`eulerian_velocity_from_material`."""
    u = eulerian_velocity_from_material(d, w0, s=s)
    grid = d.grid
    gx = grid.points().astype(np.complex128) + eval_at_points(d.field, grid.points())
    vals = eval_at_points(u, gx).T.reshape((3,) + (grid.n,) * 3)
    return vals  # physical samples of the oracle U on the label grid


def fd_curl_of_composition(d, U, label_pts, h=1e-5):
    """Finite-difference curl of u(y) = U(g^-1(y)) at y = g(label_pts).

    Fully independent of the conjugated-operator algebra: only point
    evaluation, map inversion, and central differences.
    """
    label_pts = np.atleast_2d(np.asarray(label_pts, dtype=np.complex128))
    ypts = label_pts + eval_at_points(d.field, label_pts)

    def u_at(y):
        x = invert_map_points(d, y)
        return eval_at_points(U, x)

    npts = ypts.shape[0]
    grad_u = np.zeros((npts, 3, 3), dtype=np.complex128)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        grad_u[:, :, j] = (u_at(ypts + e) - u_at(ypts - e)) / (2 * h)
    curl = np.stack(
        [
            grad_u[:, 2, 1] - grad_u[:, 1, 2],
            grad_u[:, 0, 2] - grad_u[:, 2, 0],
            grad_u[:, 1, 0] - grad_u[:, 0, 1],
        ],
        axis=1,
    )
    return curl


def fd_div_of_composition(d, U, label_pts, h=1e-5):
    """Finite-difference divergence of u(y) = U(g^-1(y)) at y = g(label_pts)."""
    label_pts = np.atleast_2d(np.asarray(label_pts, dtype=np.complex128))
    ypts = label_pts + eval_at_points(d.field, label_pts)

    def u_at(y):
        x = invert_map_points(d, y)
        return eval_at_points(U, x)

    div = np.zeros(ypts.shape[0], dtype=np.complex128)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        div += (u_at(ypts + e)[:, j] - u_at(ypts - e)[:, j]) / (2 * h)
    return div
