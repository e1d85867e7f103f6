"""Fourier-space scalar and vector fields on the periodic box [0, 2*pi)^3.

Conventions, fixed once for the whole package:

* Wavevectors are integer triples k with each component in [-n/2, n/2),
  stored in FFT layout. The forward transform carries 1/n^3, so the
  coefficient of exp(i k.x) *is* its amplitude.
* Dealiasing keeps modes with every |k_i| <= dealias_fraction * n/2
  (the 2/3 rule by default) and is applied to products, never to linear
  operators.
* Physical-space integrals use the mean-value convention
  <f, g> = (2*pi)^-3 * integral(f * conj(g)), which makes Parseval read
  <f, f> = sum_k |f_hat(k)|^2 with no extra factors.
* Complexified fields are ordinary fields whose coefficients lack the
  Hermitian symmetry; every operation here accepts them.

Fields are immutable values: coefficient arrays are frozen on construction
and all operations return new fields, so instances are safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import eval_modes
from .errors import ValidationError

DEFAULT_SOBOLEV_INDEX = 2.6

SCALAR = "scalar"
VECTOR = "vector3"


@lru_cache(maxsize=None)
def _axis_modes(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.float64)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=None)
def _mode_mesh(n: int):
    k = _axis_modes(n)
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
    k2 = kx * kx + ky * ky + kz * kz
    for a in (kx, ky, kz, k2):
        a.flags.writeable = False
    return kx, ky, kz, k2


@lru_cache(maxsize=None)
def _dealias_mask(n: int, fraction: float) -> np.ndarray:
    kx, ky, kz, _ = _mode_mesh(n)
    cut = fraction * n / 2.0
    mask = (np.abs(kx) <= cut) & (np.abs(ky) <= cut) & (np.abs(kz) <= cut)
    mask.flags.writeable = False
    return mask


@lru_cache(maxsize=None)
def _grid_axis(n: int) -> np.ndarray:
    x = 2.0 * np.pi * np.arange(n) / n
    x.flags.writeable = False
    return x


@dataclass(frozen=True)
class GridSpec:
    """Uniform n^3 collocation grid with a dealiasing fraction."""

    n: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValidationError(f"grid size must be even and >= 8, got {self.n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValidationError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @property
    def axis_modes(self) -> np.ndarray:
        return _axis_modes(self.n)

    @property
    def mode_mesh(self):
        return _mode_mesh(self.n)

    @property
    def k_squared(self) -> np.ndarray:
        return _mode_mesh(self.n)[3]

    @property
    def dealias_mask(self) -> np.ndarray:
        return _dealias_mask(self.n, self.dealias_fraction)

    @property
    def axis_points(self) -> np.ndarray:
        return _grid_axis(self.n)

    def meshgrid(self):
        x = self.axis_points
        return np.meshgrid(x, x, x, indexing="ij")

    def points(self) -> np.ndarray:
        """All grid points as an (n^3, 3) real array."""
        xx, yy, zz = self.meshgrid()
        return np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity exponent for the (1+|k|^2)^(s/2) spectral weight."""

    s: float

    def __post_init__(self):
        if not math.isfinite(self.s) or self.s < 0:
            raise ValidationError(f"Sobolev index must be finite and >= 0, got {self.s}")


def _s_value(s) -> float:
    return s.s if isinstance(s, SobolevIndex) else float(s)


@dataclass(frozen=True)
class SpectralField:
    """Scalar or 3-vector field stored as complex Fourier amplitudes.

    ``coeffs`` has shape (n, n, n) for scalars, (3, n, n, n) for vectors,
    in FFT mode layout. ``hermitian`` asserts the field is real in physical
    space; complexified fields simply carry ``hermitian=False``.
    """

    grid: GridSpec
    coeffs: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        n = self.grid.n
        if arr.shape not in ((n, n, n), (3, n, n, n)):
            raise ValidationError(
                f"coefficient shape {arr.shape} does not match grid n={n}"
            )
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def rank(self) -> str:
        return SCALAR if self.coeffs.ndim == 3 else VECTOR

    @property
    def is_vector(self) -> bool:
        return self.coeffs.ndim == 4

    def values(self) -> np.ndarray:
        """Physical-space samples on the grid; real if the field is."""
        n3 = self.grid.n**3
        vals = np.fft.ifftn(self.coeffs, axes=(-3, -2, -1)) * n3
        return vals.real if self.hermitian else vals

    def mean(self):
        """Spatial mean = the k=0 amplitude (per component for vectors)."""
        m = self.coeffs[..., 0, 0, 0]
        return m.copy()

    def hermitian_defect(self) -> float:
        """Relative departure from f_hat(-k) = conj(f_hat(k))."""
        c = self.coeffs
        flipped = np.roll(c[..., ::-1, ::-1, ::-1], 1, axis=(-3, -2, -1))
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(c - np.conj(flipped))) / scale)

    def _with(self, coeffs, hermitian=None):
        return SpectralField(
            self.grid, coeffs, self.hermitian if hermitian is None else hermitian
        )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        if self.coeffs.shape != other.coeffs.shape:
            raise ValidationError("cannot add fields of different rank")
        return self._with(self.coeffs + other.coeffs, self.hermitian and other.hermitian)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        if self.coeffs.shape != other.coeffs.shape:
            raise ValidationError("cannot subtract fields of different rank")
        return self._with(self.coeffs - other.coeffs, self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "SpectralField":
        c = complex(scalar)
        real_factor = c.imag == 0.0
        return self._with(self.coeffs * c, self.hermitian and real_factor)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self._with(-self.coeffs)


def _check_same_grid(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValidationError("fields live on different grids")


# ---------------------------------------------------------------------------
# constructors


def field_from_values(grid: GridSpec, values) -> SpectralField:
    """Transform physical-space grid samples into a SpectralField."""
    vals = np.asarray(values)
    hermitian = not np.iscomplexobj(vals)
    coeffs = np.fft.fftn(vals, axes=(-3, -2, -1)) / grid.n**3
    return SpectralField(grid, coeffs, hermitian)


def field_from_coeffs(grid: GridSpec, coeffs, hermitian=None) -> SpectralField:
    """Wrap a coefficient array, detecting Hermitian symmetry if unspecified."""
    f = SpectralField(grid, coeffs, False)
    if hermitian is None:
        hermitian = f.hermitian_defect() <= 1e-13
    return SpectralField(grid, f.coeffs, hermitian)


def zero_field(grid: GridSpec, rank: str = SCALAR) -> SpectralField:
    n = grid.n
    shape = (n, n, n) if rank == SCALAR else (3, n, n, n)
    return SpectralField(grid, np.zeros(shape, dtype=np.complex128), True)


# ---------------------------------------------------------------------------
# linear operators (exact in spectral space)


def differentiate(f: SpectralField, kind: str) -> SpectralField:
    """Spectral gradient, divergence, or curl.

    grad: scalar -> vector, div: vector -> scalar, curl: vector -> vector;
    all via multiplication by i*k with the appropriate index structure.
    """
    kx, ky, kz, _ = f.grid.mode_mesh
    c = f.coeffs
    if kind == "grad":
        if f.is_vector:
            raise ValidationError("grad expects a scalar field")
        out = np.stack([1j * kx * c, 1j * ky * c, 1j * kz * c])
        return SpectralField(f.grid, out, f.hermitian)
    if kind == "div":
        if not f.is_vector:
            raise ValidationError("div expects a vector field")
        out = 1j * (kx * c[0] + ky * c[1] + kz * c[2])
        return SpectralField(f.grid, out, f.hermitian)
    if kind == "curl":
        if not f.is_vector:
            raise ValidationError("curl expects a vector field")
        out = np.stack(
            [
                1j * (ky * c[2] - kz * c[1]),
                1j * (kz * c[0] - kx * c[2]),
                1j * (kx * c[1] - ky * c[0]),
            ]
        )
        return SpectralField(f.grid, out, f.hermitian)
    raise ValidationError(f"unknown derivative kind {kind!r}")


def grad(f: SpectralField) -> SpectralField:
    return differentiate(f, "grad")


def div(f: SpectralField) -> SpectralField:
    return differentiate(f, "div")


def curl(f: SpectralField) -> SpectralField:
    return differentiate(f, "curl")


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k_squared * f.coeffs, f.hermitian)


def curl_inv(w: SpectralField, tol: float | None = 1e-10, s=DEFAULT_SOBOLEV_INDEX) -> SpectralField:
    """Invert the curl on divergence-free, mean-free vector fields.

    u_hat(k) = i k x w_hat(k) / |k|^2 with u_hat(0) = 0. The input contract
    (div w = 0 in H^(s-1), mean w = 0) is checked unless ``tol`` is None.
    """
    if not w.is_vector:
        raise ValidationError("curl_inv expects a vector field")
    if tol is not None:
        sv = _s_value(s)
        d = sobolev_norm(div(w), max(sv - 1.0, 0.0))
        if d > tol:
            raise ValidationError(f"curl_inv input is not divergence-free: |div w| = {d:.3e}")
        m = np.max(np.abs(w.mean()))
        if m > tol:
            raise ValidationError(f"curl_inv input has nonzero mean: {m:.3e}")
    kx, ky, kz, k2 = w.grid.mode_mesh
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    c = w.coeffs
    out = np.stack(
        [
            1j * (ky * c[2] - kz * c[1]) * inv,
            1j * (kz * c[0] - kx * c[2]) * inv,
            1j * (kx * c[1] - ky * c[0]) * inv,
        ]
    )
    return SpectralField(w.grid, out, w.hermitian)


def laplace_inv(r: SpectralField, tol: float | None = 1e-10) -> SpectralField:
    """Invert the Laplacian on mean-free scalars; result is mean-free."""
    if r.is_vector:
        raise ValidationError("laplace_inv expects a scalar field")
    if tol is not None:
        m = abs(r.mean())
        if m > tol:
            raise ValidationError(f"laplace_inv input has nonzero mean: {m:.3e}")
    k2 = r.grid.k_squared
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    return SpectralField(r.grid, -r.coeffs * inv, r.hermitian)


def project_div_free(u: SpectralField) -> SpectralField:
    """Leray projection onto divergence-free, mean-free vector fields."""
    if not u.is_vector:
        raise ValidationError("projection expects a vector field")
    kx, ky, kz, k2 = u.grid.mode_mesh
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    c = u.coeffs
    kdotu = kx * c[0] + ky * c[1] + kz * c[2]
    out = np.stack(
        [c[0] - kx * kdotu * inv, c[1] - ky * kdotu * inv, c[2] - kz * kdotu * inv]
    )
    out[:, 0, 0, 0] = 0.0
    return SpectralField(u.grid, out, u.hermitian)


# ---------------------------------------------------------------------------
# raw-array transforms shared by the pseudo-spectral pipelines


def phys_from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Physical samples from amplitude coefficients (batched over leading axes)."""
    n = coeffs.shape[-1]
    return np.fft.ifftn(coeffs, axes=(-3, -2, -1)) * n**3


def coeffs_from_phys(values: np.ndarray) -> np.ndarray:
    """Amplitude coefficients from physical samples (batched over leading axes)."""
    n = values.shape[-1]
    return np.fft.fftn(values, axes=(-3, -2, -1)) / n**3


# ---------------------------------------------------------------------------
# norms, products, evaluation


def sobolev_norm(f: SpectralField, s=DEFAULT_SOBOLEV_INDEX) -> float:
    """H^s norm: sqrt(sum_k (1+|k|^2)^s |f_hat(k)|^2), summed over components."""
    sv = _s_value(s)
    w = (1.0 + f.grid.k_squared) ** sv
    mag2 = np.abs(f.coeffs) ** 2
    if f.is_vector:
        mag2 = mag2.sum(axis=0)
    return float(np.sqrt(np.sum(w * mag2)))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask, f.hermitian)


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product via physical space, dealiased on the way back.

    Exact for band-limited inputs whose product fits the retained band;
    scalar*scalar and scalar*vector are supported.
    """
    _check_same_grid(f, g)
    if f.is_vector and g.is_vector:
        raise ValidationError("pointwise product of two vector fields is not defined")
    if f.is_vector and not g.is_vector:
        f, g = g, f
    vals = f.values() * g.values()
    prod = field_from_values(f.grid, vals)
    return dealias(prod)


def eval_at_points(f: SpectralField, pts) -> np.ndarray:
    """Analytic continuation of f: sum_k f_hat(k) exp(i k . z) by direct sum.

    ``pts`` is one complex 3-vector or an (npts, 3) array. Returns (npts,)
    for scalars and (npts, 3) for vectors; agrees with grid values at real
    grid points.
    """
    pts_arr = np.atleast_2d(np.asarray(pts, dtype=np.complex128))
    coeffs = f.coeffs if f.is_vector else f.coeffs[np.newaxis]
    out = eval_modes(coeffs, f.grid.axis_modes, pts_arr)
    return out.T if f.is_vector else out[0]
