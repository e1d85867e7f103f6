"""NumPy fallback for the off-grid evaluation kernel.

Evaluates sum_k c[comp, k] * exp(i k . z) at arbitrary complex points by
factoring the phase over the three axes and contracting one axis at a time.
The axis-1 contraction is a plain matrix product, so BLAS does the heavy
lifting; points are chunked to bound the size of the intermediates.
"""

import numpy as np


def eval_modes(coeffs, k1, k2, k3, points, chunk=1024):
    """Evaluate trigonometric polynomials at complex points.

    Parameters
    ----------
    coeffs : (ncomp, m1, m2, m3) complex ndarray
        Fourier amplitudes, one block per component.
    k1, k2, k3 : (m1,), (m2,), (m3,) float ndarrays
        Integer wavenumbers along each axis (matching the coeff layout).
    points : (npts, 3) complex ndarray
        Evaluation points; imaginary parts give analytic continuation.

    Returns
    -------
    (ncomp, npts) complex ndarray
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.complex128)
    ncomp, m1, m2, m3 = coeffs.shape
    npts = points.shape[0]
    out = np.empty((ncomp, npts), dtype=np.complex128)
    flat = coeffs.reshape(ncomp * m1 * m2, m3)
    for lo in range(0, npts, chunk):
        pts = points[lo:lo + chunk]
        ph1 = np.exp(1j * np.outer(pts[:, 0], k1))
        ph2 = np.exp(1j * np.outer(pts[:, 1], k2))
        ph3 = np.exp(1j * np.outer(pts[:, 2], k3))
        t = (flat @ ph3.T).reshape(ncomp, m1, m2, -1)
        t = np.einsum("cabp,pb->cap", t, ph2)
        out[:, lo:lo + pts.shape[0]] = np.einsum("cap,pa->cp", t, ph1)
    return out
