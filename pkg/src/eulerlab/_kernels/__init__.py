"""Hot-kernel dispatch: compiled extension when available, NumPy otherwise.

Set ``EULERLAB_PURE_PYTHON=1`` to force the fallback (useful for the
benchmark and for debugging). ``BACKEND`` records what was selected.
"""

import os

import numpy as np

from . import fallback

if os.environ.get("EULERLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = fallback.eval_modes
    BACKEND = "python"
else:
    try:
        from ._evalc import eval_modes as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback.eval_modes
        BACKEND = "python"


def _nonzero_band(coeffs):
    """Index arrays of the axis slabs that actually carry coefficients."""
    nz = coeffs != 0
    keep = []
    for axis in range(1, 4):
        other = tuple(i for i in range(4) if i != axis)
        idx = np.nonzero(nz.any(axis=other))[0]
        keep.append(idx)
    return keep


def eval_modes(coeffs, kmodes, points):
    """Evaluate sum_k c[comp, k] exp(i k . z) at complex points z.

    ``coeffs`` is (ncomp, n, n, n) in FFT layout, ``kmodes`` the (n,)
    wavenumbers shared by the three axes, ``points`` (npts, 3) complex.
    Empty slabs of the coefficient array are trimmed before dispatch, so
    band-limited fields cost what their band occupies.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
    if coeffs.ndim != 4:
        raise ValueError("coeffs must have shape (ncomp, n, n, n)")
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError("points must have shape (npts, 3)")
    kmodes = np.asarray(kmodes, dtype=np.float64)

    i1, i2, i3 = _nonzero_band(coeffs)
    if min(len(i1), len(i2), len(i3)) == 0:
        return np.zeros((coeffs.shape[0], points.shape[0]), dtype=np.complex128)
    sub = np.ascontiguousarray(coeffs[:, i1][:, :, i2][:, :, :, i3])
    return _impl(sub, kmodes[i1], kmodes[i2], kmodes[i3], points)
