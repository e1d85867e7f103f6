"""Compiled kernel vs NumPy fallback: both must agree to roundoff."""

import numpy as np
import pytest

from eulerlab import _kernels
from eulerlab._kernels import fallback


def _random_inputs(rng, ncomp=3, n=12, npts=17):
    coeffs = rng.standard_normal((ncomp, n, n, n)) + 1j * rng.standard_normal(
        (ncomp, n, n, n)
    )
    k = np.fft.fftfreq(n, d=1.0 / n)
    pts = rng.standard_normal((npts, 3)) + 0.1j * rng.standard_normal((npts, 3))
    return coeffs, k, pts


def test_backend_reported():
    assert _kernels.BACKEND in ("compiled", "python")


def test_dispatch_matches_fallback():
    rng = np.random.default_rng(42)
    coeffs, k, pts = _random_inputs(rng)
    got = _kernels.eval_modes(coeffs, k, pts)
    expected = fallback.eval_modes(coeffs, k, k, k, pts)
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(got - expected)) < 1e-12 * scale


def test_band_trimming_is_transparent():
    rng = np.random.default_rng(43)
    n = 16
    coeffs = np.zeros((1, n, n, n), dtype=complex)
    # sparse band: only |k_i| <= 2 populated
    for a in (-2, -1, 0, 1, 2):
        for b in (-2, 0, 2):
            coeffs[0, a, b, 1] = rng.standard_normal() + 1j * rng.standard_normal()
    k = np.fft.fftfreq(n, d=1.0 / n)
    pts = rng.standard_normal((9, 3)) + 0.05j * rng.standard_normal((9, 3))
    got = _kernels.eval_modes(coeffs, k, pts)
    expected = fallback.eval_modes(coeffs, k, k, k, pts)
    assert np.max(np.abs(got - expected)) < 1e-12 * max(np.max(np.abs(expected)), 1.0)


def test_zero_field_shortcut():
    n = 8
    coeffs = np.zeros((2, n, n, n), dtype=complex)
    k = np.fft.fftfreq(n, d=1.0 / n)
    out = _kernels.eval_modes(coeffs, k, np.zeros((4, 3), dtype=complex))
    assert out.shape == (2, 4)
    assert np.all(out == 0)


def test_closed_form_plane_wave():
    n = 8
    coeffs = np.zeros((1, n, n, n), dtype=complex)
    coeffs[0, 1, 0, n - 2] = 2.0  # 2 * exp(i(x1 - 2 x3))
    k = np.fft.fftfreq(n, d=1.0 / n)
    z = np.array([[0.3 + 0.2j, 0.0, -0.7 + 0.1j]])
    got = _kernels.eval_modes(coeffs, k, z)[0, 0]
    expected = 2.0 * np.exp(1j * (z[0, 0] - 2.0 * z[0, 2]))
    assert abs(got - expected) < 1e-13


@pytest.mark.skipif(_kernels.BACKEND != "compiled", reason="extension not built")
def test_compiled_and_fallback_same_results():
    from eulerlab._kernels import _evalc

    rng = np.random.default_rng(44)
    coeffs, k, pts = _random_inputs(rng, ncomp=2, n=10, npts=23)
    a = _evalc.eval_modes(coeffs, k, k, k, pts)
    b = fallback.eval_modes(coeffs, k, k, k, pts)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))
