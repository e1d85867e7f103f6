# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel: evaluate truncated Fourier series at complex points.

Same contract as `eulerlab._kernels.fallback.eval_modes`. Points are
processed in chunks with the phase tables transposed to point-major layout,
so every inner loop is an independent fused multiply-add over the chunk --
explicit real/imaginary arithmetic keeps those loops vectorisable. Chunks
are distributed over threads when OpenMP is available.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, exp, sin
from libc.stdlib cimport free, malloc
from libc.string cimport memset

cnp.import_array()

ctypedef double complex dcplx

DEF CHUNK = 128


cdef inline void _phase_table(
    double* out_re, double* out_im, const double* kmodes, Py_ssize_t m,
    const dcplx* z, Py_ssize_t P, Py_ssize_t stride,
) nogil:
    # out[a*P + p] = exp(i * k_a * z_p), z complex; tables are point-major
    cdef Py_ssize_t a, p
    cdef double k, zr, zi, damp
    for p in range(P):
        zr = (<const double*> &z[p * stride])[0]
        zi = (<const double*> &z[p * stride])[1]
        for a in range(m):
            k = kmodes[a]
            damp = exp(-k * zi)
            out_re[a * P + p] = damp * cos(k * zr)
            out_im[a * P + p] = damp * sin(k * zr)


def eval_modes(coeffs_in, k1_in, k2_in, k3_in, points_in):
    coeffs_arr = np.ascontiguousarray(coeffs_in, dtype=np.complex128)
    points_arr = np.ascontiguousarray(points_in, dtype=np.complex128)
    k1_arr = np.ascontiguousarray(k1_in, dtype=np.float64)
    k2_arr = np.ascontiguousarray(k2_in, dtype=np.float64)
    k3_arr = np.ascontiguousarray(k3_in, dtype=np.float64)

    cdef dcplx[:, :, :, ::1] coeffs = coeffs_arr
    cdef dcplx[:, ::1] points = points_arr
    cdef double[::1] k1 = k1_arr
    cdef double[::1] k2 = k2_arr
    cdef double[::1] k3 = k3_arr

    cdef Py_ssize_t ncomp = coeffs.shape[0]
    cdef Py_ssize_t m1 = coeffs.shape[1]
    cdef Py_ssize_t m2 = coeffs.shape[2]
    cdef Py_ssize_t m3 = coeffs.shape[3]
    cdef Py_ssize_t npts = points.shape[0]

    out_arr = np.zeros((ncomp, npts), dtype=np.complex128)
    cdef dcplx[:, ::1] out = out_arr
    cdef Py_ssize_t nchunks = (npts + CHUNK - 1) // CHUNK
    cdef int failed = 0

    cdef Py_ssize_t chunk, p0, P, c, a, b, d, p
    cdef double* buf
    cdef double* ph1r
    cdef double* ph1i
    cdef double* ph2r
    cdef double* ph2i
    cdef double* ph3r
    cdef double* ph3i
    cdef double* sr
    cdef double* si
    cdef double* ar
    cdef double* ai
    cdef double zr, zi, wr, wi
    cdef const dcplx* crow

    with nogil:
        for chunk in prange(nchunks, schedule="static"):
            p0 = chunk * CHUNK
            P = npts - p0
            if P > CHUNK:
                P = CHUNK
            buf = <double*> malloc((2 * (m1 + m2 + m3) + 4) * P * sizeof(double))
            if buf == NULL:
                failed = 1
            else:
                ph1r = buf
                ph1i = ph1r + m1 * P
                ph2r = ph1i + m1 * P
                ph2i = ph2r + m2 * P
                ph3r = ph2i + m2 * P
                ph3i = ph3r + m3 * P
                sr = ph3i + m3 * P
                si = sr + P
                ar = si + P
                ai = ar + P
                _phase_table(ph1r, ph1i, &k1[0], m1, &points[p0, 0], P, 3)
                _phase_table(ph2r, ph2i, &k2[0], m2, &points[p0, 1], P, 3)
                _phase_table(ph3r, ph3i, &k3[0], m3, &points[p0, 2], P, 3)
                for c in range(ncomp):
                    for a in range(m1):
                        memset(ar, 0, P * sizeof(double))
                        memset(ai, 0, P * sizeof(double))
                        for b in range(m2):
                            memset(sr, 0, P * sizeof(double))
                            memset(si, 0, P * sizeof(double))
                            crow = &coeffs[c, a, b, 0]
                            for d in range(m3):
                                zr = (<const double*> &crow[d])[0]
                                zi = (<const double*> &crow[d])[1]
                                if zr == 0.0 and zi == 0.0:
                                    continue
                                for p in range(P):
                                    sr[p] += zr * ph3r[d * P + p] - zi * ph3i[d * P + p]
                                    si[p] += zr * ph3i[d * P + p] + zi * ph3r[d * P + p]
                            for p in range(P):
                                wr = ph2r[b * P + p]
                                wi = ph2i[b * P + p]
                                ar[p] += wr * sr[p] - wi * si[p]
                                ai[p] += wr * si[p] + wi * sr[p]
                        for p in range(P):
                            wr = ph1r[a * P + p]
                            wi = ph1i[a * P + p]
                            (<double*> &out[c, p0 + p])[0] += wr * ar[p] - wi * ai[p]
                            (<double*> &out[c, p0 + p])[1] += wr * ai[p] + wi * ar[p]
                free(buf)

    if failed:
        raise MemoryError("could not allocate evaluation buffers")
    return out_arr
