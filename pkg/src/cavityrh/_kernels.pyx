# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for map evaluation and coefficient convolutions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, atan2, hypot

cnp.import_array()


def charge_sums(x, Z, Q, double complex z0):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=complex)
    cdef const double complex[::1] Zv = np.ascontiguousarray(Z, dtype=complex)
    cdef const double[::1] Qv = np.ascontiguousarray(Q, dtype=float)
    cdef Py_ssize_t n = xv.shape[0], m = Zv.shape[0], i, k
    slog_arr = np.empty(n, dtype=complex)
    sinv_arr = np.empty(n, dtype=complex)
    cdef double complex[::1] slog = slog_arr
    cdef double complex[::1] sinv = sinv_arr
    cdef double complex d0, dk, r, acc_l, acc_i, inv0
    cdef double q
    for i in range(n):
        d0 = xv[i] - z0
        inv0 = 1.0 / d0
        acc_l = 0.0
        acc_i = 0.0
        for k in range(m):
            dk = xv[i] - Zv[k]
            r = dk * inv0
            q = Qv[k]
            acc_l = acc_l + q * (log(hypot(r.real, r.imag)) + 1j * atan2(r.imag, r.real))
            acc_i = acc_i + q * (1.0 / dk - inv0)
        slog[i] = acc_l
        sinv[i] = acc_i
    return slog_arr, sinv_arr


def horner(c, x):
    cdef const double complex[::1] cv = np.ascontiguousarray(c, dtype=complex)
    x = np.ascontiguousarray(x, dtype=complex)
    cdef const double[::1] xr = np.ascontiguousarray(x.real)
    cdef const double[::1] xi = np.ascontiguousarray(x.imag)
    cdef Py_ssize_t n = xr.shape[0], m = cv.shape[0], i, j
    re_arr = np.zeros(n)
    im_arr = np.zeros(n)
    cdef double[::1] re = re_arr
    cdef double[::1] im = im_arr
    cdef double t, cr, ci
    # coefficient loop outside so the point loop vectorises
    for j in range(m - 1, -1, -1):
        cr = cv[j].real
        ci = cv[j].imag
        for i in range(n):
            t = re[i] * xr[i] - im[i] * xi[i] + cr
            im[i] = re[i] * xi[i] + im[i] * xr[i] + ci
            re[i] = t
    return re_arr + 1j * im_arr


def conj_correlate(u, a, Py_ssize_t jlo, Py_ssize_t jhi):
    cdef const double complex[::1] uv = np.ascontiguousarray(u, dtype=complex)
    cdef const double complex[::1] av = np.ascontiguousarray(a, dtype=complex)
    cdef Py_ssize_t M = (uv.shape[0] - 1) // 2, N = (av.shape[0] - 1) // 2
    cdef Py_ssize_t j, m, lo, hi
    out_arr = np.empty(jhi - jlo + 1, dtype=complex)
    cdef double complex[::1] out = out_arr
    cdef double sr, si, ur, ui, ar, ai
    for j in range(jlo, jhi + 1):
        sr = 0.0
        si = 0.0
        # keep m + j + M inside [0, 2M]
        lo = -N if -N > -M - j else -M - j
        hi = N if N < M - j else M - j
        for m in range(lo, hi + 1):
            ur = uv[m + j + M].real
            ui = uv[m + j + M].imag
            ar = av[m + N].real
            ai = av[m + N].imag
            sr = sr + ur * ar + ui * ai
            si = si + ui * ar - ur * ai
        out[j - jlo] = sr + 1j * si
    return out_arr
