# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched detection kernels; contracts match ``_fallback``."""

from libc.math cimport exp, log

import numpy as np

BACKEND = "native"


cdef inline double _sqabs(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def decoupled_ml_batch(double complex[:, ::1] y, double complex[:, ::1] h,
                       unsigned char[:, ::1] saps, double[::1] scales,
                       double complex[::1] points):
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1]
    cdef Py_ssize_t E = saps.shape[0], M = points.shape[0]
    cdef Py_ssize_t i, e, l, m, best_m
    cdef double r2, bin_min, metric, best_metric, yl2
    cdef double complex d

    entry_out = np.empty(n, dtype=np.int64)
    sym_out = np.full((n, L), -1, dtype=np.int8)
    metric_out = np.empty(n, dtype=np.float64)
    cdef long long[::1] entry_v = entry_out
    cdef signed char[:, ::1] sym_v = sym_out
    cdef double[::1] metric_v = metric_out

    sym_scratch = np.empty((E, L), dtype=np.int8)
    cdef signed char[:, ::1] scratch = sym_scratch
    sp_arr = np.asarray(scales)[:, None] * np.asarray(points)[None, :]
    cdef double complex[:, ::1] sp = np.ascontiguousarray(sp_arr)

    cdef Py_ssize_t best_e
    for i in range(n):
        best_e = 0
        best_metric = 0.0
        for e in range(E):
            metric = 0.0
            for l in range(L):
                if saps[e, l]:
                    bin_min = 0.0
                    best_m = 0
                    for m in range(M):
                        d = y[i, l] - h[i, l] * sp[e, m]
                        r2 = _sqabs(d)
                        if m == 0 or r2 < bin_min:
                            bin_min = r2
                            best_m = m
                    metric += bin_min
                    scratch[e, l] = <signed char> best_m
                else:
                    yl2 = _sqabs(y[i, l])
                    metric += yl2
                    scratch[e, l] = -1
            if e == 0 or metric < best_metric:
                best_metric = metric
                best_e = e
        entry_v[i] = best_e
        metric_v[i] = best_metric
        for l in range(L):
            sym_v[i, l] = scratch[best_e, l]
    return entry_out, sym_out, metric_out


def llr_batch(double complex[:, ::1] y, double complex[:, ::1] h,
              unsigned char[:, ::1] saps, double[::1] scales,
              double complex[::1] points, double noise_var):
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1]
    cdef Py_ssize_t E = saps.shape[0], M = points.shape[0]
    cdef Py_ssize_t i, e, l, m, best_m, best_e
    cdef double r2, z, zmax, acc, score, best_score, bin_min
    cdef double complex d

    entry_out = np.empty(n, dtype=np.int64)
    sym_out = np.full((n, L), -1, dtype=np.int8)
    score_out = np.empty(n, dtype=np.float64)
    cdef long long[::1] entry_v = entry_out
    cdef signed char[:, ::1] sym_v = sym_out
    cdef double[::1] score_v = score_out

    sym_scratch = np.empty((E, L), dtype=np.int8)
    cdef signed char[:, ::1] scratch = sym_scratch
    z_scratch = np.empty(M, dtype=np.float64)
    cdef double[::1] zbuf = z_scratch
    sp_arr = np.asarray(scales)[:, None] * np.asarray(points)[None, :]
    cdef double complex[:, ::1] sp = np.ascontiguousarray(sp_arr)

    for i in range(n):
        best_e = 0
        best_score = 0.0
        for e in range(E):
            score = 0.0
            for l in range(L):
                if saps[e, l]:
                    zmax = 0.0
                    bin_min = 0.0
                    best_m = 0
                    for m in range(M):
                        d = y[i, l] - h[i, l] * sp[e, m]
                        r2 = _sqabs(d)
                        z = -r2 / noise_var
                        zbuf[m] = z
                        if m == 0 or z > zmax:
                            zmax = z
                        if m == 0 or r2 < bin_min:
                            bin_min = r2
                            best_m = m
                    acc = 0.0
                    for m in range(M):
                        acc += exp(zbuf[m] - zmax)
                    score += zmax + log(acc) + _sqabs(y[i, l]) / noise_var
                    scratch[e, l] = <signed char> best_m
                else:
                    scratch[e, l] = -1
            if e == 0 or score > best_score:
                best_score = score
                best_e = e
        entry_v[i] = best_e
        score_v[i] = best_score
        for l in range(L):
            sym_v[i, l] = scratch[best_e, l]
    return entry_out, sym_out, score_out


def psape_batch(double complex[:, ::1] y, double complex[:, ::1] h,
                long long[::1] entries, unsigned char[:, ::1] saps,
                double[::1] scales, double complex[::1] points):
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1]
    cdef Py_ssize_t M = points.shape[0]
    cdef Py_ssize_t i, l, m, best_m, e
    cdef double r2, bin_min, metric, scale
    cdef double complex d, sp

    sym_out = np.full((n, L), -1, dtype=np.int8)
    metric_out = np.empty(n, dtype=np.float64)
    cdef signed char[:, ::1] sym_v = sym_out
    cdef double[::1] metric_v = metric_out

    for i in range(n):
        e = <Py_ssize_t> entries[i]
        scale = scales[e]
        metric = 0.0
        for l in range(L):
            if saps[e, l]:
                bin_min = 0.0
                best_m = 0
                for m in range(M):
                    sp = scale * points[m]
                    d = y[i, l] - h[i, l] * sp
                    r2 = _sqabs(d)
                    if m == 0 or r2 < bin_min:
                        bin_min = r2
                        best_m = m
                metric += bin_min
                sym_v[i, l] = <signed char> best_m
            else:
                metric += _sqabs(y[i, l])
        metric_v[i] = metric
    return sym_out, metric_out
