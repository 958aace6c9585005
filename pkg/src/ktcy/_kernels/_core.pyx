# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels for the Monge-Ampere Newton loop.

Single fused passes over the grid; avoids the temporaries the numpy
fallback allocates. Semantics must match ktcy._kernels._numpy exactly.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def residual_values(const double[:, ::1] fxx, const double[:, ::1] fyy,
                    const double[:, ::1] fxy, const double[:, ::1] target):
    cdef Py_ssize_t n0 = fxx.shape[0], n1 = fxx.shape[1], i, j
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n0):
            for j in range(n1):
                out[i, j] = ((1.0 + fxx[i, j]) * (1.0 + fyy[i, j])
                             - fxy[i, j] * fxy[i, j] - target[i, j])
    return out_arr


def linear_apply(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] d,
                 const double[:, ::1] vxx, const double[:, ::1] vyy, const double[:, ::1] vxy):
    cdef Py_ssize_t n0 = a.shape[0], n1 = a.shape[1], i, j
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n0):
            for j in range(n1):
                out[i, j] = (b[i, j] * vxx[i, j] + a[i, j] * vyy[i, j]
                             - 2.0 * d[i, j] * vxy[i, j])
    return out_arr


def trial_mins(const double[:, ::1] fxx, const double[:, ::1] fyy, const double[:, ::1] fxy,
               const double[:, ::1] dxx, const double[:, ::1] dyy, const double[:, ::1] dxy,
               double s):
    cdef Py_ssize_t n0 = fxx.shape[0], n1 = fxx.shape[1], i, j
    cdef double a, b, d, nu
    cdef double min_a = 1e300, min_b = 1e300, min_nu = 1e300
    with nogil:
        for i in range(n0):
            for j in range(n1):
                a = 1.0 + fxx[i, j] + s * dxx[i, j]
                b = 1.0 + fyy[i, j] + s * dyy[i, j]
                d = fxy[i, j] + s * dxy[i, j]
                nu = a * b - d * d
                if a < min_a:
                    min_a = a
                if b < min_b:
                    min_b = b
                if nu < min_nu:
                    min_nu = nu
    return min_a, min_b, min_nu


def trial_residual_sup(const double[:, ::1] fxx, const double[:, ::1] fyy, const double[:, ::1] fxy,
                       const double[:, ::1] dxx, const double[:, ::1] dyy, const double[:, ::1] dxy,
                       const double[:, ::1] target, double s):
    cdef Py_ssize_t n0 = fxx.shape[0], n1 = fxx.shape[1], i, j
    cdef double a, b, d, r, sup = 0.0
    with nogil:
        for i in range(n0):
            for j in range(n1):
                a = 1.0 + fxx[i, j] + s * dxx[i, j]
                b = 1.0 + fyy[i, j] + s * dyy[i, j]
                d = fxy[i, j] + s * dxy[i, j]
                r = a * b - d * d - target[i, j]
                if r < 0.0:
                    r = -r
                if r > sup:
                    sup = r
    return sup


def sup_abs(const double[:, ::1] values):
    cdef Py_ssize_t n0 = values.shape[0], n1 = values.shape[1], i, j
    cdef double v, sup = 0.0
    with nogil:
        for i in range(n0):
            for j in range(n1):
                v = values[i, j]
                if v < 0.0:
                    v = -v
                if v > sup:
                    sup = v
    return sup
