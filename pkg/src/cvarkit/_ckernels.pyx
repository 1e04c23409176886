# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the recursive kernels in ``_pykernels``."""
import numpy as np


def simulate_var(intercept, coefs, eps, init):
    cdef double[::1] c = np.ascontiguousarray(intercept, dtype=np.float64)
    cdef double[:, :, ::1] a = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef double[:, :, ::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef double[:, ::1] x0 = np.ascontiguousarray(init, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t n_paths = e.shape[0]
    cdef Py_ssize_t n_steps = e.shape[1]
    if e.shape[2] != n or c.shape[0] != n or x0.shape[0] != p or x0.shape[1] != n:
        raise ValueError("inconsistent kernel dimensions")
    result = np.empty((n_paths, p + n_steps, n))
    cdef double[:, :, ::1] out = result
    cdef Py_ssize_t b, t, lag, i, j
    cdef double acc
    with nogil:
        for b in range(n_paths):
            for t in range(p):
                for i in range(n):
                    out[b, t, i] = x0[t, i]
            for t in range(n_steps):
                for i in range(n):
                    acc = c[i] + e[b, t, i]
                    for lag in range(p):
                        for j in range(n):
                            acc = acc + a[lag, i, j] * out[b, p + t - lag - 1, j]
                    out[b, p + t, i] = acc
    return result


def ma_coefficients(coefs, Py_ssize_t horizons):
    cdef double[:, :, ::1] a = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    result = np.zeros((horizons + 1, n, n))
    cdef double[:, :, ::1] phi = result
    cdef Py_ssize_t h, lag, i, j, m, top
    cdef double acc
    with nogil:
        for i in range(n):
            phi[0, i, i] = 1.0
        for h in range(1, horizons + 1):
            top = h if h < p else p
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for lag in range(1, top + 1):
                        for m in range(n):
                            acc = acc + a[lag - 1, i, m] * phi[h - lag, m, j]
                    phi[h, i, j] = acc
    return result
