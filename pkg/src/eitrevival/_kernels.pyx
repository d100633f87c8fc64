# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interference kernel.

Evaluates ``sum_j c_j exp(i (h0 + j) theta)`` and its squared modulus over
an array of phases.
The loop releases the GIL so callers can evaluate disjoint time ranges from
several threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def interference_factor(const double[::1] theta, const double[::1] coeffs, long h0):
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t k = coeffs.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t i, j
    cdef double th, zr, zi, wr, wi, tmp, re, im, c
    with nogil:
        for i in range(n):
            th = theta[i]
            zr = cos(th)
            zi = sin(th)
            wr = cos(h0 * th)
            wi = sin(h0 * th)
            re = 0.0
            im = 0.0
            for j in range(k):
                c = coeffs[j]
                if c != 0.0:
                    re += c * wr
                    im += c * wi
                tmp = wr * zr - wi * zi
                wi = wr * zi + wi * zr
                wr = tmp
            res[i] = re * re + im * im
    return out


def interference_sum(const double[::1] theta, const double[::1] coeffs, long h0):
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t k = coeffs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, j
    cdef double th, zr, zi, wr, wi, tmp, re, im, c
    with nogil:
        for i in range(n):
            th = theta[i]
            zr = cos(th)
            zi = sin(th)
            wr = cos(h0 * th)
            wi = sin(h0 * th)
            re = 0.0
            im = 0.0
            for j in range(k):
                c = coeffs[j]
                if c != 0.0:
                    re += c * wr
                    im += c * wi
                tmp = wr * zr - wi * zi
                wi = wr * zi + wi * zr
                wr = tmp
            res[i] = re + 1j * im
    return out
