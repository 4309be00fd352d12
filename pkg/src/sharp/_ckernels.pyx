# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`sharp._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, floor

cnp.import_array()


def blend_frequencies(const double[::1] thetas, const double[::1] ratios,
                      double s, double lo, double hi):
    cdef Py_ssize_t n = thetas.shape[0]
    cdef Py_ssize_t i
    cdef double g, r, width = hi - lo
    cdef bint degenerate = width < 1e-9
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] h = out
    for i in range(n):
        r = ratios[i]
        if degenerate:
            g = 1.0 if r >= hi else 0.0
        elif r < lo:
            g = 0.0
        elif r > hi:
            g = 1.0
        else:
            g = (r - lo) / width
        h[i] = (1.0 - g) * (thetas[i] / s) + g * thetas[i]
    return out


def rotate_pairs(const double[:, ::1] values, const double[:, ::1] angles):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t npairs = angles.shape[1]
    cdef Py_ssize_t i, j
    cdef double a, b, c, sn
    out = np.empty((n, 2 * npairs), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        for j in range(npairs):
            c = cos(angles[i, j])
            sn = sin(angles[i, j])
            a = values[i, 2 * j]
            b = values[i, 2 * j + 1]
            o[i, 2 * j] = a * c - b * sn
            o[i, 2 * j + 1] = a * sn + b * c
    return out


def pair_scores(const double[::1] coef_cos, const double[::1] coef_sin,
                const double[::1] thetas, const double[::1] offsets):
    cdef Py_ssize_t m = offsets.shape[0]
    cdef Py_ssize_t npairs = thetas.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, phi
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(m):
        acc = 0.0
        for j in range(npairs):
            phi = thetas[j] * offsets[i]
            acc += coef_cos[j] * cos(phi) + coef_sin[j] * sin(phi)
        o[i] = acc
    return out


def radial_sums(const double[:, ::1] power, double cy, double cx, Py_ssize_t nbins):
    cdef Py_ssize_t h = power.shape[0]
    cdef Py_ssize_t w = power.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double dy, dx
    sums = np.zeros(nbins, dtype=np.float64)
    counts = np.zeros(nbins, dtype=np.int64)
    cdef double[::1] sv = sums
    cdef cnp.int64_t[::1] cv = counts
    for i in range(h):
        dy = i - cy
        for j in range(w):
            dx = j - cx
            k = <Py_ssize_t>floor(sqrt(dy * dy + dx * dx) + 0.5)
            if k < nbins:
                sv[k] += power[i, j]
                cv[k] += 1
    return sums, counts
