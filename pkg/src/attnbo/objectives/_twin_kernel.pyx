# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit-Euler loop for the three-zone twin.

Must stay operation-for-operation identical to ``_twin_fallback.integrate``
(the extension is built with -ffp-contract=off so no FMAs are fused).
"""

import numpy as np

from libc.math cimport isfinite


def integrate(const double[::1] alpha, const double[::1] beta, const double[::1] lam,
              double w_amb, double t_mean, double nu,
              const double[::1] amb, const double[::1] solar, const double[:, ::1] occ,
              double t0, double w0, double dt_h, Py_ssize_t stride, Py_ssize_t n_samples):
    cdef Py_ssize_t n_steps = amb.shape[0]
    out_arr = np.empty((6, n_samples), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double T[3]
    cdef double w[3]
    cdef Py_ssize_t i, n, k = 0
    cdef Py_ssize_t bad = -1
    cdef double ta
    for i in range(3):
        T[i] = t0
        w[i] = w0
    with nogil:
        for n in range(n_steps):
            if n % stride == 0 and k < n_samples:
                for i in range(3):
                    out[i, k] = T[i]
                    out[3 + i, k] = w[i]
                    if not (isfinite(T[i]) and isfinite(w[i])):
                        bad = n
                k += 1
                if bad >= 0:
                    break
            ta = t_mean + amb[n]
            for i in range(3):
                T[i] = T[i] + dt_h * (alpha[i] * (ta - T[i]) + beta[i] * occ[i, n] + solar[n])
                w[i] = w[i] + dt_h * (nu * (w_amb - w[i]) + lam[i] * occ[i, n])
    return out_arr, bad
