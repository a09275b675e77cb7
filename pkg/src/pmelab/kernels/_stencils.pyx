# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit conservative stepper (hot loop of the solver).

Arithmetic mirrors pmelab.kernels._reference expression for expression.
"""

import numpy as np

from libc.math cimport pow


cdef inline void _fill_power(double[::1] u, double[::1] w, double m) noexcept nogil:
    cdef Py_ssize_t i, n = u.shape[0]
    if m == 1.0:
        for i in range(n):
            w[i] = u[i]
    elif m == 2.0:
        for i in range(n):
            w[i] = u[i] * u[i]
    else:
        for i in range(n):
            w[i] = pow(u[i], m)


def pme_steps_1d(double[::1] u, double m, double nu, Py_ssize_t nsteps, bint zero_flux):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k
    cdef double[::1] w = np.empty(n)
    cdef double[::1] lap = np.empty(n)
    with nogil:
        for k in range(nsteps):
            _fill_power(u, w, m)
            for i in range(1, n - 1):
                lap[i] = (w[i + 1] + w[i - 1]) - 2.0 * w[i]
            if zero_flux:
                lap[0] = w[1] - w[0]
                lap[n - 1] = w[n - 2] - w[n - 1]
            else:
                lap[0] = w[1] - 2.0 * w[0]
                lap[n - 1] = w[n - 2] - 2.0 * w[n - 1]
            for i in range(n):
                u[i] = u[i] + nu * lap[i]


def pme_steps_2d(double[:, ::1] u, double m, double nu, Py_ssize_t nsteps, bint zero_flux):
    cdef Py_ssize_t n0 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double[:, ::1] w = np.empty((n0, n1))
    cdef double[:, ::1] lap = np.empty((n0, n1))
    cdef double wl, wr, wd, wu_
    with nogil:
        for k in range(nsteps):
            if m == 1.0:
                for i in range(n0):
                    for j in range(n1):
                        w[i, j] = u[i, j]
            elif m == 2.0:
                for i in range(n0):
                    for j in range(n1):
                        w[i, j] = u[i, j] * u[i, j]
            else:
                for i in range(n0):
                    for j in range(n1):
                        w[i, j] = pow(u[i, j], m)
            for i in range(n0):
                for j in range(n1):
                    if i == 0:
                        wd = w[1, j] - w[0, j] if zero_flux else w[1, j] - 2.0 * w[0, j]
                    elif i == n0 - 1:
                        wd = (w[n0 - 2, j] - w[n0 - 1, j] if zero_flux
                              else w[n0 - 2, j] - 2.0 * w[n0 - 1, j])
                    else:
                        wd = (w[i + 1, j] + w[i - 1, j]) - 2.0 * w[i, j]
                    if j == 0:
                        wu_ = w[i, 1] - w[i, 0] if zero_flux else w[i, 1] - 2.0 * w[i, 0]
                    elif j == n1 - 1:
                        wu_ = (w[i, n1 - 2] - w[i, n1 - 1] if zero_flux
                               else w[i, n1 - 2] - 2.0 * w[i, n1 - 1])
                    else:
                        wu_ = (w[i, j + 1] + w[i, j - 1]) - 2.0 * w[i, j]
                    lap[i, j] = wd + wu_
            for i in range(n0):
                for j in range(n1):
                    u[i, j] = u[i, j] + nu * lap[i, j]
