# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Signatures match ``qbd2d._kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def natural_iteration(double[:, ::1] down, double[:, ::1] local, double[:, ::1] up,
                      double tol, long max_iter, double blowup=1e12):
    """X <- down + local X + up X^2 from X = 0.

    Returns ``(X, iterations, status)`` with status 0 converged, 1 iteration
    cap reached, 2 an entry exceeded ``blowup``.
    """
    cdef Py_ssize_t n = down.shape[0]
    cdef Py_ssize_t i, j, k
    cdef long it
    cdef double acc, diff, big, v
    X_arr = np.zeros((n, n))
    Y_arr = np.zeros((n, n))
    T_arr = np.zeros((n, n))
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] Y = Y_arr
    cdef double[:, ::1] T = T_arr
    cdef int status = 1
    it = 0
    while it < max_iter:
        it += 1
        # T = local + up X
        for i in range(n):
            for j in range(n):
                acc = local[i, j]
                for k in range(n):
                    acc = acc + up[i, k] * X[k, j]
                T[i, j] = acc
        diff = 0.0
        big = 0.0
        for i in range(n):
            for j in range(n):
                acc = down[i, j]
                for k in range(n):
                    acc = acc + T[i, k] * X[k, j]
                Y[i, j] = acc
                v = fabs(acc - X[i, j])
                if v > diff:
                    diff = v
                if acc > big:
                    big = acc
        X, Y = Y, X
        if big > blowup:
            status = 2
            break
        if diff < tol:
            status = 0
            break
    return np.asarray(X).copy(), it, status


def perron_power(double[:, ::1] C, double tol, long max_iter, double shift=1.0):
    """Power iteration on C + shift*I with Collatz-Wielandt stopping.

    Returns ``(rho, vector, iterations, converged)``; ``rho`` is the Perron
    root of ``C`` itself.
    """
    cdef Py_ssize_t n = C.shape[0]
    cdef Py_ssize_t i, k
    cdef long it = 0
    cdef double acc, lo, hi, r, norm
    x_arr = np.full(n, 1.0 / n)
    y_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double[::1] y = y_arr
    cdef bint converged = False
    lo = 0.0
    hi = 0.0
    while it < max_iter:
        it += 1
        norm = 0.0
        lo = 1e308
        hi = 0.0
        for i in range(n):
            acc = shift * x[i]
            for k in range(n):
                acc = acc + C[i, k] * x[k]
            y[i] = acc
            norm = norm + acc
            if x[i] > 0.0:
                r = acc / x[i]
                if r < lo:
                    lo = r
                if r > hi:
                    hi = r
            else:
                lo = 0.0
        for i in range(n):
            x[i] = y[i] / norm
        if hi - lo <= tol * hi:
            converged = True
            break
    return 0.5 * (lo + hi) - shift, np.asarray(x).copy(), it, converged


def gauss_seidel_sweep(const long[::1] indptr, const long[::1] indices,
                       const double[::1] data, const double[::1] outrate,
                       double[::1] x):
    """One in-place sweep of x_i <- sum_j x_j P_ji / sum_{j != i} P_ij.

    ``indptr/indices/data`` hold the off-diagonal part of P^T in CSR form.
    Returns the largest relative change of an entry.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, p
    cdef double acc, new, old, rel, worst = 0.0
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + data[p] * x[indices[p]]
        new = acc / outrate[i]
        old = x[i]
        x[i] = new
        if new > 0.0:
            rel = fabs(new - old) / new
            if rel > worst:
                worst = rel
    return worst
