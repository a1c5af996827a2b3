# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics match nlfrac._core._kernels_py element for element; the test suite
cross-checks the two backends.
"""

import math

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, M_PI, exp, fabs, lgamma, log, pow, sqrt
from scipy.special.cython_special cimport rgamma

cnp.import_array()

cdef double _EPS = 1.1e-16


def ml_series(double alpha, double sigma, object z_in, double tol, int max_terms):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.empty(n)
    cdef Py_ssize_t i
    cdef int k, used, small_run
    cdef double zz, total, powz, max_abs, term, at, scale, cancel, tail

    for i in range(n):
        zz = z[i]
        total = 0.0
        powz = 1.0
        max_abs = 0.0
        small_run = 0
        used = max_terms
        for k in range(max_terms):
            term = powz * rgamma(alpha * k + sigma)
            at = fabs(term)
            total += term
            if at > max_abs:
                max_abs = at
            scale = fabs(total)
            if scale < 1e-300:
                scale = 1e-300
            if at <= 0.01 * tol * scale:
                small_run += 1
            else:
                small_run = 0
            if small_run >= 2 and k >= 4:
                used = k + 1
                break
            powz *= zz
        scale = fabs(total)
        if scale < 1e-300:
            scale = 1e-300
        cancel = max_abs * _EPS * sqrt(used + 1.0) * 2.0
        if used == max_terms:
            tail = max_abs
        else:
            tail = 0.01 * tol * scale
        vals[i] = total
        errs[i] = (cancel + tail) / scale
    return vals, errs


cdef double _asym_log_envelope(double alpha, double sigma, int m, double log_x) nogil:
    # sine-free log bound on |term m|; dropping the sine of the reflection
    # formula avoids the spurious dips where alpha*m lands next to a pole
    cdef double u = sigma - alpha * m
    cdef double g
    if u >= 0.5:
        g = rgamma(u)
        if g == 0.0:
            return -INFINITY
        return -m * log_x + log(fabs(g))
    return -m * log_x + lgamma(1.0 - u) - log(M_PI)


def ml_asymptotic(double alpha, double sigma, object x_in, double tol, int max_terms):
    # truncation at the minimum of the magnitude envelope; see the python
    # twin for the rationale
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.empty(n)
    cdef Py_ssize_t i
    cdef int m, used
    cdef bint have_est
    cdef double xx, log_x, powx, total, kept, ln_best, est_ln, term, ln_env, scale

    for i in range(n):
        xx = x[i]
        log_x = log(xx)
        powx = 1.0
        total = 0.0
        kept = 0.0
        ln_best = INFINITY
        est_ln = 0.0
        have_est = 0
        used = 0
        for m in range(1, max_terms + 1):
            powx /= xx
            term = (1.0 if m % 2 == 1 else -1.0) * powx * rgamma(sigma - alpha * m)
            ln_env = _asym_log_envelope(alpha, sigma, m, log_x)
            total += term
            used = m
            if ln_env < ln_best:
                ln_best = ln_env
                kept = total
            elif m >= 3 and ln_env > ln_best + log(100.0):
                est_ln = ln_best
                have_est = 1
                break
            scale = fabs(total)
            if scale < 1e-300:
                scale = 1e-300
            if m >= 2 and ln_env <= log(tol * scale) - 3.0:
                kept = total
                est_ln = ln_env
                have_est = 1
                break
        if not have_est:
            est_ln = ln_best
        scale = fabs(kept)
        if scale < 1e-300:
            scale = 1e-300
        if est_ln > 700.0:
            est_ln = 700.0
        vals[i] = kept
        errs[i] = exp(est_ln) / scale + _EPS * sqrt(used + 1.0)
    return vals, errs


def conv_weight_sum(object density_in, object weights_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(density_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n + 1)
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(1, n + 1):
        acc = 0.0
        for k in range(i):
            acc += d[k] * w[i - 1 - k]
        out[i] = acc
    return out


def l1_ivp(double alpha, double dt, double lam, object kvals_in, object fvals_in, double y0):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kv = np.ascontiguousarray(kvals_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fv = np.ascontiguousarray(fvals_in, dtype=np.float64)
    cdef Py_ssize_t n_nodes = kv.shape[0]
    cdef Py_ssize_t N = n_nodes - 1
    cdef double c = pow(dt, -alpha) / math.gamma(2.0 - alpha)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] B = np.empty(N + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.empty(n_nodes)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.empty(max(N, 1))
    cdef Py_ssize_t i, k
    cdef double hist, denom

    B[0] = 0.0
    for i in range(1, N + 1):
        B[i] = pow(i, 1.0 - alpha) - pow(i - 1.0, 1.0 - alpha)

    y[0] = y0
    for i in range(1, n_nodes):
        hist = 0.0
        for k in range(i - 1):
            hist += d[k] * B[i - k]
        denom = c + lam + kv[i]
        if denom <= 0.0:
            raise ZeroDivisionError(
                f"nonpositive implicit denominator at node {i}: {denom}"
            )
        y[i] = (fv[i] + c * y[i - 1] - c * hist) / denom
        d[i - 1] = y[i] - y[i - 1]
    return y
