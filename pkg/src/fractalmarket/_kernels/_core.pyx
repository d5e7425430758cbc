# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled counterparts of _fallback; same contracts, C loops.

import numpy as np

from libc.math cimport fabs, sqrt

IMPLEMENTATION = "compiled"


def stieltjes_running(double[::1] y, double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc = 0.0
    cdef Py_ssize_t i
    out[0] = 0.0
    for i in range(n - 1):
        acc += y[i] * (x[i + 1] - x[i])
        out[i + 1] = acc
    return out_arr


def sum_squared_increments(double[::1] x):
    cdef double acc = 0.0
    cdef double d
    cdef Py_ssize_t i
    for i in range(x.shape[0] - 1):
        d = x[i + 1] - x[i]
        acc += d * d
    return acc


def cross_increment_sum(double[::1] w, double[::1] z):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(w.shape[0] - 1):
        acc += (w[i + 1] - w[i]) * (z[i + 1] - z[i])
    return acc


def heston_full_truncation(double v0, double kappa, double theta, double xi,
                           double[::1] dt, double[::1] db):
    cdef Py_ssize_t n = dt.shape[0]
    v_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double drift_abs = 0.0
    cdef double diff_sq = 0.0
    cdef double vp, drift
    cdef Py_ssize_t i
    v[0] = v0
    for i in range(n):
        vp = v[i] if v[i] > 0.0 else 0.0
        drift = kappa * (theta - vp)
        v[i + 1] = v[i] + drift * dt[i] + xi * sqrt(vp) * db[i]
        drift_abs += fabs(drift) * dt[i]
        diff_sq += xi * xi * vp * dt[i]
    return v_arr, drift_abs, diff_sq


def ou_euler(double x0, double kappa, double theta, double beta,
             double[::1] dt, double[::1] db):
    cdef Py_ssize_t n = dt.shape[0]
    x_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double drift_abs = 0.0
    cdef double diff_sq = 0.0
    cdef double drift
    cdef Py_ssize_t i
    x[0] = x0
    for i in range(n):
        drift = kappa * (theta - x[i])
        x[i + 1] = x[i] + drift * dt[i] + beta * db[i]
        drift_abs += fabs(drift) * dt[i]
        diff_sq += beta * beta * dt[i]
    return x_arr, drift_abs, diff_sq


def euler_price(double y0, double nu, double[::1] dt,
                double[::1] sigma, double[::1] dz):
    cdef Py_ssize_t n = dt.shape[0]
    y_arr = np.full(n + 1, np.nan, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double nxt
    cdef Py_ssize_t i
    y[0] = y0
    for i in range(n):
        nxt = y[i] * (1.0 + nu * dt[i] + sigma[i] * dz[i])
        y[i + 1] = nxt
        if not nxt > 0.0:
            return y_arr, i + 1
    return y_arr, -1
