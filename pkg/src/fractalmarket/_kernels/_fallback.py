"""Pure-Python/numpy implementations of the hot kernels.

Semantics match fractalmarket._kernels._core exactly; the sequential SDE
recursions degrade to interpreted loops here.
"""

import numpy as np

IMPLEMENTATION = "fallback"


def stieltjes_running(y, x):
    """Running left-point sum I_k = sum_{i<k} y_i * (x_{i+1} - x_i), I_0 = 0."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(len(x), dtype=np.float64)
    out[0] = 0.0
    np.cumsum(y[:-1] * np.diff(x), out=out[1:])
    return out


def sum_squared_increments(x):
    """sum (x_{i+1} - x_i)^2."""
    d = np.diff(np.asarray(x, dtype=np.float64))
    return float(np.dot(d, d))


def cross_increment_sum(w, z):
    """sum (w_{i+1} - w_i) * (z_{i+1} - z_i)."""
    dw = np.diff(np.asarray(w, dtype=np.float64))
    dz = np.diff(np.asarray(z, dtype=np.float64))
    return float(np.dot(dw, dz))


def heston_full_truncation(v0, kappa, theta, xi, dt, db):
    """Full-truncation Euler for dv = kappa(theta - v+)dt + xi sqrt(v+) dB.

    Returns (v, drift_abs_integral, diffusion_sq_integral) where the integrals
    accumulate |kappa(theta - v+)| dt and xi^2 v+ dt at left endpoints.
    """
    dt = np.asarray(dt, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    n = len(dt)
    v = np.empty(n + 1, dtype=np.float64)
    v[0] = v0
    drift_abs = 0.0
    diff_sq = 0.0
    for i in range(n):
        vp = v[i] if v[i] > 0.0 else 0.0
        drift = kappa * (theta - vp)
        v[i + 1] = v[i] + drift * dt[i] + xi * np.sqrt(vp) * db[i]
        drift_abs += abs(drift) * dt[i]
        diff_sq += xi * xi * vp * dt[i]
    return v, float(drift_abs), float(diff_sq)


def ou_euler(x0, kappa, theta, beta, dt, db):
    """Euler-Maruyama for dX = kappa(theta - X)dt + beta dB.

    Returns (x, drift_abs_integral, diffusion_sq_integral).
    """
    dt = np.asarray(dt, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    n = len(dt)
    x = np.empty(n + 1, dtype=np.float64)
    x[0] = x0
    drift_abs = 0.0
    diff_sq = 0.0
    for i in range(n):
        drift = kappa * (theta - x[i])
        x[i + 1] = x[i] + drift * dt[i] + beta * db[i]
        drift_abs += abs(drift) * dt[i]
        diff_sq += beta * beta * dt[i]
    return x, float(drift_abs), float(diff_sq)


def euler_price(y0, nu, dt, sigma, dz):
    """Euler recursion Y_{i+1} = Y_i (1 + nu dt_i + sigma_i dz_i).

    Returns (y, first_nonpositive_index); the index is -1 when the recursion
    stays positive, otherwise stepping stops there and the tail is nan.
    """
    dt = np.asarray(dt, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    dz = np.asarray(dz, dtype=np.float64)
    n = len(dt)
    y = np.full(n + 1, np.nan, dtype=np.float64)
    y[0] = y0
    for i in range(n):
        nxt = y[i] * (1.0 + nu * dt[i] + sigma[i] * dz[i])
        y[i + 1] = nxt
        if not nxt > 0.0:
            return y, i + 1
    return y, -1
