"""Pure-numpy implementations of the hot kernels.

Mirrors nlfrac._core._kernels_cy; selected at import time when the compiled
extension is unavailable or NLFRAC_PURE_PYTHON is set.
"""

import math

import numpy as np
from scipy.special import rgamma

_EPS = 1.1e-16


def ml_series(alpha, sigma, z, tol, max_terms):
    """Taylor series sum_k z^k / Gamma(alpha*k + sigma) in double precision.

    Returns (values, error_estimates). The estimate combines the last term
    against the running cancellation bound max|term| * n * eps, both relative
    to the computed sum; the caller decides whether to accept.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    total = np.zeros(n)
    powz = np.ones(n)
    max_abs = np.zeros(n)
    prev_small = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    terms_used = np.full(n, max_terms)

    for k in range(max_terms):
        g = rgamma(alpha * k + sigma)
        term = powz * g
        at = np.abs(term)
        total = np.where(active, total + term, total)
        max_abs = np.where(active, np.maximum(max_abs, at), max_abs)
        scale = np.maximum(np.abs(total), 1e-300)
        small = at <= 0.01 * tol * scale
        done = active & small & prev_small & (k >= 4)
        terms_used = np.where(done, k + 1, terms_used)
        active &= ~done
        prev_small = small
        if not active.any():
            break
        powz = powz * z

    scale = np.maximum(np.abs(total), 1e-300)
    cancel = max_abs * _EPS * np.sqrt(terms_used + 1.0) * 2.0
    tail = np.where(active, max_abs, 0.01 * tol * scale)
    est = (cancel + tail) / scale
    return total, est


def _asym_log_envelope(alpha, sigma, m, log_x):
    """Sine-free log bound on the magnitude of asymptotic term m.

    |1/Gamma(u)| = Gamma(1-u) |sin(pi u)| / pi <= Gamma(1-u)/pi for u < 1/2;
    dropping the sine avoids the spurious dips where alpha*m lands next to a
    pole, which is what makes the envelope safe for truncation decisions.
    """
    u = sigma - alpha * m
    if u >= 0.5:
        g = rgamma(u)
        if g == 0.0:
            return -np.inf
        return -m * log_x + math.log(abs(g))
    return -m * log_x + math.lgamma(1.0 - u) - math.log(math.pi)


def ml_asymptotic(alpha, sigma, x, tol, max_terms):
    """Negative-axis expansion sum_m (-1)^(m-1) x^(-m) / Gamma(sigma - alpha*m).

    x holds |z| for arguments z = -x < 0. Terms at poles of Gamma vanish via
    the reciprocal gamma. All truncation decisions (running minimum, early
    exit, divergence onset) use the sine-free magnitude envelope so that
    near-pole suppressed terms neither stop the scan nor shrink the error
    estimate; the sum is frozen at the envelope minimum and that envelope
    value is the reported error.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    vals = np.empty(n)
    errs = np.empty(n)
    for i in range(n):
        xx = float(x[i])
        log_x = math.log(xx)
        total = 0.0
        kept = 0.0
        ln_best = math.inf
        est_ln = None
        powx = 1.0
        used = 0
        for m in range(1, max_terms + 1):
            powx /= xx
            g = rgamma(sigma - alpha * m)
            term = (1.0 if m % 2 == 1 else -1.0) * powx * g
            ln_env = _asym_log_envelope(alpha, sigma, m, log_x)
            total += term
            used = m
            if ln_env < ln_best:
                ln_best = ln_env
                kept = total
            elif m >= 3 and ln_env > ln_best + math.log(100.0):
                est_ln = ln_best  # divergence onset; freeze at the minimum
                break
            scale = max(abs(total), 1e-300)
            if m >= 2 and ln_env <= math.log(tol * scale) - 3.0:
                kept = total
                est_ln = ln_env
                break
        if est_ln is None:
            est_ln = ln_best
        scale = max(abs(kept), 1e-300)
        vals[i] = kept
        errs[i] = math.exp(min(est_ln, 700.0)) / scale + _EPS * math.sqrt(used + 1.0)
    return vals, errs


def conv_weight_sum(density, weights):
    """out[i] = sum_{k<i} density[k] * weights[i-1-k], out[0] = 0.

    density has length N (per-step values), weights length N (weights[m-1]
    is the kernel mass at lag m steps); returns length N+1.
    """
    density = np.asarray(density, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = density.shape[0]
    out = np.empty(n + 1)
    out[0] = 0.0
    out[1:] = np.convolve(density, weights)[:n]
    return out


def l1_ivp(alpha, dt, lam, kvals, fvals, y0):
    """March the scalar fractional relaxation problem with the L1 stencil.

    Solves d^alpha y + lam*y + k(t)*y = f(t), y(0) = y0, treating the newest
    node implicitly. kvals and fvals are node arrays of length N+1.
    """
    kvals = np.asarray(kvals, dtype=np.float64)
    fvals = np.asarray(fvals, dtype=np.float64)
    n_nodes = kvals.shape[0]
    N = n_nodes - 1
    c = dt ** (-alpha) / math.gamma(2.0 - alpha)
    m = np.arange(0, N + 1, dtype=np.float64)
    B = np.empty(N + 1)
    B[0] = 0.0
    B[1:] = m[1:] ** (1.0 - alpha) - m[:-1] ** (1.0 - alpha)

    y = np.empty(n_nodes)
    y[0] = y0
    d = np.empty(N)  # increments y[k+1]-y[k]
    for i in range(1, n_nodes):
        if i >= 2:
            hist = float(np.dot(d[: i - 1], B[2 : i + 1][::-1]))
        else:
            hist = 0.0
        denom = c + lam + kvals[i]
        if denom <= 0.0:
            raise ZeroDivisionError(
                f"nonpositive implicit denominator at node {i}: {denom}"
            )
        y[i] = (fvals[i] + c * y[i - 1] - c * hist) / denom
        d[i - 1] = y[i] - y[i - 1]
    return y
