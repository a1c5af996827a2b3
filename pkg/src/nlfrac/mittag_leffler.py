"""Two-parameter Mittag-Leffler evaluation on the negative real axis.

Evaluation strategy. Write w = |z|^(1/alpha). The Taylor series in double
precision loses roughly e^w of headroom to cancellation, so it is certified
only for small w; the negative-axis asymptotic expansion truncated at its
smallest term carries an error of order e^(-w) and is certified for large w.
Between the two, the same Taylor series is summed in exact (arbitrary
precision) arithmetic sized to the cancellation, which keeps every returned
value inside the requested tolerance. Each regime reports an error estimate
and the dispatcher escalates whenever an estimate misses the tolerance;
NonConvergent is raised only when no regime certifies within the configured
term budgets. `asymptotic_switch` marks where the asymptotic expansion is
attempted first; correctness never depends on it.

Orders alpha >= 2 and genuinely complex arguments are out of scope. alpha in
(1, 2) is accepted for evaluation; the solver layers restrict to (0, 1).
"""

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.special import rgamma

from .errors import (
    InvalidOrder,
    NonConvergent,
    PreconditionError,
    SingularAtZero,
    TailNotNegligible,
)
from . import _core

# Cancellation bands in w = |z|**(1/alpha): double series below _W_DOUBLE,
# asymptotic certified above _W_ASYM, exact-arithmetic series between.
_W_DOUBLE = 10.0
_W_ASYM = 45.0
_MP_DPS_CAP = 400


@dataclass(frozen=True)
class MLParams:
    """Order pair (alpha, sigma) of the two-parameter function."""

    alpha: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha > 0.0) or not math.isfinite(self.alpha):
            raise InvalidOrder(f"alpha must be positive, got {self.alpha}")
        if self.alpha >= 2.0:
            raise InvalidOrder("alpha >= 2 is outside the supported range")
        if not math.isfinite(self.sigma):
            raise InvalidOrder(f"sigma must be finite, got {self.sigma}")


@dataclass(frozen=True)
class MLEvalConfig:
    """Evaluation tolerances and term budgets."""

    series_tol: float = 1e-12
    max_terms: int = 500
    asymptotic_switch: float | None = None  # None: 5 * (1 + alpha)
    asymptotic_terms: int = 200

    def __post_init__(self):
        if not self.series_tol > 0.0:
            raise ValueError("series_tol must be positive")
        if self.max_terms < 8:
            raise ValueError("max_terms must be at least 8")
        if self.asymptotic_switch is not None and not self.asymptotic_switch > 0.0:
            raise ValueError("asymptotic_switch must be positive")
        if self.asymptotic_terms < 2:
            raise ValueError("asymptotic_terms must be at least 2")

    def switch_for(self, alpha):
        if self.asymptotic_switch is not None:
            return self.asymptotic_switch
        return 5.0 * (1.0 + alpha)


DEFAULT_CFG = MLEvalConfig()


def _ml_mp_series(alpha, sigma, z, max_terms):
    """Taylor series in arbitrary precision; returns float or None if the
    term budget was insufficient.

    Working precision scales with the cancellation size |z|^(1/alpha); the
    tail is cut once terms drop 22 digits below the sum (double accuracy
    only is required of the result). The budget is 4x the double-series
    budget because flat orders need proportionally more terms.
    """
    w = abs(z) ** (1.0 / alpha) if z != 0.0 else 0.0
    dps = min(int(0.4343 * w) + 35, _MP_DPS_CAP)
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        s = mp.mpf(sigma)
        zz = mp.mpf(z)
        total = mp.mpf(0)
        power = mp.mpf(1)
        tiny = mp.mpf(10) ** -22
        small_run = 0
        for k in range(4 * max_terms):
            term = power * mp.rgamma(a * k + s)
            total += term
            if abs(term) <= tiny * max(abs(total), mp.mpf(1e-300)):
                small_run += 1
                if small_run >= 2 and k >= 4:
                    return float(total)
            else:
                small_run = 0
            power *= zz
    return None


def ml_series_eval(params, z, cfg=DEFAULT_CFG):
    """Series-regime evaluation (double precision, exact-arithmetic escape).

    Exposed so the regime-agreement properties can compare it directly with
    ml_asymptotic_eval on overlapping arguments.
    """
    z = float(z)
    vals, errs = _core.ml_series(
        params.alpha, params.sigma, np.array([z]), cfg.series_tol, cfg.max_terms
    )
    if errs[0] <= cfg.series_tol:
        return float(vals[0])
    exact = _ml_mp_series(params.alpha, params.sigma, z, cfg.max_terms)
    if exact is None:
        raise NonConvergent(
            f"series for E_({params.alpha},{params.sigma}) at z={z} needs more "
            f"than max_terms={cfg.max_terms} terms"
        )
    return exact


def ml_asymptotic_eval(params, z, cfg=DEFAULT_CFG):
    """Asymptotic-regime evaluation for z < 0, truncated at the smallest term."""
    z = float(z)
    if z >= 0.0:
        raise PreconditionError("asymptotic expansion requires z < 0")
    vals, errs = _core.ml_asymptotic(
        params.alpha,
        params.sigma,
        np.array([-z]),
        cfg.series_tol,
        min(cfg.asymptotic_terms, cfg.max_terms),
    )
    if errs[0] > cfg.series_tol:
        raise NonConvergent(
            f"asymptotic expansion at z={z} stalls at relative error {errs[0]:.2e}"
        )
    return float(vals[0])


def ml_eval_array(params, z, cfg=DEFAULT_CFG):
    """Vectorized E_{alpha,sigma}(z) for real z <= small positive values."""
    alpha, sigma = params.alpha, params.sigma
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if not np.all(np.isfinite(z)):
        raise ValueError("arguments must be finite")
    out = np.empty_like(z)
    tol = cfg.series_tol

    if alpha == 1.0 and sigma == 1.0:
        return np.exp(z)

    neg = z < 0.0
    x = np.where(neg, -z, 0.0)
    with np.errstate(divide="ignore"):
        w = np.where(neg, x ** (1.0 / alpha), 0.0)
    switch = cfg.switch_for(alpha)

    asym_zone = neg & (w >= _W_ASYM)
    asym_try = neg & ~asym_zone & (w > _W_DOUBLE) & (x >= switch)
    series_zone = ~asym_zone & ~asym_try

    escalate = []  # indices that fall through to exact arithmetic

    idx = np.nonzero(series_zone)[0]
    if idx.size:
        vals, errs = _core.ml_series(alpha, sigma, z[idx], tol, cfg.max_terms)
        ok = errs <= tol
        out[idx[ok]] = vals[ok]
        escalate.extend(idx[~ok])

    idx = np.nonzero(asym_try | asym_zone)[0]
    if idx.size:
        vals, errs = _core.ml_asymptotic(
            alpha, sigma, x[idx], tol, min(cfg.asymptotic_terms, cfg.max_terms)
        )
        ok = errs <= tol
        out[idx[ok]] = vals[ok]
        escalate.extend(idx[~ok])

    for i in escalate:
        exact = _ml_mp_series(alpha, sigma, float(z[i]), cfg.max_terms)
        if exact is None:
            raise NonConvergent(
                f"no regime met tolerance {tol} at z={z[i]} within "
                f"max_terms={cfg.max_terms}"
            )
        out[i] = exact
    return out


def ml_eval(params, z, cfg=DEFAULT_CFG):
    """E_{alpha,sigma}(z) for real z with relative accuracy cfg.series_tol."""
    return float(ml_eval_array(params, float(z), cfg)[0])


def ml_kernel(alpha, lam, t, cfg=DEFAULT_CFG):
    """Relaxation kernel t^(alpha-1) * E_{alpha,alpha}(-lam * t^alpha).

    Integrable-singular at t = 0: callers integrate it, never sample there.
    Accepts scalar or array t > 0; positive on its whole domain.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidOrder(f"kernel requires 0 < alpha < 1, got {alpha}")
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t_arr == 0.0):
        raise SingularAtZero("kernel is singular at t = 0")
    if np.any(t_arr < 0.0):
        raise ValueError("t must be positive")
    vals = t_arr ** (alpha - 1.0) * ml_eval_array(
        MLParams(alpha, alpha), -lam * t_arr**alpha, cfg
    )
    return vals if np.ndim(t) else float(vals[0])


def ml_kernel_antiderivative(alpha, lam, t, cfg=DEFAULT_CFG):
    """Exact primitive of ml_kernel vanishing at t = 0.

    Equals (1 - E_alpha(-lam t^alpha)) / lam for lam > 0 and
    t^alpha / Gamma(alpha + 1) for lam = 0; nondecreasing in t.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidOrder(f"kernel requires 0 < alpha < 1, got {alpha}")
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t_arr < 0.0):
        raise ValueError("t must be nonnegative")
    if lam == 0.0:
        vals = t_arr**alpha / math.gamma(alpha + 1.0)
    else:
        e = ml_eval_array(MLParams(alpha, 1.0), -lam * t_arr**alpha, cfg)
        vals = (1.0 - e) / lam
    return vals if np.ndim(t) else float(vals[0])


def fit_bound_constants(alpha, z_grid, cfg=DEFAULT_CFG):
    """Extremal constants (M1, M2) with M1/(1+z) <= E_alpha(-z) <= M2/(1+z)
    on the given nonnegative grid (which must contain 0)."""
    if not 0.0 < alpha < 1.0:
        raise InvalidOrder(f"bound fit requires 0 < alpha < 1, got {alpha}")
    grid = np.asarray(z_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("z_grid must be nonempty")
    if np.any(grid < 0.0):
        raise ValueError("z_grid must be nonnegative")
    if not np.any(grid == 0.0):
        raise ValueError("z_grid must include 0")
    ratios = ml_eval_array(MLParams(alpha, 1.0), -grid, cfg) * (1.0 + grid)
    m1 = float(ratios.min())
    m2 = float(ratios.max())
    return m1, m2


def check_laplace_identity(alpha, lam, s, T_max, cfg=DEFAULT_CFG):
    """|quadrature of e^(-st) E_alpha(-lam t^alpha) on [0, T_max] minus
    s^(alpha-1)/(s^alpha + lam)|; test-only diagnostic."""
    from scipy.integrate import quad

    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if not s > lam ** (1.0 / alpha):
        raise PreconditionError(
            f"requires s > lam^(1/alpha) = {lam ** (1.0 / alpha):.6g}, got s={s}"
        )
    tail = math.exp(-s * T_max) / s  # |E| <= 1 on the negative axis
    if tail >= cfg.series_tol:
        raise TailNotNegligible(
            f"truncation tail bound {tail:.2e} exceeds series_tol={cfg.series_tol}"
        )
    params = MLParams(alpha, 1.0)

    def integrand(t):
        return math.exp(-s * t) * ml_eval(params, -lam * t**alpha, cfg)

    value, _ = quad(integrand, 0.0, T_max, limit=400)
    exact = s ** (alpha - 1.0) / (s**alpha + lam)
    return abs(value - exact)


def _rgamma(x):
    """Reciprocal gamma, exposed for internal reuse (entire, zero at poles)."""
    return float(rgamma(x))
