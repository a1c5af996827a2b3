"""Norms, exponent schedules, and explicit-bound verification.

All named constants here are empirical fits over declared grids; none is
assumed sharp. The bound checks are sufficient-condition diagnostics: a
passing margin verifies the inequality on the computed solution, a failing
applicability flag means the hypothesis (not the solution) is out of range.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import InvalidExponent
from .fracops import GridFunction, beta_fn
from .forward import ModalTrajectory, constant_phi_trajectory
from .mittag_leffler import DEFAULT_CFG, fit_bound_constants
from .spectral import scale_norm


# {{{ exponent schedules

@dataclass
class ExponentSchedule:
    """Exponent family for the regularity and contraction estimates.

    Family A ties (p, q, s, r, p', q') together; family B uses the ordered
    split q < p with hatted exponents. Unset members skip their checks.
    """

    family: str
    p: float
    q: float
    s: float | None = None
    r: float | None = None
    p_prime: float | None = None
    q_prime: float | None = None
    p_hat: float | None = None
    q_hat: float | None = None
    r_hat: float | None = None


@dataclass
class ScheduleReport:
    valid: bool
    checks: dict
    violations: list


def _close(a, b):
    return abs(a - b) <= 1e-12


def validate_schedule(sched, alpha):
    """Per-constraint validation; skipped constraints (missing members) do
    not fail the schedule."""
    checks = {}
    violations = []

    def record(name, ok, detail):
        checks[name] = ok
        if ok is False:
            violations.append(f"{name}: {detail}")

    p, q = sched.p, sched.q
    aq = alpha * q
    if sched.family == "A":
        record("A1", 0.0 < p < 1.0 and 0.0 < q < 1.0 and _close(p + q, 1.0),
               f"need 0<p,q<1 with p+q=1, got p={p}, q={q}")
        if sched.r is None:
            record("A2", None, "r not set")
        else:
            record("A2", 0.0 < sched.r <= (1.0 - aq) / aq,
                   f"need 0 < r <= (1-aq)/aq = {(1.0 - aq) / aq:.6g}, got r={sched.r}")
        if sched.s is None:
            record("A3", None, "s not set")
        else:
            lim = min(aq, 1.0 - aq)
            record("A3", 0.0 < sched.s < lim,
                   f"need 0 < s < min(aq, 1-aq) = {lim:.6g}, got s={sched.s}")
        if sched.p_prime is None:
            record("A4", None, "p' not set")
        else:
            ok = (
                sched.s is not None
                and 0.0 < sched.p_prime <= p - sched.s / alpha
                and sched.q_prime is not None
                and _close(sched.p_prime + sched.q_prime, 1.0)
            )
            record("A4", ok,
                   f"need 0 < p' <= p - s/alpha with q' = 1 - p', got p'={sched.p_prime}, "
                   f"q'={sched.q_prime}")
        if sched.q_hat is None:
            record("A5", None, "q-hat not set")
        else:
            lim = min(p, q, (sched.s or 0.0) / alpha)
            ok = 0.0 <= sched.q_hat <= lim
            if sched.p_hat is not None:
                ok = ok and _close(sched.p_hat + sched.q_hat, 1.0)
            if sched.r_hat is not None:
                ok = ok and 0.0 < sched.r_hat <= (1.0 - alpha) / alpha
            record("A5", ok,
                   f"need 0 <= q-hat <= min(p, q, s/alpha) = {lim:.6g} and "
                   f"0 < r-hat <= (1-alpha)/alpha, got q-hat={sched.q_hat}, "
                   f"r-hat={sched.r_hat}")
    elif sched.family == "B":
        record("B1", 0.0 < q < p < 1.0 and _close(p + q, 1.0),
               f"need 0<q<p<1 with p+q=1, got p={p}, q={q}")
        if sched.p_prime is None:
            record("B2", None, "p' not set")
        else:
            aqp = alpha * (sched.q_prime if sched.q_prime is not None else 1.0 - sched.p_prime)
            ok = (
                0.0 < sched.p_prime < p
                and sched.q_prime is not None
                and _close(sched.p_prime + sched.q_prime, 1.0)
                and (sched.r is None or 0.0 < sched.r <= (1.0 - aqp) / aqp)
            )
            record("B2", ok,
                   f"need 0 < p' < p, q'=1-p', 0 < r <= (1-aq')/(aq'), got "
                   f"p'={sched.p_prime}, q'={sched.q_prime}, r={sched.r}")
        if sched.p_prime is None:
            record("B3", None, "p' not set")
        else:
            record("B3", 0.0 < sched.p_prime <= p - q,
                   f"need 0 < p' <= p - q = {p - q:.6g}, got p'={sched.p_prime}")
        if sched.q_hat is None:
            record("B4", None, "q-hat not set")
        else:
            ok = 0.0 <= sched.q_hat < q
            if sched.p_hat is not None:
                ok = ok and _close(sched.p_hat + sched.q_hat, 1.0)
            if sched.r_hat is not None:
                ok = ok and 0.0 < sched.r_hat <= (1.0 - alpha) / alpha
            record("B4", ok,
                   f"need 0 <= q-hat < q with p-hat = 1 - q-hat and "
                   f"0 < r-hat <= (1-alpha)/alpha, got q-hat={sched.q_hat}")
    else:
        raise ValueError(f"unknown exponent family {sched.family!r}")

    valid = all(v is not False for v in checks.values())
    return ScheduleReport(valid=valid, checks=checks, violations=violations)


# }}}


# {{{ constants

@dataclass
class ContractionConstants:
    """Empirically fitted constants of the solution and contraction bounds.

    chi0 is populated only when Theta_T < 1; the fit grid for (M1, M2) is
    recorded so refinement checks can reuse it.
    """

    M1: float
    M2: float
    C_kappa: float
    C_omega: float
    M0: float | None = None
    Theta_T: float | None = None
    chi0: float | None = None
    Phi: float | None = None
    Phi1: float | None = None
    fit_grid: np.ndarray | None = field(default=None, repr=False)


def estimate_Ckappa(mult):
    """Largest multiplier magnitude over the truncation."""
    return float(np.max(np.abs(mult.psi)))


def compute_theta(consts, alpha, q, T, upsilon, k_norm, lambda1, beta, p):
    """Contraction estimate of the successive-approximation map.

    Theta(T) = M2 / lambda_1^(beta p) * (T^(aq) Y + C_k + C_k M2 Y T^(aq)
    + T^(aq) ||k|| + M2 C_k T^(aq) ||k||) * B(aq, 1-aq); increasing in T with
    limit (M2 / lambda_1^(beta p)) C_k B(aq, 1-aq) at T -> 0+.
    """
    aq = alpha * q
    taq = T**aq
    M2, Ck = consts.M2, consts.C_kappa
    core = (
        taq * upsilon
        + Ck
        + Ck * M2 * upsilon * taq
        + taq * k_norm
        + M2 * Ck * taq * k_norm
    )
    return M2 / lambda1 ** (beta * p) * core * beta_fn(aq, 1.0 - aq)


def compute_phi_constant(consts, alpha, q, T, lambda1, beta, p):
    """Largest of the five operator constants entering the weighted bound."""
    aq = alpha * q
    taq = T**aq
    M2, Ck = consts.M2, consts.C_kappa
    lbp = lambda1 ** (beta * p)
    return max(
        Ck * M2 * taq / lambda1 ** (2.0 * beta * p),
        taq * M2 / lbp,
        Ck * M2**2 * taq / lbp,
        Ck * M2**2 / lbp,
        M2 / lbp,
    )


def compute_phi1_constant(consts, alpha, q_prime, s, T, lambda1, beta, p, p_prime):
    """Dual-scale analogue of compute_phi_constant (primed exponents)."""
    aqp = alpha * q_prime
    M2, Ck = consts.M2, consts.C_kappa
    lbpp = lambda1 ** (beta * p_prime)
    return max(
        M2 * T ** (aqp + s) / lbpp,
        Ck * M2 * T**aqp / lbpp,
        Ck * M2**2 * T ** (aqp + s) / lbpp,
        Ck * M2**2 / lbpp,
        M2 / lambda1 ** (beta * p),
    )


def fit_constants(spec, mult, p, q, upsilon=None, z_grid=None,
                  s=None, p_prime=None, cfg=DEFAULT_CFG):
    """Assemble the ContractionConstants record for a problem instance.

    The self-referential amplitude constant M0 = A + B*M0 is resolved in
    closed form; it is left unset when B >= 1. C_omega is the truncated-basis
    embedding constant max_j lambda_j^(-beta p).
    """
    alpha, beta, T = spec.alpha, spec.beta, spec.T
    lam1 = float(spec.basis.eigenvalues[0])
    if z_grid is None:
        top = max(2.0 * float(spec.spectral_lambdas()[-1]) * T**alpha, 10.0)
        z_grid = np.concatenate([[0.0], np.geomspace(1e-3, top, 80)])
    M1, M2 = fit_bound_constants(alpha, z_grid, cfg)
    Ck = estimate_Ckappa(mult)
    if upsilon is None:
        upsilon = getattr(spec.source, "lipschitz", 0.0)
    k_norm = float(np.max(np.abs(spec.k_values())))
    consts = ContractionConstants(
        M1=M1, M2=M2, C_kappa=Ck, C_omega=lam1 ** (-beta * p),
        fit_grid=np.asarray(z_grid, dtype=np.float64),
    )
    consts.Theta_T = compute_theta(consts, alpha, q, T, upsilon, k_norm, lam1, beta, p)
    aq = alpha * q
    taq = T**aq
    lbp = lam1 ** (beta * p)
    A = consts.C_omega * taq + M2 * (taq * upsilon / lbp + Ck + taq * k_norm)
    B = M2**2 * Ck * upsilon * taq / lbp
    if B < 1.0:
        consts.M0 = A / (1.0 - B)
        if consts.Theta_T < 1.0:
            phi_norm = scale_norm(spec.phi, spec.basis, beta * p)
            consts.chi0 = consts.M0 * phi_norm / (1.0 - consts.Theta_T)
    consts.Phi = compute_phi_constant(consts, alpha, q, T, lam1, beta, p)
    if s is not None and p_prime is not None:
        consts.Phi1 = compute_phi1_constant(
            consts, alpha, 1.0 - p_prime, s, T, lam1, beta, p, p_prime
        )
    return consts


# }}}


# {{{ weighted norms

def _node_magnitudes(f):
    if isinstance(f, ModalTrajectory):
        return f.grid, f.node_norms()
    if isinstance(f, GridFunction):
        return f.grid, np.abs(f.values)
    raise TypeError("expected a ModalTrajectory or GridFunction")


def dpe_norm(f, p1, eta):
    """Singular-window norm: max over t of the integral of ||f(tau)||
    against (t - tau)^(eta - 1), with exact per-step weight moments.

    Only p1 = 2 is supported (the solver never needs another index).
    """
    if p1 != 2:
        raise ValueError("only the p1 = 2 spatial norm is supported")
    if not 0.0 < eta < 1.0:
        raise InvalidExponent(f"eta must lie in (0, 1), got {eta}")
    grid, mags = _node_magnitudes(f)
    m = np.arange(0, grid.N + 1, dtype=np.float64)
    W = (m[1:] ** eta - m[:-1] ** eta) * grid.dt**eta / eta
    mid = 0.5 * (mags[:-1] + mags[1:])
    cums = _core.conv_weight_sum(mid, W)
    return float(np.max(cums))


def holder_norm(f, theta, scale_gamma=0.0, basis=None, t_min=0.0):
    """Discrete Holder seminorm over node pairs with t2 - t1 >= dt.

    Trajectories are measured in the lambda^gamma scale (basis required when
    gamma != 0); pairs below t_min are excluded so the singular origin can be
    cut away.
    """
    if not 0.0 < theta <= 1.0:
        raise InvalidExponent(f"theta must lie in (0, 1], got {theta}")
    if isinstance(f, ModalTrajectory):
        if scale_gamma != 0.0 and basis is None:
            raise ValueError("basis required for a scaled trajectory norm")
        weights = (
            basis.eigenvalues ** (2.0 * scale_gamma)
            if scale_gamma != 0.0
            else np.ones(f.values.shape[0])
        )
        V = f.values
        grid = f.grid
        start = int(np.searchsorted(grid.nodes, t_min))
        best = 0.0
        for lag in range(1, grid.N + 1 - start):
            d = V[:, start + lag:] - V[:, start:-lag]
            norms = np.sqrt(weights @ d**2)
            best = max(best, float(np.max(norms)) / (lag * grid.dt) ** theta)
        return best
    grid, mags = _node_magnitudes(f)
    vals = f.values
    start = int(np.searchsorted(grid.nodes, t_min))
    best = 0.0
    for lag in range(1, grid.N + 1 - start):
        d = np.abs(vals[start + lag:] - vals[start:-lag])
        best = max(best, float(np.max(d)) / (lag * grid.dt) ** theta)
    return best


# }}}


# {{{ explicit bounds

def gronwall_bound(C, g, alpha, T=None):
    """Explicit bound for the weakly singular two-sided integral inequality.

    Returns (bound, applicable): bound(t) = C exp(I(t)) / (2 - exp(I(T))) with
    I(t) the order-alpha moment integral of g (the substitution collapses the
    stated upper limit t^alpha/Gamma(1+alpha) to an integral over [0, t]);
    applicable requires exp(I(T)) < 2, otherwise the returned values are
    formal and the flag is False.
    """
    if C < 0.0:
        raise ValueError("C must be nonnegative")
    if np.any(g.values < 0.0):
        raise ValueError("g must be nonnegative")
    grid = g.grid
    m = np.arange(0, grid.N + 1, dtype=np.float64)
    mu = (m[1:] ** alpha - m[:-1] ** alpha) * grid.dt**alpha / alpha
    mid = 0.5 * (g.values[:-1] + g.values[1:])
    I = np.concatenate([[0.0], np.cumsum(mid * mu)]) / math.gamma(alpha)
    expI = np.exp(I)
    applicable = bool(expI[-1] < 2.0)
    bound = C * expI / (2.0 - expI[-1])
    return GridFunction(grid, bound), applicable


@dataclass
class Lemma1Report:
    """Outcome of the weighted-solution bound check."""

    applicable: bool
    passed: bool
    margin: float
    lhs_max: float
    rhs_min: float
    applicable_alt: bool | None = None
    passed_alt: bool | None = None
    margin_alt: float | None = None


def verify_lemma1_bound(u, spec, consts, sched, cfg=DEFAULT_CFG):
    """Check t^(aq) ||u(t)|| against its explicit bound at every node.

    Applicable when exp(Phi ||k|| T^(2aq) / (2aq)) < 2. When the schedule
    carries (s, p'), the primed-scale variant is evaluated with Phi1 and
    reported alongside; the two constants are deliberately not reconciled.
    """
    alpha, beta = spec.alpha, spec.beta
    q, p = sched.q, sched.p
    aq = alpha * q
    grid = spec.grid
    t = grid.nodes
    k_norm = float(np.max(np.abs(spec.k_values())))
    phi_norm = scale_norm(spec.phi, spec.basis, beta * p)
    f_modal = spec.source.modal(grid, spec.basis, u.values)
    f_norm = dpe_norm(ModalTrajectory(grid, f_modal), 2, aq)

    Phi = consts.Phi
    exp_T = math.exp(Phi * k_norm * grid.T ** (2.0 * aq) / (2.0 * aq))
    applicable = exp_T < 2.0
    lhs = t**aq * u.node_norms()
    if applicable:
        rhs = (
            Phi
            * (phi_norm + f_norm)
            * np.exp(Phi * k_norm * t ** (2.0 * aq) / (2.0 * aq))
            / (2.0 - exp_T)
        )
        margin = float(np.min(rhs - lhs))
        passed = margin >= 0.0
    else:
        rhs = np.full_like(lhs, math.inf)
        margin = math.inf
        passed = False

    report = Lemma1Report(
        applicable=applicable,
        passed=bool(passed and applicable),
        margin=margin,
        lhs_max=float(np.max(lhs)),
        rhs_min=float(np.min(rhs)),
    )

    if consts.Phi1 is not None and sched.s is not None and sched.p_prime is not None:
        qp = sched.q_prime if sched.q_prime is not None else 1.0 - sched.p_prime
        aqp = alpha * qp
        expo = aq + aqp
        Phi1 = consts.Phi1
        exp_T1 = math.exp(Phi1 * k_norm * grid.T**expo / expo)
        report.applicable_alt = exp_T1 < 2.0
        f_norm_s = dpe_norm(ModalTrajectory(grid, f_modal), 2, aq - sched.s)
        lam_scaled = spec.basis.eigenvalues ** (2.0 * beta * (p - sched.p_prime))
        lhs1 = t**aqp * np.sqrt(lam_scaled @ u.values**2)
        if report.applicable_alt:
            rhs1 = (
                Phi1
                * (phi_norm + f_norm_s)
                * np.exp(Phi1 * k_norm * t**expo / expo)
                / (2.0 - exp_T1)
            )
            report.margin_alt = float(np.min(rhs1 - lhs1))
            report.passed_alt = report.margin_alt >= 0.0
        else:
            report.margin_alt = math.inf
            report.passed_alt = False
    return report


# }}}
