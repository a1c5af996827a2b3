"""Forward solver for the nonlocal-in-time fractional diffusion problem.

The terminal state couples back to the initial one through
u(T, x) = kappa u(0, x) + phi(x). Per mode the coupling is resolved by the
multiplier 1 / (E_alpha(-lambda_j^beta T^alpha) - kappa); the full solution is
assembled from three convolution/profile operators and, when the source or
the reaction coefficient couples back to u, iterated to a fixed point.
An independent shooting oracle discretizes each modal two-point problem with
the implicit L1 stencil and matches the nonlocal condition by secant
correction, so the two solution paths share no machinery beyond the grid.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _core
from .errors import (
    NotConverged,
    ResonanceDetected,
    ResonantScalar,
    ShootingDiverged,
)
from .fracops import GridFunction, TimeGrid, caputo_l1, ml_convolve
from .mittag_leffler import (
    DEFAULT_CFG,
    MLEvalConfig,
    MLParams,
    ml_eval_array,
    ml_kernel_antiderivative,
)
from .spectral import SpectralBasis

KAPPA_OUTSIDE = "KappaOutside"
KAPPA_INSIDE_NONRESONANT = "KappaInsideNonResonant"
RESONANT = "Resonant"


# {{{ sources


class LinearSource:
    """Source F(t, x) independent of the state, held as a modal trajectory."""

    is_nonlinear = False
    lipschitz = 0.0

    def __init__(self, modal_values):
        self.modal_values = np.asarray(modal_values, dtype=np.float64)

    @classmethod
    def zero(cls, grid, basis):
        return cls(np.zeros((basis.J, grid.N + 1)))

    @classmethod
    def from_callable(cls, fn, grid, basis):
        """fn(t, x) must broadcast over an x array for fixed scalar t."""
        nodes = grid.nodes
        W = basis._eval_quad * basis.quad_weights[:, None]  # (Q, J)
        vals = np.empty((basis.J, grid.N + 1))
        for i, t in enumerate(nodes):
            vals[:, i] = W.T @ np.asarray(fn(t, basis.quad_nodes), dtype=np.float64)
        return cls(vals)

    def modal(self, grid, basis, u=None):
        if self.modal_values.shape != (basis.J, grid.N + 1):
            raise ValueError(
                f"modal source shape {self.modal_values.shape} does not match "
                f"(J, N+1) = {(basis.J, grid.N + 1)}"
            )
        return self.modal_values

    def point_values(self, grid, basis, x0, u_point=None):
        ex = basis.eval_matrix(np.atleast_1d(x0))[0]
        return ex @ self.modal(grid, basis)


class NonlinearSource:
    """Pointwise source F(t, x, u) with declared Lipschitz constant in u.

    The evaluator must broadcast: fn(t, x, u) with t scalar, x and u arrays.
    Vanishing at u = 0 and the Lipschitz bound are the standing assumptions;
    spot_check probes them on random pairs.
    """

    is_nonlinear = True

    def __init__(self, fn, lipschitz, time_lipschitz=None):
        if not lipschitz > 0.0:
            raise ValueError("a positive Lipschitz constant must be declared")
        self.fn = fn
        self.lipschitz = float(lipschitz)
        self.time_lipschitz = time_lipschitz

    def modal(self, grid, basis, u):
        field_vals = basis._eval_quad @ u  # (Q, N+1)
        W = basis._eval_quad * basis.quad_weights[:, None]
        out = np.empty((basis.J, grid.N + 1))
        xq = basis.quad_nodes
        for i, t in enumerate(grid.nodes):
            out[:, i] = W.T @ np.asarray(
                self.fn(t, xq, field_vals[:, i]), dtype=np.float64
            )
        return out

    def point_values(self, grid, basis, x0, u_point):
        return np.asarray(
            [self.fn(t, x0, u) for t, u in zip(grid.nodes, u_point)], dtype=np.float64
        )

    def spot_check(self, basis, rng, n_pairs=8, t=0.0):
        """Observed Lipschitz ratios and |F(t,.,0)| on random modal pairs."""
        xq = basis.quad_nodes
        w = basis.quad_weights
        zero_norm = math.sqrt(np.sum(w * np.asarray(self.fn(t, xq, np.zeros_like(xq))) ** 2))
        ratios = []
        for _ in range(n_pairs):
            v1 = basis._eval_quad @ rng.standard_normal(basis.J)
            v2 = basis._eval_quad @ rng.standard_normal(basis.J)
            df = np.asarray(self.fn(t, xq, v1)) - np.asarray(self.fn(t, xq, v2))
            num = math.sqrt(np.sum(w * df**2))
            den = math.sqrt(np.sum(w * (v1 - v2) ** 2))
            if den > 0:
                ratios.append(num / den)
        return zero_norm, max(ratios) if ratios else 0.0


# }}}


# {{{ problem data

@dataclass
class NonlocalProblemSpec:
    """Data of the forward problem on (0, T) x (0, l)."""

    alpha: float
    beta: float
    kappa: float
    T: float
    grid: TimeGrid
    basis: SpectralBasis
    phi: np.ndarray
    source: object
    k: GridFunction | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if abs(self.grid.T - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("grid horizon differs from T")
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.shape != (self.basis.J,):
            raise ValueError("phi must supply one coefficient per retained mode")
        if self.k is not None and self.k.grid.N != self.grid.N:
            raise ValueError("coefficient k must live on the problem grid")

    def k_values(self):
        if self.k is None:
            return np.zeros(self.grid.N + 1)
        return self.k.values

    def spectral_lambdas(self):
        return self.basis.eigenvalues**self.beta


@dataclass
class NonlocalMultipliers:
    """Per-mode nonlocal multipliers and the kappa-case classification."""

    psi: np.ndarray
    e_values: np.ndarray
    resonant_modes: tuple
    case_tag: str


@dataclass
class ModalTrajectory:
    """Modal coefficients u_j(t_i) of the discrete solution field."""

    grid: TimeGrid
    values: np.ndarray  # shape (J, N+1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.N + 1:
            raise ValueError("trajectory must have shape (J, N+1)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trajectory entries must be finite")

    @property
    def J(self):
        return self.values.shape[0]

    def node_norms(self):
        """Truncated L2(Omega) norm per time node."""
        return np.sqrt(np.sum(self.values**2, axis=0))


@dataclass
class PicardReport:
    """Progress record of the successive-approximation iteration."""

    iterations: int
    sup_diffs: list
    observed_ratio: float | None
    converged: bool
    nonlocal_residual: float = math.nan
    warnings: list = field(default_factory=list)


@dataclass
class ScalarNonlocalProblem:
    """Scalar relaxation problem with terminal-initial coupling."""

    Lambda: float
    kappa: float
    psi: float
    g: GridFunction
    T: float
    grid: TimeGrid

    def __post_init__(self):
        if self.Lambda < 0.0:
            raise ValueError("Lambda must be nonnegative")
        if abs(self.grid.T - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("grid horizon differs from T")


# }}}


# {{{ cached kernel tables (pure functions of hashable arguments)

@lru_cache(maxsize=1024)
def _profile_table(alpha, lam, T, N, cfg):
    """E_{alpha,1}(-lam t_i^alpha) on the grid nodes."""
    t = np.linspace(0.0, T, N + 1)
    vals = ml_eval_array(MLParams(alpha, 1.0), -lam * t**alpha, cfg)
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=1024)
def _weight_table(alpha, lam, T, N, cfg):
    """Exact per-step kernel masses for the lag-m convolution weights."""
    t = np.linspace(0.0, T, N + 1)
    w = np.diff(ml_kernel_antiderivative(alpha, lam, t, cfg))
    w.setflags(write=False)
    return w


# }}}


# {{{ multipliers and operators

def compute_multipliers(spec, resonance_tol=1e-8, orthogonality_tol=1e-10,
                        cfg=DEFAULT_CFG):
    """Multipliers 1/(E_alpha(-lambda_j^beta T^alpha) - kappa) with the
    three-way kappa-case analysis.

    Resonance is only possible for kappa inside (0, 1); detected modes are
    admissible solely when their data components vanish, in which case the
    minimal solution (zero resonant amplitude) is selected.
    """
    lam = spec.spectral_lambdas()
    e_vals = ml_eval_array(
        MLParams(spec.alpha, 1.0), -lam * spec.T**spec.alpha, cfg
    )
    kappa = spec.kappa
    resonant = ()
    if 0.0 < kappa < 1.0:
        hits = np.nonzero(np.abs(e_vals - kappa) < resonance_tol)[0]
        if hits.size:
            blocked = [int(j + 1) for j in hits if abs(spec.phi[j]) > orthogonality_tol]
            if blocked:
                raise ResonanceDetected(blocked)
            resonant = tuple(int(j + 1) for j in hits)
    psi = np.empty_like(e_vals)
    for j in range(lam.size):
        if (j + 1) in resonant:
            psi[j] = 0.0  # orthogonal datum: minimal solution drops the mode
        else:
            psi[j] = 1.0 / (e_vals[j] - kappa)
    if not 0.0 < kappa < 1.0:
        tag = KAPPA_OUTSIDE
    elif resonant:
        tag = RESONANT
    else:
        tag = KAPPA_INSIDE_NONRESONANT
    return NonlocalMultipliers(psi=psi, e_values=e_vals,
                               resonant_modes=resonant, case_tag=tag)


def apply_G1(h1, spec, cfg=DEFAULT_CFG):
    """Mode-wise convolution against t^(alpha-1) E_{alpha,alpha}(-lambda_j^beta t^alpha)."""
    grid = spec.grid
    lam = spec.spectral_lambdas()
    out = np.empty_like(h1.values)
    for j in range(lam.size):
        w = _weight_table(spec.alpha, float(lam[j]), grid.T, grid.N, cfg)
        mid = 0.5 * (h1.values[j, :-1] + h1.values[j, 1:])
        out[j] = _core.conv_weight_sum(mid, w)
    return ModalTrajectory(grid, out)


def apply_G2(h2, mult, spec, cfg=DEFAULT_CFG):
    """Profile synthesis h2_j psi_j E_{alpha,1}(-lambda_j^beta t^alpha)."""
    grid = spec.grid
    lam = spec.spectral_lambdas()
    h2 = np.asarray(h2, dtype=np.float64)
    out = np.empty((lam.size, grid.N + 1))
    for j in range(lam.size):
        prof = _profile_table(spec.alpha, float(lam[j]), grid.T, grid.N, cfg)
        out[j] = h2[j] * mult.psi[j] * prof
    return ModalTrajectory(grid, out)


def apply_G3(h3, mult, spec, cfg=DEFAULT_CFG):
    """Composition -G2 applied to the horizon slice of G1."""
    g1 = apply_G1(h3, spec, cfg)
    g2 = apply_G2(g1.values[:, -1], mult, spec, cfg)
    return ModalTrajectory(spec.grid, -g2.values)


def apply_G1_plus_G3(h, mult, spec, cfg=DEFAULT_CFG):
    """(G1 + G3) h sharing a single convolution pass per mode."""
    g1 = apply_G1(h, spec, cfg)
    g2 = apply_G2(g1.values[:, -1], mult, spec, cfg)
    return ModalTrajectory(spec.grid, g1.values - g2.values)


# }}}


# {{{ scalar nonlocal problem

def solve_scalar_nonlocal(p, alpha, resonance_tol=1e-8, cfg=DEFAULT_CFG):
    """Closed-form grid solution of the scalar nonlocal relaxation problem.

    omega = g * kernel + [psi - (g * kernel)(T)] Psi E_alpha(-Lambda t^alpha)
    with Psi = 1/(E_alpha(-Lambda T^alpha) - kappa); the terminal-initial
    identity omega(T) = kappa omega(0) + psi then holds to roundoff.
    """
    conv = ml_convolve(p.g, alpha, p.Lambda, cfg)
    prof = _profile_table(alpha, float(p.Lambda), p.grid.T, p.grid.N, cfg)
    denom = prof[-1] - p.kappa
    if abs(denom) < resonance_tol:
        raise ResonantScalar(
            f"|E_alpha(-Lambda T^alpha) - kappa| = {abs(denom):.2e} below tolerance"
        )
    amplitude = (p.psi - conv.values[-1]) / denom
    return GridFunction(p.grid, conv.values + amplitude * prof)


# }}}


# {{{ forward solve

def constant_phi_trajectory(spec):
    """Initial iterate: the nonlocal datum held constant in time."""
    return ModalTrajectory(
        spec.grid, np.tile(spec.phi[:, None], (1, spec.grid.N + 1))
    )


def _observed_ratio(diffs):
    ratios = [
        b / a for a, b in zip(diffs, diffs[1:]) if a > 0.0 and b > 0.0
    ]
    if not ratios:
        return None
    burn = min(2, len(ratios) - 1)
    tail = ratios[burn:]
    return float(np.exp(np.mean(np.log(tail))))


def solve_forward(spec, tol=1e-10, max_iter=200, tol_nonlocal=1e-8,
                  theta_hat=None, resonance_tol=1e-8, orthogonality_tol=1e-10,
                  cfg=DEFAULT_CFG):
    """Successive approximation of the mild solution.

    Starting from the constant-in-time datum, each sweep applies the mild
    representation with the previous iterate inside the source and the
    reaction coupling. Returns the trajectory and a PicardReport; raises
    NotConverged (carrying the report) when the budget is exhausted or the
    terminal-initial residual misses tol_nonlocal.
    """
    mult = compute_multipliers(spec, resonance_tol, orthogonality_tol, cfg)
    grid = spec.grid
    kv = spec.k_values()
    has_k = bool(np.any(kv != 0.0))
    g2phi = apply_G2(spec.phi, mult, spec, cfg).values

    warnings = []
    if mult.case_tag == RESONANT:
        warnings.append(
            f"resonant modes {mult.resonant_modes} carried orthogonal data; "
            "their amplitude is set to zero (minimal solution)"
        )
    if theta_hat is not None and theta_hat >= 1.0:
        warnings.append(
            f"contraction estimate {theta_hat:.3f} >= 1: convergence not guaranteed"
        )

    w = constant_phi_trajectory(spec)
    fixed_map = (not spec.source.is_nonlinear) and not has_k
    sup_diffs = []
    converged = False
    iterations = 0
    for n in range(1, max_iter + 1):
        iterations = n
        data = spec.source.modal(grid, spec.basis, w.values) - kv[None, :] * w.values
        w_next_vals = g2phi + apply_G1_plus_G3(
            ModalTrajectory(grid, data), mult, spec, cfg
        ).values
        diff = float(np.max(np.sqrt(np.sum((w_next_vals - w.values) ** 2, axis=0))))
        sup_diffs.append(diff)
        w = ModalTrajectory(grid, w_next_vals)
        if fixed_map or diff <= tol:
            converged = True
            break

    residual = float(
        np.sqrt(np.sum((w.values[:, -1] - spec.kappa * w.values[:, 0] - spec.phi) ** 2))
    )
    report = PicardReport(
        iterations=iterations,
        sup_diffs=sup_diffs,
        observed_ratio=_observed_ratio(sup_diffs),
        converged=converged,
        nonlocal_residual=residual,
        warnings=warnings,
    )
    if not converged:
        raise NotConverged(report, f"no fixed point after {max_iter} sweeps")
    if residual > tol_nonlocal:
        report.converged = False
        raise NotConverged(
            report,
            f"terminal-initial residual {residual:.2e} exceeds {tol_nonlocal:.2e}",
        )
    return w, report


# }}}


# {{{ shooting oracle

def _shoot_mode(alpha, dt, lam_j, kv, fv, kappa, phi_j, shoot_tol, max_secant=50):
    """Secant correction of the initial amplitude to meet the two-point
    condition; exact after one update for linear modal problems."""

    def boundary_gap(a):
        y = _core.l1_ivp(alpha, dt, lam_j, kv, fv, a)
        return y, y[-1] - kappa * a - phi_j

    a0, a1 = 0.0, max(1.0, abs(phi_j))
    y0, g0 = boundary_gap(a0)
    if abs(g0) <= shoot_tol:
        return y0
    y1, g1 = boundary_gap(a1)
    for _ in range(max_secant):
        if abs(g1) <= shoot_tol:
            return y1
        if g1 == g0:
            raise ShootingDiverged(
                f"flat boundary response (gap {g1:.2e}); terminal condition "
                "cannot be met by amplitude correction"
            )
        a2 = a1 - g1 * (a1 - a0) / (g1 - g0)
        if not math.isfinite(a2):
            raise ShootingDiverged("secant update left the finite range")
        a0, g0 = a1, g1
        y1, g1 = boundary_gap(a2)
        a1 = a2
    raise ShootingDiverged(f"residual {abs(g1):.2e} after {max_secant} corrections")


def oracle_shooting_l1(spec, shoot_tol=1e-10, max_outer=100, cfg=DEFAULT_CFG):
    """Independent reference solution: mode-wise L1 marching with shooting.

    Each mode is treated as an initial-value problem whose amplitude is
    adjusted until the terminal-initial condition closes; nonlinear sources
    are handled by an outer fixed point over the full field. Shares no
    Mittag-Leffler machinery with the mild-solution path.
    """
    grid = spec.grid
    dt = grid.dt
    lam = spec.spectral_lambdas()
    kv = spec.k_values()
    threads = int(os.environ.get("NLFRAC_THREADS", "1"))

    u = constant_phi_trajectory(spec).values
    for _ in range(max_outer):
        f_modal = spec.source.modal(grid, spec.basis, u)

        def solve_one(j):
            return _shoot_mode(
                spec.alpha, dt, float(lam[j]), kv, f_modal[j],
                spec.kappa, float(spec.phi[j]), shoot_tol,
            )

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(solve_one, range(lam.size)))
        else:
            rows = [solve_one(j) for j in range(lam.size)]
        u_next = np.vstack(rows)
        gap = float(np.max(np.abs(u_next - u)))
        u = u_next
        if not spec.source.is_nonlinear or gap <= shoot_tol * 10.0:
            return ModalTrajectory(grid, u)
    raise ShootingDiverged(
        f"outer field iteration still moving by {gap:.2e} after {max_outer} passes"
    )


# }}}


# {{{ observation and residual diagnostics

def evaluate_at_point(u, basis, x0):
    """Point trace t -> sum_j u_j(t) e_j(x0) as a GridFunction."""
    from .spectral import synthesize  # domain check lives there

    synthesize(np.zeros(basis.J), basis, x0)  # validates x0 in (0, l)
    ex = basis.eval_matrix(np.atleast_1d(x0))[0]
    return GridFunction(u.grid, ex @ u.values)


def pde_residual(u, spec, cfg=DEFAULT_CFG):
    """Truncated-L2 residual of the strong equation per time node.

    The fractional derivative uses the L1 stencil, so node 0 carries no
    derivative information; refinement studies read nodes 1..N.
    """
    grid = spec.grid
    lam = spec.spectral_lambdas()
    kv = spec.k_values()
    f_modal = spec.source.modal(grid, spec.basis, u.values)
    res = np.empty_like(u.values)
    for j in range(lam.size):
        dja = caputo_l1(GridFunction(grid, u.values[j]), spec.alpha).values
        res[j] = dja + lam[j] * u.values[j] + kv * u.values[j] - f_modal[j]
    return GridFunction(grid, np.sqrt(np.sum(res**2, axis=0)))


# }}}
