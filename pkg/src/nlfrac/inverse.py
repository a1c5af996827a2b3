"""Recovery of the time-dependent reaction coefficient from a point trace.

Setting x = x0 in the equation and replacing u(t, x0) by the datum h(t)
expresses k through the datum and the spectral trace of the current state;
alternating that update with a forward sweep for the state (previous iterate
frozen inside the source and the reaction term) is the fixed-point map whose
limit solves the inverse problem. No smoothing is applied to the datum: the
fractional derivative of h is taken on the raw grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DatumCrossesZero,
    NotConverged,
    ObservationTooSmall,
)
from .forward import (
    ModalTrajectory,
    apply_G1_plus_G3,
    apply_G2,
    compute_multipliers,
    constant_phi_trajectory,
    evaluate_at_point,
    solve_forward,
)
from .fracops import GridFunction, caputo_l1
from .mittag_leffler import DEFAULT_CFG
from .spectral import synthesize


@dataclass
class ObservationData:
    """Point observation h(t) = u(t, x0) with its positivity floor.

    dh_alpha is the precomputed fractional derivative of h on the raw grid.
    """

    h: GridFunction
    x0: float
    h0: float
    dh_alpha: GridFunction

    def __post_init__(self):
        if not self.h0 > 0.0:
            raise ObservationTooSmall(f"floor h0 must be positive, got {self.h0}")
        if float(np.min(np.abs(self.h.values))) < self.h0:
            raise ObservationTooSmall(
                f"min |h| = {np.min(np.abs(self.h.values)):.3e} below floor {self.h0:.3e}"
            )
        if self.dh_alpha.grid.N != self.h.grid.N:
            raise ValueError("dh_alpha must live on the observation grid")

    @classmethod
    def from_samples(cls, h, x0, alpha, h0=None):
        """Build the observation record, differentiating h on its own grid."""
        if h0 is None:
            h0 = 0.9 * float(np.min(np.abs(h.values)))
        return cls(h=h, x0=x0, h0=h0, dh_alpha=caputo_l1(h, alpha))


@dataclass
class InverseSpec:
    """Inverse problem: forward data without k, plus the observation."""

    forward: object  # NonlocalProblemSpec with k ignored/None
    obs: ObservationData
    tol_k: float = 1e-4
    max_outer: int = 200
    compat_tol: float = 1e-6

    def __post_init__(self):
        fg = self.forward.grid
        og = self.obs.h.grid
        if fg.N != og.N or abs(fg.T - og.T) > 1e-12 * max(1.0, fg.T):
            raise ValueError("forward and observation grids must coincide")


@dataclass
class RecoveryReport:
    """Progress record of the outer coefficient iteration."""

    outer_iterations: int
    k_diffs: list
    data_residual: float
    contraction_ratio: float | None
    d3_satisfied: bool
    converged: bool = True
    warnings: list = field(default_factory=list)


@dataclass
class ConditionReport:
    """Booleans for the observation conditions; D3 is advisory only."""

    d1: bool
    d2: bool
    d3: bool
    d2_defect: float
    d3_lhs: float
    d3_rhs: float


def compute_k0(obs, source, basis):
    """Datum-only part of the coefficient update,
    (F(t, x0, h) - d^alpha h) / h."""
    grid = obs.h.grid
    hv = obs.h.values
    if float(np.min(np.abs(hv))) < obs.h0:
        raise ObservationTooSmall("observation fell below its floor")
    fv = source.point_values(grid, basis, obs.x0, hv)
    return GridFunction(grid, (fv - obs.dh_alpha.values) / hv)


def trace_lbeta(u, basis, beta, x0):
    """Spectral trace sum_j lambda_j^beta u_j(t) e_j(x0); finite because the
    basis is truncated."""
    synthesize(np.zeros(basis.J), basis, x0)  # validates x0 in (0, l)
    ex = basis.eval_matrix(np.atleast_1d(x0))[0]
    lam_b = basis.eigenvalues**beta
    return GridFunction(u.grid, (lam_b * ex) @ u.values)


def psi_step(k_prev, u_prev, spec, mult=None, k0=None, cfg=DEFAULT_CFG):
    """One application of the coefficient/state fixed-point map.

    The coefficient update reads the previous state through its spectral
    trace; the state update solves the forward problem with the previous
    coefficient and state frozen as data, which is a single mild-solution
    assembly (no inner iteration is needed).
    """
    fwd = spec.forward
    if mult is None:
        mult = compute_multipliers(fwd, cfg=cfg)
    if k0 is None:
        k0 = compute_k0(spec.obs, fwd.source, fwd.basis)
    grid = fwd.grid

    tr = trace_lbeta(u_prev, fwd.basis, fwd.beta, spec.obs.x0)
    k_next = GridFunction(grid, k0.values - tr.values / spec.obs.h.values)

    data = (
        fwd.source.modal(grid, fwd.basis, u_prev.values)
        - k_prev.values[None, :] * u_prev.values
    )
    u_next_vals = (
        apply_G2(fwd.phi, mult, fwd, cfg).values
        + apply_G1_plus_G3(ModalTrajectory(grid, data), mult, fwd, cfg).values
    )
    return k_next, ModalTrajectory(grid, u_next_vals)


def check_conditions(spec, k_estimate, upsilon, cfg=DEFAULT_CFG):
    """Evaluate the observation admissibility conditions.

    D1: the datum stays above its floor. D2: the datum is compatible with the
    terminal-initial condition at x0. D3: the sufficient contraction bound
    exp(T^alpha/Gamma(alpha+1) (Upsilon + ||k||)) < 1 + |kappa - 1|; its
    failure is a warning, not an error.
    """
    fwd = spec.forward
    obs = spec.obs
    hv = obs.h.values
    d1 = bool(np.min(np.abs(hv)) >= obs.h0 > 0.0)
    phi_x0 = synthesize(fwd.phi, fwd.basis, obs.x0)
    d2_defect = float(abs(hv[-1] - fwd.kappa * hv[0] - phi_x0))
    d2 = d2_defect <= spec.compat_tol
    k_norm = k_estimate.sup_norm() if k_estimate is not None else 0.0
    lhs = math.exp(
        fwd.T**fwd.alpha / math.gamma(fwd.alpha + 1.0) * (upsilon + k_norm)
    )
    rhs = 1.0 + abs(fwd.kappa - 1.0)
    return ConditionReport(d1=d1, d2=d2, d3=lhs < rhs,
                           d2_defect=d2_defect, d3_lhs=lhs, d3_rhs=rhs)


def recover(spec, resonance_tol=1e-8, orthogonality_tol=1e-10, cfg=DEFAULT_CFG):
    """Iterate the fixed-point map from the datum-only coefficient.

    Stops when consecutive coefficient iterates agree in sup norm within
    tol_k; returns (k, u, RecoveryReport). Raises NotConverged carrying the
    report when the outer budget is exhausted.
    """
    fwd = spec.forward
    upsilon = getattr(fwd.source, "lipschitz", 0.0)
    cond = check_conditions(spec, None, upsilon, cfg)
    if not cond.d1:
        raise ObservationTooSmall("condition D1 fails: datum below floor")
    warnings = []
    if not cond.d2:
        raise ObservationTooSmall(
            f"condition D2 fails: terminal-initial defect {cond.d2_defect:.3e} "
            f"exceeds compat_tol {spec.compat_tol:.3e}"
        )

    mult = compute_multipliers(fwd, resonance_tol, orthogonality_tol, cfg)
    k0 = compute_k0(spec.obs, fwd.source, fwd.basis)
    k_prev = k0
    u_prev = constant_phi_trajectory(fwd)

    k_diffs = []
    d3_flag = cond.d3
    converged = False
    iterations = 0
    for n in range(1, spec.max_outer + 1):
        iterations = n
        k_next, u_next = psi_step(k_prev, u_prev, spec, mult=mult, k0=k0, cfg=cfg)
        diff = float(np.max(np.abs(k_next.values - k_prev.values)))
        k_diffs.append(diff)
        d3_flag = check_conditions(spec, k_next, upsilon, cfg).d3
        k_prev, u_prev = k_next, u_next
        if diff <= spec.tol_k:
            converged = True
            break

    if not d3_flag:
        warnings.append("advisory condition D3 fails for the current iterate")

    trace_fit = evaluate_at_point(u_prev, fwd.basis, spec.obs.x0)
    data_residual = float(np.max(np.abs(trace_fit.values - spec.obs.h.values)))
    ratios = [b / a for a, b in zip(k_diffs, k_diffs[1:]) if a > 0 and b > 0]
    if ratios:
        burn = min(3, len(ratios) - 1)
        contraction = float(np.exp(np.mean(np.log(ratios[burn:]))))
    else:
        contraction = None
    report = RecoveryReport(
        outer_iterations=iterations,
        k_diffs=k_diffs,
        data_residual=data_residual,
        contraction_ratio=contraction,
        d3_satisfied=d3_flag,
        converged=converged,
        warnings=warnings,
    )
    if not converged:
        raise NotConverged(report, f"coefficient still moving after {iterations} steps")
    return k_prev, u_prev, report


def synthesize_observation(spec_with_true_k, x0, noise_level=0.0, seed=0,
                           tol=1e-10, max_iter=200, cfg=DEFAULT_CFG):
    """Manufacture an observation by solving forward with the true k.

    Adds seeded uniform noise of amplitude noise_level * sup|h| (zero
    allowed), recomputes the fractional derivative from the noisy samples,
    and sets the floor to 0.9 min|h|. Deterministic for a fixed seed.
    """
    u, _ = solve_forward(spec_with_true_k, tol=tol, max_iter=max_iter, cfg=cfg)
    clean = evaluate_at_point(u, spec_with_true_k.basis, x0)
    hv = clean.values.copy()
    if noise_level > 0.0:
        rng = np.random.default_rng(seed)
        amp = noise_level * float(np.max(np.abs(hv)))
        hv = hv + rng.uniform(-1.0, 1.0, hv.size) * amp
    if float(np.min(np.abs(hv))) == 0.0 or np.any(hv[:-1] * hv[1:] < 0.0):
        raise DatumCrossesZero(
            "observation touches zero; the coefficient recovery is ill posed"
        )
    h = GridFunction(spec_with_true_k.grid, hv)
    return ObservationData.from_samples(h, x0, spec_with_true_k.alpha)
