"""Nonlocal fractional diffusion: mild solutions and coefficient recovery.

Solves d_t^alpha u + L^beta u + k(t) u = F on (0, T) x (0, l) under the
terminal-initial coupling u(T, x) = kappa u(0, x) + phi(x), and recovers an
unknown reaction coefficient k(t) from a point observation u(t, x0) = h(t).
"""

from ._core import BACKEND
from .errors import (
    ConfigError,
    ConvergenceError,
    DatumCrossesZero,
    InvalidExponent,
    InvalidOrder,
    NlfracError,
    NonConvergent,
    NotConverged,
    ObservationTooSmall,
    OutOfDomain,
    PreconditionError,
    ResonanceDetected,
    ResonantScalar,
    ShootingDiverged,
    SingularAtZero,
    TailNotNegligible,
)
from .fracops import GridFunction, TimeGrid, beta_fn, caputo_l1, ml_convolve, rl_integral
from .mittag_leffler import (
    DEFAULT_CFG,
    MLEvalConfig,
    MLParams,
    check_laplace_identity,
    fit_bound_constants,
    ml_eval,
    ml_eval_array,
    ml_kernel,
    ml_kernel_antiderivative,
)
from .spectral import (
    SpectralBasis,
    dirichlet_laplacian_basis,
    fractional_power_apply,
    project,
    scale_norm,
    synthesize,
)
from .forward import (
    LinearSource,
    ModalTrajectory,
    NonlinearSource,
    NonlocalProblemSpec,
    PicardReport,
    ScalarNonlocalProblem,
    apply_G1,
    apply_G2,
    apply_G3,
    compute_multipliers,
    evaluate_at_point,
    oracle_shooting_l1,
    pde_residual,
    solve_forward,
    solve_scalar_nonlocal,
)
from .inverse import (
    InverseSpec,
    ObservationData,
    RecoveryReport,
    check_conditions,
    compute_k0,
    psi_step,
    recover,
    synthesize_observation,
    trace_lbeta,
)
from .diagnostics import (
    ContractionConstants,
    ExponentSchedule,
    compute_theta,
    dpe_norm,
    estimate_Ckappa,
    fit_constants,
    gronwall_bound,
    holder_norm,
    validate_schedule,
    verify_lemma1_bound,
)

__version__ = "0.1.0"
