import math

import numpy as np
import pytest

from nlfrac import (
    GridFunction,
    LinearSource,
    MLParams,
    NonlinearSource,
    NonlocalProblemSpec,
    ResonanceDetected,
    ResonantScalar,
    ScalarNonlocalProblem,
    TimeGrid,
    compute_multipliers,
    dirichlet_laplacian_basis,
    evaluate_at_point,
    ml_eval,
    ml_eval_array,
    ml_kernel_antiderivative,
    oracle_shooting_l1,
    pde_residual,
    solve_forward,
    solve_scalar_nonlocal,
)
from nlfrac.forward import ModalTrajectory, apply_G1, apply_G2, apply_G3

E_HALF_AT_MINUS1 = 0.42758357615580700
PSI_1 = 1.0 / E_HALF_AT_MINUS1  # 2.3387240665100065


def unit_mode_spec(kappa=0.0, T=1.0, N=256, alpha=0.5, beta=1.0, J=4,
                   source=None, k=None):
    basis = dirichlet_laplacian_basis(math.pi, J)
    grid = TimeGrid(T=T, N=N)
    phi = np.zeros(J)
    phi[0] = 1.0
    if source is None:
        source = LinearSource.zero(grid, basis)
    return NonlocalProblemSpec(alpha=alpha, beta=beta, kappa=kappa, T=T,
                               grid=grid, basis=basis, phi=phi, source=source, k=k)


def rel_l2(a, b, dt):
    num = math.sqrt(float(np.sum((a - b) ** 2)) * dt)
    den = math.sqrt(float(np.sum(b**2)) * dt)
    return num / den


class TestMultipliers:
    def test_kappa_zero_single_mode_value(self):
        mult = compute_multipliers(unit_mode_spec())
        assert mult.psi[0] == pytest.approx(PSI_1, rel=1e-12)
        assert mult.case_tag == "KappaOutside"
        assert mult.resonant_modes == ()

    def test_kappa_outside_never_resonant(self):
        mult = compute_multipliers(unit_mode_spec(kappa=2.0))
        assert mult.case_tag == "KappaOutside"
        # E in (0,1) so psi_j = 1/(E-2) lies in (-1, -1/2)
        assert np.all(mult.psi < -0.5) and np.all(mult.psi > -1.0)

    def test_constructed_resonance_detected(self):
        spec = unit_mode_spec()
        kappa = ml_eval(MLParams(0.5, 1.0), -1.0)  # equals E at mode 1 exactly
        res_spec = unit_mode_spec(kappa=kappa)
        with pytest.raises(ResonanceDetected) as err:
            compute_multipliers(res_spec)
        assert err.value.modes == (1,)

    def test_bisection_locates_resonant_eigenvalue(self):
        # the resonant eigenvalue is the root of the monotone map
        # lam -> E_alpha(-lam^beta T^alpha) - kappa
        kappa = ml_eval(MLParams(0.5, 1.0), -1.0)
        lo, hi = 0.01, 50.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ml_eval(MLParams(0.5, 1.0), -mid) > kappa:
                lo = mid
            else:
                hi = mid
        assert 0.5 * (lo + hi) == pytest.approx(1.0, abs=1e-9)  # lambda_1 = 1

    def test_orthogonal_datum_passes_with_zero_amplitude(self):
        kappa = ml_eval(MLParams(0.5, 1.0), -1.0)
        basis = dirichlet_laplacian_basis(math.pi, 4)
        grid = TimeGrid(T=1.0, N=64)
        phi = np.array([0.0, 1.0, 0.0, 0.0])  # nothing on the resonant mode
        spec = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=kappa, T=1.0,
                                   grid=grid, basis=basis, phi=phi,
                                   source=LinearSource.zero(grid, basis))
        mult = compute_multipliers(spec)
        assert mult.case_tag == "Resonant"
        assert mult.resonant_modes == (1,)
        assert mult.psi[0] == 0.0


class TestScalarNonlocal:
    def test_closed_form_profile(self):
        grid = TimeGrid(T=1.0, N=256)
        p = ScalarNonlocalProblem(Lambda=1.0, kappa=0.0, psi=1.0,
                                  g=GridFunction.constant(grid, 0.0), T=1.0, grid=grid)
        om = solve_scalar_nonlocal(p, 0.5)
        prof = ml_eval_array(MLParams(0.5, 1.0), -grid.nodes**0.5)
        assert np.max(np.abs(om.values - prof / prof[-1])) < 1e-12
        assert om.values[0] == pytest.approx(PSI_1, rel=1e-12)
        assert om.values[-1] == pytest.approx(1.0, abs=1e-13)

    def test_zero_datum_zero_solution(self):
        grid = TimeGrid(T=1.0, N=64)
        p = ScalarNonlocalProblem(Lambda=1.0, kappa=0.5, psi=0.0,
                                  g=GridFunction.constant(grid, 0.0), T=1.0, grid=grid)
        om = solve_scalar_nonlocal(p, 0.5)
        assert np.max(np.abs(om.values)) < 1e-14

    def test_terminal_initial_identity(self):
        grid = TimeGrid(T=0.8, N=128)
        g = GridFunction(grid, np.cos(grid.nodes))
        for kappa in (0.0, -1.0, 2.0):
            p = ScalarNonlocalProblem(Lambda=2.0, kappa=kappa, psi=0.7,
                                      g=g, T=0.8, grid=grid)
            om = solve_scalar_nonlocal(p, 0.6)
            assert abs(om.values[-1] - kappa * om.values[0] - 0.7) < 1e-10

    def test_drift_free_constant_source(self):
        # Lambda = 0, g = c: omega = omega0 + c t^alpha / Gamma(1+alpha) with
        # omega0 from the terminal-initial constraint (direct integration)
        alpha, c, kappa, psi, T = 0.5, 0.3, -1.0, 0.4, 1.0
        grid = TimeGrid(T=T, N=256)
        p = ScalarNonlocalProblem(Lambda=0.0, kappa=kappa, psi=psi,
                                  g=GridFunction.constant(grid, c), T=T, grid=grid)
        om = solve_scalar_nonlocal(p, alpha)
        drift = c * grid.nodes**alpha / math.gamma(1.0 + alpha)
        omega0 = (psi - c * T**alpha / math.gamma(1.0 + alpha)) / (1.0 - kappa)
        assert np.max(np.abs(om.values - (omega0 + drift))) < 1e-12

    def test_resonant_denominator_raises(self):
        grid = TimeGrid(T=1.0, N=32)
        kappa = ml_eval(MLParams(0.5, 1.0), -1.0)
        p = ScalarNonlocalProblem(Lambda=1.0, kappa=kappa, psi=1.0,
                                  g=GridFunction.constant(grid, 0.0), T=1.0, grid=grid)
        with pytest.raises(ResonantScalar):
            solve_scalar_nonlocal(p, 0.5)


class TestOperators:
    def setup_method(self):
        self.spec = unit_mode_spec(N=128)
        self.mult = compute_multipliers(self.spec)
        self.grid = self.spec.grid

    def _traj(self, values):
        return ModalTrajectory(self.grid, values)

    def test_g1_zero(self):
        z = self._traj(np.zeros((4, 129)))
        assert np.all(apply_G1(z, self.spec).values == 0.0)

    def test_g1_constant_mode_antiderivative(self):
        h = np.zeros((4, 129))
        h[0] = 1.0  # mode 1 has lambda^beta = 1
        out = apply_G1(self._traj(h), self.spec)
        expected = ml_kernel_antiderivative(0.5, 1.0, self.grid.nodes)
        assert np.max(np.abs(out.values[0] - expected)) < 1e-12
        assert out.values[0, -1] == pytest.approx(1.0 - E_HALF_AT_MINUS1, abs=1e-12)

    def test_g1_linearity(self):
        rng = np.random.default_rng(7)
        f = rng.standard_normal((4, 129))
        g = rng.standard_normal((4, 129))
        a, b = 1.7, -0.4
        lhs = apply_G1(self._traj(a * f + b * g), self.spec).values
        rhs = a * apply_G1(self._traj(f), self.spec).values + b * apply_G1(
            self._traj(g), self.spec
        ).values
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_g2_unit_datum_profile(self):
        h2 = np.array([1.0, 0.0, 0.0, 0.0])
        out = apply_G2(h2, self.mult, self.spec)
        assert out.values[0, 0] == pytest.approx(PSI_1, rel=1e-12)
        assert out.values[0, -1] == pytest.approx(1.0, abs=1e-12)

    def test_g2_zero(self):
        out = apply_G2(np.zeros(4), self.mult, self.spec)
        assert np.all(out.values == 0.0)

    def test_g2_initial_column(self):
        rng = np.random.default_rng(1)
        h2 = rng.standard_normal(4)
        out = apply_G2(h2, self.mult, self.spec)
        assert np.allclose(out.values[:, 0], h2 * self.mult.psi)  # E(0) = 1

    def test_g3_zero_and_sign(self):
        z = self._traj(np.zeros((4, 129)))
        assert np.all(apply_G3(z, self.mult, self.spec).values == 0.0)
        rng = np.random.default_rng(2)
        h = rng.standard_normal((4, 129))
        a = apply_G3(self._traj(h), self.mult, self.spec).values
        b = apply_G3(self._traj(-h), self.mult, self.spec).values
        assert np.allclose(a, -b, atol=1e-13)

    def test_g3_single_mode_closed_form(self):
        h = np.zeros((4, 129))
        h[0] = 1.0
        out = apply_G3(self._traj(h), self.mult, self.spec)
        conv_T = 1.0 - E_HALF_AT_MINUS1
        prof = ml_eval_array(MLParams(0.5, 1.0), -self.grid.nodes**0.5)
        expected = -conv_T * PSI_1 * prof
        assert np.max(np.abs(out.values[0] - expected)) < 1e-11


class TestSolveForward:
    def test_single_mode_closed_form(self):
        spec = unit_mode_spec()
        u, report = solve_forward(spec)
        prof = ml_eval_array(MLParams(0.5, 1.0), -spec.grid.nodes**0.5)
        assert np.max(np.abs(u.values[0] - prof / prof[-1])) < 1e-12
        assert np.max(np.abs(u.values[1:])) == 0.0
        assert report.iterations == 1
        assert report.converged

    def test_zero_data_zero_solution(self):
        basis = dirichlet_laplacian_basis(math.pi, 3)
        grid = TimeGrid(T=1.0, N=64)
        spec = NonlocalProblemSpec(alpha=0.4, beta=0.8, kappa=0.3, T=1.0,
                                   grid=grid, basis=basis, phi=np.zeros(3),
                                   source=LinearSource.zero(grid, basis))
        u, _ = solve_forward(spec)
        assert np.max(np.abs(u.values)) == 0.0

    def test_nonlocal_condition_invariant(self):
        k = None
        for kappa in (0.0, -1.0, 2.0):
            spec = unit_mode_spec(kappa=kappa, N=128)
            u, report = solve_forward(spec)
            res = np.sqrt(
                np.sum((u.values[:, -1] - kappa * u.values[:, 0] - spec.phi) ** 2)
            )
            assert res < 1e-10
            assert report.nonlocal_residual < 1e-10

    def test_linear_with_coefficient_vs_oracle(self):
        grid = TimeGrid(T=1.0, N=256)
        basis = dirichlet_laplacian_basis(math.pi, 4)
        phi = np.array([1.0, 0.0, 0.0, 0.0])
        k = GridFunction(grid, 0.2 + 0.1 * grid.nodes)
        src = LinearSource.from_callable(lambda t, x: np.sin(x) * (1.0 + t), grid, basis)
        spec = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=0.0, T=1.0,
                                   grid=grid, basis=basis, phi=phi, source=src, k=k)
        u, report = solve_forward(spec, tol=1e-12)
        u_ref = oracle_shooting_l1(spec)
        assert rel_l2(u.values, u_ref.values, grid.dt) < 1e-2
        assert report.converged

    def test_nonlinear_wrapper_matches_linear_path(self):
        grid = TimeGrid(T=0.5, N=128)
        basis = dirichlet_laplacian_basis(math.pi, 3)
        phi = np.array([1.0, 0.5, 0.0])
        table = LinearSource.from_callable(lambda t, x: np.sin(x), grid, basis)
        wrapped = NonlinearSource(lambda t, x, u: np.sin(np.asarray(x)) + 0.0 * u,
                                  lipschitz=1e-12)
        tol = 1e-11
        spec_lin = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=-1.0, T=0.5,
                                       grid=grid, basis=basis, phi=phi, source=table)
        spec_nl = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=-1.0, T=0.5,
                                      grid=grid, basis=basis, phi=phi, source=wrapped)
        u_lin, _ = solve_forward(spec_lin, tol=tol)
        u_nl, _ = solve_forward(spec_nl, tol=tol)
        assert np.max(np.abs(u_lin.values - u_nl.values)) < 2.0 * tol

    def test_nonlinear_source_vs_shooting(self):
        src = NonlinearSource(lambda t, x, u: 0.1 * np.sin(u), lipschitz=0.1)
        spec = unit_mode_spec(T=0.5, N=128, source=src)
        u, _ = solve_forward(spec, tol=1e-11)
        u_ref = oracle_shooting_l1(spec, shoot_tol=1e-11)
        assert rel_l2(u.values, u_ref.values, spec.grid.dt) < 1e-2

    def test_picard_geometric_decay_with_coupling(self):
        grid = TimeGrid(T=1.0, N=128)
        basis = dirichlet_laplacian_basis(math.pi, 4)
        phi = np.array([1.0, 0.0, 0.0, 0.0])
        k = GridFunction.constant(grid, 0.3)
        spec = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=0.0, T=1.0,
                                   grid=grid, basis=basis, phi=phi,
                                   source=LinearSource.zero(grid, basis), k=k)
        _, report = solve_forward(spec, tol=1e-12)
        diffs = report.sup_diffs
        assert report.iterations > 3
        ratios = [b / a for a, b in zip(diffs[2:], diffs[3:]) if a > 0 and b > 0]
        assert max(ratios) < 1.0  # strictly contracting after burn-in


class TestShootingOracle:
    def test_matches_mild_solution_single_mode(self):
        spec = unit_mode_spec(N=512)
        u, _ = solve_forward(spec)
        u_ref = oracle_shooting_l1(spec)
        assert rel_l2(u.values, u_ref.values, spec.grid.dt) < 3e-3

    def test_periodic_zero_datum(self):
        basis = dirichlet_laplacian_basis(math.pi, 3)
        grid = TimeGrid(T=1.0, N=64)
        spec = NonlocalProblemSpec(alpha=0.5, beta=1.0, kappa=1.0, T=1.0,
                                   grid=grid, basis=basis, phi=np.zeros(3),
                                   source=LinearSource.zero(grid, basis))
        u = oracle_shooting_l1(spec, shoot_tol=1e-11)
        assert np.max(np.abs(u.values[:, -1] - u.values[:, 0])) < 1e-11
        assert np.max(np.abs(u.values)) < 1e-11

    def test_classical_limit_constant_forcing(self):
        # alpha -> 1 with unit forcing in mode 1: u' + u = 1 with u(T) = phi_1
        # gives u(t) = 1 + (u0 - 1) e^(-t), u0 = 1 + (phi_1 - 1) e^T
        alpha = 0.999
        basis = dirichlet_laplacian_basis(math.pi, 2)
        grid = TimeGrid(T=1.0, N=512)
        phi = np.array([1.0, 0.0])
        modal = np.zeros((2, grid.N + 1))
        modal[0] = 1.0
        spec = NonlocalProblemSpec(alpha=alpha, beta=1.0, kappa=0.0, T=1.0,
                                   grid=grid, basis=basis, phi=phi,
                                   source=LinearSource(modal))
        u = oracle_shooting_l1(spec)
        u0 = 1.0 + (1.0 - 1.0) * math.exp(1.0)
        exact = 1.0 + (u0 - 1.0) * np.exp(-grid.nodes)
        assert np.max(np.abs(u.values[0] - exact)) < 2e-2


class TestPointTraceAndResidual:
    def test_point_trace_values(self):
        spec = unit_mode_spec(N=64)
        u, _ = solve_forward(spec)
        x0 = 1.1
        tr = evaluate_at_point(u, spec.basis, x0)
        e1 = spec.basis.efunc(1, x0)
        assert np.allclose(tr.values, u.values[0] * e1)

    def test_zero_trajectory_trace(self):
        spec = unit_mode_spec(N=32)
        z = ModalTrajectory(spec.grid, np.zeros((4, 33)))
        tr = evaluate_at_point(z, spec.basis, 0.7)
        assert np.all(tr.values == 0.0)

    def test_residual_zero_for_trivial(self):
        spec = unit_mode_spec(N=32)
        z = ModalTrajectory(spec.grid, np.zeros((4, 33)))
        r = pde_residual(z, spec)
        assert np.all(r.values == 0.0)

    def test_residual_positive_for_random(self):
        spec = unit_mode_spec(N=32)
        rng = np.random.default_rng(9)
        r = pde_residual(ModalTrajectory(spec.grid, rng.standard_normal((4, 33))), spec)
        assert np.all(r.values[1:] > 0.0)

    def test_residual_decays_under_refinement(self):
        errs = []
        for N in (64, 128, 256):
            spec = unit_mode_spec(N=N)
            u, _ = solve_forward(spec)
            r = pde_residual(u, spec)
            window = spec.grid.nodes >= spec.T / 16.0
            errs.append(float(np.max(np.abs(r.values[window]))))
        assert errs[0] > errs[1] > errs[2]
        order = math.log2(errs[0] / errs[2]) / 2.0
        assert order == pytest.approx(1.5, abs=0.3)


class TestSourceContracts:
    def test_nonlinear_spot_check(self):
        basis = dirichlet_laplacian_basis(math.pi, 4)
        src = NonlinearSource(lambda t, x, u: 0.1 * np.sin(u), lipschitz=0.1)
        zero_norm, ratio = src.spot_check(basis, np.random.default_rng(4))
        assert zero_norm == 0.0
        assert ratio <= 0.1 + 1e-9

    def test_linear_source_shape_guard(self):
        basis = dirichlet_laplacian_basis(math.pi, 4)
        grid = TimeGrid(T=1.0, N=16)
        src = LinearSource(np.zeros((4, 5)))
        with pytest.raises(ValueError):
            src.modal(grid, basis)
