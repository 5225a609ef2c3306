import numpy as np
import pytest

from mlap1d import (
    Domain,
    GridFunction,
    ProblemSpec,
    SolverConfig,
    apply_mlap,
    default_k_values,
    make_graded_grid,
    solve_dirichlet,
    solve_singular,
)
from mlap1d.errors import NonConvergence

from oracles import torsion_exact


def const_theta(grid, value):
    return GridFunction(grid, np.full(grid.n, float(value)))


class TestSolveDirichlet:
    def test_m2_quadratic_exact(self):
        g = make_graded_grid(33, 1.0)
        rep = solve_dirichlet(const_theta(g, 2.0), 2.0)
        exact = g.nodes * (1 - g.nodes)
        assert rep.converged
        assert np.max(np.abs(rep.solution.values - exact)) <= 1e-10

    def test_m3_torsion(self):
        g = make_graded_grid(1025, 2.0)
        rep = solve_dirichlet(const_theta(g, 1.0), 3.0)
        exact = torsion_exact(3.0, g.nodes)
        assert np.max(np.abs(rep.solution.values - exact)) <= 5e-4
        peak = rep.solution.values.max()
        assert peak == pytest.approx((2.0 / 3.0) * 0.5**1.5, abs=5e-4)

    def test_m2_sine_recovery(self):
        g = make_graded_grid(257, 1.0)
        theta = GridFunction.from_callable(
            g, lambda x: np.pi**2 * np.sin(np.pi * x), dirichlet=True
        )
        rep = solve_dirichlet(theta, 2.0)
        err = np.max(np.abs(rep.solution.values - np.sin(np.pi * g.nodes)))
        assert err <= 1e-4  # O(h^2) at h = 1/256

    def test_energy_history_non_increasing(self):
        g = make_graded_grid(257, 2.0)
        rep = solve_dirichlet(const_theta(g, 1.0), 3.0)
        hist = np.array(rep.energy_history)
        assert np.all(np.diff(hist) <= 1e-12 * (1 + np.abs(hist[:-1])))

    def test_converged_respects_tolerance(self):
        g = make_graded_grid(129, 2.0)
        cfg = SolverConfig(newton_tol=1e-8)
        rep = solve_dirichlet(const_theta(g, 1.0), 2.5, cfg)
        assert rep.converged and rep.final_residual <= cfg.newton_tol

    def test_nonconvergence_carries_partial_state(self):
        g = make_graded_grid(257, 2.0)
        cfg = SolverConfig(max_newton_iters=1)
        with pytest.raises(NonConvergence) as err:
            solve_dirichlet(const_theta(g, 1.0), 3.0, cfg)
        assert err.value.report is not None
        assert not err.value.report.converged
        assert err.value.report.solution.values.shape == (g.n,)

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    @pytest.mark.parametrize("m", [1.5, 3.0])
    def test_homogeneity(self, m, c):
        # solve(c^(m-1) theta) = c * solve(theta)
        g = make_graded_grid(129, 1.5)
        theta = GridFunction.from_callable(
            g, lambda x: 1.0 + np.sin(np.pi * x), dirichlet=True
        )
        base = solve_dirichlet(theta, m).solution.values
        scaled = solve_dirichlet(
            GridFunction(g, c ** (m - 1.0) * theta.values), m
        ).solution.values
        assert np.max(np.abs(scaled - c * base)) <= 1e-7 * c * np.max(np.abs(base))

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
    def test_comparison_principle(self, m):
        g = make_graded_grid(129, 1.5)
        rng = np.random.default_rng(42)
        for _ in range(3):
            base = rng.uniform(0.2, 1.0, size=g.n)
            bump = rng.uniform(0.0, 1.0, size=g.n)
            th1 = GridFunction(g, base)
            th2 = GridFunction(g, base + bump)
            u1 = solve_dirichlet(th1, m).solution.values
            u2 = solve_dirichlet(th2, m).solution.values
            assert np.all(u1 <= u2 + 1e-9)

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 4.0])
    def test_refinement_order_at_least_one(self, m):
        errs = []
        for n in (257, 513, 1025):
            g = make_graded_grid(n, 2.0)
            if m == 2.0:
                # m = 2 torsion is quadratic (exact on every grid); use the
                # sine manufactured solution to see the discretization order
                theta = GridFunction.from_callable(
                    g, lambda x: np.pi**2 * np.sin(np.pi * x), dirichlet=True
                )
                exact = np.sin(np.pi * g.nodes)
            else:
                theta = const_theta(g, 1.0)
                exact = torsion_exact(m, g.nodes)
            rep = solve_dirichlet(theta, m)
            errs.append(np.max(np.abs(rep.solution.values - exact)))
        order1 = np.log2(errs[0] / errs[1])
        order2 = np.log2(errs[1] / errs[2])
        assert min(order1, order2) >= 1.0


class TestSolveSingular:
    def test_p_zero_reduces_to_dirichlet(self):
        spec = ProblemSpec(m=2.0, p=0.0, q=0.5)
        g = make_graded_grid(513, 2.0)
        rep = solve_singular(spec, g)
        direct = solve_dirichlet(default_k_values(spec, g), spec.m)
        assert np.max(np.abs(rep.solution.values - direct.solution.values)) <= 1e-10
        assert rep.picard_gap == 0.0

    def test_manufactured_singular_solution(self):
        # K built so that sin(pi x)^(2/3) is the exact discrete solution
        spec_mpq = dict(m=2.0, p=0.5, q=1.0)
        g = make_graded_grid(2049, 3.0)
        u_star = GridFunction.from_callable(
            g, lambda x: np.sin(np.pi * x) ** (2.0 / 3.0), dirichlet=True
        )
        neg_lap = apply_mlap(u_star, 2.0)
        sl = g.unknown_slice
        k_vals = np.zeros(g.n)
        k_vals[sl] = neg_lap.values[sl] * u_star.values[sl] ** 0.5
        env = k_vals[sl] * g.delta_nodes[sl]
        spec = ProblemSpec(**spec_mpq, k_low=env.min(), k_high=env.max())
        rep = solve_singular(spec, g, k_values=GridFunction(g, k_vals))
        assert np.max(np.abs(rep.solution.values - u_star.values)) <= 5e-3

    def test_supercritical_solution_positive_and_bracketed(self):
        spec = ProblemSpec(m=2.0, p=0.5, q=1.0)
        g = make_graded_grid(1025, 3.0)
        rep = solve_singular(spec, g)
        u = rep.solution
        assert rep.converged
        assert rep.final_residual <= SolverConfig().newton_tol
        assert np.all(u.interior > 0)
        tol = SolverConfig().picard_tol
        assert np.all(u.values >= rep.sub_barrier.values - tol)
        assert np.all(u.values <= rep.super_barrier.values + tol)

    def test_monotone_iteration_ordering(self):
        # successive lower iterates never decrease (up to picard_tol)
        from mlap1d.solver import _singular_theta

        spec = ProblemSpec(m=2.0, p=0.5, q=1.0)
        g = make_graded_grid(513, 3.0)
        rep = solve_singular(spec, g)
        cfg = SolverConfig()
        k = default_k_values(spec, g).values
        sub = rep.sub_barrier
        lo = sub.values
        prev = lo
        for _ in range(4):
            hi = solve_dirichlet(
                _singular_theta(spec, g, k, prev, sub.values), spec.m, cfg
            ).solution.values
            nxt = solve_dirichlet(
                _singular_theta(spec, g, k, hi, sub.values), spec.m, cfg
            ).solution.values
            assert np.all(nxt >= prev - cfg.picard_tol)
            prev = nxt

    def test_custom_k_outside_envelope_rejected(self):
        from mlap1d.errors import AdmissibilityViolation

        spec = ProblemSpec(m=2.0, p=0.5, q=1.0)
        g = make_graded_grid(257, 3.0)
        bad = GridFunction.interior_from_callable(g, lambda x: 3.0 / g.domain.delta(x))
        with pytest.raises(AdmissibilityViolation):
            solve_singular(spec, g, k_values=bad)

    def test_radial_singular_solve(self):
        spec = ProblemSpec(m=2.0, p=0.5, q=0.5, domain=Domain.ball(3))
        g = make_graded_grid(513, 3.0, spec.domain)
        rep = solve_singular(spec, g)
        assert rep.converged
        assert np.all(rep.solution.values[:-1] > 0)


class TestSolverConfig:
    def test_schedule_must_decrease(self):
        with pytest.raises(ValueError):
            SolverConfig(eps_schedule=(1e-2, 1e-1, 1e-10))

    def test_schedule_must_end_small(self):
        with pytest.raises(ValueError):
            SolverConfig(eps_schedule=(1e-1, 1e-2))

    def test_positive_tolerances(self):
        with pytest.raises(ValueError):
            SolverConfig(newton_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(picard_tol=-1e-8)

    def test_damping_range(self):
        with pytest.raises(ValueError):
            SolverConfig(damping=1.0)

    def test_indefinite_jacobian_detected(self, monkeypatch):
        # a failed banded Cholesky must surface as IndefiniteJacobian
        import mlap1d.solver as S
        from mlap1d.errors import IndefiniteJacobian

        def boom(*a, **k):
            raise np.linalg.LinAlgError("3-th leading minor not positive definite")

        monkeypatch.setattr(S, "cholesky_banded", boom)
        g = make_graded_grid(33, 1.0)
        with pytest.raises(IndefiniteJacobian):
            solve_dirichlet(const_theta(g, 1.0), 2.0)


class TestStrongCouplingAndOtherM:
    def test_strong_coupling_damped_path(self):
        # p >= m-1: the undamped alternation is non-contractive; the damped
        # branch must still converge and stay inside the certified bracket
        spec = ProblemSpec(m=2.0, p=1.2, q=0.0)
        g = make_graded_grid(1025, 3.0)
        rep = solve_singular(spec, g)
        assert rep.converged and rep.picard_gap <= 1e-8
        assert np.all(rep.solution.values >= rep.sub_barrier.values - 1e-8)
        assert np.all(rep.solution.values <= rep.super_barrier.values + 1e-8)
        # self-consistency of the fixed point
        k = default_k_values(spec, g).values
        theta = np.zeros(g.n)
        sl = g.unknown_slice
        theta[sl] = k[sl] * rep.solution.values[sl] ** (-spec.p)
        res = apply_mlap(rep.solution, spec.m).values - theta
        scaled = np.abs(res[sl]) / (1.0 + np.abs(theta[sl]))
        assert scaled.max() <= 1e-5

    def test_m3_supercritical(self):
        # m = 3, p = 0.5, q = 1: gamma = 0.8, all-nonlinear inner solves
        spec = ProblemSpec(m=3.0, p=0.5, q=1.0)
        g = make_graded_grid(1025, 3.0)
        rep = solve_singular(spec, g)
        assert rep.converged
        assert np.all(rep.solution.interior > 0)
        from mlap1d import fit_boundary_exponent

        fit = fit_boundary_exponent(rep.solution, (1e-4, 1e-2))
        assert fit.exponent == pytest.approx(0.8, abs=0.05)
