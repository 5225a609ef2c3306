"""Damped Newton solver for -div(Phi) = theta and the singular outer iteration.

solve_dirichlet minimizes the strictly convex discrete energy by Newton's
method with Armijo backtracking, run as a continuation over a decreasing
regularization schedule eps_1 > eps_2 > ... (each stage warm-starts the next).
The tridiagonal Newton systems are solved by banded Cholesky; a failed
factorization means the Jacobian lost positive definiteness, which for eps > 0
can only be a discretization bug.

solve_singular treats -div(Phi) = K u^(-p) by monotone iteration: freeze the
singular term at the previous iterate and solve the resulting Dirichlet
problem.  The map T(v) = solve(K v^(-p)) is order-reversing, so starting from
a certified discrete subsolution the even iterates increase toward the
solution while the odd iterates decrease toward it from above; the pair
(T(hi), T(T(hi))) brackets the solution and the bracket width is a computable
error bound.  Iterates are kept inside the certified sub/supersolution pair
and the singular term is clamped below at the subsolution to rule out
overflow from undershoot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .core import (
    Grid1D,
    GridFunction,
    ProblemSpec,
    default_k_values,
    validate_spec,
)
from .errors import (
    AdmissibilityViolation,
    BarrierOrderViolation,
    GridMismatch,
    IndefiniteJacobian,
    NonConvergence,
)
from .operator import dflux_of_gradient, energy, flux_of_gradient

__all__ = ["SolverConfig", "SolveReport", "solve_dirichlet", "solve_singular"]

DEFAULT_EPS_SCHEDULE = tuple(10.0**-j for j in range(1, 11))

# Armijo sufficient-decrease constant for the backtracking line search.
ARMIJO_C1 = 1e-4


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets for the inner Newton and outer singular loops.

    ``newton_tol`` bounds the scaled residual sup_i |r_i| / (1 + |theta_i|);
    the scaling makes the criterion meaningful when theta blows up like
    delta^(-a) on heavily graded grids, and reduces to the absolute residual
    for O(1) right-hand sides.  ``eps_schedule`` is the decreasing
    regularization continuation, ending at most 1e-10.  ``picard_tol`` is the
    sup-norm bracket width at which the outer singular iteration stops.
    """

    newton_tol: float = 1e-10
    max_newton_iters: int = 60
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    damping: float = 0.5
    picard_tol: float = 1e-8
    max_picard_iters: int = 100

    def __post_init__(self):
        if self.newton_tol <= 0 or self.picard_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        eps = self.eps_schedule
        if len(eps) == 0 or any(e <= 0 for e in eps):
            raise ValueError("eps_schedule must be non-empty and positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_schedule must be strictly decreasing")
        if eps[-1] > 1e-10:
            raise ValueError("eps_schedule must end at or below 1e-10")
        if self.max_newton_iters < 1 or self.max_picard_iters < 1:
            raise ValueError("iteration budgets must be at least 1")


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of a solve.

    ``final_residual`` is the scaled residual of the last inner Newton stage
    (so ``converged`` implies final_residual <= newton_tol).  For singular
    solves ``picard_gap`` carries the final bracket width sup|hi - lo|, and
    the certified barrier pair used to initialize and guard the iteration is
    attached.
    """

    solution: GridFunction
    iterations: int
    final_residual: float
    converged: bool
    energy_history: tuple[float, ...]
    picard_gap: float | None = None
    sub_barrier: GridFunction | None = None
    super_barrier: GridFunction | None = None
    barrier_c: float | None = None


# Residuals are recomputed from flux differences, which near a graded boundary
# cancel catastrophically (|F_i - F_{i-1}| ~ V_i theta_i while |F_i| = O(1)),
# and for m < 2 the flux derivative amplifies the rounding of Du itself.
# Anything below this multiple of machine epsilon times the assembly scale is
# numerically indistinguishable from zero and must not block convergence.
ASSEMBLY_NOISE = 64.0 * np.finfo(float).eps


def _residual_parts(fw, dphi, u_scale, grid, theta_vals):
    """Energy gradient g_i = -(F_i - F_{i-1}) - V_i theta_i and its fp noise scale.

    The noise model is first-order rounding: each flux carries an error of
    eps_mach * (|F| + phi'(Du) * u_scale / h) and the load term eps_mach * V |theta|.
    """
    vol = grid.cell_volumes
    n = vol.size
    g = np.zeros(n)
    g[1:-1] = -(fw[1:] - fw[:-1]) - vol[1:-1] * theta_vals[1:-1]
    g[0] = -fw[0] - vol[0] * theta_vals[0]
    flux_noise = np.abs(fw) + grid.flux_weights * dphi * (u_scale / grid.h)
    noise = np.zeros(n)
    noise[1:-1] = flux_noise[1:] + flux_noise[:-1]
    noise[0] = flux_noise[0]
    noise += vol * np.abs(theta_vals)
    return g, ASSEMBLY_NOISE * noise


def _scaled_residual(g, noise, vol, theta_vals, sl) -> float:
    """sup_i max(|g_i| - noise_i, 0) / (V_i (1 + |theta_i|)) over the unknowns."""
    r = np.maximum(np.abs(g[sl]) - noise[sl], 0.0)
    return float(np.max(r / (vol[sl] * (1.0 + np.abs(theta_vals[sl])))))


def _newton_stage(grid, theta_vals, m, eps, u, cfg, energies):
    """Minimize the eps-regularized energy to tolerance; returns iterations."""
    sl = grid.unknown_slice
    lo = sl.start
    h, fwgt, vol = grid.h, grid.flux_weights, grid.cell_volumes
    theta_gf = GridFunction(grid, theta_vals)

    e_now = energy(GridFunction(grid, u), theta_gf, m, eps)
    for it in range(cfg.max_newton_iters + 1):
        du = np.diff(u) / h
        fw = fwgt * flux_of_gradient(du, m, eps)
        dphi = dflux_of_gradient(du, m, eps)
        u_scale = max(1e-300, float(np.max(np.abs(u))))
        g_full, noise = _residual_parts(fw, dphi, u_scale, grid, theta_vals)
        res = _scaled_residual(g_full, noise, vol, theta_vals, sl)
        if res <= cfg.newton_tol:
            return u, res, it
        if it == cfg.max_newton_iters:
            raise NonConvergence(
                f"Newton budget exhausted at eps={eps:g}: residual {res:g}",
                report=SolveReport(
                    solution=GridFunction(grid, u),
                    iterations=it,
                    final_residual=res,
                    converged=False,
                    energy_history=tuple(energies),
                ),
            )
        g = g_full[sl]

        # tridiagonal Hessian in banded upper form
        c = fwgt * dphi / h
        nun = g.size
        ab = np.zeros((2, nun))
        diag_full = np.zeros(grid.n)
        diag_full[1:-1] = c[:-1] + c[1:]
        diag_full[0] = c[0]
        ab[1, :] = diag_full[sl]
        ab[0, 1:] = -c[lo : lo + nun - 1]
        try:
            cb = cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:
            raise IndefiniteJacobian(
                f"banded Cholesky failed at eps={eps:g}: {exc}"
            ) from exc
        d = cho_solve_banded((cb, False), -g)
        gd = float(np.dot(g, d))
        if gd >= 0.0:
            raise IndefiniteJacobian("Newton direction is not a descent direction")

        step = np.zeros(grid.n)
        step[sl] = d
        if -gd <= 1e-13 * max(1.0, abs(e_now)):
            # predicted decrease below fp resolution of the energy: the line
            # search cannot see it; take the full step (quadratic basin)
            u = u + step
            e_now = energy(GridFunction(grid, u), theta_gf, m, eps)
            energies.append(e_now)
            continue
        t = 1.0
        while True:
            trial = u + t * step
            e_trial = energy(GridFunction(grid, trial), theta_gf, m, eps)
            if e_trial <= e_now + ARMIJO_C1 * t * gd:
                break
            t *= cfg.damping
            if t < 1e-14:
                raise NonConvergence(
                    f"line search stalled at eps={eps:g}",
                    report=SolveReport(
                        solution=GridFunction(grid, u),
                        iterations=it,
                        final_residual=res,
                        converged=False,
                        energy_history=tuple(energies),
                    ),
                )
        u = trial
        e_now = e_trial
        energies.append(e_now)
    raise AssertionError("unreachable")


def solve_dirichlet(
    theta: GridFunction,
    m: float,
    config: SolverConfig | None = None,
    initial: GridFunction | None = None,
) -> SolveReport:
    """Solve -div(|Du|^(m-2) Du) = theta with homogeneous Dirichlet data.

    ``theta`` must be finite at the unknown nodes (boundary entries are
    ignored).  The converged solution is the unique minimizer of the discrete
    energy; convergence means the scaled residual is below ``newton_tol`` at
    the final regularization eps.  Raises NonConvergence with the partial
    state attached when a budget is exhausted.
    """
    if m <= 1.0:
        raise ValueError("m must exceed 1")
    cfg = config or SolverConfig()
    grid = theta.grid
    theta_vals = np.array(theta.values)
    for i in grid.dirichlet_indices():
        theta_vals[i] = 0.0
    if not np.all(np.isfinite(theta_vals)):
        raise ValueError("theta must be finite at the unknown nodes")

    if initial is None:
        u = np.zeros(grid.n)
    else:
        if not (initial.grid is grid or np.array_equal(initial.grid.nodes, grid.nodes)):
            raise GridMismatch("initial guess lives on a different grid")
        u = np.array(initial.values)
        for i in grid.dirichlet_indices():
            u[i] = 0.0

    energies: list[float] = []
    total_iters = 0
    res = math.inf
    for eps in cfg.eps_schedule:
        u, res, its = _newton_stage(grid, theta_vals, m, eps, u, cfg, energies)
        total_iters += its
    return SolveReport(
        solution=GridFunction(grid, u),
        iterations=total_iters,
        final_residual=res,
        converged=res <= cfg.newton_tol,
        energy_history=tuple(energies),
    )


def _singular_theta(spec, grid, k_vals, v, floor):
    """Sample K * v^(-p) with v clamped below at the subsolution floor."""
    sl = grid.unknown_slice
    vals = np.zeros(grid.n)
    vals[sl] = k_vals[sl] * np.maximum(v[sl], floor[sl]) ** (-spec.p)
    return GridFunction(grid, vals)


def solve_singular(
    spec: ProblemSpec,
    grid: Grid1D,
    config: SolverConfig | None = None,
    k_values: GridFunction | None = None,
    k0: float = 1.0,
) -> SolveReport:
    """Solve -div(|Du|^(m-2) Du) = K u^(-p) by bracketed monotone iteration.

    K defaults to k0 * delta^(-q); a custom weight can be supplied through
    ``k_values`` as long as it stays inside the spec's (k_low, k_high)
    envelope, against which the barriers are certified.

    The iteration starts at a numerically certified subsolution barrier and
    alternates T(v) = solve_dirichlet(K v^(-p)); successive (lo, hi) pairs
    bracket the solution, and the loop stops when sup|hi - lo| <=
    ``picard_tol``.  The barrier scaling constant is widened (doubled) until
    the first iterate stays inside the bracket, so BarrierOrderViolation
    signals a genuinely under-resolved grid or mis-scaled barrier rather than
    ordinary transient behaviour.

    The grid should resolve delta^gamma boundary layers for the predicted
    exponent gamma; grading >= 2/gamma is a good default.
    """
    from .barriers import certified_pair  # deferred: barriers sit above solver

    validate_spec(spec)
    cfg = config or SolverConfig()
    if k_values is None:
        k_gf = default_k_values(spec, grid, k0=k0)
    else:
        k_gf = k_values
        sl = grid.unknown_slice
        envelope = k_gf.values[sl] * grid.delta_nodes[sl] ** spec.q
        if np.any(envelope < spec.k_low * (1 - 1e-12)) or np.any(
            envelope > spec.k_high * (1 + 1e-12)
        ):
            raise AdmissibilityViolation(
                "custom K leaves the (k_low, k_high) envelope: "
                f"K delta^q in [{envelope.min():g}, {envelope.max():g}]"
            )
    k_vals = k_gf.values

    if spec.p == 0.0:
        # no coupling: one Dirichlet solve, still reported as a singular run
        inner = solve_dirichlet(k_gf, spec.m, cfg)
        pair = certified_pair(spec, grid, config=cfg)
        return replace(
            inner,
            picard_gap=0.0,
            sub_barrier=pair.sub,
            super_barrier=pair.super_,
            barrier_c=pair.c,
        )

    pair = certified_pair(spec, grid, config=cfg)

    # T scales like c^(-p/(m-1)) against the barrier's c, so the alternating
    # iteration contracts only for p < m - 1.  Near or beyond that line the
    # scaling mode is removed by geometric damping instead.
    if spec.p >= 0.7 * (spec.m - 1.0):
        inner, iterations, picard_gap, pair = _damped_singular_loop(
            spec, grid, cfg, pair, k_vals
        )
    else:
        inner, iterations, picard_gap, pair = _bracketed_singular_loop(
            spec, grid, cfg, pair, k_vals
        )

    return replace(
        inner,
        iterations=iterations,
        converged=inner.converged,
        picard_gap=picard_gap,
        sub_barrier=pair.sub,
        super_barrier=pair.super_,
        barrier_c=pair.c,
    )


def _budget_error(inner, gap, pair):
    return NonConvergence(
        f"singular iteration budget exhausted: bracket width {gap:g}",
        report=replace(
            inner,
            converged=False,
            picard_gap=gap,
            sub_barrier=pair.sub,
            super_barrier=pair.super_,
            barrier_c=pair.c,
        ),
    )


def _bracketed_singular_loop(spec, grid, cfg, pair, k_vals):
    """Interleaved monotone iteration: lo <- T(hi), hi <- T(lo).

    Starting from the certified subsolution the lower iterates increase and
    the upper ones decrease, bracketing the solution; the bracket width is
    the stopping quantity and a computable error bound.
    """
    tol = cfg.picard_tol

    def t_map(v, warm):
        theta = _singular_theta(spec, grid, k_vals, v, pair.sub.values)
        return solve_dirichlet(theta, spec.m, cfg, initial=warm)

    # Widen the bracket until T maps it into itself: T(sub) must stay below
    # the supersolution (T(sub) >= sub holds by the comparison principle).
    inner = t_map(pair.sub.values, pair.sub)
    widenings = 0
    while np.any(inner.solution.values > pair.super_.values + tol):
        widenings += 1
        if widenings > 24:
            raise BarrierOrderViolation(
                "could not widen the barrier bracket to contain the first iterate"
            )
        pair = pair.widened(2.0)
        inner = t_map(pair.sub.values, pair.sub)

    lo = pair.sub.values
    hi = inner.solution.values
    iterations = 1
    picard_gap = float(np.max(np.abs(hi - lo)))
    while picard_gap > tol:
        if iterations >= cfg.max_picard_iters:
            raise _budget_error(inner, picard_gap, pair)
        rep_lo = t_map(hi, inner.solution)
        new_lo = rep_lo.solution.values
        inner = t_map(new_lo, rep_lo.solution)
        new_hi = inner.solution.values
        iterations += 2
        if np.any(new_lo < pair.sub.values - tol) or np.any(
            new_hi > pair.super_.values + tol
        ):
            raise BarrierOrderViolation(
                "iterate escaped the certified sub/supersolution bracket"
            )
        lo, hi = new_lo, new_hi
        picard_gap = float(np.max(np.abs(hi - lo)))
    return inner, iterations, picard_gap, pair


def _damped_singular_loop(spec, grid, cfg, pair, k_vals):
    """Geometrically damped iteration u <- u^(1-sigma) T(u)^sigma.

    sigma = (m-1)/(m-1+p) cancels the scaling mode exactly (by the
    degree-(m-1) homogeneity of the operator), so the loop converges where
    the undamped alternation does not.  Stops when sup|T(u) - u| is below
    picard_tol, which bounds the distance to the fixed point directly.
    """
    tol = cfg.picard_tol
    sl = grid.unknown_slice
    sigma = (spec.m - 1.0) / (spec.m - 1.0 + spec.p)

    def t_map(v, warm):
        theta = _singular_theta(spec, grid, k_vals, v, pair.sub.values)
        return solve_dirichlet(theta, spec.m, cfg, initial=warm)

    u = pair.sub.values
    inner = t_map(u, pair.sub)
    iterations = 1
    gap = float(np.max(np.abs(inner.solution.values - u)))
    while gap > tol:
        if iterations >= cfg.max_picard_iters:
            raise _budget_error(inner, gap, pair)
        t_u = inner.solution.values
        nxt = np.zeros(grid.n)
        nxt[sl] = np.exp((1.0 - sigma) * np.log(u[sl]) + sigma * np.log(t_u[sl]))
        if (
            np.any(nxt[sl] <= 0.0)
            or np.any(nxt > 4.0 * pair.super_.values + tol)
            or np.any(nxt < 0.25 * pair.sub.values - tol)
        ):
            raise BarrierOrderViolation(
                "damped iterate ran far outside the certified bracket"
            )
        u = nxt
        inner = t_map(u, inner.solution)
        iterations += 1
        gap = float(np.max(np.abs(inner.solution.values - u)))
    final = inner.solution.values
    if np.any(final < pair.sub.values - tol) or np.any(
        final > pair.super_.values + tol
    ):
        raise BarrierOrderViolation(
            "damped iteration settled outside the certified bracket"
        )
    return inner, iterations, gap, pair
