"""Sub/supersolution barrier families, scaling search, and certification.

Barriers are built from the first eigenfunction phi (sup-norm 1) in two
families:

  * power:      c^(+-1) * phi^gamma,              gamma in (0, 1]
  * log-power:  c^(+-1) * phi * log^s (A / phi),   s > 0, A > sup phi

with the same constant c > 1 scaling the supersolution up and the subsolution
down.  A candidate w is numerically certified as a subsolution of
-div(Phi) = rhs when the discrete residual -div(Phi(w)) - rhs(w) is <= slack
at every checked node, and as a supersolution when it is >= -slack; the
innermost cells next to each Dirichlet boundary are skipped because the
one-sided stencil meets the boundary singularity there and the inequalities
being certified are interior statements.  For the singular problem the
right-hand side is evaluated at the candidate itself, K * w^(-p), which is
the definition of a sub/supersolution of that equation.

Certification is monotone in c on both sides, so the smallest certifying
power of two is found by walking the ladder c = 2, 4, 8, ...  A certificate
obtained on a coarse grid is only trusted after it survives refinement:
a wrong boundary exponent can look certified on a fixed grid because its
violation zone hides below the resolved scale, but refinement exposes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Grid1D, GridFunction, ProblemSpec, Regime, classify_regime, same_grid
from .eigen import EigenPair, first_eigenpair
from .errors import (
    DomainError,
    GridMismatch,
    NoCertifiableScale,
    NonPositiveCandidate,
)
from .operator import apply_mlap

__all__ = [
    "PowerOfEigen",
    "LogPowerOfEigen",
    "BarrierSpec",
    "BarrierCertificate",
    "BarrierPair",
    "SUB",
    "SUPER",
    "build_barrier",
    "check_barrier",
    "auto_scale",
    "regime_families",
    "certified_pair",
    "default_log_scale",
]

SUB = "sub"
SUPER = "super"


@dataclass(frozen=True)
class PowerOfEigen:
    """Barrier profile phi^gamma."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError(f"power barrier exponent must be in (0, 1], got {self.gamma}")

    def describe(self) -> str:
        return f"power(gamma={self.gamma:g})"


@dataclass(frozen=True)
class LogPowerOfEigen:
    """Barrier profile phi * log^s(A / phi)."""

    s: float
    big_a: float

    def __post_init__(self):
        if self.s <= 0.0:
            raise DomainError(f"log barrier exponent must be positive, got {self.s}")
        if self.big_a <= 1.0:
            raise DomainError(f"log scale A must exceed 1, got {self.big_a}")

    def describe(self) -> str:
        return f"logpower(s={self.s:g}, A={self.big_a:g})"


Family = PowerOfEigen | LogPowerOfEigen


def default_log_scale(domain, s: float) -> float:
    """Default A for the log-power family.

    Exceeds 1 + diam(domain), and also e^s so that the profile stays concave
    at the eigenfunction maximum (log^s(A/phi) needs log(A) > s there for the
    supersolution inequality to have the right sign at interior maxima).
    """
    return max(domain.diameter + 2.0, math.e**s + 1.0)


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """One barrier: profile family, scaling c, side, and the base eigenpair."""

    family: Family
    c: float
    side: str
    base: EigenPair

    def __post_init__(self):
        if self.side not in (SUB, SUPER):
            raise ValueError(f"side must be {SUB!r} or {SUPER!r}")
        if self.c < 1.0:
            raise ValueError(f"scaling constant must be >= 1, got {self.c}")

    @property
    def scale(self) -> float:
        return 1.0 / self.c if self.side == SUB else self.c


def build_barrier(spec: BarrierSpec, grid: Grid1D) -> GridFunction:
    """Sample the barrier on ``grid`` (the base eigenpair's own grid)."""
    if not same_grid(spec.base.grid, grid):
        raise GridMismatch("barrier base eigenpair was computed on a different grid")
    phi = spec.base.eigenfunction.values
    vals = np.zeros(grid.n)
    sl = grid.unknown_slice
    p_int = phi[sl]
    fam = spec.family
    if isinstance(fam, PowerOfEigen):
        vals[sl] = spec.scale * p_int**fam.gamma
    else:
        if fam.big_a <= phi.max():
            raise DomainError(
                f"log scale A={fam.big_a:g} must exceed max phi = {phi.max():g}"
            )
        vals[sl] = spec.scale * p_int * np.log(fam.big_a / p_int) ** fam.s
    return GridFunction(grid, vals)


@dataclass(frozen=True, eq=False)
class BarrierCertificate:
    """Result of a barrier inequality check.

    ``worst_margin`` is the smallest slack-adjusted margin over the checked
    nodes (negative means the inequality failed there), ``worst_node`` the
    node index where it occurs.
    """

    side: str
    certified: bool
    worst_node: int
    worst_margin: float
    checked_nodes: int
    slack: float
    skip_cells: int
    description: str = ""

    def report_items(self) -> list[tuple[str, str]]:
        return [
            ("side", self.side),
            ("certified", "true" if self.certified else "false"),
            ("worst_node", str(self.worst_node)),
            ("worst_margin", f"{self.worst_margin:.17g}"),
            ("checked_nodes", str(self.checked_nodes)),
            ("slack", f"{self.slack:.17g}"),
            ("skip_cells", str(self.skip_cells)),
            ("description", self.description),
        ]


def _checked_indices(grid: Grid1D, skip_cells: int) -> np.ndarray:
    n = grid.n
    hi = n - 2 - skip_cells  # last node whose right cell is clear of the boundary zone
    lo = 0 if grid.domain.is_ball else skip_cells + 1
    if hi < lo:
        raise ValueError("grid too coarse for the requested skip zone")
    return np.arange(lo, hi + 1)


def _rhs_at(candidate: GridFunction, rhs, side: str) -> np.ndarray:
    """Right-hand side values at the nodes, fixed theta or K * candidate^(-p).

    For the singular right-hand side the weight envelope is used one-sidedly:
    a subsolution of k_low delta^(-q) u^(-p) is a subsolution for every
    admissible K >= k_low delta^(-q), and symmetrically for supersolutions
    with k_high, so certificates hold for the whole envelope.
    """
    if isinstance(rhs, GridFunction):
        if not same_grid(rhs.grid, candidate.grid):
            raise GridMismatch("fixed theta lives on a different grid")
        return rhs.values
    spec: ProblemSpec = rhs
    grid = candidate.grid
    sl = grid.unknown_slice
    if np.any(candidate.values[sl] <= 0.0):
        raise NonPositiveCandidate("singular rhs needs a positive candidate")
    k0 = spec.k_low if side == SUB else spec.k_high
    vals = np.zeros(grid.n)
    delta = grid.delta_nodes[sl]
    vals[sl] = k0 * delta ** (-spec.q) * candidate.values[sl] ** (-spec.p)
    return vals


def check_barrier(
    candidate: GridFunction,
    side: str,
    rhs,
    m: float,
    slack: float = 0.0,
    skip_cells: int = 2,
    description: str = "",
) -> BarrierCertificate:
    """Certify the discrete sub/supersolution inequality for ``candidate``.

    ``rhs`` is either a fixed GridFunction theta or a ProblemSpec, in which
    case the singular right-hand side K * candidate^(-p) is used (candidate
    must then be positive at interior nodes).  Sub is certified iff the
    residual -div(Phi(candidate)) - rhs is <= slack at every checked node,
    super iff it is >= -slack.
    """
    if side not in (SUB, SUPER):
        raise ValueError(f"side must be {SUB!r} or {SUPER!r}")
    grid = candidate.grid
    res = apply_mlap(candidate, m).values - _rhs_at(candidate, rhs, side)
    idx = _checked_indices(grid, skip_cells)
    if side == SUB:
        margins = slack - res[idx]
    else:
        margins = res[idx] + slack
    k = int(np.argmin(margins))
    return BarrierCertificate(
        side=side,
        certified=bool(margins[k] >= 0.0),
        worst_node=int(idx[k]),
        worst_margin=float(margins[k]),
        checked_nodes=idx.size,
        slack=slack,
        skip_cells=skip_cells,
        description=description,
    )


def auto_scale(
    family: Family,
    side: str,
    rhs,
    m: float,
    base: EigenPair,
    c_max: float = 2.0**20,
    slack: float = 0.0,
    skip_cells: int = 2,
) -> tuple[float, BarrierCertificate]:
    """Smallest power-of-two c in (1, c_max] whose barrier certifies.

    Certification is monotone in c for both sides (the properly scaled side
    of the inequality strengthens as c grows), so the first certifying rung
    of the ladder is the smallest certifying power of two.  Raises
    NoCertifiableScale when c_max is reached, which signals a wrong profile
    exponent or an under-resolved grid.
    """
    grid = base.grid
    c = 2.0
    last = None
    while c <= c_max:
        bspec = BarrierSpec(family=family, c=c, side=side, base=base)
        cand = build_barrier(bspec, grid)
        cert = check_barrier(
            cand, side, rhs, m, slack=slack, skip_cells=skip_cells,
            description=f"{family.describe()} c={c:g} {side}",
        )
        if cert.certified:
            return c, cert
        last = cert
        c *= 2.0
    raise NoCertifiableScale(
        f"no certifying c <= {c_max:g} for {family.describe()} ({side}); "
        f"last margin {last.worst_margin:g} at node {last.worst_node}"
        if last
        else f"c_max {c_max:g} below the first ladder rung"
    )


def regime_families(spec: ProblemSpec) -> tuple[Family, Family]:
    """Barrier profiles (sub, super) appropriate for the spec's regime.

    Supercritical: both sides share the power profile with the predicted
    boundary exponent.  Critical: both sides share the log-power profile with
    the predicted log exponent.  Subcritical: the subsolution is the plain
    eigenfunction (gamma = 1, matching u ~ delta from below) while the
    supersolution needs unbounded curvature at the boundary and uses the
    log-power profile, an upper bound one log factor above u ~ delta.
    """
    report = classify_regime(spec)
    if report.regime is Regime.SUPERCRITICAL:
        fam = PowerOfEigen(report.boundary_exponent)
        return fam, fam
    s = 1.0 / (spec.m + spec.p - 1.0)
    logfam = LogPowerOfEigen(s=s, big_a=default_log_scale(spec.domain, s))
    if report.regime is Regime.CRITICAL:
        return logfam, logfam
    return PowerOfEigen(1.0), logfam


@dataclass(frozen=True, eq=False)
class BarrierPair:
    """A certified (sub, super) bracket sharing one scaling constant."""

    sub: GridFunction
    super_: GridFunction
    c: float
    sub_cert: BarrierCertificate
    super_cert: BarrierCertificate
    sub_spec: BarrierSpec
    super_spec: BarrierSpec
    rhs_spec: ProblemSpec

    def widened(self, factor: float) -> "BarrierPair":
        """Rescale by ``factor`` > 1; certification is preserved by monotonicity."""
        grid = self.sub.grid
        c = self.c * factor
        sub_spec = replace(self.sub_spec, c=c)
        super_spec = replace(self.super_spec, c=c)
        sub = build_barrier(sub_spec, grid)
        sup = build_barrier(super_spec, grid)
        return BarrierPair(
            sub=sub,
            super_=sup,
            c=c,
            sub_cert=self.sub_cert,
            super_cert=self.super_cert,
            sub_spec=sub_spec,
            super_spec=super_spec,
            rhs_spec=self.rhs_spec,
        )


def certified_pair(
    spec: ProblemSpec,
    grid: Grid1D,
    base: EigenPair | None = None,
    config=None,
    c_max: float = 2.0**20,
    slack: float = 0.0,
    skip_cells: int = 2,
    eigen_tol: float = 1e-9,
) -> BarrierPair:
    """Certified sub/supersolution pair for the singular problem on ``grid``.

    Both sides use the smallest common power-of-two constant (certification
    is monotone in c, so the maximum of the per-side constants certifies
    both).
    """
    if base is None:
        base = first_eigenpair(grid, spec.m, tol=eigen_tol, config=config)
    sub_fam, super_fam = regime_families(spec)
    c_sub, _ = auto_scale(
        sub_fam, SUB, spec, spec.m, base, c_max=c_max, slack=slack, skip_cells=skip_cells
    )
    c_sup, _ = auto_scale(
        super_fam, SUPER, spec, spec.m, base, c_max=c_max, slack=slack, skip_cells=skip_cells
    )
    c = max(c_sub, c_sup)
    sub_spec = BarrierSpec(family=sub_fam, c=c, side=SUB, base=base)
    super_spec = BarrierSpec(family=super_fam, c=c, side=SUPER, base=base)
    sub = build_barrier(sub_spec, grid)
    sup = build_barrier(super_spec, grid)
    sub_cert = check_barrier(
        sub, SUB, spec, spec.m, slack=slack, skip_cells=skip_cells,
        description=f"{sub_fam.describe()} c={c:g} sub",
    )
    super_cert = check_barrier(
        sup, SUPER, spec, spec.m, slack=slack, skip_cells=skip_cells,
        description=f"{super_fam.describe()} c={c:g} super",
    )
    if not (sub_cert.certified and super_cert.certified):
        raise NoCertifiableScale(
            "shared constant failed re-certification; certification is expected "
            "to be monotone in c"
        )
    return BarrierPair(
        sub=sub,
        super_=sup,
        c=c,
        sub_cert=sub_cert,
        super_cert=super_cert,
        sub_spec=sub_spec,
        super_spec=super_spec,
        rhs_spec=spec,
    )
