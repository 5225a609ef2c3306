"""Desk-scale solver and verification toolkit for degenerate m-Laplace
Dirichlet problems with boundary-singular reaction terms."""

from .analyzer import (
    DistanceIntegralResult,
    FitResult,
    FixedRHS,
    GradientBoundReport,
    ScanReport,
    Verdict,
    distance_integral_classify,
    fit_boundary_exponent,
    fit_log_correction,
    fit_log_profile,
    gradient_bound_check,
    sobolev_seminorm,
    threshold_scan,
)
from .barriers import (
    SUB,
    SUPER,
    BarrierCertificate,
    BarrierPair,
    BarrierSpec,
    LogPowerOfEigen,
    PowerOfEigen,
    auto_scale,
    build_barrier,
    certified_pair,
    check_barrier,
    regime_families,
)
from .core import (
    INTERVAL01,
    Domain,
    Grid1D,
    GridFunction,
    ProblemSpec,
    Regime,
    RegimeReport,
    classify_regime,
    default_k_values,
    make_graded_grid,
    validate_spec,
)
from .eigen import EigenPair, first_eigenpair, rayleigh_quotient
from .operator import FluxField, apply_mlap, energy, flux_field
from .solver import SolverConfig, SolveReport, solve_dirichlet, solve_singular

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "INTERVAL01",
    "ProblemSpec",
    "Regime",
    "RegimeReport",
    "Grid1D",
    "GridFunction",
    "validate_spec",
    "classify_regime",
    "make_graded_grid",
    "default_k_values",
    "FluxField",
    "apply_mlap",
    "energy",
    "flux_field",
    "SolverConfig",
    "SolveReport",
    "solve_dirichlet",
    "solve_singular",
    "EigenPair",
    "first_eigenpair",
    "rayleigh_quotient",
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
    "FitResult",
    "Verdict",
    "ScanReport",
    "FixedRHS",
    "DistanceIntegralResult",
    "GradientBoundReport",
    "fit_boundary_exponent",
    "fit_log_correction",
    "fit_log_profile",
    "sobolev_seminorm",
    "threshold_scan",
    "distance_integral_classify",
    "gradient_bound_check",
    "__version__",
]
