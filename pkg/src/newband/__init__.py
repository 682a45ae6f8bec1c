"""Numerical laboratory for spectral band formation in unitary invariant
matrix ensembles.

The package computes, at desk scale and in extended precision, the objects
appearing when a new spectral band is about to open at a point away from the
bulk: one-interval equilibrium measures and their effective potentials,
critically tuned polynomial potentials, a corrected two-band density model
for temperatures just past critical, finite-degree orthogonal polynomial
kernels, the scalar pieces of the steepest-descent analysis, and the
limiting-kernel comparisons themselves.
"""

from .numerics import (
    PrecisionContext,
    Interval,
    Polynomial,
    QuadratureRule,
    integrate,
    integrate_pv,
    find_root,
)
from .equilibrium import (
    Potential,
    OneCutMeasure,
    CriticalReport,
    EquilibriumError,
    NotOneCutError,
    NoCriticalPointError,
    AmbiguousOrderError,
    SynthesisError,
    solve_one_cut,
    effective_potential,
    detect_critical_point,
    arcsine_log_potential,
    phi,
    br_derivative_check,
    synthesize_birth_potential,
    q_identity_check,
)
from .orthopoly import (
    WeightSpec,
    RecurrenceTable,
    KernelGrid,
    OrthopolyError,
    PrecisionExhaustedError,
    stieltjes_recurrence,
    cd_kernel,
    model_kernel,
    correlation_det,
    coupling_consistency_residual,
    weighted_cauchy_transform,
    weighted_cauchy_boundary,
)
from .ansatz import (
    AnsatzParams,
    build_params,
    eta,
    sqrt_q_tilde,
    sqrt_q_critical,
    rho_tilde,
    band_series,
    h_tilde,
    filling_identity,
    profile_polynomial,
    check_thineq,
    sqrt_q_deformation_residual,
    log_potential_deformation_residual,
    critical_gap_residual,
)
from .rht import (
    GFunction,
    ParametrixFrame,
    JumpResidual,
    VariationalRow,
    build_g_function,
    g_eval,
    gineq_residuals,
    band_mismatch_series,
    F_map,
    szego_K,
    pi_matrix,
    build_frame,
    global_parametrix,
    conformal_zeta,
    tau_Z,
    cauchy_parametrix,
    run_jump_suite,
    jump_residuals_to_csv,
)

__all__ = [
    "PrecisionContext",
    "Interval",
    "Polynomial",
    "QuadratureRule",
    "integrate",
    "integrate_pv",
    "find_root",
    "Potential",
    "OneCutMeasure",
    "CriticalReport",
    "EquilibriumError",
    "NotOneCutError",
    "NoCriticalPointError",
    "AmbiguousOrderError",
    "SynthesisError",
    "solve_one_cut",
    "effective_potential",
    "detect_critical_point",
    "arcsine_log_potential",
    "phi",
    "br_derivative_check",
    "synthesize_birth_potential",
    "q_identity_check",
    "WeightSpec",
    "RecurrenceTable",
    "KernelGrid",
    "OrthopolyError",
    "PrecisionExhaustedError",
    "stieltjes_recurrence",
    "cd_kernel",
    "model_kernel",
    "correlation_det",
    "coupling_consistency_residual",
    "weighted_cauchy_transform",
    "weighted_cauchy_boundary",
    "AnsatzParams",
    "build_params",
    "eta",
    "sqrt_q_tilde",
    "sqrt_q_critical",
    "rho_tilde",
    "band_series",
    "h_tilde",
    "filling_identity",
    "profile_polynomial",
    "check_thineq",
    "sqrt_q_deformation_residual",
    "log_potential_deformation_residual",
    "critical_gap_residual",
    "GFunction",
    "ParametrixFrame",
    "JumpResidual",
    "VariationalRow",
    "build_g_function",
    "g_eval",
    "gineq_residuals",
    "band_mismatch_series",
    "F_map",
    "szego_K",
    "pi_matrix",
    "build_frame",
    "global_parametrix",
    "conformal_zeta",
    "tau_Z",
    "cauchy_parametrix",
    "run_jump_suite",
    "jump_residuals_to_csv",
]

__version__ = "0.1.0"
