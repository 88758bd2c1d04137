"""Numerical laboratory for radial quasilinear wave equations.

Subpackages cover radial grids and transforms (`grids`), fractional and
Littlewood-Paley calculus (`calculus`), space-time norms (`norms`), weighted
inequality checks (`inequalities`), Morawetz multiplier identities
(`multiplier`), the leapfrog wave solver (`solver`), Picard iteration
(`iteration`), and experiment drivers (`experiments`, `cli`).

The names re-exported here are the stable surface the CLI and the test
suite are written against; everything else is internal.
"""

from .experiments import (
    CoefficientCase,
    GaussianPulse,
    KssTable,
    LifespanMeasurement,
    RunRecord,
    concentration_sweep,
    kss_constant_sweep,
    lifespan_sweep,
    lifespan_sweep_fit,
    measure_lifespan,
    quasilinear_model,
    run_nonlinear,
    utt_square_model,
)
from .grids import (
    RadialGrid,
    RadialProfile,
    SpectralProfile,
    forward_transform,
    integrate_weighted,
    inverse_transform,
    l2_norm,
)
from .inequalities import (
    InequalityCase,
    TestFamily,
    boundary_violation_sweep,
    estimate_best_constant,
    evaluate_family,
)
from .iteration import (
    NonlinearitySpec,
    ScalarFunction,
    convergence_report,
    picard_iterate,
    uniform_bound_report,
)
from .multiplier import (
    CoefficientField,
    MultiplierSpec,
    building_block_residual,
    energy_identity_report,
    identity_residual,
    integrated_identity_gap,
    q0_density,
    refinement_ratio,
    sign_condition_report,
)
from .norms import (
    NormParams,
    SpaceTimeField,
    besov_norm,
    le_norm,
    sobolev_norm,
    x1_norm,
    xt_dual_norm,
    xt_norm,
)
from .solver import (
    BlowupSignal,
    BoundaryContactError,
    NumericalFailureError,
    data_norm,
    energy_drift_check,
    pa_tilde_xt_norm,
    solve_linear,
    static_evaluator,
    zero_evaluator,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupSignal",
    "BoundaryContactError",
    "CoefficientCase",
    "CoefficientField",
    "GaussianPulse",
    "InequalityCase",
    "KssTable",
    "LifespanMeasurement",
    "MultiplierSpec",
    "NonlinearitySpec",
    "NormParams",
    "NumericalFailureError",
    "RadialGrid",
    "RadialProfile",
    "RunRecord",
    "ScalarFunction",
    "SpaceTimeField",
    "SpectralProfile",
    "TestFamily",
    "besov_norm",
    "boundary_violation_sweep",
    "building_block_residual",
    "concentration_sweep",
    "convergence_report",
    "data_norm",
    "energy_drift_check",
    "energy_identity_report",
    "estimate_best_constant",
    "evaluate_family",
    "forward_transform",
    "identity_residual",
    "integrate_weighted",
    "integrated_identity_gap",
    "inverse_transform",
    "kss_constant_sweep",
    "l2_norm",
    "le_norm",
    "lifespan_sweep",
    "lifespan_sweep_fit",
    "measure_lifespan",
    "pa_tilde_xt_norm",
    "picard_iterate",
    "q0_density",
    "quasilinear_model",
    "refinement_ratio",
    "run_nonlinear",
    "sign_condition_report",
    "sobolev_norm",
    "solve_linear",
    "static_evaluator",
    "uniform_bound_report",
    "utt_square_model",
    "x1_norm",
    "xt_dual_norm",
    "xt_norm",
    "zero_evaluator",
]
