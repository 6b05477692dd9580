"""chemoflux: a 1-D finite-difference laboratory for viscous chemotaxis
conservation laws and their zero-viscosity limit.

The package integrates the coupled system

    u_t + (eps * u^2 - v)_x = eps * u_xx
    v_t - (u v)_x           = v_xx

and its eps = 0 limit, audits entropy balance, mass conservation, and a
positivity floor along trajectories, measures the convergence rate of the
viscous solutions toward the limit as eps shrinks, and translates
chemotaxis (density, chemoattractant) trajectories into these variables
via the logarithmic-gradient substitution.
"""

from .convergence import (
    ConvergenceReport,
    LadderError,
    RungError,
    SelfConvergenceRow,
    energy_functional,
    fit_slope,
    run_ladder,
    self_convergence,
)
from .diagnostics import (
    H2_BOUNDARY_STENCIL_NOTE,
    DiagnosticsRecord,
    EntropyResidualField,
    FloorReport,
    NormBundle,
    audit_record,
    entropy_monotonicity_check,
    entropy_residual,
    norms,
    positivity_floor_check,
    trapezoid,
)
from .ksbridge import (
    ConservationFormResidual,
    KSParams,
    KSState,
    RescaleFactors,
    hopf_cole,
    inverse_hopf_cole,
    rescale_to_normalized,
    residual_vs_conservation_form,
)
from .model import (
    BOUNDARY_TOL,
    EntropyValue,
    Family,
    Grid1D,
    InitialProfile,
    Kind,
    ProblemSetup,
    State,
    entropy_pair,
    flux,
    make_initial,
)
from .stepping import (
    FAR_FIELD_TOL,
    DivergenceError,
    FluxForm,
    PositivityLossError,
    ProgressError,
    SolverConfig,
    TrajectoryRecorder,
    coupled_imex_step,
    integrate,
    step_limit,
    step_viscous,
)
from .tridiag import SingularPivotError, TridiagonalSystem, solve_tridiagonal

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "BOUNDARY_TOL",
    "EntropyValue",
    "Family",
    "Grid1D",
    "InitialProfile",
    "Kind",
    "ProblemSetup",
    "State",
    "entropy_pair",
    "flux",
    "make_initial",
    # stepping
    "FAR_FIELD_TOL",
    "DivergenceError",
    "FluxForm",
    "PositivityLossError",
    "ProgressError",
    "SolverConfig",
    "TrajectoryRecorder",
    "coupled_imex_step",
    "integrate",
    "step_limit",
    "step_viscous",
    # diagnostics
    "H2_BOUNDARY_STENCIL_NOTE",
    "DiagnosticsRecord",
    "EntropyResidualField",
    "FloorReport",
    "NormBundle",
    "audit_record",
    "entropy_monotonicity_check",
    "entropy_residual",
    "norms",
    "positivity_floor_check",
    "trapezoid",
    # convergence
    "ConvergenceReport",
    "LadderError",
    "RungError",
    "SelfConvergenceRow",
    "energy_functional",
    "fit_slope",
    "run_ladder",
    "self_convergence",
    # chemotaxis bridge
    "ConservationFormResidual",
    "KSParams",
    "KSState",
    "RescaleFactors",
    "hopf_cole",
    "inverse_hopf_cole",
    "rescale_to_normalized",
    "residual_vs_conservation_form",
    # linear algebra kernel
    "SingularPivotError",
    "TridiagonalSystem",
    "solve_tridiagonal",
]
