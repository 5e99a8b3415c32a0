"""Godunov and Strang operator splitting for the KdV equation and the logistic ODE."""

from .convergence import (
    ConvergenceReport,
    ErrorSample,
    ExactClosedForm,
    ExactSoliton,
    FineReference,
    SplitProblem,
    error_at_final_time,
    estimate_slope,
    kdv_problem,
    kdv_soliton_problem,
    logistic_problem,
    run_refinement_studies,
    run_refinement_study,
)
from .exceptions import BlowUpError, ConfigError, FlowError, SplittingFailure
from .kdv import (
    AiryFlow,
    BurgersFlow,
    KdVReference,
    SolitonParams,
    airy_evolve,
    burgers_evolve,
    commutator_AB,
    conserved_quantities,
    forcing_F,
    forcing_G,
    kdv_reference_evolve,
    soliton,
)
from .spectral import (
    PeriodicGrid,
    RealField,
    Spectrum,
    dealiased_product,
    derivative,
    from_spectrum,
    l2_inner,
    sobolev_norm,
    to_spectrum,
)
from .splitting import (
    FlowMap,
    FunctionFlow,
    IdentityFlow,
    SplitScheme,
    SplitTrajectory,
    TimeGrid,
    extension_eval,
    godunov_step,
    run_splitting,
    strang_step,
    traditional_extension_eval,
)

__version__ = "0.1.0"
