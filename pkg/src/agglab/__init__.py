"""agglab: entropy-regularized aggregation estimators and a Monte Carlo bound lab."""

from .complexity import (
    ComplexityProfile,
    GaussianComplexities,
    LinearInstance,
    TraceLogDetGap,
    complexity_profile,
    gaussian_complexities,
    global_complexity,
    local_complexity,
    trace_logdet_gap,
)
from .errors import NumericalError
from .estimators import (
    FiniteClass,
    SolverConfig,
    SolverResult,
    empirical_risks,
    exp_weights,
    progressive_mixture,
    q_aggregation,
    q_objective,
    sure_exp_weights,
)
from .gaussian import (
    GaussianMeasure,
    ew_gaussian_posterior,
    gaussian_q_objective,
    qagg_gaussian_posterior,
)
from .harness import (
    DiscreteTable,
    ExperimentSpec,
    MCReport,
    check_model_aggregation,
    check_progressive_mixture,
    check_ridge_family,
    check_sure_unbiased,
    check_thm_fixed_ew,
    check_thm_fixed_q,
    check_thm_random_q,
    gen_fixed_design,
    gen_random_design,
    make_adaptivity_spec,
    make_finite_random_spec,
    make_fixed_spec,
    make_linear_random_spec,
    mc_losses,
    mc_run,
    true_risks_discrete,
)
from .ridge import (
    DesignSample,
    RidgeModel,
    adaptive_truncated_predict,
    fw_predict,
    loo_residual_identity,
    ridge_fit,
    ridge_leverage,
    truncated_ridge_predict,
)
from .simplex import (
    ScoreVector,
    SimplexWeights,
    empirical_variance,
    gibbs_tilt,
    kl_divergence,
    mixture_values,
)
from .vcclass import (
    ProjectionClass,
    TransductiveSplit,
    singletons_projection,
    star_number_bruteforce,
    thresholds_projection,
    transductive_qagg,
    vc_dimension_bruteforce,
)

__version__ = "0.1.0"
