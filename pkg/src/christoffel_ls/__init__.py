"""Weighted least-squares polynomial approximation with Christoffel-function sampling."""

from .christoffel import KappaResult, WeightSpec, christoffel_K, kappa_w, weight
from .harness import ExperimentConfig, TrialRecord, builtin_target, compare_kappa, execute, run_experiment
from .index_sets import IndexSet, build_index_set, is_lower, parse_index_set
from .least_squares import (
    Estimator,
    FitResult,
    assemble,
    chernoff_sample_count,
    error_report,
    fit,
    solve,
    stability_constants,
)
from .measures import MeasureFamily1D, TensorMeasure, gauss_rule, tensor_rule
from .orthopoly import OrthoBasis, gram_matrix
from .sampling import (
    SamplePlan,
    build_discrete_grid,
    draw_plan,
    induced_distribution,
    sample_christoffel_mixture,
    sample_discrete_leverage,
    sample_monte_carlo,
    sample_per_basis,
)

__version__ = "0.1.0"
