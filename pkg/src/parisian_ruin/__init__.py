"""Parisian ruin of the Brownian risk model with force of interest."""

from .model import (
    DomainError,
    DriftSpec,
    EstimateCI,
    ModelParams,
    asymptotic_parisian_ruin,
    constant_a1_closed_form,
    critical_point,
    delta0_asymptotic_parisian,
    delta0_exact_classical,
    delta0_parisian_constant,
    exact_classical_ruin,
    inverse_time_change,
    mu_profile,
    ruin_time_cdf_asymptotic,
    std_normal_sf,
    time_change,
)
from .paths import GridSpec, PathSample, horizon_for_tolerance, sample_bm, sample_path, sample_paths
from .ruin import RuinOutcome, detect_parisian, parisian_ruin_time, transform_ruin_time
from .pickands import PickandsQuery, estimate_F, estimate_F_many, estimate_P, estimate_P_curve, estimate_P_infty
from .montecarlo import (
    ComparisonRow,
    ExperimentConfig,
    compare_report,
    estimate_ruin_prob,
    estimate_ruin_time_cdf,
)

__version__ = "0.1.0"
