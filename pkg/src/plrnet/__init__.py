"""Two-stage inference for partially linear time-series models.

First stage: bounded ReLU-network regressions of treatment and outcome on
covariates, sized by sample-size-driven scaling rules.  Second stage: a
residual-on-residual moment estimator for the linear coefficient with
long-run-variance confidence intervals.  Monte Carlo and diagnostic
harnesses check the estimator's rate, coverage, and orthogonality
properties at desk scale.
"""

from .backend import backend_name
from .blocking import BlockPartition, default_block_length, empirical_rademacher, make_partition
from .dgp import (
    Dataset,
    DgpOracle,
    PlrDgpConfig,
    oracle_residuals,
    read_dataset_csv,
    simulate,
    write_dataset_csv,
)
from .estimator import (
    DegenerateDenominator,
    MomentParts,
    empirical_moment,
    estimate_theta,
    moment_parts,
    moment_psi,
)
from .inference import (
    Estimate,
    RateInfo,
    confidence_interval,
    long_run_variance,
    normal_quantile,
    rate_bound,
)
from .mlp import Architecture, Network, Parameters, parameter_count
from .orthogonality import (
    Direction,
    gateaux_first_derivative,
    gateaux_second_derivative_closed_form,
    moment_curve,
    population_moment_path,
)
from .registry import NamedFunction, parse_function
from .sieve import (
    FitResult,
    ScalingRule,
    TrainConfig,
    architecture_for,
    fit,
    fit_nuisances,
    inference_rate_margin,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "BlockPartition",
    "Dataset",
    "DegenerateDenominator",
    "DgpOracle",
    "Direction",
    "Estimate",
    "FitResult",
    "MomentParts",
    "NamedFunction",
    "Network",
    "Parameters",
    "PlrDgpConfig",
    "RateInfo",
    "ScalingRule",
    "TrainConfig",
    "architecture_for",
    "backend_name",
    "confidence_interval",
    "default_block_length",
    "empirical_moment",
    "empirical_rademacher",
    "estimate_theta",
    "fit",
    "fit_nuisances",
    "gateaux_first_derivative",
    "gateaux_second_derivative_closed_form",
    "inference_rate_margin",
    "long_run_variance",
    "make_partition",
    "moment_curve",
    "moment_parts",
    "moment_psi",
    "normal_quantile",
    "oracle_residuals",
    "parameter_count",
    "parse_function",
    "population_moment_path",
    "rate_bound",
    "read_dataset_csv",
    "simulate",
    "write_dataset_csv",
]
