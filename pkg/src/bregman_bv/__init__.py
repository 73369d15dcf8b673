"""Bias-variance decompositions for proper scores via Bregman Information."""

from .discrete_scores import dual_flip_check, kl_divergence, log_partition_conjugate, log_score_decompose
from .estimators import (
    LogitEnsembleSet,
    bi_lse_estimate,
    bi_per_instance,
    confidence_per_instance,
    ensemble_mean_logits,
)
from .families import (
    DecompositionResult,
    ExponentialFamily,
    binary_bi_reduction,
    categorical,
    classification_nll_decompose,
    get_family,
    logit_ensemble,
    mse_decompose,
    natural_from_mean,
    nll_decompose,
    normal,
    register_family,
    softmax_inverse,
)
from .generators import (
    DiscreteDistribution,
    Generator,
    JointDiscreteDistribution,
    bregman_divergence,
    bregman_information,
    conditional_bregman_information,
    iid_average_bi,
    lse_generator,
    neg_entropy_generator,
    softplus_generator,
    squared_norm,
    total_variance_decompose,
)
from .ood import ThresholdModel, classify_with_threshold, discard_curve, fit_threshold
from .regions import (
    ConfidenceRegion,
    binary_region_interval,
    region_contains,
    region_coverage_exact,
    region_from_distribution,
    simplex_region_boundary,
)

__version__ = "0.1.0"
