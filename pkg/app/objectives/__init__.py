from .base import ImportanceWeights, ObjectiveResult, ObjectiveSpec
from .enumeration import (
    MAX_MASK_BITS,
    enumerate_expected_log_likelihood,
    enumerate_log_marginal,
    enumerate_mask_likelihoods,
)
from .estimators import (
    decay_gradient,
    evaluate_objective,
    hierarchical_objective,
    iw_objective,
    map_objective_with_decay,
    mc_lower_bound,
    penalty_coefficients,
    ta_objective,
    tail_adaptive_ranks,
    tail_adaptive_weights,
)

__all__ = [
    "ImportanceWeights",
    "MAX_MASK_BITS",
    "ObjectiveResult",
    "ObjectiveSpec",
    "decay_gradient",
    "enumerate_expected_log_likelihood",
    "enumerate_log_marginal",
    "enumerate_mask_likelihoods",
    "evaluate_objective",
    "hierarchical_objective",
    "iw_objective",
    "map_objective_with_decay",
    "mc_lower_bound",
    "penalty_coefficients",
    "ta_objective",
    "tail_adaptive_ranks",
    "tail_adaptive_weights",
]
