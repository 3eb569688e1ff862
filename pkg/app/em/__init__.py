from .hyperpriors import HalfCauchy, HyperPrior, InverseGamma, LogUniform, scale_objective, scale_star
from .inference import (
    SCALE_FLOOR,
    ElboResult,
    coordinate_ascent,
    draw_eps,
    e_step,
    elbo,
    em_step,
    gaussian_kl,
    joint_scale_objective,
    m_step,
    predictive_distribution,
    prior_scales,
)
from .oracle import golden_section_maximize, oracle_scale, scale_objective_increment, verify_scale_star
from .state import INITIAL_RHO, EMStructure, VariationalState, load_state, save_state, softplus

__all__ = [
    "EMStructure",
    "ElboResult",
    "HalfCauchy",
    "HyperPrior",
    "INITIAL_RHO",
    "InverseGamma",
    "LogUniform",
    "SCALE_FLOOR",
    "VariationalState",
    "coordinate_ascent",
    "draw_eps",
    "e_step",
    "elbo",
    "em_step",
    "gaussian_kl",
    "golden_section_maximize",
    "joint_scale_objective",
    "load_state",
    "m_step",
    "oracle_scale",
    "predictive_distribution",
    "prior_scales",
    "save_state",
    "scale_objective",
    "scale_objective_increment",
    "scale_star",
    "softplus",
    "verify_scale_star",
]
