from .families import (
    Bernoulli,
    Gaussian,
    HalfCauchy,
    InverseNakagami,
    NoiseFamily,
    Rayleigh,
    sample_gsm_expanded,
    sample_gsm_hierarchical,
    sample_noise,
)
from .priors import (
    GeneralizedHyperbolic,
    Horseshoe,
    Laplace,
    MarginalPrior,
    SpikeAndSlab,
    StudentT,
    marginal_for,
    marginal_log_density,
    marginal_log_density_quadrature,
)
from .streams import make_stream
from .verify import run_gsm_suite

__all__ = [
    "Bernoulli",
    "Gaussian",
    "GeneralizedHyperbolic",
    "HalfCauchy",
    "Horseshoe",
    "InverseNakagami",
    "Laplace",
    "MarginalPrior",
    "NoiseFamily",
    "Rayleigh",
    "SpikeAndSlab",
    "StudentT",
    "make_stream",
    "marginal_for",
    "marginal_log_density",
    "marginal_log_density_quadrature",
    "run_gsm_suite",
    "sample_gsm_expanded",
    "sample_gsm_hierarchical",
    "sample_noise",
]
