import logging
import warnings
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, stats

from ..errors import DomainError, QuadratureError
from .families import Bernoulli, Gaussian, HalfCauchy, InverseNakagami, NoiseFamily, Rayleigh

logger = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-8


class _Prior(BaseModel):
    model_config = ConfigDict(frozen=True)


class SpikeAndSlab(_Prior):
    kind: Literal["spike_and_slab"] = "spike_and_slab"
    keep_prob: float = Field(ge=0.0, le=1.0)
    sigma0: float = Field(gt=0.0)


class Laplace(_Prior):
    kind: Literal["laplace"] = "laplace"
    scale: float = Field(gt=0.0)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.laplace(0.0, self.scale, count)


class StudentT(_Prior):
    kind: Literal["student_t"] = "student_t"
    dof: float = Field(gt=0.0)
    scale: float = Field(gt=0.0)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.scale * rng.standard_t(self.dof, count)


class Horseshoe(_Prior):
    kind: Literal["horseshoe"] = "horseshoe"
    sigma0: float = Field(gt=0.0)
    scale: float = Field(gt=0.0)


class GeneralizedHyperbolic(_Prior):
    """Marginal of zero-mean Gaussian noise; evaluated numerically only."""

    kind: Literal["generalized_hyperbolic"] = "generalized_hyperbolic"
    sigma0: float = Field(gt=0.0)
    scale: float = Field(gt=0.0)


MarginalPrior = Annotated[
    Union[SpikeAndSlab, Laplace, StudentT, Horseshoe, GeneralizedHyperbolic],
    Field(discriminator="kind"),
]


def marginal_for(family: NoiseFamily, sigma0: float) -> MarginalPrior:
    """The marginal weight prior induced by ``family`` noise on N(0, σ₀²) weights."""
    if isinstance(family, Bernoulli):
        return SpikeAndSlab(keep_prob=family.keep_prob, sigma0=sigma0)
    if isinstance(family, Gaussian):
        return GeneralizedHyperbolic(sigma0=sigma0, scale=family.scale)
    if isinstance(family, Rayleigh):
        return Laplace(scale=family.scale * sigma0)
    if isinstance(family, InverseNakagami):
        return StudentT(dof=2.0 * family.a, scale=sigma0 * float(np.sqrt(family.b / family.a)))
    if isinstance(family, HalfCauchy):
        return Horseshoe(sigma0=sigma0, scale=family.scale)
    raise DomainError(f"no marginal prior known for {family!r}")


def marginal_log_density(prior: MarginalPrior, w: float) -> float:
    """Closed-form log p(w); for SpikeAndSlab only the slab part."""
    if isinstance(prior, Laplace):
        return float(stats.laplace.logpdf(w, scale=prior.scale))
    if isinstance(prior, StudentT):
        return float(stats.t.logpdf(w, prior.dof, scale=prior.scale))
    if isinstance(prior, SpikeAndSlab):
        with np.errstate(divide="ignore"):
            return float(np.log(prior.keep_prob) + stats.norm.logpdf(w, scale=prior.sigma0))
    raise DomainError(f"{prior.kind} has no closed-form density; use quadrature oracle")


def marginal_log_density_quadrature(family: NoiseFamily, sigma0: float, w: float) -> float:
    """log ∫ N(w; 0, σ₀²ξ²) p(ξ) dξ by adaptive quadrature.

    Raises QuadratureError when the achieved absolute error in the density
    exceeds 1e-8.
    """
    if not family.continuous:
        raise DomainError(f"{family.kind} noise has no density to integrate")
    if sigma0 <= 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    w = float(w)

    def integrand(xi: float) -> float:
        if xi <= 0.0:
            return 0.0
        var = (sigma0 * xi) ** 2
        log_value = -0.5 * np.log(2.0 * np.pi * var) - w * w / (2.0 * var) + float(family.log_pdf(xi))
        return float(np.exp(log_value))

    split = max(abs(w) / sigma0, family.typical_scale())
    total, error = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lower, upper in ((0.0, split), (split, np.inf)):
            value, abserr = integrate.quad(integrand, lower, upper, epsabs=1e-11, epsrel=1e-11, limit=400)
            total += value
            error += abserr
    if family.symmetric:
        total, error = 2.0 * total, 2.0 * error
    if not np.isfinite(total) or error > QUADRATURE_TOLERANCE:
        raise QuadratureError(f"marginal density of {family.kind} noise at w={w} did not converge", error)
    logger.debug(f"quadrature {family.kind} w={w}: density={total:.6g} err={error:.2e}")
    with np.errstate(divide="ignore"):
        return float(np.log(total))
