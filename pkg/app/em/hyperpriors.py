"""
Hyperpriors on the squared scale v = τ² of a weight group, and the closed-form
maximizer of the ELBO's scale terms

    f(v) = −S/(2σ₀²v) − (D/2)·log v + log p_v(v)

with S = Σ(μ² + σ²) over the group and D its weight count.
"""

import logging
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import DomainError

logger = logging.getLogger(__name__)


class _HyperPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    def terms(self) -> Tuple[float, float, Optional[float]]:
        """(c, k, b²) with log p_v(v) = −c/v − k·log v − log(b² + v) + const.

        b² is None when the last term is absent.
        """
        raise NotImplementedError

    def log_density(self, v: float) -> float:
        """Unnormalized log p_v(v)."""
        c, k, b2 = self.terms()
        if v <= 0.0:
            raise DomainError(f"squared scale must be positive, got {v}")
        value = -c / v - k * np.log(v)
        if b2 is not None:
            value -= np.log(b2 + v)
        return float(value)

    def scale_star(self, total: float, count: int, sigma0: float) -> float:
        raise NotImplementedError


class InverseGamma(_HyperPrior):
    """Γ⁻¹(α, β) placed directly on v."""

    kind: Literal["inverse_gamma"] = "inverse_gamma"
    alpha: float = Field(default=3.0, gt=0.0)
    beta: float = Field(default=3.0, gt=0.0)

    def terms(self):
        return self.beta, self.alpha + 1.0, None

    def scale_star(self, total, count, sigma0):
        a = total / (2.0 * sigma0 * sigma0)
        return (self.beta + a) / (self.alpha + 1.0 + count / 2.0)


class HalfCauchy(_HyperPrior):
    """Half-Cauchy(b) on τ, so p_v(v) ∝ 1 / ((b² + v)·√v)."""

    kind: Literal["half_cauchy"] = "half_cauchy"
    scale: float = Field(default=1.0, gt=0.0)

    def terms(self):
        return 0.0, 0.5, self.scale * self.scale

    def scale_star(self, total, count, sigma0):
        # positive root of ((D+3)/2)v² + ((D+1)b²/2 − A)v − A·b² = 0
        a = total / (2.0 * sigma0 * sigma0)
        b2 = self.scale * self.scale
        quad = (count + 3.0) / 2.0
        lin = (count + 1.0) * b2 / 2.0 - a
        disc = np.sqrt(lin * lin + 4.0 * quad * a * b2)
        if lin > 0.0:
            return float(2.0 * a * b2 / (lin + disc))
        return float((disc - lin) / (2.0 * quad))


class LogUniform(_HyperPrior):
    """Improper p(τ) ∝ 1/τ, so p_v(v) ∝ 1/v."""

    kind: Literal["log_uniform"] = "log_uniform"

    def terms(self):
        return 0.0, 1.0, None

    def scale_star(self, total, count, sigma0):
        return total / (sigma0 * sigma0 * (count + 2.0))


HyperPrior = Annotated[Union[InverseGamma, HalfCauchy, LogUniform], Field(discriminator="kind")]


def scale_star(hyperprior: HyperPrior, total: float, count: int, sigma0: float) -> float:
    """v* = (τ̄*)² maximizing the group's scale objective."""
    if total < 0.0:
        raise DomainError(f"second-moment sum must be nonnegative, got {total}")
    if count < 1:
        raise DomainError(f"group needs at least one weight, got {count}")
    if sigma0 <= 0.0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    return float(hyperprior.scale_star(float(total), int(count), float(sigma0)))


def scale_objective(hyperprior: HyperPrior, total: float, count: int, sigma0: float, v: float) -> float:
    """f(v); the S/v term is taken as 0 when S = 0."""
    if v <= 0.0:
        raise DomainError(f"squared scale must be positive, got {v}")
    data = total / (2.0 * sigma0 * sigma0 * v) if total > 0.0 else 0.0
    return float(-data - 0.5 * count * np.log(v) + hyperprior.log_density(v))
