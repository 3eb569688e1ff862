import logging
from typing import Annotated, ClassVar, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from ..errors import DivergentExpectation, DomainError

logger = logging.getLogger(__name__)


class _Family(BaseModel):
    model_config = ConfigDict(frozen=True)

    # continuous families expose a density for the quadrature oracle
    continuous: ClassVar[bool] = True
    # True when p(ξ) is even on the real line (integrate over ξ > 0 and double)
    symmetric: ClassVar[bool] = False

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def log_pdf(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse_second_moment(self) -> float:
        """E[ξ⁻²], the row penalty coefficient of the hierarchical objective."""
        raise DivergentExpectation(f"E[xi^-2] is infinite under {self.kind} noise")

    def typical_scale(self) -> float:
        return 1.0


class Bernoulli(_Family):
    kind: Literal["bernoulli"] = "bernoulli"
    keep_prob: float = Field(ge=0.0, le=1.0)
    continuous: ClassVar[bool] = False

    @classmethod
    def from_drop_rate(cls, drop_rate: float) -> "Bernoulli":
        return cls(keep_prob=1.0 - drop_rate)

    @property
    def drop_rate(self) -> float:
        return 1.0 - self.keep_prob

    def sample(self, count, rng):
        return (rng.random(count) < self.keep_prob).astype(np.float64)

    def log_pdf(self, xi):
        raise DomainError("Bernoulli noise has no density; enumerate its masks instead")

    def inverse_second_moment(self) -> float:
        if self.keep_prob < 1.0:
            raise DivergentExpectation(
                f"E[xi^-2] is undefined under Bernoulli(keep={self.keep_prob}) noise: P(xi=0) > 0"
            )
        return 1.0


class Gaussian(_Family):
    """Zero-mean Gaussian noise; ξ² is a scaled χ²₁ variable."""

    kind: Literal["gaussian"] = "gaussian"
    scale: float = Field(gt=0.0)
    symmetric: ClassVar[bool] = True

    def sample(self, count, rng):
        return rng.normal(0.0, self.scale, count)

    def log_pdf(self, xi):
        return stats.norm.logpdf(xi, loc=0.0, scale=self.scale)

    def typical_scale(self) -> float:
        return self.scale


class Rayleigh(_Family):
    kind: Literal["rayleigh"] = "rayleigh"
    scale: float = Field(gt=0.0)

    def sample(self, count, rng):
        return rng.rayleigh(self.scale, count)

    def log_pdf(self, xi):
        return stats.rayleigh.logpdf(xi, scale=self.scale)

    def typical_scale(self) -> float:
        return self.scale


class InverseNakagami(_Family):
    """Noise whose square follows an inverse-gamma law, ξ² ∼ Γ⁻¹(a, b)."""

    kind: Literal["inverse_nakagami"] = "inverse_nakagami"
    a: float = Field(gt=0.0)
    b: float = Field(gt=0.0)

    @classmethod
    def from_nakagami(cls, m: float, omega: float) -> "InverseNakagami":
        # 1/ξ ∼ Nakagami(m, Ω)  ⇔  ξ⁻² ∼ Gamma(m, scale=Ω/m)  ⇔  ξ² ∼ Γ⁻¹(m, m/Ω)
        if m <= 0 or omega <= 0:
            raise DomainError(f"Nakagami parameters must be positive, got m={m}, omega={omega}")
        return cls(a=m, b=m / omega)

    def sample(self, count, rng):
        return np.sqrt(self.b / rng.gamma(self.a, 1.0, count))

    def log_pdf(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return stats.invgamma.logpdf(xi * xi, self.a, scale=self.b) + np.log(2.0 * xi)

    def inverse_second_moment(self) -> float:
        return self.a / self.b

    def typical_scale(self) -> float:
        return float(np.sqrt(self.b / self.a))


class HalfCauchy(_Family):
    kind: Literal["half_cauchy"] = "half_cauchy"
    scale: float = Field(gt=0.0)

    def sample(self, count, rng):
        u = rng.random(count)
        return self.scale * np.abs(np.tan(np.pi * (u - 0.5)))

    def log_pdf(self, xi):
        return stats.halfcauchy.logpdf(xi, scale=self.scale)

    def typical_scale(self) -> float:
        return self.scale


NoiseFamily = Annotated[
    Union[Bernoulli, Gaussian, Rayleigh, InverseNakagami, HalfCauchy],
    Field(discriminator="kind"),
]


def sample_noise(family: NoiseFamily, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise DomainError(f"sample count must be at least 1, got {count}")
    return family.sample(count, rng)


def sample_gsm_expanded(family: NoiseFamily, sigma0: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """ξ·z with z ∼ N(0, σ₀²): the multiplicative-noise view of the prior."""
    if sigma0 <= 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    xi = sample_noise(family, count, rng)
    return xi * rng.normal(0.0, sigma0, count)


def sample_gsm_hierarchical(family: NoiseFamily, sigma0: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ξ, then w ∼ N(0, σ₀²ξ²)."""
    if sigma0 <= 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    xi = sample_noise(family, count, rng)
    return rng.normal(0.0, 1.0, count) * np.sqrt(sigma0 * sigma0 * xi * xi)
