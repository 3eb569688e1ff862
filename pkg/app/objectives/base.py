from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError

ObjectiveKind = Literal["LB", "IW", "TA", "HP"]


class ObjectiveSpec(BaseModel):
    """Which Monte Carlo objective to train with.

    LB  average of per-sample log-likelihoods
    IW  log of the average likelihood (importance weighted)
    TA  tail-adaptive rank weights; the IW value is reported for monitoring
    HP  noiseless likelihood with the hierarchical E[ξ⁻²] penalty
    """

    model_config = ConfigDict(frozen=True)

    kind: ObjectiveKind = "LB"
    samples: int = Field(default=10, ge=1)
    weight_decay: bool = True

    @model_validator(mode="after")
    def _check_samples(self) -> "ObjectiveSpec":
        if self.kind == "TA" and self.samples < 2:
            raise ConfigurationError("tail-adaptive weights need at least 2 samples")
        return self


@dataclass
class ImportanceWeights:
    log_raw: np.ndarray
    normalized: np.ndarray
    ranks: Optional[np.ndarray] = None


@dataclass
class ObjectiveResult:
    value: float
    gradient: List[np.ndarray]
    log_likelihoods: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weights: Optional[ImportanceWeights] = None
