import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError, ShapeError
from ..noise import Bernoulli, NoiseFamily, sample_noise

logger = logging.getLogger(__name__)

Activation = Literal["relu", "identity"]


class NetworkConfig(BaseModel):
    """Layer widths D_0..D_{L+1} of a regression network.

    ``activations`` and ``residual`` hold one entry per hidden layer 1..L;
    the output layer is always linear (identity link).
    """

    model_config = ConfigDict(frozen=True)

    widths: Tuple[int, ...]
    activations: Optional[Tuple[Activation, ...]] = None
    residual: Optional[Tuple[bool, ...]] = None
    bias: bool = True
    sigma0: float = Field(default=1.0, gt=0.0)
    noise_std: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_layers(self) -> "NetworkConfig":
        if len(self.widths) < 3:
            raise ConfigurationError(f"need at least one hidden layer, got widths {self.widths}")
        if any(d < 1 for d in self.widths):
            raise ConfigurationError(f"layer widths must be positive, got {self.widths}")
        depth = len(self.widths) - 2
        if self.activations is not None and len(self.activations) != depth:
            raise ConfigurationError(f"expected {depth} activations, got {len(self.activations)}")
        if self.residual is not None:
            if len(self.residual) != depth:
                raise ConfigurationError(f"expected {depth} residual flags, got {len(self.residual)}")
            for l, flag in enumerate(self.residual, start=1):
                if flag and self.widths[l - 1] != self.widths[l]:
                    raise ConfigurationError(
                        f"layer {l} cannot be residual: width {self.widths[l - 1]} -> {self.widths[l]}"
                    )
        return self

    @classmethod
    def simple(cls, inputs: int, hidden: List[int], outputs: int = 1, residual: bool = False, **kwargs):
        """Build a ReLU network; ``residual=True`` flags every layer whose widths allow it."""
        widths = (inputs, *hidden, outputs)
        flags = tuple(residual and widths[l - 1] == widths[l] for l in range(1, len(hidden) + 1))
        return cls(widths=widths, residual=flags, **kwargs)

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.widths) - 2

    @property
    def num_layers(self) -> int:
        return len(self.widths) - 1

    def activation(self, l: int) -> Activation:
        if l > self.depth:
            return "identity"
        return self.activations[l - 1] if self.activations is not None else "relu"

    def is_residual(self, l: int) -> bool:
        return l <= self.depth and self.residual is not None and self.residual[l - 1]

    def weight_shape(self, l: int) -> Tuple[int, int]:
        return self.widths[l - 1] + int(self.bias), self.widths[l]

    def hidden_to_hidden(self) -> List[int]:
        return list(range(2, self.depth + 1))


class NoiseStructure(BaseModel):
    """Where multiplicative noise enters the network.

    unit      one scale ξ per input row of W_l (ARD, dropout)
    weight    one scale per weight (DropConnect)
    layer     one scale τ_l per hidden-to-hidden residual layer (ADD)
    combined  unit and layer scales together (ARD-ADD)

    Bias rows never carry a unit scale. τ_l multiplies the layer's whole
    pre-activation.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["unit", "weight", "layer", "combined"]
    unit_family: Optional[NoiseFamily] = None
    layer_family: Optional[NoiseFamily] = None
    output_layer: bool = False

    @model_validator(mode="after")
    def _check_families(self) -> "NoiseStructure":
        if self.kind in ("unit", "weight", "combined") and self.unit_family is None:
            raise ConfigurationError(f"{self.kind} noise needs a unit_family")
        if self.kind in ("layer", "combined") and self.layer_family is None:
            raise ConfigurationError(f"{self.kind} noise needs a layer_family")
        return self

    @property
    def has_unit_scales(self) -> bool:
        return self.kind in ("unit", "combined")

    @property
    def has_weight_scales(self) -> bool:
        return self.kind == "weight"

    @property
    def has_layer_scales(self) -> bool:
        return self.kind in ("layer", "combined")

    def masked_layers(self, config: NetworkConfig) -> List[int]:
        """Layers whose rows (or weights) carry a scale variable."""
        if not (self.has_unit_scales or self.has_weight_scales):
            return []
        last = config.num_layers if self.output_layer else config.depth
        return list(range(1, last + 1))

    def scaled_layers(self, config: NetworkConfig) -> List[int]:
        if not self.has_layer_scales:
            return []
        return config.hidden_to_hidden()

    def check(self, config: NetworkConfig) -> None:
        if self.has_layer_scales:
            layers = config.hidden_to_hidden()
            if not layers:
                raise ConfigurationError(f"{self.kind} noise needs at least two hidden layers")
            missing = [l for l in layers if not config.is_residual(l)]
            if missing:
                raise ConfigurationError(f"{self.kind} noise scales layers {missing}, which are not residual")

    def sample(self, config: NetworkConfig, rng: np.random.Generator) -> "MaskSet":
        """Draw one mask per layer, in layer order: row/weight scales, then τ."""
        self.check(config)
        masks = MaskSet()
        for l in self.masked_layers(config):
            if self.has_unit_scales:
                masks.unit[l] = sample_noise(self.unit_family, config.widths[l - 1], rng)
            else:
                rows, cols = config.weight_shape(l)
                values = np.ones((rows, cols))
                values[: config.widths[l - 1]] = sample_noise(
                    self.unit_family, config.widths[l - 1] * cols, rng
                ).reshape(config.widths[l - 1], cols)
                masks.weight[l] = values
        for l in self.scaled_layers(config):
            masks.layer[l] = float(sample_noise(self.layer_family, 1, rng)[0])
        return masks

    def ones(self, config: NetworkConfig) -> "MaskSet":
        """The mask set with every scale at 1."""
        masks = MaskSet()
        for l in self.masked_layers(config):
            if self.has_unit_scales:
                masks.unit[l] = np.ones(config.widths[l - 1])
            else:
                masks.weight[l] = np.ones(config.weight_shape(l))
        for l in self.scaled_layers(config):
            masks.layer[l] = 1.0
        return masks

    # Enumeration support

    def slots(self, config: NetworkConfig) -> List[Tuple[str, int, int]]:
        """Every scale variable as (group, layer, flat index), in sampling order."""
        slots = []
        for l in self.masked_layers(config):
            count = config.widths[l - 1] if self.has_unit_scales else config.widths[l - 1] * config.widths[l]
            group = "unit" if self.has_unit_scales else "weight"
            slots.extend((group, l, i) for i in range(count))
        slots.extend(("layer", l, 0) for l in self.scaled_layers(config))
        return slots

    def slot_keep_probs(self, config: NetworkConfig) -> np.ndarray:
        """Keep probability of every slot; all families must be Bernoulli."""
        probs = []
        for group, _, _ in self.slots(config):
            family = self.layer_family if group == "layer" else self.unit_family
            if not isinstance(family, Bernoulli):
                raise ConfigurationError(f"mask enumeration needs Bernoulli noise, got {family.kind}")
            probs.append(family.keep_prob)
        return np.asarray(probs, dtype=np.float64)

    def from_flat(self, config: NetworkConfig, values: np.ndarray) -> "MaskSet":
        """Rebuild a mask set from one value per slot."""
        slots = self.slots(config)
        if len(values) != len(slots):
            raise ShapeError(f"expected {len(slots)} scale values, got {len(values)}")
        masks = self.ones(config)
        for (group, l, i), value in zip(slots, values):
            if group == "unit":
                masks.unit[l][i] = value
            elif group == "weight":
                cols = config.widths[l]
                masks.weight[l][i // cols, i % cols] = value
            else:
                masks.layer[l] = float(value)
        return masks


@dataclass
class MaskSet:
    """Sampled scale values of one forward pass, keyed by layer l."""

    unit: Dict[int, np.ndarray] = field(default_factory=dict)
    weight: Dict[int, np.ndarray] = field(default_factory=dict)
    layer: Dict[int, float] = field(default_factory=dict)

    def apply_to(self, config: NetworkConfig, weights: "WeightSet") -> "WeightSet":
        """W'_l = Ξ_l W_l (and Λ_l ⊙ W_l); layer scales are not folded in."""
        layers = []
        for l, w in enumerate(weights.layers, start=1):
            w = w.copy()
            if l in self.unit:
                w[: config.widths[l - 1]] *= self.unit[l][:, None]
            if l in self.weight:
                w *= self.weight[l]
            layers.append(w)
        return WeightSet(tuple(layers))


@dataclass(frozen=True)
class WeightSet:
    """Point weights W_1..W_{L+1}; the bias row, when present, is last."""

    layers: Tuple[np.ndarray, ...]

    @classmethod
    def initialize(cls, config: NetworkConfig, rng: np.random.Generator) -> "WeightSet":
        """He initialization, N(0, 2/D_{l-1}), with zero bias rows."""
        layers = []
        for l in range(1, config.num_layers + 1):
            rows, cols = config.weight_shape(l)
            w = np.zeros((rows, cols))
            fan_in = config.widths[l - 1]
            w[:fan_in] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, cols))
            layers.append(w)
        return cls(tuple(layers))

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "WeightSet":
        return cls(tuple(np.zeros(config.weight_shape(l)) for l in range(1, config.num_layers + 1)))

    def check(self, config: NetworkConfig, rows: Optional[int] = None) -> None:
        """``rows`` expects a stack of that many matrices per layer."""
        if len(self.layers) != config.num_layers:
            raise ShapeError(f"expected {config.num_layers} weight matrices, got {len(self.layers)}")
        for l, w in enumerate(self.layers, start=1):
            expected = config.weight_shape(l) if rows is None else (rows, *config.weight_shape(l))
            if w.shape != expected:
                raise ShapeError(f"W_{l} has shape {w.shape}, expected {expected}")

    def second_moments(self) -> Tuple[np.ndarray, ...]:
        return tuple(w * w for w in self.layers)

    def replace(self, l: int, value: np.ndarray) -> "WeightSet":
        layers = list(self.layers)
        layers[l - 1] = value
        return WeightSet(tuple(layers))
