import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, ShapeError
from ..tensor import ComputationGraph, Tensor
from .network import MaskSet, NetworkConfig, NoiseStructure, WeightSet

logger = logging.getLogger(__name__)


class ShrinkNet:
    """Computation graph of one network under one noise structure.

    Weights are graph parameters ``W1..W{L+1}``; masks, ``x``, ``y`` and the
    observation variance are inputs. The prediction node precedes the
    likelihood node, so predictions never need ``y`` bound.

    With ``rows`` set the network is noise-free and every weight parameter
    is a stack of ``rows`` matrices, row n of ``x`` passing through matrix n.
    """

    def __init__(
        self, config: NetworkConfig, structure: Optional[NoiseStructure] = None, rows: Optional[int] = None
    ):
        if structure is not None:
            structure.check(config)
        if rows is not None and (structure is not None or rows < 1):
            raise ConfigurationError(f"per-row weights need a noise-free network and rows >= 1, got {rows}")
        self.config = config
        self.structure = structure
        self.rows = rows
        self.graph = ComputationGraph()
        self._build()

    def _build(self) -> None:
        config, structure, graph = self.config, self.structure, self.graph
        masked = set(structure.masked_layers(config)) if structure else set()
        scaled = set(structure.scaled_layers(config)) if structure else set()
        unit = structure is not None and structure.has_unit_scales

        h = graph.input("x")
        for l in range(1, config.num_layers + 1):
            shape = config.weight_shape(l) if self.rows is None else (self.rows, *config.weight_shape(l))
            w = graph.parameter(f"W{l}", Tensor(np.zeros(shape)))
            inp = h
            if l in masked and unit:
                inp = graph.scale_columns(inp, graph.input(f"xi{l}"))
            elif l in masked:
                w = graph.multiply(w, graph.input(f"lam{l}"))
            if config.bias:
                inp = graph.append_ones(inp)
            pre = graph.matmul(inp, w) if self.rows is None else graph.row_matmul(inp, w)
            if l in scaled:
                pre = graph.scale(pre, graph.input(f"tau{l}"))
            out = graph.relu(pre) if config.activation(l) == "relu" else pre
            if config.is_residual(l):
                out = graph.add(out, h)
            h = out
        self.prediction = h
        self.log_likelihood = graph.gaussian_log_likelihood(graph.input("y"), h, graph.input("noise_var"))

    def _inputs(self, weights: WeightSet, x: np.ndarray, masks: Optional[MaskSet]) -> Dict[str, Tensor]:
        weights.check(self.config, self.rows)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.widths[0]:
            raise ShapeError(f"x must have {self.config.widths[0]} columns, got shape {x.shape}")
        if self.rows is not None and len(x) != self.rows:
            raise ShapeError(f"per-row weights were built for {self.rows} rows, x has {len(x)}")
        for l, w in enumerate(weights.layers, start=1):
            self.graph.set_parameter(f"W{l}", Tensor(w, check_finite=False))
        inputs = {"x": Tensor(x)}
        if self.structure is not None:
            if masks is None:
                raise ConfigurationError("a noisy network needs a mask set")
            for l, values in masks.unit.items():
                inputs[f"xi{l}"] = Tensor(values)
            for l, values in masks.weight.items():
                inputs[f"lam{l}"] = Tensor(values)
            for l, value in masks.layer.items():
                inputs[f"tau{l}"] = Tensor.scalar(value)
        return inputs

    def predict(self, weights: WeightSet, x: np.ndarray, masks: Optional[MaskSet] = None) -> np.ndarray:
        inputs = self._inputs(weights, x, masks)
        return self.graph.evaluate(inputs, self.prediction).values.copy()

    def log_likelihood_and_gradient(
        self,
        weights: WeightSet,
        x: np.ndarray,
        y: np.ndarray,
        noise_var: float,
        masks: Optional[MaskSet] = None,
    ) -> Tuple[float, List[np.ndarray]]:
        """log p(y | x, W, masks) and its gradient per weight matrix."""
        inputs = self._inputs(weights, x, masks)
        inputs["y"] = Tensor(np.asarray(y, dtype=np.float64).reshape(-1, self.config.widths[-1]))
        inputs["noise_var"] = Tensor.scalar(noise_var)
        value = self.graph.evaluate(inputs, self.log_likelihood).item()
        grads = self.graph.gradient(self.log_likelihood)
        return value, [grads[f"W{l}"].values for l in range(1, self.config.num_layers + 1)]

    def log_likelihood_value(self, weights, x, y, noise_var, masks=None) -> float:
        inputs = self._inputs(weights, x, masks)
        inputs["y"] = Tensor(np.asarray(y, dtype=np.float64).reshape(-1, self.config.widths[-1]))
        inputs["noise_var"] = Tensor.scalar(noise_var)
        return self.graph.evaluate(inputs, self.log_likelihood).item()


def build_network(
    config: NetworkConfig, structure: Optional[NoiseStructure] = None, rows: Optional[int] = None
) -> ShrinkNet:
    """A fresh graph per call; graphs hold evaluation buffers and are not shared."""
    return ShrinkNet(config, structure, rows)


def forward_with_masks(
    config: NetworkConfig, weights: WeightSet, structure: NoiseStructure, x: np.ndarray, masks: MaskSet
) -> np.ndarray:
    return build_network(config, structure).predict(weights, x, masks)


def forward_noisy(
    config: NetworkConfig,
    weights: WeightSet,
    structure: NoiseStructure,
    x: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, MaskSet]:
    """One noisy pass with freshly sampled masks; returns the masks used."""
    masks = structure.sample(config, rng)
    return forward_with_masks(config, weights, structure, x, masks), masks


def forward_deterministic(config: NetworkConfig, weights: WeightSet, x: np.ndarray) -> np.ndarray:
    return build_network(config, None).predict(weights, x)


@dataclass
class MCPrediction:
    mean: np.ndarray
    samples: np.ndarray  # (S, N, D_out)


def predict_mc(
    config: NetworkConfig,
    weights: WeightSet,
    structure: NoiseStructure,
    x: np.ndarray,
    samples: int,
    rng: np.random.Generator,
) -> MCPrediction:
    if samples < 1:
        raise ConfigurationError(f"need at least one MC sample, got {samples}")
    net = build_network(config, structure)
    draws = np.stack([net.predict(weights, x, structure.sample(config, rng)) for _ in range(samples)])
    return MCPrediction(mean=draws.mean(axis=0), samples=draws)
