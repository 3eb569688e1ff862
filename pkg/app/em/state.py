import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Tuple

import numpy as np

from ..errors import ConfigurationError, DataError
from ..nets import NetworkConfig, WeightSet

logger = logging.getLogger(__name__)

EMStructure = Literal["ARD", "ADD", "ARD-ADD"]

# unconstrained value whose softplus is 1e-4
INITIAL_RHO = float(np.log(np.expm1(1e-4)))


def softplus(rho: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, rho)


def row_scaled_layers(config: NetworkConfig, kind: EMStructure) -> List[int]:
    return list(range(1, config.num_layers + 1)) if kind in ("ARD", "ARD-ADD") else []


def layer_scaled_layers(config: NetworkConfig, kind: EMStructure) -> List[int]:
    if kind not in ("ADD", "ARD-ADD"):
        return []
    layers = config.hidden_to_hidden()
    if not layers:
        raise ConfigurationError(f"{kind} needs at least two hidden layers")
    missing = [l for l in layers if not config.is_residual(l)]
    if missing:
        raise ConfigurationError(f"{kind} scales layers {missing}, which are not residual")
    return layers


@dataclass
class VariationalState:
    """Mean-field q(W) = N(μ, softplus(ρ)) plus point-mass scales.

    ``xi[l]`` holds one scale per non-bias row of W_l, ``tau[l]`` one scale
    per scaled layer. Bias rows always use the fixed N(0, σ₀²) prior.
    """

    mu: List[np.ndarray]
    rho: List[np.ndarray]
    xi: Dict[int, np.ndarray] = field(default_factory=dict)
    tau: Dict[int, float] = field(default_factory=dict)

    @classmethod
    def initialize(cls, config: NetworkConfig, kind: EMStructure, rng: np.random.Generator) -> "VariationalState":
        """He-initialized means, variance 1e-4, every scale at 1."""
        weights = WeightSet.initialize(config, rng)
        mu = [w.copy() for w in weights.layers]
        rho = [np.full(w.shape, INITIAL_RHO) for w in weights.layers]
        xi = {l: np.ones(config.widths[l - 1]) for l in row_scaled_layers(config, kind)}
        tau = {l: 1.0 for l in layer_scaled_layers(config, kind)}
        return cls(mu=mu, rho=rho, xi=xi, tau=tau)

    @classmethod
    def point_mass(cls, weights: WeightSet) -> "VariationalState":
        """Zero-variance state around fixed weights, e.g. a dropout-trained network."""
        return cls(mu=[w.copy() for w in weights.layers], rho=[np.full(w.shape, -np.inf) for w in weights.layers])

    @property
    def point_estimate(self) -> bool:
        return all(np.all(r == -np.inf) for r in self.rho)

    def check(self, config: NetworkConfig) -> None:
        """Raise ConfigurationError unless the shapes fit ``config``."""
        if len(self.mu) != config.num_layers:
            raise ConfigurationError(f"state has {len(self.mu)} layers, the network has {config.num_layers}")
        for l, (mu, rho) in enumerate(zip(self.mu, self.rho), start=1):
            if mu.shape != config.weight_shape(l) or rho.shape != mu.shape:
                raise ConfigurationError(
                    f"layer {l} of the state has shape {mu.shape}, the network expects {config.weight_shape(l)}"
                )
        for l, xi in self.xi.items():
            if not 1 <= l <= config.num_layers or xi.shape != (config.widths[l - 1],):
                raise ConfigurationError(f"row scales of layer {l} do not fit the network")

    def variances(self) -> List[np.ndarray]:
        return [softplus(r) for r in self.rho]

    def second_moments(self) -> Tuple[np.ndarray, ...]:
        return tuple(m * m + s for m, s in zip(self.mu, self.variances()))

    def mean_weights(self) -> WeightSet:
        return WeightSet(tuple(m.copy() for m in self.mu))

    def sample_weights(self, eps: List[np.ndarray]) -> WeightSet:
        return WeightSet(tuple(m + np.sqrt(s) * e for m, s, e in zip(self.mu, self.variances(), eps)))

    def copy(self) -> "VariationalState":
        return VariationalState(
            mu=[m.copy() for m in self.mu],
            rho=[r.copy() for r in self.rho],
            xi={l: v.copy() for l, v in self.xi.items()},
            tau=dict(self.tau),
        )


def save_state(state: VariationalState, path: Path) -> Path:
    """Write the text dump: a ``# layer <l> <rows> <cols> <field>`` header per block, then rows.

    Point estimates are written without ``rho`` blocks.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    point = state.point_estimate
    with path.open("w") as handle:
        for l, (mu, rho) in enumerate(zip(state.mu, state.rho), start=1):
            _write_block(handle, l, "mu", mu)
            if not point:
                _write_block(handle, l, "rho", rho)
            if l in state.xi:
                _write_block(handle, l, "xi", state.xi[l].reshape(-1, 1))
            if l in state.tau:
                _write_block(handle, l, "tau", np.array([[state.tau[l]]]))
    kind = "point-estimate" if point else "variational"
    logger.info(f"💾 Saved {kind} state to {path}")
    return path


def _write_block(handle, l: int, name: str, values: np.ndarray) -> None:
    rows, cols = values.shape
    handle.write(f"# layer {l} {rows} {cols} {name}\n")
    for row in values:
        handle.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_state(path: Path) -> VariationalState:
    path = Path(path)
    if not path.exists():
        raise DataError(f"state file {path} does not exist")
    blocks: Dict[Tuple[int, str], np.ndarray] = {}
    lines = path.read_text().splitlines()
    i = 0
    while i < len(lines):
        header = lines[i].split()
        if len(header) != 6 or header[:2] != ["#", "layer"]:
            raise DataError(f"malformed block header in {path}: {lines[i]!r}", row=i + 1)
        l, rows, cols, name = int(header[2]), int(header[3]), int(header[4]), header[5]
        body = lines[i + 1: i + 1 + rows]
        if len(body) != rows:
            raise DataError(f"block '{name}' of layer {l} is truncated", row=i + 1)
        try:
            values = np.array([[float(v) for v in line.split()] for line in body])
        except ValueError as e:
            raise DataError(f"non-numeric value in block '{name}' of layer {l}: {e}", row=i + 1)
        if values.shape != (rows, cols):
            raise DataError(f"block '{name}' of layer {l} has shape {values.shape}", row=i + 1)
        blocks[(l, name)] = values
        i += 1 + rows

    layers = sorted({l for l, name in blocks if name == "mu"})
    return VariationalState(
        mu=[blocks[(l, "mu")] for l in layers],
        rho=[blocks.get((l, "rho"), np.full(blocks[(l, "mu")].shape, -np.inf)) for l in layers],
        xi={l: v.reshape(-1) for (l, name), v in blocks.items() if name == "xi"},
        tau={l: float(v[0, 0]) for (l, name), v in blocks.items() if name == "tau"},
    )
