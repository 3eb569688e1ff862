import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import ConfigurationError, NonFiniteError
from ..nets import MaskSet, NetworkConfig, NoiseStructure, WeightSet, build_network
from .base import ImportanceWeights, ObjectiveResult, ObjectiveSpec

logger = logging.getLogger(__name__)


def _per_sample(
    config: NetworkConfig,
    weights: WeightSet,
    structure: NoiseStructure,
    x: np.ndarray,
    y: np.ndarray,
    samples: int,
    rng: Optional[np.random.Generator],
    masks: Optional[Sequence[MaskSet]],
) -> Tuple[np.ndarray, List[List[np.ndarray]]]:
    """Log-likelihood and gradient of each of ``samples`` noisy passes.

    Fixed ``masks`` replace sampling, which keeps the objective a
    deterministic function of the weights.
    """
    if len(x) == 0:
        raise ConfigurationError("objective needs a nonempty batch")
    if masks is None:
        if rng is None:
            raise ConfigurationError("either a random stream or fixed masks are required")
        masks = [structure.sample(config, rng) for _ in range(samples)]
    elif len(masks) != samples:
        raise ConfigurationError(f"expected {samples} fixed mask sets, got {len(masks)}")

    net = build_network(config, structure)
    noise_var = config.noise_std ** 2
    values, grads = [], []
    for s, mask in enumerate(masks):
        value, grad = net.log_likelihood_and_gradient(weights, x, y, noise_var, mask)
        if np.isnan(value) or value == np.inf:
            raise NonFiniteError("non-finite sample log-likelihood", where=f"sample {s}")
        values.append(value)
        grads.append(grad)
    return np.asarray(values), grads


def _weighted_gradient(weights: np.ndarray, grads: List[List[np.ndarray]]) -> List[np.ndarray]:
    # reduction in sample order
    total = [np.zeros_like(g) for g in grads[0]]
    for w_s, grad in zip(weights, grads):
        if w_s == 0.0:
            continue
        for acc, g in zip(total, grad):
            acc += w_s * g
    return total


def mc_lower_bound(config, weights, structure, x, y, samples, rng=None, masks=None) -> ObjectiveResult:
    """(1/S) Σ_s log p(y | x, W, Ξ_s) with uniformly averaged gradients."""
    lls, grads = _per_sample(config, weights, structure, x, y, samples, rng, masks)
    if not np.all(np.isfinite(lls)):
        bad = int(np.flatnonzero(~np.isfinite(lls))[0])
        raise NonFiniteError("non-finite sample log-likelihood", where=f"sample {bad}")
    uniform = np.full(samples, 1.0 / samples)
    return ObjectiveResult(
        value=float(np.mean(lls)),
        gradient=_weighted_gradient(uniform, grads),
        log_likelihoods=lls,
        weights=ImportanceWeights(log_raw=lls, normalized=uniform),
    )


def _importance_weights(lls: np.ndarray) -> np.ndarray:
    if np.all(lls == -np.inf):
        raise NonFiniteError("every sample log-likelihood underflowed to -inf")
    return softmax(lls)


def iw_objective(config, weights, structure, x, y, samples, rng=None, masks=None) -> ObjectiveResult:
    """log (1/S) Σ_s p(y | x, W, Ξ_s); gradient weighted by normalized likelihoods."""
    lls, grads = _per_sample(config, weights, structure, x, y, samples, rng, masks)
    normalized = _importance_weights(lls)
    return ObjectiveResult(
        value=float(logsumexp(lls) - np.log(samples)),
        gradient=_weighted_gradient(normalized, grads),
        log_likelihoods=lls,
        weights=ImportanceWeights(log_raw=lls, normalized=normalized),
    )


def tail_adaptive_ranks(log_raw: np.ndarray) -> np.ndarray:
    """#{k : w̃_k ≥ w̃_s} for every s, ties counted inclusively."""
    log_raw = np.asarray(log_raw, dtype=np.float64)
    return np.sum(log_raw[None, :] >= log_raw[:, None], axis=1)


def tail_adaptive_weights(raw: np.ndarray) -> np.ndarray:
    """γ_s = S / #{k : w̃_k ≥ w̃_s}, normalized to the simplex.

    Depends only on the ordering of ``raw``, so log-likelihoods can be
    passed in place of likelihoods.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size < 2:
        raise ConfigurationError("tail-adaptive weights need at least 2 samples")
    gamma = raw.size / tail_adaptive_ranks(raw)
    return gamma / np.sum(gamma)


def ta_objective(config, weights, structure, x, y, samples, rng=None, masks=None) -> ObjectiveResult:
    lls, grads = _per_sample(config, weights, structure, x, y, samples, rng, masks)
    _importance_weights(lls)
    normalized = tail_adaptive_weights(lls)
    return ObjectiveResult(
        value=float(logsumexp(lls) - np.log(samples)),
        gradient=_weighted_gradient(normalized, grads),
        log_likelihoods=lls,
        weights=ImportanceWeights(log_raw=lls, normalized=normalized, ranks=tail_adaptive_ranks(lls)),
    )


def penalty_coefficients(config: NetworkConfig, structure: NoiseStructure) -> List[np.ndarray]:
    """E[scale⁻²] for every stored weight; 0 where no scale variable applies.

    Row scales cover non-bias rows; a layer scale covers the whole matrix.
    """
    coefficients = []
    masked = set(structure.masked_layers(config))
    scaled = set(structure.scaled_layers(config))
    for l in range(1, config.num_layers + 1):
        coef = np.zeros(config.weight_shape(l))
        fan_in = config.widths[l - 1]
        if l in masked:
            coef[:fan_in] = structure.unit_family.inverse_second_moment()
        if l in scaled:
            layer_moment = structure.layer_family.inverse_second_moment()
            if l in masked:
                coef[:fan_in] *= layer_moment
                coef[fan_in:] = layer_moment
            else:
                coef[:] = layer_moment
        coefficients.append(coef)
    return coefficients


def hierarchical_objective(config, weights, structure, x, y, penalty_scale: float = 1.0) -> ObjectiveResult:
    """Noiseless log-likelihood minus (1/(2σ₀²)) Σ E[ξ⁻²] w², the penalty weighted by ``penalty_scale``.

    Raises DivergentExpectation for any family whose E[ξ⁻²] is infinite.
    """
    coefficients = penalty_coefficients(config, structure)
    net = build_network(config, None)
    value, grads = net.log_likelihood_and_gradient(weights, x, y, config.noise_std ** 2)
    scale = penalty_scale / (2.0 * config.sigma0 ** 2)
    penalty = sum(float(np.sum(c * w * w)) for c, w in zip(coefficients, weights.layers))
    gradient = [g - 2.0 * scale * c * w for g, c, w in zip(grads, coefficients, weights.layers)]
    return ObjectiveResult(value=value - scale * penalty, gradient=gradient, log_likelihoods=np.array([value]))


def map_objective_with_decay(value: float, weights: WeightSet, sigma0: Optional[float]) -> float:
    """value − (1/(2σ₀²)) Σ_l ‖W_l‖²_F, bias rows included; ``sigma0=None`` disables decay."""
    if sigma0 is None:
        return float(value)
    if sigma0 <= 0:
        raise ConfigurationError(f"sigma0 must be positive, got {sigma0}")
    squares = 0.0
    for w in weights.layers:
        squares += float(np.sum(w * w))
    return float(value) - squares / (2.0 * sigma0 * sigma0)


def decay_gradient(weights: WeightSet, sigma0: Optional[float]) -> List[np.ndarray]:
    if sigma0 is None:
        return [np.zeros_like(w) for w in weights.layers]
    return [-w / (sigma0 * sigma0) for w in weights.layers]


ESTIMATORS = {"LB": mc_lower_bound, "IW": iw_objective, "TA": ta_objective}


def evaluate_objective(
    spec: ObjectiveSpec,
    config: NetworkConfig,
    weights: WeightSet,
    structure: Optional[NoiseStructure],
    x: np.ndarray,
    y: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    masks: Optional[Sequence[MaskSet]] = None,
    decay_scale: float = 1.0,
) -> ObjectiveResult:
    """Objective value and gradient for one batch.

    ``decay_scale`` weights the L2 term, e.g. batch size / N for mini-batches.
    The hierarchical objective replaces decay with its own penalty, weighted the same way.
    """
    if structure is None:
        raise ConfigurationError("Monte Carlo objectives need a noise structure")
    if spec.kind == "HP":
        return hierarchical_objective(config, weights, structure, x, y, penalty_scale=decay_scale)

    result = ESTIMATORS[spec.kind](config, weights, structure, x, y, spec.samples, rng, masks)
    if spec.weight_decay:
        sigma0 = config.sigma0
        penalty = map_objective_with_decay(0.0, weights, sigma0)
        result.value += decay_scale * penalty
        result.gradient = [g + decay_scale * d for g, d in zip(result.gradient, decay_gradient(weights, sigma0))]
    if not np.isfinite(result.value):
        raise NonFiniteError(f"{spec.kind} objective is not finite", breakdown={"value": result.value})
    logger.debug(f"{spec.kind} objective {result.value:.6f} over {len(x)} rows")
    return result
