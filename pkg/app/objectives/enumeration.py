import itertools
import logging
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import EnumerationBoundError
from ..nets import NetworkConfig, NoiseStructure, WeightSet, build_network

logger = logging.getLogger(__name__)

MAX_MASK_BITS = 24


def enumerate_mask_likelihoods(
    config: NetworkConfig, weights: WeightSet, structure: NoiseStructure, x: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """log P(mask) and log p(y | x, W, mask) for every Bernoulli mask.

    Scale variables with keep probability 0 or 1 are fixed, the rest are
    enumerated in binary order.
    """
    probs = structure.slot_keep_probs(config)
    free = np.flatnonzero((probs > 0.0) & (probs < 1.0))
    if free.size > MAX_MASK_BITS:
        raise EnumerationBoundError(
            f"{free.size} free mask bits exceed the enumeration bound of {MAX_MASK_BITS}"
        )
    base = (probs >= 1.0).astype(np.float64)
    keep, drop = np.log(probs[free]), np.log1p(-probs[free])

    net = build_network(config, structure)
    noise_var = config.noise_std ** 2
    log_probs, lls = [], []
    for bits in itertools.product((0.0, 1.0), repeat=free.size):
        values = base.copy()
        bits = np.asarray(bits)
        values[free] = bits
        masks = structure.from_flat(config, values)
        log_probs.append(float(np.sum(np.where(bits == 1.0, keep, drop))))
        lls.append(net.log_likelihood_value(weights, x, y, noise_var, masks))
    logger.debug(f"enumerated {len(lls)} masks over {free.size} free bits")
    return np.asarray(log_probs), np.asarray(lls)


def enumerate_log_marginal(
    config: NetworkConfig, weights: WeightSet, structure: NoiseStructure, x: np.ndarray, y: np.ndarray
) -> float:
    """Exact log Σ_masks P(mask) p(y | x, W, mask)."""
    log_probs, lls = enumerate_mask_likelihoods(config, weights, structure, x, y)
    return float(logsumexp(log_probs + lls))


def enumerate_expected_log_likelihood(
    config: NetworkConfig, weights: WeightSet, structure: NoiseStructure, x: np.ndarray, y: np.ndarray
) -> float:
    """Exact E_masks[log p(y | x, W, mask)], the limit of the MC lower bound."""
    log_probs, lls = enumerate_mask_likelihoods(config, weights, structure, x, y)
    return float(np.sum(np.exp(log_probs) * lls))
