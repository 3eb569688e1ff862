import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..errors import ConfigurationError, NonFiniteError
from ..nets import NetworkConfig, build_network
from ..tensor import Adam
from .hyperpriors import HyperPrior, scale_objective, scale_star
from .state import EMStructure, VariationalState, layer_scaled_layers, row_scaled_layers

logger = logging.getLogger(__name__)

SCALE_FLOOR = 1e-12
ASCENT_TOLERANCE = 1e-10
MAX_SWEEPS = 50


def gaussian_kl(mu: np.ndarray, var: np.ndarray, prior_var: np.ndarray) -> np.ndarray:
    """Elementwise KL[N(μ, σ²) ‖ N(0, p)]."""
    ratio = var / prior_var
    return 0.5 * (ratio + mu * mu / prior_var - 1.0 - np.log(ratio))


def prior_scales(config: NetworkConfig, state: VariationalState) -> List[np.ndarray]:
    """Squared-scale product v·u for every stored weight; 1 on bias rows."""
    scales = []
    for l, mu in enumerate(state.mu, start=1):
        scale = np.ones(mu.shape)
        fan_in = config.widths[l - 1]
        if l in state.xi:
            scale[:fan_in] *= (state.xi[l] ** 2)[:, None]
        if l in state.tau:
            scale[:fan_in] *= state.tau[l] ** 2
        scales.append(scale)
    return scales


def _kl_terms(mu, var, scale, sigma0) -> Tuple[float, np.ndarray, np.ndarray]:
    """KL of one layer and its derivatives in μ and σ².

    Weights whose prior scale is at or below the floor take the spike
    penalty ½(μ² + σ²)/(σ₀²·floor) instead of the KL.
    """
    spike = scale <= SCALE_FLOOR
    prior = sigma0 * sigma0 * np.where(spike, SCALE_FLOOR, scale)
    kl = np.where(spike, 0.5 * (mu * mu + var) / prior, gaussian_kl(mu, var, prior))
    grad_mu = mu / prior
    grad_var = np.where(spike, 0.5 / prior, 0.5 * (1.0 / prior - 1.0 / var))
    return float(np.sum(kl)), grad_mu, grad_var


def scale_log_prior(hyperprior: HyperPrior, state: VariationalState) -> float:
    total = 0.0
    for values in state.xi.values():
        for xi in values:
            total += hyperprior.log_density(max(xi * xi, SCALE_FLOOR))
    for tau in state.tau.values():
        total += hyperprior.log_density(max(tau * tau, SCALE_FLOOR))
    return total


@dataclass
class ElboResult:
    likelihood: float
    kl: float
    log_prior: float
    grad_mu: List[np.ndarray]
    grad_rho: List[np.ndarray]

    @property
    def value(self) -> float:
        return self.likelihood - self.kl + self.log_prior

    def breakdown(self) -> Dict[str, float]:
        return {"likelihood": self.likelihood, "kl": self.kl, "log_prior": self.log_prior}


def draw_eps(state: VariationalState, rng: np.random.Generator, rows: Optional[int] = None) -> List[np.ndarray]:
    """Standard-normal noise per weight; ``rows`` prepends a per-row axis."""
    lead = () if rows is None else (rows,)
    return [rng.standard_normal(lead + m.shape) for m in state.mu]


def elbo(
    config: NetworkConfig,
    state: VariationalState,
    hyperprior: HyperPrior,
    x: np.ndarray,
    y: np.ndarray,
    samples: int = 1,
    rng: Optional[np.random.Generator] = None,
    eps: Optional[Sequence[List[np.ndarray]]] = None,
    data_scale: float = 1.0,
    per_datum: bool = False,
) -> ElboResult:
    """MC estimate of E_q[log p(y|x,W)] − KL[q ‖ p(W|scales)] + log p(scales).

    ``eps`` fixes the reparametrization noise (one list per sample);
    otherwise ``samples`` draws come from ``rng``. With ``per_datum`` each
    row of ``x`` gets its own weight sample, so every noise array carries a
    leading axis of length ``len(x)``. ``data_scale`` multiplies the
    likelihood, e.g. N / batch size.
    """
    rows = len(x) if per_datum else None
    if eps is None:
        if rng is None:
            raise ConfigurationError("either a random stream or fixed reparametrization noise is required")
        if samples < 1:
            raise ConfigurationError(f"need at least one weight sample, got {samples}")
        eps = [draw_eps(state, rng, rows) for _ in range(samples)]
    net = build_network(config, None, rows)
    noise_var = config.noise_std ** 2
    variances = state.variances()
    stds = [np.sqrt(v) for v in variances]
    slopes = [expit(r) for r in state.rho]

    likelihood = 0.0
    grad_mu = [np.zeros_like(m) for m in state.mu]
    grad_rho = [np.zeros_like(r) for r in state.rho]
    for sample in eps:
        value, grads = net.log_likelihood_and_gradient(state.sample_weights(sample), x, y, noise_var)
        likelihood += value / len(eps)
        for i, (g, e) in enumerate(zip(grads, sample)):
            g = data_scale * g / len(eps)
            if per_datum:
                grad_mu[i] += g.sum(axis=0)
                grad_rho[i] += np.sum(g * e, axis=0) * slopes[i] / (2.0 * stds[i])
            else:
                grad_mu[i] += g
                grad_rho[i] += g * e * slopes[i] / (2.0 * stds[i])
    likelihood *= data_scale

    kl = 0.0
    for i, (mu, var, scale) in enumerate(zip(state.mu, variances, prior_scales(config, state))):
        layer_kl, kl_mu, kl_var = _kl_terms(mu, var, scale, config.sigma0)
        kl += layer_kl
        grad_mu[i] -= kl_mu
        grad_rho[i] -= kl_var * slopes[i]

    result = ElboResult(likelihood, kl, scale_log_prior(hyperprior, state), grad_mu, grad_rho)
    if not np.isfinite(result.value):
        raise NonFiniteError("ELBO is not finite", breakdown=result.breakdown())
    return result


def _group_totals(config: NetworkConfig, state: VariationalState, l: int) -> np.ndarray:
    """Σ_j (μ² + σ²) for every non-bias row of W_l."""
    moments = state.mu[l - 1] ** 2 + state.variances()[l - 1]
    return np.sum(moments[: config.widths[l - 1]], axis=1)


def joint_scale_objective(
    hyperprior: HyperPrior, totals: np.ndarray, count: int, sigma0: float, row_v: np.ndarray, layer_u: float
) -> float:
    """Scale terms of one layer carrying both row scales v_r and a layer scale u."""
    u = max(layer_u, SCALE_FLOOR)
    value = hyperprior.log_density(u) - 0.5 * count * len(totals) * np.log(u)
    effective = sigma0 * np.sqrt(u)
    for total, v in zip(totals, row_v):
        value += scale_objective(hyperprior, total, count, effective, max(v, SCALE_FLOOR))
    return float(value)


def coordinate_ascent(
    hyperprior: HyperPrior, totals: np.ndarray, count: int, sigma0: float, layer_u: float
) -> Tuple[np.ndarray, float, List[float]]:
    """Alternate row scales given u and u given rows until the joint objective settles.

    Returns (row v, layer u, joint objective after every sweep).
    """
    u = layer_u
    row_v = np.ones(len(totals))
    history: List[float] = []
    previous = None
    for sweep in range(MAX_SWEEPS):
        effective = sigma0 * np.sqrt(max(u, SCALE_FLOOR))
        row_v = np.array([scale_star(hyperprior, t, count, effective) for t in totals])
        pooled = float(np.sum(totals / np.maximum(row_v, SCALE_FLOOR)))
        u = scale_star(hyperprior, pooled, count * len(totals), sigma0)
        current = joint_scale_objective(hyperprior, totals, count, sigma0, row_v, u)
        history.append(current)
        if previous is not None and abs(current - previous) < ASCENT_TOLERANCE:
            break
        previous = current
    logger.debug(f"coordinate ascent settled after {len(history)} sweeps at {history[-1]:.10g}")
    return row_v, u, history


def m_step(
    config: NetworkConfig, state: VariationalState, hyperprior: HyperPrior, kind: EMStructure
) -> VariationalState:
    """Set every group scale to its closed-form maximizer, in place."""
    rows = set(row_scaled_layers(config, kind))
    layers = set(layer_scaled_layers(config, kind))
    sigma0 = config.sigma0
    for l in range(1, config.num_layers + 1):
        totals = _group_totals(config, state, l)
        count = config.widths[l]
        if l in rows and l in layers:
            row_v, u, _ = coordinate_ascent(hyperprior, totals, count, sigma0, state.tau[l] ** 2)
            state.xi[l] = np.sqrt(row_v)
            state.tau[l] = float(np.sqrt(u))
        elif l in rows:
            state.xi[l] = np.sqrt([scale_star(hyperprior, t, count, sigma0) for t in totals])
        elif l in layers:
            u = scale_star(hyperprior, float(np.sum(totals)), count * len(totals), sigma0)
            state.tau[l] = float(np.sqrt(u))
    return state


def e_step(
    config: NetworkConfig,
    state: VariationalState,
    hyperprior: HyperPrior,
    x: np.ndarray,
    y: np.ndarray,
    optimizer: Adam,
    rng: np.random.Generator,
    data_scale: float = 1.0,
) -> ElboResult:
    """One gradient-ascent update of (μ, ρ), drawing one reparametrized weight sample per row."""
    result = elbo(config, state, hyperprior, x, y, rng=rng, data_scale=data_scale, per_datum=True)
    count = len(state.mu)
    updated = optimizer.ascend(state.mu + state.rho, result.grad_mu + result.grad_rho)
    state.mu, state.rho = updated[:count], updated[count:]
    return result


def em_step(
    config: NetworkConfig,
    state: VariationalState,
    hyperprior: HyperPrior,
    kind: EMStructure,
    x: np.ndarray,
    y: np.ndarray,
    optimizer: Adam,
    rng: np.random.Generator,
    data_scale: float = 1.0,
) -> ElboResult:
    """M-step on the scales, then one E-step on q(W). Mutates ``state``."""
    if kind not in ("ARD", "ADD", "ARD-ADD"):
        raise ConfigurationError(f"unknown EM structure '{kind}'")
    m_step(config, state, hyperprior, kind)
    return e_step(config, state, hyperprior, x, y, optimizer, rng, data_scale)


def predictive_distribution(
    config: NetworkConfig, state: VariationalState, x: np.ndarray, samples: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Predictive mean and variance per output: MC over q(W) plus observation noise."""
    if samples < 1:
        raise ConfigurationError(f"need at least one weight sample, got {samples}")
    net = build_network(config, None)
    draws = np.stack([net.predict(state.sample_weights(draw_eps(state, rng)), x) for _ in range(samples)])
    return draws.mean(axis=0), draws.var(axis=0) + config.noise_std ** 2
