#!/usr/bin/env python3
"""
Tests for the Monte Carlo objectives, tail-adaptive weights, the hierarchical
objective and the exact mask-enumeration oracle.
"""

import sys

import numpy as np
import pytest
from scipy.special import logsumexp

from app.errors import DivergentExpectation, EnumerationBoundError, NonFiniteError
from app.nets import NetworkConfig, NoiseStructure, WeightSet, build_network
from app.noise import Bernoulli, InverseNakagami, Rayleigh, make_stream
from app.objectives import (
    ObjectiveSpec,
    enumerate_expected_log_likelihood,
    enumerate_log_marginal,
    enumerate_mask_likelihoods,
    evaluate_objective,
    hierarchical_objective,
    iw_objective,
    map_objective_with_decay,
    mc_lower_bound,
    ta_objective,
    tail_adaptive_weights,
)
from app.tensor import numeric_gradient, relative_error


def _toy(widths=(2, 4, 1), keep=0.5, seed=0, rows=12, noise_std=0.5, output_layer=True):
    config = NetworkConfig(widths=widths, noise_std=noise_std)
    rng = make_stream(seed)
    weights = WeightSet.initialize(config, rng)
    x = rng.normal(size=(rows, widths[0]))
    y = np.sin(2.0 * x[:, :1]) + 0.1 * rng.normal(size=(rows, 1))
    structure = NoiseStructure(kind="unit", unit_family=Bernoulli(keep_prob=keep), output_layer=output_layer)
    return config, weights, structure, x, y


def _noiseless_ll(config, weights, x, y):
    return build_network(config, None).log_likelihood_value(weights, x, y, config.noise_std ** 2)


# Monte Carlo lower bound

def test_lower_bound_with_keep_all_noise_is_noiseless_likelihood():
    config, weights, structure, x, y = _toy(keep=1.0)
    result = mc_lower_bound(config, weights, structure, x, y, 7, make_stream(1))
    assert result.value == pytest.approx(_noiseless_ll(config, weights, x, y), abs=1e-10)
    assert np.all(result.log_likelihoods == result.log_likelihoods[0])


def test_lower_bound_converges_to_expected_log_likelihood():
    config, weights, structure, x, y = _toy()
    result = mc_lower_bound(config, weights, structure, x, y, 2000, make_stream(2))
    expected = enumerate_expected_log_likelihood(config, weights, structure, x, y)
    stderr = np.std(result.log_likelihoods, ddof=1) / np.sqrt(2000)
    assert abs(result.value - expected) <= 3.0 * stderr
    assert result.value < enumerate_log_marginal(config, weights, structure, x, y)


def test_lower_bound_is_strictly_below_log_marginal():
    config, weights, structure, x, y = _toy()
    expected = enumerate_expected_log_likelihood(config, weights, structure, x, y)
    assert expected < enumerate_log_marginal(config, weights, structure, x, y)


def test_enumeration_oracle_brackets_iw_and_lower_bound():
    config, weights, structure, x, y = _toy()
    exact = enumerate_log_marginal(config, weights, structure, x, y)
    count = 100_000

    iw = iw_objective(config, weights, structure, x, y, count, make_stream(3))
    # delta method on log-mean-exp
    iw_stderr = np.std(np.exp(iw.log_likelihoods - iw.value), ddof=1) / np.sqrt(count)
    assert abs(iw.value - exact) <= 3.0 * iw_stderr

    lb = mc_lower_bound(config, weights, structure, x, y, count, make_stream(3, 1))
    lb_stderr = np.std(lb.log_likelihoods, ddof=1) / np.sqrt(count)
    assert exact - lb.value > 3.0 * lb_stderr


# Importance-weighted objective

def test_iw_with_one_sample_equals_lower_bound():
    config, weights, structure, x, y = _toy()
    masks = [structure.sample(config, make_stream(4))]
    iw = iw_objective(config, weights, structure, x, y, 1, masks=masks)
    lb = mc_lower_bound(config, weights, structure, x, y, 1, masks=masks)
    assert iw.value == pytest.approx(lb.value, abs=1e-12)
    for a, b in zip(iw.gradient, lb.gradient):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_iw_with_equal_likelihoods_has_uniform_weights():
    config, weights, structure, x, y = _toy(keep=1.0)
    result = iw_objective(config, weights, structure, x, y, 5, make_stream(5))
    np.testing.assert_allclose(result.weights.normalized, np.full(5, 0.2), rtol=1e-12)
    assert result.value == pytest.approx(_noiseless_ll(config, weights, x, y), abs=1e-10)


def test_iw_matches_log_mean_exp_of_its_samples():
    config, weights, structure, x, y = _toy()
    result = iw_objective(config, weights, structure, x, y, 20, make_stream(6))
    assert result.value == pytest.approx(logsumexp(result.log_likelihoods) - np.log(20), abs=1e-12)
    assert result.weights.normalized.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(result.weights.normalized >= 0.0)


def test_iw_mean_estimate_increases_with_samples():
    config, weights, structure, x, y = _toy()
    exact = enumerate_log_marginal(config, weights, structure, x, y)
    rng = make_stream(7)
    means, errors = [], []
    for count in (1, 10, 100):
        estimates = [iw_objective(config, weights, structure, x, y, count, rng).value for _ in range(100)]
        means.append(np.mean(estimates))
        errors.append(np.std(estimates, ddof=1) / np.sqrt(len(estimates)))
    for (low, low_err), (high, high_err) in zip(zip(means, errors), zip(means[1:], errors[1:])):
        assert high + 3.0 * high_err >= low - 3.0 * low_err
    assert means[-1] <= exact + 3.0 * errors[-1]


def test_iw_value_is_invariant_to_sample_order():
    config, weights, structure, x, y = _toy()
    rng = make_stream(8)
    masks = [structure.sample(config, rng) for _ in range(9)]
    forward = iw_objective(config, weights, structure, x, y, 9, masks=masks)
    backward = iw_objective(config, weights, structure, x, y, 9, masks=masks[::-1])
    assert np.sort(forward.log_likelihoods).tobytes() == np.sort(backward.log_likelihoods).tobytes()
    assert logsumexp(np.sort(forward.log_likelihoods)) == logsumexp(np.sort(backward.log_likelihoods))
    assert forward.value == pytest.approx(backward.value, rel=1e-14)


# Tail-adaptive weights

def test_tail_adaptive_full_tie_is_uniform():
    np.testing.assert_allclose(tail_adaptive_weights(np.full(4, 0.3)), np.full(4, 0.25))


def test_tail_adaptive_three_distinct_values():
    np.testing.assert_allclose(tail_adaptive_weights(np.array([3.0, 2.0, 1.0])), [6 / 11, 3 / 11, 2 / 11])


def test_tail_adaptive_two_samples_favors_dominant():
    np.testing.assert_allclose(tail_adaptive_weights(np.array([-1.0, -50.0])), [2 / 3, 1 / 3])


def test_tail_adaptive_is_rank_based():
    rng = make_stream(9)
    raw = rng.random(12)
    base = tail_adaptive_weights(raw)
    np.testing.assert_allclose(tail_adaptive_weights(np.log(raw)), base, rtol=1e-14)
    np.testing.assert_allclose(tail_adaptive_weights(37.0 * raw), base, rtol=1e-14)
    order = rng.permutation(12)
    np.testing.assert_allclose(tail_adaptive_weights(raw[order]), base[order], rtol=1e-14)


def test_tail_adaptive_needs_two_samples():
    with pytest.raises(ValueError):
        tail_adaptive_weights(np.array([1.0]))
    with pytest.raises(ValueError):
        ObjectiveSpec(kind="TA", samples=1)


def test_ta_identical_samples_match_lower_bound_gradient():
    config, weights, structure, x, y = _toy(keep=1.0)
    ta = ta_objective(config, weights, structure, x, y, 4, make_stream(10))
    lb = mc_lower_bound(config, weights, structure, x, y, 4, make_stream(10))
    for a, b in zip(ta.gradient, lb.gradient):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_ta_weights_spread_at_low_drop_rate():
    config, weights, _, x, y = _toy(widths=(2, 50, 1), rows=30)
    structure = NoiseStructure(kind="unit", unit_family=Bernoulli.from_drop_rate(0.005), output_layer=True)
    rng = make_stream(11)
    realized = np.concatenate([
        ta_objective(config, weights, structure, x, y, 10, rng).weights.normalized for _ in range(20)
    ])
    assert np.any(np.abs(realized - 0.1) > 1e-3)


@pytest.mark.parametrize("estimator", [iw_objective, ta_objective])
def test_underflowing_samples_raise(estimator):
    config, weights, structure, x, _ = _toy(keep=0.5)
    y = np.full((len(x), 1), 1e200)
    with pytest.raises(NonFiniteError):
        estimator(config, weights, structure, x, y, 4, make_stream(14))


def test_evaluate_objective_rejects_non_finite_ta():
    config, weights, structure, x, _ = _toy(keep=0.5)
    y = np.full((len(x), 1), 1e200)
    with pytest.raises(NonFiniteError):
        evaluate_objective(ObjectiveSpec(kind="TA", samples=4), config, weights, structure, x, y, make_stream(15))


# Hierarchical objective

def test_hierarchical_penalty_coefficient():
    config, weights, _, x, y = _toy()
    structure = NoiseStructure(kind="unit", unit_family=InverseNakagami(a=2.0, b=4.0))
    result = hierarchical_objective(config, weights, structure, x, y)
    fan_in = config.widths[0]
    penalty = 0.5 * np.sum(weights.layers[0][:fan_in] ** 2) / (2.0 * config.sigma0 ** 2)
    assert result.value == pytest.approx(_noiseless_ll(config, weights, x, y) - penalty, rel=1e-12)


def test_hierarchical_with_zero_weights_is_noiseless_likelihood():
    config, _, _, x, y = _toy()
    weights = WeightSet.zeros(config)
    structure = NoiseStructure(kind="unit", unit_family=InverseNakagami(a=2.0, b=4.0))
    result = hierarchical_objective(config, weights, structure, x, y)
    assert result.value == _noiseless_ll(config, weights, x, y)


@pytest.mark.parametrize("family", [Bernoulli(keep_prob=0.9), Rayleigh(scale=1.0)])
def test_hierarchical_diverges_for_heavy_inverse_moments(family):
    config, weights, _, x, y = _toy()
    structure = NoiseStructure(kind="unit", unit_family=family)
    with pytest.raises(DivergentExpectation):
        hierarchical_objective(config, weights, structure, x, y)


# Enumeration oracle

def test_enumeration_keep_all_is_noiseless():
    config, weights, structure, x, y = _toy(keep=1.0)
    assert enumerate_log_marginal(config, weights, structure, x, y) == pytest.approx(
        _noiseless_ll(config, weights, x, y), abs=1e-12
    )


def test_enumeration_drop_all_on_resnet_is_skip_path():
    config = NetworkConfig(widths=(3, 3, 3, 1), residual=(True, True), noise_std=0.5)
    rng = make_stream(12)
    weights = WeightSet.initialize(config, rng)
    x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 1))
    structure = NoiseStructure(kind="unit", unit_family=Bernoulli(keep_prob=0.0))
    out = weights.layers[-1]
    skip = x @ out[:3] + out[3]
    resid = y - skip
    expected = -0.5 * y.size * np.log(2 * np.pi * 0.25) - np.sum(resid ** 2) / (2 * 0.25)
    assert enumerate_log_marginal(config, weights, structure, x, y) == pytest.approx(expected, abs=1e-10)


def test_enumeration_of_three_units_matches_direct_sum():
    config, weights, structure, x, y = _toy(widths=(3, 3, 1), output_layer=False, rows=5, noise_std=1.0)
    log_probs, lls = enumerate_mask_likelihoods(config, weights, structure, x, y)
    assert len(lls) == 8
    np.testing.assert_allclose(log_probs, np.log(1 / 8))
    direct = np.log(np.sum(np.exp(log_probs) * np.exp(lls)))
    assert enumerate_log_marginal(config, weights, structure, x, y) == pytest.approx(direct, abs=1e-12)
    assert enumerate_log_marginal(config, weights, structure, x, y) == pytest.approx(
        np.log(np.mean(np.exp(lls))), abs=1e-12
    )


def test_enumeration_bound():
    config, weights, structure, x, y = _toy(widths=(25, 2, 1), output_layer=False)
    with pytest.raises(EnumerationBoundError, match="24"):
        enumerate_log_marginal(config, weights, structure, x, y)


# Weight decay

def test_decay_disabled_adds_nothing():
    config, weights, *_ = _toy()
    assert map_objective_with_decay(-3.5, weights, None) == -3.5


def test_decay_of_single_weight():
    weights = WeightSet((np.array([[2.0]]),))
    assert map_objective_with_decay(0.0, weights, 1.0) == -2.0


def test_decay_counts_bias_rows():
    config, weights, *_ = _toy()
    total = 0.0
    for w in weights.layers:
        for value in w.ravel():
            total += value * value
    assert map_objective_with_decay(1.0, weights, 2.0) == pytest.approx(1.0 - total / 8.0, rel=1e-14)


def test_evaluate_objective_adds_scaled_decay():
    config, weights, structure, x, y = _toy()
    masks = [structure.sample(config, make_stream(13)) for _ in range(3)]
    plain = evaluate_objective(ObjectiveSpec(kind="IW", samples=3, weight_decay=False),
                               config, weights, structure, x, y, masks=masks)
    decayed = evaluate_objective(ObjectiveSpec(kind="IW", samples=3),
                                 config, weights, structure, x, y, masks=masks, decay_scale=0.25)
    expected = plain.value + 0.25 * map_objective_with_decay(0.0, weights, config.sigma0)
    assert decayed.value == pytest.approx(expected, rel=1e-12)


# Gradients with masks held fixed

def _check_gradient(fn, gradient, weights):
    analytic = np.concatenate([g.ravel() for g in gradient])
    numeric = np.concatenate([numeric_gradient(fn, w).ravel() for w in weights.layers])
    assert relative_error(analytic, numeric) <= 1e-5


@pytest.mark.parametrize("kind", ["LB", "IW"])
def test_objective_gradients_match_finite_differences(kind):
    for point in range(20):
        config, weights, structure, x, y = _toy(seed=100 + point, rows=6, keep=0.7)
        rng = make_stream(point, 1)
        masks = [structure.sample(config, rng) for _ in range(4)]
        spec = ObjectiveSpec(kind=kind, samples=4)

        def value():
            return evaluate_objective(spec, config, weights, structure, x, y, masks=masks).value

        result = evaluate_objective(spec, config, weights, structure, x, y, masks=masks)
        _check_gradient(value, result.gradient, weights)


def test_tail_adaptive_surrogate_gradient_matches_finite_differences():
    for point in range(20):
        config, weights, structure, x, y = _toy(seed=200 + point, rows=6, keep=0.7)
        rng = make_stream(point, 2)
        masks = [structure.sample(config, rng) for _ in range(4)]
        result = ta_objective(config, weights, structure, x, y, 4, masks=masks)
        fixed = result.weights.normalized.copy()

        def surrogate():
            lls = mc_lower_bound(config, weights, structure, x, y, 4, masks=masks).log_likelihoods
            return float(np.dot(fixed, lls))

        _check_gradient(surrogate, result.gradient, weights)


def test_hierarchical_gradient_matches_finite_differences():
    structure = NoiseStructure(kind="unit", unit_family=InverseNakagami(a=3.0, b=2.0), output_layer=True)
    for point in range(20):
        config, weights, _, x, y = _toy(seed=300 + point, rows=6)
        result = hierarchical_objective(config, weights, structure, x, y)
        _check_gradient(lambda: hierarchical_objective(config, weights, structure, x, y).value,
                        result.gradient, weights)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
