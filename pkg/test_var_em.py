#!/usr/bin/env python3
"""
Tests for variational EM: closed-form scale updates against the numeric
oracle, the ELBO, the M/E steps and the predictive distribution.
"""

import sys

import numpy as np
import pytest
from scipy.special import logsumexp

from app.em import (
    HalfCauchy,
    InverseGamma,
    LogUniform,
    VariationalState,
    coordinate_ascent,
    draw_eps,
    elbo,
    em_step,
    gaussian_kl,
    golden_section_maximize,
    load_state,
    m_step,
    oracle_scale,
    predictive_distribution,
    save_state,
    scale_star,
    verify_scale_star,
)
from app.errors import ConfigurationError, ShapeError
from app.nets import NetworkConfig, forward_deterministic, posterior_moment_map
from app.noise import make_stream
from app.tensor import Adam, numeric_gradient, relative_error

HYPERPRIORS = [InverseGamma(alpha=3.0, beta=3.0), HalfCauchy(scale=1.0), LogUniform()]


def _random_hyperprior(kind, rng):
    if kind == "inverse_gamma":
        return InverseGamma(alpha=10 ** rng.uniform(-1, 1), beta=10 ** rng.uniform(-1, 1))
    if kind == "half_cauchy":
        return HalfCauchy(scale=10 ** rng.uniform(-1, 1))
    return LogUniform()


# Scale updates

@pytest.mark.parametrize("kind", ["inverse_gamma", "half_cauchy", "log_uniform"])
def test_scale_star_matches_golden_section_oracle(kind):
    rng = make_stream(0, ["inverse_gamma", "half_cauchy", "log_uniform"].index(kind))
    for _ in range(1000):
        hyperprior = _random_hyperprior(kind, rng)
        total = 0.0 if rng.random() < 0.1 else 10 ** rng.uniform(-3, 3)
        count = int(rng.integers(1, 200))
        sigma0 = 10 ** rng.uniform(-1, 1)
        closed = scale_star(hyperprior, total, count, sigma0)
        oracle = oracle_scale(hyperprior, total, count, sigma0)
        assert abs(closed - oracle) <= 1e-8 * (1.0 + oracle), (hyperprior, total, count, sigma0)
        verify_scale_star(hyperprior, total, count, sigma0)


@pytest.mark.parametrize("hyperprior", [LogUniform(), HalfCauchy(scale=1.0), HalfCauchy(scale=0.1)])
def test_sparsifying_priors_return_zero_for_empty_groups(hyperprior):
    assert scale_star(hyperprior, 0.0, 10, 1.0) == 0.0


def test_inverse_gamma_keeps_empty_groups_positive():
    hyperprior = InverseGamma(alpha=3.0, beta=3.0)
    assert scale_star(hyperprior, 0.0, 10, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert scale_star(hyperprior, 0.0, 4, 2.0) == pytest.approx(3.0 / (3.0 + 1.0 + 2.0), rel=1e-15)


def test_golden_section_finds_parabola_peak():
    peak = golden_section_maximize(lambda a, b: -(a - 1.7) ** 2 + (b - 1.7) ** 2, -10.0, 10.0)
    assert peak == pytest.approx(1.7, abs=1e-9)


def test_scale_star_rejects_empty_group():
    with pytest.raises(ValueError):
        scale_star(LogUniform(), 1.0, 0, 1.0)


# KL and ELBO

def test_kl_of_identical_gaussians_is_zero():
    assert gaussian_kl(np.array([0.0]), np.array([2.5]), np.array([2.5]))[0] == 0.0


def test_kl_of_unit_mean_shift():
    assert gaussian_kl(np.array([1.0]), np.array([1.0]), np.array([1.0]))[0] == pytest.approx(0.5)


def test_kl_is_nonnegative_and_zero_only_at_prior():
    rng = make_stream(1)
    for _ in range(200):
        mu = rng.normal(size=10)
        var = np.exp(rng.normal(size=10))
        prior = np.exp(rng.normal(size=10))
        kl = gaussian_kl(mu, var, prior)
        assert np.all(kl >= 0.0)
        assert np.all(kl > 0.0)
    prior = np.exp(rng.normal(size=10))
    np.testing.assert_allclose(gaussian_kl(np.zeros(10), prior, prior), 0.0, atol=1e-15)


def _resnet(kind="ARD-ADD", seed=0):
    config = NetworkConfig(widths=(2, 3, 3, 3, 1), residual=(False, True, True), noise_std=0.5)
    rng = make_stream(seed)
    state = VariationalState.initialize(config, kind, rng)
    state.rho = [r + rng.normal(size=r.shape) + 5.0 for r in state.rho]
    x = rng.normal(size=(8, 2))
    y = np.tanh(x[:, :1]) + 0.1 * rng.normal(size=(8, 1))
    return config, state, x, y


def test_elbo_kl_vanishes_when_q_equals_prior():
    config, state, x, y = _resnet("ADD")
    state.tau = {2: 0.7, 3: 1.3}
    for i, mu in enumerate(state.mu):
        l = i + 1
        fan_in = config.widths[l - 1]
        prior_var = np.full(mu.shape, config.sigma0 ** 2)
        if l in state.tau:
            prior_var[:fan_in] *= state.tau[l] ** 2
        state.mu[i] = np.zeros(mu.shape)
        state.rho[i] = np.log(np.expm1(prior_var))
    result = elbo(config, state, InverseGamma(), x, y, rng=make_stream(2))
    assert result.kl == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["ARD", "ADD", "ARD-ADD"])
def test_elbo_gradient_matches_finite_differences(kind):
    hyperprior = InverseGamma(alpha=3.0, beta=3.0)
    for point in range(20):
        config, state, x, y = _resnet(kind, seed=10 + point)
        m_step(config, state, hyperprior, kind)
        eps = [draw_eps(state, make_stream(point, 5))]

        def value():
            return elbo(config, state, hyperprior, x, y, eps=eps, data_scale=3.0).value

        result = elbo(config, state, hyperprior, x, y, eps=eps, data_scale=3.0)
        analytic = np.concatenate([g.ravel() for g in result.grad_mu + result.grad_rho])
        numeric = np.concatenate([numeric_gradient(value, a).ravel() for a in state.mu + state.rho])
        assert relative_error(analytic, numeric) <= 1e-5


def test_per_datum_elbo_with_shared_noise_matches_single_sample():
    hyperprior = InverseGamma(alpha=3.0, beta=3.0)
    config, state, x, y = _resnet("ARD-ADD", seed=4)
    shared = draw_eps(state, make_stream(4, 5))
    stacked = [np.repeat(e[None], len(x), axis=0) for e in shared]
    single = elbo(config, state, hyperprior, x, y, eps=[shared], data_scale=3.0)
    per_row = elbo(config, state, hyperprior, x, y, eps=[stacked], data_scale=3.0, per_datum=True)
    assert per_row.value == pytest.approx(single.value, rel=1e-12)
    for a, b in zip(per_row.grad_mu + per_row.grad_rho, single.grad_mu + single.grad_rho):
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("kind", ["ARD", "ARD-ADD"])
def test_per_datum_elbo_gradient_matches_finite_differences(kind):
    hyperprior = InverseGamma(alpha=3.0, beta=3.0)
    for point in range(5):
        config, state, x, y = _resnet(kind, seed=30 + point)
        m_step(config, state, hyperprior, kind)
        eps = [draw_eps(state, make_stream(point, 6), rows=len(x))]

        def value():
            return elbo(config, state, hyperprior, x, y, eps=eps, data_scale=3.0, per_datum=True).value

        result = elbo(config, state, hyperprior, x, y, eps=eps, data_scale=3.0, per_datum=True)
        analytic = np.concatenate([g.ravel() for g in result.grad_mu + result.grad_rho])
        numeric = np.concatenate([numeric_gradient(value, a).ravel() for a in state.mu + state.rho])
        assert relative_error(analytic, numeric) <= 1e-5


def test_per_datum_draws_differ_between_rows():
    config, state, x, _ = _resnet("ARD")
    eps = draw_eps(state, make_stream(8), rows=len(x))
    assert [e.shape for e in eps] == [(len(x), *m.shape) for m in state.mu]
    assert not np.array_equal(eps[0][0], eps[0][1])


def test_per_datum_noise_must_cover_every_row():
    config, state, x, y = _resnet("ARD")
    eps = [draw_eps(state, make_stream(8), rows=len(x) - 1)]
    with pytest.raises(ShapeError):
        elbo(config, state, InverseGamma(), x, y, eps=eps, per_datum=True)


@pytest.mark.parametrize("kind", ["ARD", "ADD", "ARD-ADD"])
@pytest.mark.parametrize("hyperprior", [InverseGamma(alpha=3.0, beta=3.0), HalfCauchy(scale=1.0)])
def test_m_step_never_decreases_elbo(kind, hyperprior):
    for seed in range(5):
        config, state, x, y = _resnet(kind, seed=seed)
        eps = [draw_eps(state, make_stream(seed, 7))]
        for _ in range(3):
            before = elbo(config, state, hyperprior, x, y, eps=eps).value
            m_step(config, state, hyperprior, kind)
            after = elbo(config, state, hyperprior, x, y, eps=eps).value
            assert after >= before - 1e-10


def test_add_m_step_uses_layer_sum():
    config = NetworkConfig(widths=(3, 3, 3, 1), residual=(True, True))
    state = VariationalState.initialize(config, "ADD", make_stream(3))
    hyperprior = InverseGamma(alpha=3.0, beta=3.0)
    m_step(config, state, hyperprior, "ADD")
    moments = state.mu[1][:3] ** 2 + state.variances()[1][:3]
    expected = scale_star(hyperprior, float(np.sum(moments)), 9, 1.0)
    assert list(state.tau) == [2]
    assert state.tau[2] ** 2 == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("hyperprior", HYPERPRIORS)
def test_coordinate_ascent_is_monotone_and_terminates(hyperprior):
    rng = make_stream(4)
    for _ in range(20):
        totals = 10 ** rng.uniform(-3, 2, size=5)
        _, _, history = coordinate_ascent(hyperprior, totals, 7, 1.0, 1.0)
        assert len(history) <= 50
        for earlier, later in zip(history, history[1:]):
            assert later >= earlier - 1e-9 * max(1.0, abs(earlier))


def test_em_rejects_unknown_structure_and_plain_networks():
    config, state, x, y = _resnet()
    with pytest.raises(ConfigurationError):
        em_step(config, state, LogUniform(), "ARDD", x, y, Adam(), make_stream(0))
    plain = NetworkConfig.simple(2, [3, 3])
    with pytest.raises(ConfigurationError):
        VariationalState.initialize(plain, "ADD", make_stream(0))


def _fit(config, kind, hyperprior, x, y, steps, step_size, seed=0):
    rng = make_stream(seed)
    state = VariationalState.initialize(config, kind, rng)
    optimizer = Adam(step_size=step_size)
    for _ in range(steps):
        em_step(config, state, hyperprior, kind, x, y, optimizer, rng)
    return state


def _relevance_data():
    rng = make_stream(20)
    x = rng.normal(size=(200, 4))
    y = 3.0 * x[:, :1] + 0.5 * rng.normal(size=(200, 1))
    return x, y


def test_ard_finds_the_relevant_feature():
    config = NetworkConfig(widths=(4, 8, 1), noise_std=0.5)
    x, y = _relevance_data()
    state = _fit(config, "ARD", LogUniform(), x, y, steps=2000, step_size=1e-2)
    xi = state.xi[1]
    assert np.all(xi[0] > 5.0 * xi[1:])

    grid = posterior_moment_map(config, state, layers=[1])[1]
    assert grid[0].max() > grid[1:].max()


def test_add_prunes_superfluous_blocks():
    rng = make_stream(30)
    truth_config = NetworkConfig(widths=(2, 8, 8, 1), residual=(False, True), noise_std=0.3)
    truth = VariationalState.initialize(truth_config, "ARD", rng).mean_weights()
    x = rng.normal(size=(2000, 2))
    x_test = rng.normal(size=(500, 2))
    clean = forward_deterministic(truth_config, truth, x)
    scale = float(np.std(clean))
    y = clean / scale + 0.3 * rng.normal(size=clean.shape)
    y_test = forward_deterministic(truth_config, truth, x_test) / scale
    noisy_test = y_test + 0.3 * rng.normal(size=y_test.shape)
    oracle_rmse = np.sqrt(np.mean((noisy_test - y_test) ** 2))

    config = NetworkConfig(widths=(2, 8, 8, 8, 8, 8, 1), residual=(False, True, True, True, True), noise_std=0.3)
    state = _fit(config, "ADD", LogUniform(), x, y, steps=4000, step_size=1e-2, seed=31)
    assert min(state.tau.values()) < 1e-3

    mean, _ = predictive_distribution(config, state, x_test, 50, make_stream(32))
    rmse = np.sqrt(np.mean((noisy_test - mean) ** 2))
    assert rmse <= 1.1 * oracle_rmse


# Predictive distribution

def test_predictive_with_vanishing_variance_is_deterministic_pass():
    config, state, x, _ = _resnet()
    state.rho = [np.full(r.shape, -80.0) for r in state.rho]
    mean, var = predictive_distribution(config, state, x, 5, make_stream(5))
    np.testing.assert_allclose(mean, forward_deterministic(config, state.mean_weights(), x), atol=1e-12)
    np.testing.assert_allclose(var, config.noise_std ** 2, atol=1e-12)


def test_predictive_single_draw_is_reproducible():
    config, state, x, _ = _resnet()
    first = predictive_distribution(config, state, x, 1, make_stream(6))
    second = predictive_distribution(config, state, x, 1, make_stream(6))
    np.testing.assert_array_equal(first[0], second[0])


# Conjugate toy: y = w1·w2·x with Gaussian priors on both weights

def _linear_config():
    return NetworkConfig(widths=(1, 1, 1), activations=("identity",), bias=False, noise_std=0.5)


def _w1_grid_posterior(x, y, noise_var, v1, v2, sigma0=1.0):
    """log p(y | w1) with w2 integrated out, over a grid of w1."""
    w1 = np.linspace(-8.0, 8.0, 40001)
    c = sigma0 ** 2 * v2
    xx, xy, yy, n = float(x @ x), float(x @ y), float(y @ y), len(x)
    inflated = noise_var + c * w1 ** 2 * xx
    log_lik = (-0.5 * n * np.log(2 * np.pi * noise_var) - 0.5 * np.log(inflated / noise_var)
               - 0.5 * (yy - c * w1 ** 2 * xy ** 2 / inflated) / noise_var)
    log_prior = -0.5 * np.log(2 * np.pi * sigma0 ** 2 * v1) - w1 ** 2 / (2 * sigma0 ** 2 * v1)
    return w1, log_lik + log_prior, c, xx, xy


def test_elbo_is_below_conjugate_evidence():
    config = _linear_config()
    rng = make_stream(40)
    x = rng.normal(size=20)
    y = 1.5 * x + 0.5 * rng.normal(size=20)
    state = VariationalState(
        mu=[np.zeros((1, 1)), np.zeros((1, 1))],
        rho=[np.full((1, 1), np.log(np.expm1(0.2))), np.full((1, 1), np.log(np.expm1(0.2)))],
        xi={1: np.array([1.0]), 2: np.array([1.2])},
    )
    w1, log_joint, *_ = _w1_grid_posterior(x, y, 0.25, 1.0, 1.44)
    log_evidence = logsumexp(log_joint) + np.log(w1[1] - w1[0])
    result = elbo(config, state, InverseGamma(), x[:, None], y[:, None], samples=4000, rng=make_stream(41))
    assert result.likelihood - result.kl <= log_evidence


def test_predictive_matches_conjugate_posterior_predictive():
    config = _linear_config()
    rng = make_stream(42)
    x = rng.normal(size=200)
    y = 1.5 * x + 0.5 * rng.normal(size=200)
    state = _fit(config, "ARD", InverseGamma(alpha=3.0, beta=3.0), x[:, None], y[:, None], steps=3000,
                 step_size=1e-2, seed=43)

    v1, v2 = state.xi[1][0] ** 2, state.xi[2][0] ** 2
    w1, log_post, c, xx, xy = _w1_grid_posterior(x, y, 0.25, v1, v2)
    weights = np.exp(log_post - logsumexp(log_post))
    precision = 1.0 / c + w1 ** 2 * xx / 0.25
    m2 = (w1 * xy / 0.25) / precision
    x_star = 1.0
    mean = np.sum(weights * w1 * m2) * x_star
    second = np.sum(weights * w1 ** 2 * (m2 ** 2 + 1.0 / precision)) * x_star ** 2
    variance = second - mean ** 2 + 0.25

    got_mean, got_var = predictive_distribution(config, state, np.array([[x_star]]), 4000, make_stream(44))
    assert got_mean.item() == pytest.approx(mean, rel=0.05)
    assert got_var.item() == pytest.approx(variance, rel=0.05)


# State dump

def test_state_dump_round_trip(tmp_path):
    config, state, _, _ = _resnet("ARD-ADD")
    m_step(config, state, InverseGamma(), "ARD-ADD")
    path = save_state(state, tmp_path / "state.txt")
    header = path.read_text().splitlines()[0]
    assert header == "# layer 1 3 3 mu"
    loaded = load_state(path)
    for a, b in zip(state.mu + state.rho, loaded.mu + loaded.rho):
        np.testing.assert_array_equal(a, b)
    assert loaded.tau == state.tau
    for l in state.xi:
        np.testing.assert_array_equal(loaded.xi[l], state.xi[l])


def test_moment_map_of_zero_state_is_zero():
    config, state, _, _ = _resnet()
    state.mu = [np.zeros(m.shape) for m in state.mu]
    state.rho = [np.full(r.shape, -800.0) for r in state.rho]
    grids = posterior_moment_map(config, state)
    assert all(np.all(g == 0.0) for g in grids.values())


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
