import logging
import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.integrate import trapezoid

from krig.domain.entities.design import DesignSet
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import LengthVector, MaternSpec, Parametrization
from krig.domain.entities.sampler import ChainState, SamplerConfig, UpdateKind
from krig.domain.services import pigs
from krig.domain.services.objective import (
    log_conditional_in_log_coordinate,
    normalize_conditional,
)
from krig.errors import DomainError


def _gaussian(mean_of, var):
    def log_density(value, state):
        return -((value - mean_of(state)) ** 2) / (2.0 * var)

    return pigs.CustomConditional(log_density=log_density)


def _exponential(rate_of):
    def log_density(value, state):
        rate = rate_of(state)
        return math.log(rate) - rate * value

    return pigs.CustomConditional(
        log_density=log_density, support=pigs.Support.POSITIVE
    )


def test_run_is_reproducible(small_model):
    config = SamplerConfig(n_samples=30, burn_in=5, seed=7)
    first = pigs.run(small_model, config)
    second = pigs.run(small_model, config)
    np.testing.assert_array_equal(first.draws, second.draws)
    assert first.draws.shape == (30, 2)
    assert np.all(first.draws > 0.0)
    other = pigs.run(small_model, config.model_copy(update={"seed": 8}))
    assert not np.array_equal(first.draws, other.draws)


def test_thinning_keeps_every_kth_step(small_model):
    dense_config = SamplerConfig(n_samples=30, burn_in=4, thin=1, seed=2)
    thinned_config = SamplerConfig(n_samples=10, burn_in=4, thin=3, seed=2)
    dense = pigs.run(small_model, dense_config)
    thinned = pigs.run(small_model, thinned_config)
    np.testing.assert_array_equal(thinned.draws, dense.draws[2::3])


def test_step_changes_at_most_one_axis(small_model):
    config = SamplerConfig(proposal_sd=0.5)
    state = pigs.initial_state(small_model, config, np.random.default_rng(0))
    start = state.current.copy()
    for _ in range(20):
        nxt = pigs.step(state, small_model, config)
        assert np.count_nonzero(nxt.current != state.current) <= 1
        assert nxt.proposed.sum() == state.proposed.sum() + 1
        assert nxt.step_count == state.step_count + 1
        state = nxt
    assert state.step_count == 20
    assert not np.array_equal(state.current, start)


def test_initial_state(small_model):
    config = SamplerConfig()
    state = pigs.initial_state(small_model, config, np.random.default_rng(0))
    np.testing.assert_allclose(state.current, pigs.auto_init(small_model))
    given = config.model_copy(update={"init": LengthVector.from_theta([0.5, 0.25])})
    state = pigs.initial_state(small_model, given, None)
    np.testing.assert_allclose(state.current, [2.0, 4.0])
    bad = config.model_copy(update={"init": LengthVector.from_theta([0.5])})
    with pytest.raises(DomainError):
        pigs.initial_state(small_model, bad, None)


def test_exact_update_always_moves(small_model):
    config = SamplerConfig(n_samples=4, burn_in=0, seed=1, update=UpdateKind.EXACT)
    sample = pigs.run(small_model, config)
    assert np.all(np.isfinite(sample.draws)) and np.all(sample.draws > 0.0)
    assert all(math.isnan(a) or a == 1.0 for a in sample.acceptance)


def test_theta_working_coordinate(small_model):
    config = SamplerConfig(
        n_samples=40, burn_in=10, seed=4, parametrization=Parametrization.THETA
    )
    sample = pigs.run(small_model, config)
    assert np.all(sample.draws > 0.0)
    np.testing.assert_allclose(sample.theta, 1.0 / sample.draws)


def test_acceptance_outside_window_warns(small_model, caplog):
    with caplog.at_level(logging.WARNING, logger="krig.domain.services.pigs"):
        config = SamplerConfig(n_samples=40, burn_in=0, proposal_sd=1e-4, seed=0)
        sample = pigs.run(small_model, config)
    assert max(a for a in sample.acceptance if not math.isnan(a)) > 0.6
    assert "acceptance rate" in caplog.text


def test_grid_design_warns_about_properness(caplog):
    grid = DesignSet(
        points=[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.5], [0.5, 0.0]]
    )
    model = KrigingModel(
        design=grid,
        spec=MaternSpec(nu=1.5, r=2),
        y=[1.0, 0.2, -0.4, 0.3, 0.8, -1.0],
    )
    with caplog.at_level(logging.WARNING, logger="krig.domain.services.pigs"):
        pigs.run(model, SamplerConfig(n_samples=3, burn_in=0))
    assert "coordinate-distinct" in caplog.text


def test_independent_chains(small_model):
    config = SamplerConfig(n_samples=20, burn_in=5, seed=3)
    sample = pigs.run_chains(small_model, config, n_chains=2, workers=1)
    assert sample.size == 40 and sample.n_chains == 2
    assert not np.array_equal(sample.draws[:20], sample.draws[20:])
    again = pigs.run_chains(small_model, config, 2, workers=1)
    np.testing.assert_array_equal(sample.draws, again.draws)
    with pytest.raises(DomainError):
        pigs.run_chains(small_model, config, n_chains=0)


def test_single_axis_chain_matches_quadrature():
    x = np.linspace(0.05, 0.95, 8)
    model = KrigingModel(
        design=DesignSet(points=x), spec=MaternSpec(nu=2.5, r=1), y=np.sin(4.0 * x) + x
    )
    evaluation = normalize_conditional(model, [], 0)
    u = np.linspace(-30.0, 30.0, 12001)
    log_f = log_conditional_in_log_coordinate(model, [], 0)
    density = np.exp(np.array([log_f(float(v)) for v in u]) - evaluation.log_normalizer)
    expected = trapezoid(u * density, u)

    config = SamplerConfig(n_samples=6000, burn_in=300, proposal_sd=0.6, seed=5)
    sample = pigs.run(model, config)
    logs = np.log(sample.draws[:, 0])
    se = logs.std(ddof=1) / math.sqrt(pigs.effective_sample_size(logs))
    assert abs(logs.mean() - expected) < 4.0 * se


def test_gaussian_pair_reaches_the_gibbs_compromise():
    conditionals = [
        _gaussian(lambda s: s[1] / 4.0, 7.0 / 8.0),
        _gaussian(lambda s: s[0], 1.0),
    ]
    config = SamplerConfig(
        n_samples=40000,
        burn_in=500,
        proposal_sd=1.5,
        inner_metropolis_steps=10,
        seed=11,
    )
    draws = pigs.run_custom(conditionals, config, init=[0.0, 0.0]).draws
    np.testing.assert_allclose(draws.mean(axis=0), [0.0, 0.0], atol=0.08)
    cov = np.cov(draws.T)
    np.testing.assert_allclose(cov[0, 0], 1.0, atol=0.1)
    np.testing.assert_allclose(cov[0, 1], 0.75, atol=0.1)
    np.testing.assert_allclose(cov[1, 1], 2.0, atol=0.15)


def test_exponential_pair_matches_the_joint_density():
    conditionals = [
        _exponential(lambda s: s[1] + 2.0),
        _exponential(lambda s: s[0] + 3.0),
    ]
    config = SamplerConfig(
        n_samples=20000,
        burn_in=500,
        proposal_sd=1.0,
        inner_metropolis_steps=10,
        seed=13,
    )
    draws = pigs.run_custom(conditionals, config, init=[0.5, 0.5]).draws
    assert np.all(draws > 0.0)

    def marginal_mean(rate, shift):
        def weight(t):
            return math.exp(-rate * t) / (t + shift)

        mass = integrate.quad(weight, 0.0, math.inf)[0]
        first = integrate.quad(lambda t: t * weight(t), 0.0, math.inf)[0]
        return first / mass

    for j, expected in enumerate((marginal_mean(2.0, 3.0), marginal_mean(3.0, 2.0))):
        column = draws[:, j]
        se = column.std(ddof=1) / math.sqrt(pigs.effective_sample_size(column))
        assert abs(column.mean() - expected) < 4.0 * se


def test_run_custom_checks_initial_values():
    with pytest.raises(DomainError):
        pigs.run_custom(
            [_gaussian(lambda s: 0.0, 1.0)], SamplerConfig(n_samples=2), init=[0.0, 1.0]
        )


def test_effective_sample_size():
    rng = np.random.default_rng(0)
    iid = rng.normal(size=5000)
    assert 0.7 * 5000 < pigs.effective_sample_size(iid) <= 5000
    ar = np.empty(20000)
    ar[0] = 0.0
    noise = rng.normal(size=ar.size)
    for t in range(1, ar.size):
        ar[t] = 0.9 * ar[t - 1] + noise[t]
    assert pigs.effective_sample_size(ar) == pytest.approx(20000 / 19, rel=0.5)
    assert pigs.effective_sample_size(np.ones(50)) == 1.0


def test_diagnostics(small_model):
    sample = pigs.run(small_model, SamplerConfig(n_samples=40, burn_in=5, seed=1))
    report = pigs.diagnostics(sample, map_bandwidth=[0.2, 0.3])
    assert report.n_draws == 40
    assert all(0.0 < e <= 40.0 for e in report.ess)
    assert set(report.quantiles) == {"0.05", "0.25", "0.5", "0.75", "0.95"}
    np.testing.assert_allclose(report.mean, np.log(sample.draws).mean(axis=0))
    assert report.map_bandwidth == [0.2, 0.3]
    short = pigs.run(small_model, SamplerConfig(n_samples=5, burn_in=0))
    with pytest.raises(DomainError):
        pigs.diagnostics(short)


def _decorrelated(column):
    """Every k-th value, k the chain's integrated autocorrelation time."""
    lag = math.ceil(column.size / pigs.effective_sample_size(column))
    return column[:: max(1, lag)]


@pytest.mark.slow
def test_mu_and_theta_chains_target_the_same_law(small_model):
    base = SamplerConfig(n_samples=2000, burn_in=500, thin=10)
    in_mu = pigs.run(small_model, base.model_copy(update={"seed": 21}))
    theta_config = base.model_copy(
        update={"seed": 22, "parametrization": Parametrization.THETA}
    )
    in_theta = pigs.run(small_model, theta_config)
    for j in range(small_model.r):
        a, b = _decorrelated(in_mu.theta[:, j]), _decorrelated(in_theta.theta[:, j])
        assert stats.ks_2samp(a, b).pvalue > 0.01


@pytest.mark.slow
def test_binned_chain_is_stationary_under_one_more_sweep(small_model):
    sample = pigs.run(small_model, SamplerConfig(n_samples=5000, burn_in=500, seed=31))
    logs = np.log(sample.draws)
    edges = [np.quantile(logs[:, j], [1.0 / 3.0, 2.0 / 3.0]) for j in range(2)]

    def cells(points):
        rows = np.digitize(points[:, 0], edges[0])
        cols = np.digitize(points[:, 1], edges[1])
        return np.bincount(3 * rows + cols, minlength=9)

    config = SamplerConfig()
    moved = []
    for k, start in enumerate(sample.draws[::5]):
        state = ChainState.start(start.copy(), np.random.default_rng(1000 + k))
        for _ in range(10):
            state = pigs.step(state, small_model, config)
        moved.append(np.log(state.current))
    table = np.vstack([cells(logs), cells(np.array(moved))])
    assert stats.chi2_contingency(table).pvalue > 0.01


@pytest.mark.slow
def test_chains_from_dispersed_starts_overlap(small_model):
    base = SamplerConfig(n_samples=2000, burn_in=1000, thin=5)
    low_init = LengthVector.from_mu([1e-2, 1e-2])
    high_init = LengthVector.from_mu([1e2, 1e2])
    low = pigs.run(
        small_model, base.model_copy(update={"seed": 41, "init": low_init})
    )
    high = pigs.run(
        small_model, base.model_copy(update={"seed": 42, "init": high_init})
    )
    for j in range(small_model.r):
        a, b = _decorrelated(low.draws[:, j]), _decorrelated(high.draws[:, j])
        assert stats.ks_2samp(a, b).pvalue > 0.01
