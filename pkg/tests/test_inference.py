import logging
import math

import numpy as np
import pytest
from scipy import stats

from krig.domain.entities.design import DesignSet
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import LengthVector, MaternSpec, Parametrization
from krig.domain.entities.predictive import PredictiveDist, PredictiveKind
from krig.domain.entities.sampler import PosteriorSample, SamplerConfig
from krig.domain.services import inference
from krig.domain.services.kernels import point_corr_matrix
from krig.domain.services.objective import integrated_log_likelihood
from krig.errors import DomainError, KrigError, NotPositiveDefinite, OptimFailure


def _sample(mu_draws):
    mu_draws = np.atleast_2d(np.asarray(mu_draws, dtype=float))
    acceptance = tuple(0.3 for _ in range(mu_draws.shape[1]))
    return PosteriorSample(
        draws=mu_draws, config=SamplerConfig(), acceptance=acceptance
    )


@pytest.fixture
def one_point_model():
    return KrigingModel(
        design=DesignSet(points=[[0.0]]), spec=MaternSpec(nu=0.5, r=1), y=[2.0]
    )


@pytest.fixture
def line_model():
    x = np.array([0.1, 0.3, 0.45, 0.7, 0.9])
    return KrigingModel(
        design=DesignSet(points=x),
        spec=MaternSpec(nu=2.5, r=1),
        y=np.sin(2.0 * math.pi * x),
    )


# --- predictive laws ------------------------------------------------------------------


def test_plugin_law_on_a_single_observation(one_point_model):
    lengths = LengthVector.from_theta([1.0])
    dist = inference.predict_plugin(one_point_model, lengths, np.array([1.0]))
    assert dist.kind is PredictiveKind.PLUGIN
    assert dist.dof == 1
    k = math.exp(-math.sqrt(2.0))
    assert dist.locations[0] == pytest.approx(2.0 * k, rel=1e-12)
    assert dist.scales[0] ** 2 == pytest.approx(4.0 * (1.0 - k * k), rel=1e-12)
    mean, var = inference.predictive_moments(dist)
    assert mean == pytest.approx(dist.locations[0])
    assert var == math.inf


def test_plugin_interval_is_a_student_interval(line_model):
    lengths = LengthVector.from_theta([0.3])
    dist = inference.predict_plugin(line_model, lengths, np.array([0.55]))
    lo, hi = inference.prediction_interval(dist, 0.9)
    t = stats.t.ppf(0.95, line_model.n)
    assert lo == pytest.approx(dist.locations[0] - t * dist.scales[0], rel=1e-9)
    assert hi == pytest.approx(dist.locations[0] + t * dist.scales[0], rel=1e-9)
    mean, var = inference.predictive_moments(dist)
    assert var == pytest.approx(dist.scales[0] ** 2 * 5.0 / 3.0, rel=1e-12)


def test_prediction_at_a_design_point_is_degenerate(line_model, caplog):
    with caplog.at_level(logging.WARNING, logger="krig.domain.services.inference"):
        dist = inference.predict_plugin(
            line_model, LengthVector.from_theta([0.3]), np.array([0.45])
        )
    assert dist.degenerate
    assert dist.locations[0] == pytest.approx(line_model.y[2], abs=1e-9)
    lo, hi = inference.prediction_interval(dist, 0.95)
    assert lo == hi == pytest.approx(line_model.y[2], abs=1e-9)
    assert "coincide with design points" in caplog.text


def test_true_law(line_model):
    lengths = LengthVector.from_theta([0.3])
    x0 = np.array([0.55])
    plugin = inference.predict_plugin(line_model, lengths, x0)
    true = inference.predict_true(line_model, 2.0, lengths, x0)
    assert true.kind is PredictiveKind.GAUSSIAN and true.dof is None
    assert true.locations[0] == pytest.approx(plugin.locations[0], rel=1e-12)
    sigma = point_corr_matrix(line_model.spec, lengths, line_model.design.points)
    q = float(line_model.y @ np.linalg.solve(sigma, line_model.y))
    expected = 2.0 * plugin.scales[0] ** 2 * line_model.n / q
    assert true.scales[0] ** 2 == pytest.approx(expected, rel=1e-8)
    lo, hi = inference.prediction_interval(true, 0.95)
    assert hi - lo == pytest.approx(2.0 * 1.959963984540054 * true.scales[0], rel=1e-9)
    with pytest.raises(DomainError):
        inference.predict_true(line_model, 0.0, lengths, x0)


def test_true_interval_is_calibrated():
    rng = np.random.default_rng(42)
    design = DesignSet(points=[0.1, 0.35, 0.6, 0.85, 1.0])
    spec = MaternSpec(nu=1.5, r=1)
    lengths = LengthVector.from_theta([0.4])
    covered = 0
    trials = 2000
    for _ in range(trials):
        x0 = rng.uniform(0.0, 1.1)
        points = np.vstack([design.points, [[x0]]])
        lower = np.linalg.cholesky(point_corr_matrix(spec, lengths, points))
        field = lower @ rng.normal(size=6)
        model = KrigingModel(design=design, spec=spec, y=field[:5])
        dist = inference.predict_true(model, 1.0, lengths, np.array([x0]))
        lo, hi = inference.prediction_interval(dist, 0.95)
        covered += lo <= field[5] <= hi
    se = math.sqrt(0.95 * 0.05 / trials)
    assert abs(covered / trials - 0.95) < 3.0 * se


def test_fpd_with_identical_draws_equals_plugin(line_model):
    x0 = np.array([0.55])
    plugin = inference.predict_plugin(line_model, LengthVector.from_theta([0.3]), x0)
    fpd = inference.predict_fpd(line_model, _sample(np.full((7, 1), 1.0 / 0.3)), x0)
    assert fpd.kind is PredictiveKind.MIXTURE and fpd.locations.size == 7
    np.testing.assert_allclose(
        inference.prediction_interval(fpd, 0.95),
        inference.prediction_interval(plugin, 0.95),
        rtol=1e-12,
    )


def test_fpd_components_shape(line_model):
    x0 = np.array([[0.2], [0.55], [0.8]])
    sample = _sample([[2.0], [3.0], [4.0], [5.0]])
    locations, scales = inference.fpd_components(line_model, sample, x0)
    assert locations.shape == scales.shape == (4, 3)
    with pytest.raises(DomainError):
        inference.predict_fpd(line_model, _sample(np.empty((0, 1))), np.array([0.5]))


def test_mixture_quantiles():
    dist = PredictiveDist(
        kind=PredictiveKind.MIXTURE,
        locations=np.array([-1.0, 1.0]),
        scales=np.array([0.5, 0.5]),
        dof=6,
    )
    assert inference.predictive_quantile(dist, 0.5) == pytest.approx(0.0, abs=1e-10)
    for p in (0.01, 0.2, 0.7, 0.975):
        q = inference.predictive_quantile(dist, p)
        assert inference.predictive_cdf(dist, q) == pytest.approx(p, abs=1e-10)
    lo, hi = inference.prediction_interval(dist, 0.9)
    assert lo == pytest.approx(-hi, abs=1e-9)
    mean, var = inference.predictive_moments(dist)
    assert mean == 0.0
    assert var == pytest.approx(0.25 * 6.0 / 4.0 + 1.0)


def test_mixture_quantiles_with_an_atom():
    # a zero-scale component at -10 carries half the mass
    dist = PredictiveDist(
        kind=PredictiveKind.MIXTURE,
        locations=np.array([-10.0, 0.0]),
        scales=np.array([0.0, 1.0]),
        dof=5,
    )
    assert inference.predictive_quantile(dist, 0.025) == -10.0
    assert inference.predictive_quantile(dist, 0.5) == -10.0
    q = inference.predictive_quantile(dist, 0.6)
    assert q == pytest.approx(stats.t.ppf(0.2, 5), abs=1e-8)
    lo, hi = inference.prediction_interval(dist, 0.95)
    assert lo == -10.0
    assert hi == pytest.approx(stats.t.ppf(0.95, 5), abs=1e-8)


def test_quantiles_of_point_masses():
    dist = PredictiveDist(
        kind=PredictiveKind.MIXTURE,
        locations=np.array([0.0, -10.0]),
        scales=np.array([0.0, 0.0]),
        dof=5,
    )
    assert inference.predictive_quantile(dist, 0.025) == -10.0
    assert inference.predictive_quantile(dist, 0.75) == 0.0


def test_interval_argument_checks():
    dist = PredictiveDist(
        kind=PredictiveKind.PLUGIN,
        locations=np.array([0.0]),
        scales=np.array([1.0]),
        dof=3,
    )
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            inference.prediction_interval(dist, bad)
        with pytest.raises(DomainError):
            inference.predictive_quantile(dist, bad)


# --- estimators ------------------------------------------------------------------


def _grid_maximum(model, grid):
    values = []
    for v in grid:
        try:
            lengths = LengthVector.from_theta([math.exp(v)])
            values.append(
                integrated_log_likelihood(model, lengths, reject_jitter=True)
            )
        except KrigError:
            values.append(-math.inf)
    values = np.array(values)
    best = int(np.argmax(values))
    return grid[best], values[best]


def test_mle_matches_a_grid_search(line_model):
    grid = np.linspace(-6.0, 6.0, 2001)
    arg, best = _grid_maximum(line_model, grid)
    report = inference.mle(line_model, starts=4, seed=1)
    assert report.estimate.parametrization is Parametrization.THETA
    assert report.objective >= best - 1e-8
    assert math.log(report.estimate.theta[0]) == pytest.approx(arg, abs=0.02)
    assert len(report.multistart) == 4
    assert any(start.success for start in report.multistart)


def test_mle_is_reproducible(small_model):
    first = inference.mle(small_model, starts=2, seed=3)
    second = inference.mle(small_model, starts=2, seed=3)
    assert first.estimate == second.estimate
    assert np.all(np.abs(np.log(first.estimate.theta)) <= inference.LOG_BOUND)


def test_mle_fails_when_every_start_fails(line_model, monkeypatch):
    def broken(*args, **kwargs):
        raise NotPositiveDefinite("forced")

    monkeypatch.setattr(inference, "integrated_log_likelihood", broken)
    with pytest.raises(OptimFailure):
        inference.mle(line_model, starts=2)
    with pytest.raises(DomainError):
        inference.mle(line_model, starts=0)


def test_map_finds_the_mode_of_a_gaussian_sample(small_model):
    rng = np.random.default_rng(9)
    centre = np.array([math.log(0.4), math.log(0.8)])
    log_theta = centre + 0.2 * rng.normal(size=(10_000, 2))
    report = inference.map_estimate(small_model, _sample(np.exp(-log_theta)))
    np.testing.assert_allclose(np.log(report.estimate.theta), centre, atol=0.08)
    assert len(report.bandwidth) == 2
    expected = inference.scott_bandwidth(log_theta)
    np.testing.assert_allclose(report.bandwidth, expected, rtol=1e-12)


def test_map_bandwidth_forms(small_model):
    rng = np.random.default_rng(1)
    draws = np.exp(rng.normal(size=(200, 2)))
    sample = _sample(draws)
    scalar = inference.map_estimate(small_model, sample, bandwidth=0.3)
    assert scalar.bandwidth == (0.3, 0.3)
    per_axis = inference.map_estimate(small_model, sample, bandwidth=[0.2, 0.4])
    assert per_axis.bandwidth == (0.2, 0.4)
    with pytest.raises(DomainError):
        inference.map_estimate(small_model, sample, bandwidth=-1.0)


def test_map_edge_cases(small_model):
    with pytest.raises(DomainError):
        inference.map_estimate(small_model, _sample(np.ones((99, 2))))
    with pytest.raises(DomainError):
        inference.map_estimate(small_model, _sample(np.ones((150, 1))))
    flat = inference.map_estimate(small_model, _sample(np.tile([2.0, 4.0], (120, 1))))
    np.testing.assert_allclose(flat.estimate.theta, [0.5, 0.25])
    assert flat.bandwidth == (0.0, 0.0)


def test_fisher_distance(small_model):
    a = LengthVector.from_theta([0.3, 0.6])
    b = LengthVector.from_theta([0.5, 0.6])
    design, spec = small_model.design, small_model.spec
    assert inference.fisher_distance(a, a, design, spec) == 0.0
    d = inference.fisher_distance(a, b, design, spec)
    assert d > 0.0
    assert d == pytest.approx(
        inference.fisher_distance(b, a, design, spec), rel=1e-14
    )
    a_mu = a.to(Parametrization.MU)
    assert d == pytest.approx(
        inference.fisher_distance(a_mu, b, design, spec), rel=1e-12
    )
