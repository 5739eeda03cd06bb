"""
Point estimates of the correlation lengths and predictive distributions.

Estimates are searched in log θ. The plug-in predictive is the Student-t law with n
degrees of freedom that follows from integrating σ² out; the full-posterior predictive
averages those laws over posterior draws.
"""

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import logsumexp

from krig.domain.entities.estimate import EstimateReport, StartResult
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import LengthVector, MaternSpec
from krig.domain.entities.design import DesignSet
from krig.domain.entities.predictive import PredictiveDist, PredictiveKind
from krig.domain.entities.sampler import PosteriorSample
from krig.domain.services.designs import lhs_points
from krig.domain.services.kernels import corr_matrix, cross_corr_matrix
from krig.domain.services.objective import integrated_log_likelihood
from krig.domain.services.special import (
    normal_cdf,
    normal_quantile,
    student_t_cdf,
    student_t_quantile,
)
from krig.errors import (
    DomainError,
    KrigError,
    NegativeVarianceFactor,
    OptimFailure,
    SolverFailure,
)

logger = logging.getLogger(__name__)

LOG_BOUND = 6.0
START_BOX = (-3.0, 3.0)
MIN_MAP_DRAWS = 100
MAX_BRACKET_WIDENINGS = 60
VARIANCE_TOL = 1e-10
DESIGN_POINT_TOL = 1e-10
KDE_CANDIDATES = 2000
_PENALTY = 1e300


# --- estimators ------------------------------------------------------------------


def _neg_integrated(model: KrigingModel, log_theta: np.ndarray) -> float:
    if np.any(np.abs(log_theta) > LOG_BOUND):
        return _PENALTY
    try:
        return -integrated_log_likelihood(
            model, LengthVector.from_theta(np.exp(log_theta)), reject_jitter=True
        )
    except KrigError:
        return _PENALTY


def mle(model: KrigingModel, starts: int = 5, seed: int = 0) -> EstimateReport:
    """
    Maximum of the integrated likelihood L¹ over log θ ∈ [−6, 6]^r.

    Args:
        model: Kriging model
        starts: Number of Latin-hypercube starting points
        seed: Seed for the starting design

    Returns:
        EstimateReport with θ̂ (THETA) and the best log L¹

    Raises:
        OptimFailure: If every start fails
    """
    if starts < 1:
        raise DomainError(f"starts must be >= 1, got {starts}")
    rng = np.random.default_rng(seed)
    lo, hi = START_BOX
    points = lo + (hi - lo) * lhs_points(starts, model.r, rng)
    results = []
    for x0 in points:
        res = minimize(
            lambda x: _neg_integrated(model, x),
            x0,
            method="Nelder-Mead",
            bounds=[(-LOG_BOUND, LOG_BOUND)] * model.r,
            options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 4000 * model.r},
        )
        ok = bool(np.isfinite(res.fun) and res.fun < _PENALTY)
        report = StartResult(
            start=tuple(x0), end=tuple(res.x), objective=-float(res.fun), success=ok
        )
        results.append((res, report))
    good = [(res, sr) for res, sr in results if sr.success]
    if not good:
        raise OptimFailure(f"all {starts} MLE starts failed")
    best, _ = min(good, key=lambda pair: pair[0].fun)
    logger.debug(f"📋 MLE log θ = {best.x} (log L¹ = {-best.fun:.6g})")
    return EstimateReport(
        estimate=LengthVector.from_theta(np.exp(best.x)),
        objective=-float(best.fun),
        iterations=int(sum(res.nit for res, _ in results)),
        multistart=[sr for _, sr in results],
    )


def scott_bandwidth(points: np.ndarray) -> np.ndarray:
    """Per-axis std · n^{−1/(d+4)}."""
    n, d = points.shape
    return points.std(axis=0, ddof=1) * n ** (-1.0 / (d + 4))


def kde_log_density(
    x: np.ndarray, points: np.ndarray, bandwidth: np.ndarray
) -> np.ndarray:
    """Log of a product-Gaussian KDE (up to a constant) at the rows of x."""
    x = np.atleast_2d(x)
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], 256):
        chunk = x[start : start + 256]
        z = (chunk[:, None, :] - points[None, :, :]) / bandwidth
        out[start : start + 256] = logsumexp(-0.5 * np.sum(z * z, axis=-1), axis=1)
    return out


def map_estimate(
    model: KrigingModel,
    sample: PosteriorSample,
    bandwidth: Union[None, float, Sequence[float]] = None,
) -> EstimateReport:
    """
    Mode of a log-space kernel density estimate of the posterior draws.

    Args:
        model: Kriging model the sample was drawn for
        sample: Posterior draws (at least 100)
        bandwidth: None for the n^{−1/(d+4)} scale rule, else a common or per-axis width

    Returns:
        EstimateReport with θ̂ (THETA), the log KDE value and the bandwidth used

    Raises:
        DomainError: For fewer than 100 draws
        OptimFailure: If the local refinement fails
    """
    if sample.size < MIN_MAP_DRAWS:
        raise DomainError(
            f"MAP needs at least {MIN_MAP_DRAWS} draws, got {sample.size}"
        )
    if sample.r != model.r:
        raise DomainError(f"sample has dimension {sample.r}, model has r={model.r}")
    points = np.log(sample.theta)
    spread = points.std(axis=0)
    if np.all(spread == 0.0):
        return EstimateReport(
            estimate=LengthVector.from_theta(np.exp(points[0])),
            objective=0.0,
            bandwidth=tuple(0.0 for _ in range(model.r)),
        )
    if bandwidth is None:
        h = scott_bandwidth(points)
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (model.r,)).copy()
    if np.any(h < 0.0):
        raise DomainError(f"bandwidth must be nonnegative, got {h}")
    h = np.where(h > 0.0, h, 1e-8)

    stride = max(1, sample.size // KDE_CANDIDATES)
    candidates = points[::stride]
    start = candidates[int(np.argmax(kde_log_density(candidates, points, h)))]
    res = minimize(
        lambda x: -float(kde_log_density(x, points, h)[0]),
        start,
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 2000 * model.r},
    )
    if not np.all(np.isfinite(res.x)):
        raise OptimFailure("MAP refinement diverged")
    return EstimateReport(
        estimate=LengthVector.from_theta(np.exp(res.x)),
        objective=-float(res.fun),
        iterations=int(res.nit),
        bandwidth=tuple(float(v) for v in h),
    )


def _fisher_transform(sigma: np.ndarray) -> np.ndarray:
    out = np.zeros_like(sigma)
    inside = np.abs(sigma) < 1.0
    out[inside] = np.arctanh(sigma[inside])
    return out


def fisher_distance(
    theta1: LengthVector, theta2: LengthVector, design: DesignSet, spec: MaternSpec
) -> float:
    """Frobenius distance between entrywise arctanh-transformed correlation matrices."""
    s1 = corr_matrix(spec, design, theta1).sigma
    s2 = corr_matrix(spec, design, theta2).sigma
    return float(np.linalg.norm(_fisher_transform(s1) - _fisher_transform(s2)))


# --- predictive laws -------------------------------------------------------------


def _kriging_terms(
    model: KrigingModel, lengths: LengthVector, x0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, float]:
    """(locations, variance factors 1 − kᵀΣ⁻¹k, yᵀΣ⁻¹y) at the rows of x0."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    corr = corr_matrix(model.spec, model.design, lengths)
    k = cross_corr_matrix(model.spec, model.design, lengths, x0)
    weights = corr.solve(model.y)
    locations = k @ weights
    whitened = corr.whiten(k.T)
    factors = 1.0 - np.sum(whitened * whitened, axis=0)
    worst = float(np.min(factors))
    if worst < -VARIANCE_TOL:
        raise NegativeVarianceFactor(f"1 − kᵀΣ⁻¹k = {worst:.3e} below −{VARIANCE_TOL}")
    factors = np.clip(factors, 0.0, None)
    at_design = _at_design_points(model, x0)
    if np.any(at_design):
        logger.warning(
            f"⚠️ {int(at_design.sum())} prediction point(s) coincide with design "
            "points; returning degenerate laws"
        )
        factors[at_design] = 0.0
    return locations, factors, corr.quad_form(model.y)


def _at_design_points(model: KrigingModel, x0: np.ndarray) -> np.ndarray:
    diff = x0[:, None, :] - model.design.points[None, :, :]
    d = np.sqrt(np.sum(diff**2, axis=-1))
    return np.min(d, axis=1) < DESIGN_POINT_TOL


def plugin_components(
    model: KrigingModel, lengths: LengthVector, x0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Student-t locations and scales at many prediction points (rows of x0)."""
    locations, factors, q = _kriging_terms(model, lengths, x0)
    return locations, np.sqrt(q / model.n * factors)


def _single_point(x0: np.ndarray) -> np.ndarray:
    return np.asarray(x0, dtype=float).reshape(1, -1)


def predict_plugin(
    model: KrigingModel, lengths: LengthVector, x0: np.ndarray
) -> PredictiveDist:
    """Student-t predictive with n degrees of freedom at x0, given the lengths."""
    locations, scales = plugin_components(model, lengths, _single_point(x0))
    return PredictiveDist(
        kind=PredictiveKind.PLUGIN, locations=locations, scales=scales, dof=model.n
    )


def true_components(
    model: KrigingModel, sigma2: float, lengths: LengthVector, x0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Conditional Gaussian means and standard deviations with σ² and θ known."""
    if not sigma2 > 0.0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    locations, factors, _ = _kriging_terms(model, lengths, x0)
    return locations, np.sqrt(sigma2 * factors)


def predict_true(
    model: KrigingModel, sigma2: float, lengths: LengthVector, x0: np.ndarray
) -> PredictiveDist:
    locations, scales = true_components(model, sigma2, lengths, _single_point(x0))
    return PredictiveDist(
        kind=PredictiveKind.GAUSSIAN, locations=locations, scales=scales
    )


def fpd_components(
    model: KrigingModel, sample: PosteriorSample, x0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-draw Student-t locations and scales: arrays of shape (draws, points)."""
    if sample.size == 0:
        raise DomainError("full-posterior prediction needs at least one draw")
    pairs = [plugin_components(model, lengths, x0) for lengths in sample.lengths()]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def predict_fpd(
    model: KrigingModel, sample: PosteriorSample, x0: np.ndarray
) -> PredictiveDist:
    """Equal-weight mixture of the plug-in laws at every posterior draw."""
    locations, scales = fpd_components(model, sample, _single_point(x0))
    return PredictiveDist(
        kind=PredictiveKind.MIXTURE,
        locations=locations[:, 0],
        scales=scales[:, 0],
        dof=model.n,
    )


# --- cdf, quantiles, intervals ---------------------------------------------------


def _component_cdf(
    x: float, locations: np.ndarray, scales: np.ndarray, dof: Optional[int]
) -> np.ndarray:
    out = (x >= locations).astype(float)
    pos = scales > 0.0
    z = (x - locations[pos]) / scales[pos]
    out[pos] = normal_cdf(z) if dof is None else student_t_cdf(z, dof)
    return out


def predictive_cdf(dist: PredictiveDist, x: float) -> float:
    """Mixture cdf: the arithmetic mean of the component cdfs."""
    return float(np.mean(_component_cdf(x, dist.locations, dist.scales, dist.dof)))


def _standard_quantile(p: float, dof: Optional[int]) -> float:
    return normal_quantile(p) if dof is None else student_t_quantile(p, dof)


def predictive_quantile(dist: PredictiveDist, p: float) -> float:
    """
    Quantile of a (mixture) predictive law, inf{x : cdf(x) >= p}.

    Component quantiles bracket the mixture quantile, which brentq then locates.
    Zero-scale components are atoms: when the cdf already reaches p at the low end the
    quantile sits on an atom and is returned directly.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if dist.degenerate:
        return float(np.quantile(dist.locations, p, method="inverted_cdf"))
    comp = dist.locations + dist.scales * _standard_quantile(p, dist.dof)
    if comp.size == 1 or np.all(comp == comp[0]):
        return float(comp[0])
    lo, hi = float(np.min(comp)), float(np.max(comp))
    scale = float(np.max(dist.scales))

    def excess(x: float) -> float:
        return predictive_cdf(dist, x) - p

    if excess(lo) >= 0.0:
        atoms = np.sort(dist.locations[dist.scales == 0.0])
        reached = [float(a) for a in atoms if a <= lo and excess(float(a)) >= 0.0]
        return reached[0] if reached else lo
    for _ in range(MAX_BRACKET_WIDENINGS):
        if excess(hi) >= 0.0:
            break
        hi += max(scale, hi - lo)
    else:
        raise SolverFailure(
            f"no upper bracket for the {p} quantile of the predictive law"
        )
    return float(brentq(excess, lo, hi, xtol=1e-12 * scale, maxiter=200))


def prediction_interval(dist: PredictiveDist, level: float) -> Tuple[float, float]:
    """Equal-tailed interval with cdf(lo) = (1−level)/2 and cdf(hi) = (1+level)/2."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    tail = 0.5 * (1.0 - level)
    return predictive_quantile(dist, tail), predictive_quantile(dist, 1.0 - tail)


def predictive_moments(dist: PredictiveDist) -> Tuple[float, float]:
    """Mean and variance (Student-t components need dof > 2)."""
    if dist.dof is None:
        comp_var = dist.scales**2
    elif dist.dof > 2:
        comp_var = dist.scales**2 * dist.dof / (dist.dof - 2)
    else:
        return float(np.mean(dist.locations)), math.inf
    mean = float(np.mean(dist.locations))
    return mean, float(np.mean(comp_var) + np.mean((dist.locations - mean) ** 2))
