"""
Replication studies: estimation error and prediction-interval quality.

Each replication draws its own design, data, posterior sample and test set from seeds
derived from (master_seed, replication index), so results do not depend on how the
replications are scheduled across workers.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from krig.domain.entities.design import DesignSet
from krig.domain.entities.experiment import (
    DesignKind,
    ExperimentConfig,
    ExperimentKind,
    ExperimentResult,
)
from krig.domain.entities.estimate import EstimateReport
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import LengthVector, MaternSpec
from krig.domain.entities.predictive import PredictiveDist, PredictiveKind
from krig.domain.entities.sampler import PosteriorSample
from krig.domain.services import inference, pigs
from krig.domain.services.designs import (
    lhs_design,
    maximin_optimize,
    uniform_design,
)
from krig.domain.services.kernels import (
    corr_matrix,
    cross_corr_matrix,
    factorize,
    point_corr_matrix,
)
from krig.domain.services.special import normal_quantile, student_t_quantile
from krig.errors import DomainError, KrigError, ReplicationAbort
from krig.infrastructure.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

__all__ = [
    "uniform_design",
    "lhs_design",
    "maximin_optimize",
    "make_design",
    "simulate_gp",
    "simulate_conditional",
    "ackley",
    "rmse_experiment",
    "coverage_experiment",
    "ackley_experiment",
    "run_experiment",
]

COINCIDENT_TOL = 1e-10
_SEED_STREAMS = 6


def replication_seeds(master_seed: int, k: int) -> List[int]:
    """Independent integer seeds for the random streams of replication k."""
    state = np.random.SeedSequence([master_seed, k]).generate_state(_SEED_STREAMS)
    return [int(s) for s in state]


def make_design(kind: DesignKind, n: int, r: int, seed: int) -> DesignSet:
    if kind is DesignKind.UNIFORM:
        return uniform_design(n, r, seed)
    design = lhs_design(n, r, seed)
    if kind is DesignKind.MAXIMIN_LHS:
        design = maximin_optimize(design, iterations=10 * n * r, seed=seed + 1)
    return design


def simulate_gp(
    design: DesignSet, spec: MaternSpec, sigma2: float, theta: LengthVector, seed: int
) -> np.ndarray:
    """
    Zero-mean Gaussian process values at the design points: y = σ L z.

    Raises:
        NotPositiveDefinite: If Σ_θ cannot be factorized
    """
    if sigma2 < 0.0:
        raise DomainError(f"sigma2 must be >= 0, got {sigma2}")
    lower = corr_matrix(spec, design, theta).cholesky_lower
    z = np.random.default_rng(seed).standard_normal(design.n)
    return math.sqrt(sigma2) * (lower @ z)


def simulate_conditional(
    design: DesignSet,
    y: np.ndarray,
    test_points: np.ndarray,
    spec: MaternSpec,
    sigma2: float,
    theta: LengthVector,
    seed: int,
) -> np.ndarray:
    """
    Joint draw of the process at ``test_points`` given the observations y.

    Test points within 1e-10 of a design point take their conditional mean (the
    observed value); the others are drawn from the conditional Gaussian through a
    Cholesky factor of their conditional covariance.

    Raises:
        NotPositiveDefinite: If the conditional covariance fails even with jitter
    """
    if sigma2 < 0.0:
        raise DomainError(f"sigma2 must be >= 0, got {sigma2}")
    x0 = np.atleast_2d(np.asarray(test_points, dtype=float))
    corr = corr_matrix(spec, design, theta)
    k = cross_corr_matrix(spec, design, theta, x0)
    mean = k @ corr.solve(np.asarray(y, dtype=float))
    out = mean.copy()
    z = np.random.default_rng(seed).standard_normal(x0.shape[0])

    d = np.sqrt(np.sum((x0[:, None, :] - design.points[None, :, :]) ** 2, axis=-1))
    free = np.min(d, axis=1) >= COINCIDENT_TOL
    if not np.any(free) or sigma2 == 0.0:
        return out
    whitened = corr.whiten(k[free].T)
    cond = point_corr_matrix(spec, theta, x0[free]) - whitened.T @ whitened
    cond = 0.5 * (cond + cond.T)
    lower = factorize(cond).cholesky_lower
    out[free] += math.sqrt(sigma2) * (lower @ z[free])
    return out


def ackley(x: np.ndarray) -> np.ndarray:
    """Ackley function of each row of x (a single point gives a scalar)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise DomainError("Ackley needs points with at least one coordinate")
    value = (
        20.0
        + math.e
        - 20.0 * np.exp(-0.2 * np.sqrt(np.mean(x * x, axis=-1)))
        - np.exp(np.mean(np.cos(2.0 * math.pi * x), axis=-1))
    )
    # exact zero at the origin despite round-off
    return np.where(np.all(x == 0.0, axis=-1), 0.0, np.maximum(value, 0.0))


# --- one replication -------------------------------------------------------------


def _fit(
    config: ExperimentConfig, model: KrigingModel, seeds: List[int]
) -> Tuple[PosteriorSample, EstimateReport, EstimateReport]:
    sampler = config.sampler.model_copy(update={"seed": seeds[2]})
    sample = pigs.run(model, sampler)
    mle = inference.mle(model, starts=config.mle_starts, seed=seeds[3])
    map_ = inference.map_estimate(model, sample)
    return sample, mle, map_


def _student_interval(
    locations: np.ndarray, scales: np.ndarray, dof: Optional[int], level: float
) -> Tuple[np.ndarray, np.ndarray]:
    p = 0.5 * (1.0 + level)
    z = normal_quantile(p) if dof is None else student_t_quantile(p, dof)
    return locations - z * scales, locations + z * scales


def _fpd_intervals(
    model: KrigingModel, sample, x0: np.ndarray, level: float
) -> Tuple[np.ndarray, np.ndarray]:
    locations, scales = inference.fpd_components(model, sample, x0)
    bounds = [
        inference.prediction_interval(
            PredictiveDist(
                kind=PredictiveKind.MIXTURE,
                locations=locations[:, j],
                scales=scales[:, j],
                dof=model.n,
            ),
            level,
        )
        for j in range(x0.shape[0])
    ]
    return np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])


def _score(
    prefix: str, lo: np.ndarray, hi: np.ndarray, y0: np.ndarray
) -> Dict[str, float]:
    return {
        f"coverage_{prefix}": float(np.mean((lo <= y0) & (y0 <= hi))),
        f"length_{prefix}": float(np.mean(hi - lo)),
    }


def _estimates(prefix: str, estimate: LengthVector) -> Dict[str, float]:
    return {f"theta_{prefix}_{j + 1}": float(t) for j, t in enumerate(estimate.theta)}


def _interval_record(
    config: ExperimentConfig,
    model: KrigingModel,
    x0: np.ndarray,
    y0: np.ndarray,
    seeds: List[int],
    true_theta: Optional[LengthVector],
) -> Dict[str, Any]:
    sample, mle, map_ = _fit(config, model, seeds)
    record: Dict[str, Any] = {
        **_estimates("mle", mle.estimate),
        **_estimates("map", map_.estimate),
    }
    if true_theta is not None:
        loc, scale = inference.true_components(
            model, config.true_sigma2, true_theta, x0
        )
        lo, hi = _student_interval(loc, scale, None, config.level)
        record.update(_score("true", lo, hi, y0))
    for prefix, report in (("mle", mle), ("map", map_)):
        loc, scale = inference.plugin_components(model, report.estimate, x0)
        lo, hi = _student_interval(loc, scale, model.n, config.level)
        record.update(_score(prefix, lo, hi, y0))
    record.update(_score("fpd", *_fpd_intervals(model, sample, x0, config.level), y0))
    return record


def _rmse_replication(config: ExperimentConfig, k: int) -> Dict[str, Any]:
    seeds = replication_seeds(config.master_seed, k)
    theta = LengthVector.from_theta(config.true_theta)
    design = make_design(config.design_kind, config.n, config.r, seeds[0])
    y = simulate_gp(design, config.spec, config.true_sigma2, theta, seeds[1])
    model = KrigingModel(design=design, spec=config.spec, y=y)
    _, mle, map_ = _fit(config, model, seeds)
    return {
        **_estimates("mle", mle.estimate),
        **_estimates("map", map_.estimate),
        "error_mle": inference.fisher_distance(
            mle.estimate, theta, design, config.spec
        ),
        "error_map": inference.fisher_distance(
            map_.estimate, theta, design, config.spec
        ),
    }


def _coverage_replication(config: ExperimentConfig, k: int) -> Dict[str, Any]:
    seeds = replication_seeds(config.master_seed, k)
    theta = LengthVector.from_theta(config.true_theta)
    design = make_design(config.design_kind, config.n, config.r, seeds[0])
    y = simulate_gp(design, config.spec, config.true_sigma2, theta, seeds[1])
    model = KrigingModel(design=design, spec=config.spec, y=y)
    x0 = np.random.default_rng(seeds[4]).random((config.n0, config.r))
    y0 = simulate_conditional(
        design, y, x0, config.spec, config.true_sigma2, theta, seeds[5]
    )
    return _interval_record(config, model, x0, y0, seeds, theta)


def _ackley_replication(config: ExperimentConfig, k: int) -> Dict[str, Any]:
    seeds = replication_seeds(config.master_seed, k)
    design = make_design(config.design_kind, config.n, config.r, seeds[0])
    model = KrigingModel(design=design, spec=config.spec, y=ackley(design.points))
    x0 = np.random.default_rng(seeds[4]).random((config.n0, config.r))
    return _interval_record(config, model, x0, ackley(x0), seeds, None)


Replication = Callable[[ExperimentConfig, int], Dict[str, Any]]

_REPLICATIONS: Dict[ExperimentKind, Replication] = {
    ExperimentKind.RMSE: _rmse_replication,
    ExperimentKind.COVERAGE: _coverage_replication,
    ExperimentKind.ACKLEY: _ackley_replication,
}


def _replication_task(args: Tuple[ExperimentConfig, int]) -> Dict[str, Any]:
    config, k = args
    record: Dict[str, Any] = {"replication": k}
    try:
        record.update(_REPLICATIONS[config.kind](config, k))
        record["status"] = "ok"
    except (KrigError, np.linalg.LinAlgError) as exc:
        logger.warning(f"⚠️ Replication {k} failed: {exc}")
        record["status"] = "failed"
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


# --- aggregation -----------------------------------------------------------------


def _rmse_summary(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    rmse = {
        method: float(np.sqrt(np.mean([row[f"error_{method}"] ** 2 for row in rows])))
        for method in ("mle", "map")
    }
    change = 100.0 * (1.0 - rmse["map"] / rmse["mle"]) if rmse["mle"] > 0.0 else 0.0
    return [
        {"method": "MLE", "rmse": rmse["mle"], "decrease_pct": 0.0},
        {"method": "MAP", "rmse": rmse["map"], "decrease_pct": change},
    ]


def _interval_summary(
    rows: List[Dict[str, Any]], methods: Tuple[str, ...]
) -> List[Dict[str, Any]]:
    return [
        {
            "method": "True" if method == "true" else method.upper(),
            "coverage": float(np.mean([row[f"coverage_{method}"] for row in rows])),
            "mean_length": float(np.mean([row[f"length_{method}"] for row in rows])),
        }
        for method in methods
    ]


def _summarize(
    kind: ExperimentKind, rows: List[Dict[str, Any]]
) -> List[Dict[str, Any]]:
    if not rows:
        return []
    if kind is ExperimentKind.RMSE:
        return _rmse_summary(rows)
    if kind is ExperimentKind.COVERAGE:
        return _interval_summary(rows, ("true", "mle", "map", "fpd"))
    return _interval_summary(rows, ("mle", "map", "fpd"))


def run_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> ExperimentResult:
    """
    Run ``config.m`` replications of the configured study on a bounded worker pool.

    Args:
        config: Study configuration, master seed included
        workers: Pool size; None falls back to settings

    Returns:
        ExperimentResult with one record per replication (in index order) and
        summary rows

    Raises:
        ReplicationAbort: If more than ``config.max_failure_rate`` of the
            replications fail
    """
    logger.info(
        f"🔄 {config.kind.value} experiment: m={config.m}, n={config.n}, r={config.r}, "
        f"design={config.design_kind.value}, seed={config.master_seed}"
    )
    tasks = [(config, k) for k in range(config.m)]
    records = WorkerPool(workers).map(_replication_task, tasks)
    ok = [row for row in records if row["status"] == "ok"]
    failures = len(records) - len(ok)
    if failures > config.max_failure_rate * config.m:
        raise ReplicationAbort(
            f"{failures} of {config.m} replications failed "
            f"(limit {config.max_failure_rate:.0%})"
        )
    if failures:
        logger.warning(
            f"⚠️ {failures} of {config.m} replications failed and are excluded"
        )
    summary = _summarize(config.kind, ok)
    logger.info(
        f"✅ {config.kind.value} experiment finished: "
        f"{len(ok)} replications aggregated"
    )
    return ExperimentResult(
        config=config, records=records, summary=summary, failures=failures
    )


def _require(config: ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig:
    if config.kind is kind:
        return config
    return config.model_copy(update={"kind": kind})


def rmse_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> ExperimentResult:
    """Fisher-distance errors of the MLE and the MAP against the true lengths."""
    return run_experiment(_require(config, ExperimentKind.RMSE), workers)


def coverage_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> ExperimentResult:
    """Coverage and mean length of the True, MLE, MAP and FPD prediction intervals."""
    return run_experiment(_require(config, ExperimentKind.COVERAGE), workers)


def ackley_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> ExperimentResult:
    """Prediction intervals for the Ackley function on the unit cube (MLE, MAP, FPD)."""
    return run_experiment(_require(config, ExperimentKind.ACKLEY), workers)
