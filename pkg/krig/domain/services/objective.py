"""
Likelihoods and objective priors for Simple Kriging with Matérn correlation.

Everything is computed in the MU parametrization (inverse correlation lengths). THETA
densities are the MU densities times the Jacobian μ_i².
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from krig.domain.entities.conditional import ConditionalDensityEval, QuadratureConfig
from krig.domain.entities.corr_matrix import CorrMatrix
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import Family, LengthVector, Parametrization
from krig.domain.services.kernels import corr_matrix, corr_matrix_partial
from krig.errors import (
    DomainError,
    NegativeRadicand,
    NotPositiveDefinite,
    QuadratureDivergence,
)

logger = logging.getLogger(__name__)

RADICAND_TOL = 1e-12
# |log μ| beyond this overflows exp
LOG_COORD_LIMIT = 700.0


def admissible(model: KrigingModel) -> bool:
    """Whether (ν, family, n, r) lie where the posterior conditionals are proper."""
    nu, n, r = model.spec.nu, model.n, model.r
    if 0.0 < nu < 1.0:
        return n > 1 and model.spec.family is Family.TENSORIZED
    if 1.0 < nu < 2.0:
        return n > r + 2
    if 2.0 < nu < 3.0:
        return n > r * (r + 1) / 2 + 2 * r + 3
    return False


def log_likelihood(model: KrigingModel, sigma2: float, lengths: LengthVector) -> float:
    """log L(y | σ², θ) of the zero-mean Gaussian model."""
    if not sigma2 > 0.0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    corr = corr_matrix(model.spec, model.design, lengths)
    n = model.n
    return (
        -0.5 * n * math.log(2.0 * math.pi * sigma2)
        - 0.5 * corr.log_det
        - corr.quad_form(model.y) / (2.0 * sigma2)
    )


def _integrated_from_corr(model: KrigingModel, corr: CorrMatrix) -> float:
    n = model.n
    return (
        math.lgamma(0.5 * n)
        - math.log(2.0)
        - 0.5 * n * math.log(math.pi)
        - 0.5 * corr.log_det
        - 0.5 * n * math.log(corr.quad_form(model.y))
    )


def integrated_log_likelihood(
    model: KrigingModel, lengths: LengthVector, reject_jitter: bool = False
) -> float:
    """
    log L¹(y | θ): the likelihood with σ² integrated out against dσ²/σ².

    With ``reject_jitter`` a Σ that only factorizes after the diagonal jitter raises
    NotPositiveDefinite instead of returning a distorted value.
    """
    corr = corr_matrix(model.spec, model.design, lengths)
    if reject_jitter and corr.jittered:
        raise NotPositiveDefinite("correlation matrix needed jitter to factorize")
    return _integrated_from_corr(model, corr)


def _whitened_partials(
    model: KrigingModel, mu: LengthVector, corr: CorrMatrix, axes: Sequence[int]
) -> list[np.ndarray]:
    return [
        corr.solve(corr_matrix_partial(model.spec, model.design, mu, i)) for i in axes
    ]


def _clamped_radicand(value: float, axis: int) -> float:
    if value >= 0.0:
        return value
    if value >= -RADICAND_TOL:
        return 0.0
    raise NegativeRadicand(
        f"prior radicand {value:.3e} on axis {axis} is below -{RADICAND_TOL}"
    )


def _prior_from_corr(
    model: KrigingModel, mu: LengthVector, corr: CorrMatrix, i: int
) -> float:
    (w,) = _whitened_partials(model, mu, corr, [i])
    tr = float(np.trace(w))
    tr2 = float(np.sum(w * w.T))
    return math.sqrt(_clamped_radicand(tr2 - tr * tr / model.n, i))


def conditional_prior_unnorm(
    model: KrigingModel, lengths: LengthVector, i: int
) -> float:
    """
    Conditional Jeffreys-rule prior density of μ_i given the other axes (unnormalized).

    Returns:
        sqrt(Tr[(∂_iΣ Σ⁻¹)²] − Tr[∂_iΣ Σ⁻¹]²/n), which does not depend on y

    Raises:
        NegativeRadicand: If the radicand is below −1e-12
    """
    mu = lengths.to(Parametrization.MU)
    corr = corr_matrix(model.spec, model.design, mu)
    return _prior_from_corr(model, mu, corr, i)


def conditional_posterior_unnorm(
    model: KrigingModel, lengths: LengthVector, i: int
) -> float:
    mu = lengths.to(Parametrization.MU)
    corr = corr_matrix(model.spec, model.design, mu)
    prior = _prior_from_corr(model, mu, corr, i)
    return math.exp(_integrated_from_corr(model, corr)) * prior


def log_conditional_posterior(model: KrigingModel, mu: np.ndarray, i: int) -> float:
    """
    log of the unnormalized conditional posterior of μ_i at the MU point ``mu``.

    A numerically singular Σ (including one that needed jitter), a broken-down prior
    radicand or a vanishing prior counts as zero density (−inf).
    """
    lengths = LengthVector.from_mu(mu)
    try:
        corr = corr_matrix(model.spec, model.design, lengths)
        if corr.jittered:
            raise NotPositiveDefinite("jittered")
        prior = _prior_from_corr(model, lengths, corr, i)
    except (NotPositiveDefinite, NegativeRadicand) as exc:
        logger.debug(f"📋 {type(exc).__name__} at mu={mu}; density treated as 0")
        return -math.inf
    if prior <= 0.0:
        return -math.inf
    return _integrated_from_corr(model, corr) + math.log(prior)


def information_matrix(model: KrigingModel, lengths: LengthVector) -> np.ndarray:
    """r × r table Tr[W_i W_j] − Tr[W_i]Tr[W_j]/n with W_i = Σ⁻¹ ∂_iΣ."""
    mu = lengths.to(Parametrization.MU)
    corr = corr_matrix(model.spec, model.design, mu)
    ws = _whitened_partials(model, mu, corr, range(model.r))
    traces = np.array([np.trace(w) for w in ws])
    info = np.empty((model.r, model.r))
    for a in range(model.r):
        for b in range(a, model.r):
            info[a, b] = info[b, a] = float(np.sum(ws[a] * ws[b].T))
    info -= np.outer(traces, traces) / model.n
    return info


def multivariate_reference_log_prior(
    model: KrigingModel,
    lengths: LengthVector,
    parametrization: Parametrization = Parametrization.MU,
) -> float:
    """
    log of the multivariate reference prior (½ log det of the information table).

    Raises:
        NotPositiveDefinite: If the information table is not positive definite
    """
    info = information_matrix(model, lengths)
    sign, logdet = np.linalg.slogdet(info)
    if sign <= 0 or not math.isfinite(logdet):
        raise NotPositiveDefinite(
            "reference information matrix is not positive definite"
        )
    out = 0.5 * logdet
    if parametrization is Parametrization.THETA:
        out += 2.0 * float(np.sum(np.log(lengths.mu)))
    return out


def _full_mu(fixed: Sequence[float], i: int, value: float) -> np.ndarray:
    mu = np.empty(len(fixed) + 1)
    mu[:i] = fixed[:i]
    mu[i] = value
    mu[i + 1 :] = fixed[i:]
    return mu


def log_conditional_in_log_coordinate(
    model: KrigingModel, fixed: Sequence[float], i: int
) -> Callable[[float], float]:
    """u ↦ log unnormalized conditional density of u = log μ_i (with Jacobian e^u)."""

    def density(u: float) -> float:
        value = math.exp(u)
        if value == 0.0 or not math.isfinite(value):
            return -math.inf
        return log_conditional_posterior(model, _full_mu(fixed, i, value), i) + u

    return density


def _endpoint_grid(
    log_f: Callable[[float], float], config: QuadratureConfig
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Initial Simpson grid, widened by half its span on each side with a heavy tail."""
    lower, upper = config.lower, config.upper
    threshold = math.log(config.rel_tol)
    expansions = 0
    while True:
        grid = np.linspace(lower, upper, 2 * config.initial_panels + 1)
        logs = np.array([log_f(float(u)) for u in grid])
        peak = float(np.max(logs))
        if not math.isfinite(peak):
            raise QuadratureDivergence(
                "integrand vanishes on the whole quadrature grid"
            )
        heavy_low = logs[0] - peak > threshold and lower > -LOG_COORD_LIMIT
        heavy_high = logs[-1] - peak > threshold and upper < LOG_COORD_LIMIT
        if not (heavy_low or heavy_high):
            return grid, logs, peak
        if expansions == config.max_expansions:
            logger.warning(
                f"⚠️ integrand tails above tolerance on [{lower:.4g}, {upper:.4g}] "
                f"after {expansions} expansions"
            )
            return grid, logs, peak
        half = 0.5 * (upper - lower)
        if heavy_low:
            lower = max(lower - half, -LOG_COORD_LIMIT)
        if heavy_high:
            upper = min(upper + half, LOG_COORD_LIMIT)
        expansions += 1
        logger.debug(f"🔄 quadrature range widened to [{lower:.4g}, {upper:.4g}]")


def adaptive_simpson_log(
    log_f: Callable[[float], float], config: QuadratureConfig
) -> Tuple[float, int, float]:
    """
    log ∫ exp(log_f(u)) du by adaptive Simpson bisection.

    The range starts at [config.lower, config.upper] and widens while the integrand
    at an end is within a factor rel_tol of its peak.

    Returns:
        (log integral, evaluations used, estimated relative error)

    Raises:
        QuadratureDivergence: On an exhausted evaluation budget or zero mass
    """
    panels = config.initial_panels
    grid, logs, peak = _endpoint_grid(log_f, config)
    evaluations = grid.size
    values = np.exp(logs - peak)

    def f(u: float) -> float:
        nonlocal evaluations
        evaluations += 1
        if evaluations > config.max_evaluations:
            raise QuadratureDivergence(
                f"adaptive quadrature exceeded {config.max_evaluations} evaluations"
            )
        return math.exp(log_f(u) - peak)

    h = grid[2] - grid[0]
    simpson = values[0:-1:2] + 4.0 * values[1::2] + values[2::2]
    coarse = float(np.sum(h / 6.0 * simpson))
    tolerance = config.rel_tol * max(coarse, 1e-300)

    total = 0.0
    error = 0.0
    capped = 0
    stack: List[Tuple[float, float, float, float, float, float, float, int]] = []
    for k in range(panels):
        a, b = grid[2 * k], grid[2 * k + 2]
        fa, fm, fb = values[2 * k], values[2 * k + 1], values[2 * k + 2]
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        stack.append((a, b, fa, fm, fb, whole, tolerance / panels, 0))
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        converged = abs(delta) <= 15.0 * eps
        if converged or depth >= config.max_depth:
            capped += not converged
            total += left + right + delta / 15.0
            error += abs(delta) / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    if capped:
        logger.warning(
            f"⚠️ {capped} quadrature panel(s) accepted unconverged "
            f"at depth {config.max_depth}"
        )
    if not total > 0.0:
        raise QuadratureDivergence(
            "conditional density has no mass on the quadrature range"
        )
    return peak + math.log(total), evaluations, error / total


def normalize_conditional(
    model: KrigingModel,
    fixed: Sequence[float],
    i: int,
    config: Optional[QuadratureConfig] = None,
) -> ConditionalDensityEval:
    """
    Normalizing constant of the conditional posterior of μ_i, other axes fixed.

    Args:
        model: Kriging model
        fixed: The r−1 remaining inverse lengths, in axis order
        i: 0-based axis index
        config: Quadrature settings

    Returns:
        ConditionalDensityEval carrying log_normalizer and quadrature diagnostics

    Raises:
        QuadratureDivergence: If the adaptive scheme does not converge within budget
    """
    config = config or QuadratureConfig()
    if len(fixed) != model.r - 1 or not 0 <= i < model.r:
        raise DomainError(
            f"need {model.r - 1} fixed lengths and an axis in [0, {model.r})"
        )
    if not admissible(model):
        logger.warning(
            f"⚠️ nu={model.spec.nu} with n={model.n}, r={model.r} "
            f"({model.spec.family.value}) is outside the windows where the "
            "conditionals are known to be proper"
        )
    log_norm, nodes, rel_err = adaptive_simpson_log(
        log_conditional_in_log_coordinate(model, fixed, i), config
    )
    logger.debug(
        f"📋 axis {i}: log normalizer {log_norm:.6g} from {nodes} nodes "
        f"(rel err {rel_err:.2e})"
    )
    return ConditionalDensityEval(
        model=model,
        axis=i,
        fixed=tuple(float(v) for v in fixed),
        log_normalizer=log_norm,
        nodes=nodes,
        est_error=rel_err,
    )


def conditional_density(
    evaluation: ConditionalDensityEval,
    value: float,
    parametrization: Parametrization = Parametrization.MU,
) -> float:
    """Normalized conditional density at μ_i = value (MU) or θ_i = value (THETA)."""
    if not value > 0.0:
        return 0.0
    mu_i = value if parametrization is Parametrization.MU else 1.0 / value
    mu = _full_mu(evaluation.fixed, evaluation.axis, mu_i)
    log_d = log_conditional_posterior(evaluation.model, mu, evaluation.axis)
    if parametrization is Parametrization.THETA:
        log_d += 2.0 * math.log(mu_i)
    return math.exp(log_d - evaluation.log_normalizer)
