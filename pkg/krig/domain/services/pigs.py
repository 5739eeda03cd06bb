"""
Pseudo-Gibbs sampling with an equiprobable random scan.

Each step picks one axis uniformly and redraws that coordinate from its
conditional, either with random-walk Metropolis in a working coordinate (log μ_i,
log θ_i, or the raw value for real-valued custom conditionals) or exactly by inverse
CDF on an adaptive grid. The chain targets the Gibbs compromise of the conditionals,
which for Kriging is the Gibbs reference posterior.
"""

import logging
import math
import time
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import Parametrization
from krig.domain.entities.sampler import (
    ChainState,
    PosteriorSample,
    SamplerConfig,
    UpdateKind,
)
from krig.domain.services.kernels import coordinate_distinct, median_axis_distance
from krig.domain.services.objective import log_conditional_posterior
from krig.errors import DomainError, SamplerFailure
from krig.infrastructure.worker_pool import WorkerPool
from krig.schemas import DiagnosticsReport

logger = logging.getLogger(__name__)

ACCEPTANCE_WINDOW = (0.1, 0.6)
EXACT_SPAN = 30.0
EXACT_COARSE_POINTS = 241
EXACT_FINE_POINTS = 2001
EXACT_LOG_MASS_CUT = 40.0
QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
MIN_DIAGNOSTIC_DRAWS = 10


class Support(str, Enum):
    REAL = "real"
    POSITIVE = "positive"


class CustomConditional(BaseModel):
    """A user 1-D conditional: ``log_density(value, state)`` up to a constant."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    log_density: Callable[[float, np.ndarray], float]
    support: Support = Support.REAL


class _ChainEngine:
    """
    Random-scan updates in working coordinates.

    ``log_density(i, u, state)`` is the log density of the working coordinate u of
    axis i (Jacobian included) with the other axes read from ``state``.
    """

    def __init__(
        self,
        log_density: Callable[[int, float, np.ndarray], float],
        to_working: Sequence[Callable[[float], float]],
        to_native: Sequence[Callable[[float], float]],
        config: SamplerConfig,
        fixed_window: Optional[Tuple[float, float]] = None,
    ):
        self.log_density = log_density
        self.to_working = list(to_working)
        self.to_native = list(to_native)
        self.config = config
        self.fixed_window = fixed_window

    def _window(self, state: ChainState, i: int) -> Tuple[float, float]:
        if self.fixed_window is not None:
            return self.fixed_window
        centre = self.to_working[i](state.current[i])
        return centre - EXACT_SPAN, centre + EXACT_SPAN

    def _metropolis(self, state: ChainState, i: int) -> None:
        rng = state.rng
        u = self.to_working[i](state.current[i])
        log_cur = self.log_density(i, u, state.current)
        for _ in range(self.config.inner_metropolis_steps):
            proposal = u + self.config.proposal_sd * float(rng.normal())
            log_prop = self.log_density(i, proposal, state.current)
            state.proposed[i] += 1
            if math.log(max(float(rng.random()), 1e-300)) < log_prop - log_cur:
                u, log_cur = proposal, log_prop
                state.current[i] = self.to_native[i](u)
                state.accepted[i] += 1

    def _grid(self, i: int, grid: np.ndarray, state: ChainState) -> np.ndarray:
        return np.array([self.log_density(i, float(u), state.current) for u in grid])

    def _exact(self, state: ChainState, i: int) -> None:
        lo, hi = self._window(state, i)
        coarse = np.linspace(lo, hi, EXACT_COARSE_POINTS)
        logs = self._grid(i, coarse, state)
        peak = float(np.max(logs))
        if not math.isfinite(peak):
            raise SamplerFailure(
                f"conditional of axis {i} has no mass on [{lo:.3g}, {hi:.3g}]"
            )
        keep = np.flatnonzero(logs > peak - EXACT_LOG_MASS_CUT)
        h = coarse[1] - coarse[0]
        left, right = max(lo, coarse[keep[0]] - h), min(hi, coarse[keep[-1]] + h)
        fine = np.linspace(left, right, EXACT_FINE_POINTS)
        logs = self._grid(i, fine, state)
        weights = np.exp(logs - float(np.max(logs)))
        panels = 0.5 * (weights[1:] + weights[:-1]) * np.diff(fine)
        cdf = np.concatenate([[0.0], np.cumsum(panels)])
        if not cdf[-1] > 0.0:
            raise SamplerFailure(
                f"conditional of axis {i} has zero mass on the refined grid"
            )
        u = float(np.interp(float(state.rng.random()) * cdf[-1], cdf, fine))
        state.current[i] = self.to_native[i](u)
        state.proposed[i] += 1
        state.accepted[i] += 1

    def advance(self, state: ChainState) -> ChainState:
        """Update one uniformly chosen axis in place."""
        i = int(state.rng.integers(0, state.current.shape[0]))
        if self.config.update is UpdateKind.EXACT:
            self._exact(state, i)
        else:
            self._metropolis(state, i)
        state.step_count += 1
        return state

    def collect(self, state: ChainState) -> np.ndarray:
        cfg = self.config
        draws = np.empty((cfg.n_samples, state.current.shape[0]))
        kept = 0
        for t in range(1, cfg.burn_in + cfg.n_samples * cfg.thin + 1):
            self.advance(state)
            if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thin == 0:
                draws[kept] = state.current
                kept += 1
        return draws


def _neg_log(x: float) -> float:
    return -math.log(x)


def _exp_neg(u: float) -> float:
    return math.exp(-u)


def _kriging_engine(model: KrigingModel, config: SamplerConfig) -> _ChainEngine:
    mu_mode = config.parametrization is Parametrization.MU
    sign = 1.0 if mu_mode else -1.0

    def log_density(i: int, u: float, state: np.ndarray) -> float:
        mu_i = math.exp(sign * u)
        if mu_i == 0.0 or not math.isfinite(mu_i):
            return -math.inf
        point = state.copy()
        point[i] = mu_i
        # |dμ/du| = μ for u = log μ and for u = log θ.
        return log_conditional_posterior(model, point, i) + sign * u

    r = model.r
    return _ChainEngine(
        log_density,
        [math.log if mu_mode else _neg_log] * r,
        [math.exp if mu_mode else _exp_neg] * r,
        config,
        fixed_window=(-EXACT_SPAN, EXACT_SPAN),
    )


def _custom_engine(
    conditionals: Sequence[CustomConditional], config: SamplerConfig
) -> _ChainEngine:
    def log_density(i: int, u: float, state: np.ndarray) -> float:
        c = conditionals[i]
        if c.support is Support.REAL:
            return float(c.log_density(u, state))
        value = math.exp(u)
        if value == 0.0 or not math.isfinite(value):
            return -math.inf
        return float(c.log_density(value, state)) + u

    positive = [c.support is Support.POSITIVE for c in conditionals]
    return _ChainEngine(
        log_density,
        [math.log if p else float for p in positive],
        [math.exp if p else float for p in positive],
        config,
    )


def auto_init(model: KrigingModel) -> np.ndarray:
    """μ_i = 1 / (median pairwise distance along axis i)."""
    return 1.0 / median_axis_distance(model.design)


def initial_state(
    model: KrigingModel, config: SamplerConfig, rng: object
) -> ChainState:
    mu = config.init.mu if config.init is not None else auto_init(model)
    if mu.shape[0] != model.r:
        raise DomainError(
            f"initial lengths have {mu.shape[0]} entries, model has r={model.r}"
        )
    return ChainState.start(mu, rng)


def step(state: ChainState, model: KrigingModel, config: SamplerConfig) -> ChainState:
    """
    One random-scan update of a Kriging chain.

    Exactly one axis changes (or none, on rejection). The returned state is a copy that
    shares the generator of ``state``.
    """
    nxt = state.model_copy(
        update={
            "current": state.current.copy(),
            "accepted": state.accepted.copy(),
            "proposed": state.proposed.copy(),
        }
    )
    return _kriging_engine(model, config).advance(nxt)


def _warn_acceptance(state: ChainState, config: SamplerConfig) -> Tuple[float, ...]:
    rates = state.acceptance_rates
    if config.update is UpdateKind.METROPOLIS:
        for i, rate in enumerate(rates):
            low, high = ACCEPTANCE_WINDOW
            if np.isfinite(rate) and not low <= rate <= high:
                logger.warning(
                    f"⚠️ Axis {i} acceptance rate {rate:.3f} outside [{low}, {high}]"
                )
    return tuple(float(r) for r in rates)


def _run_chain(
    model: KrigingModel, config: SamplerConfig, rng: object
) -> PosteriorSample:
    start = time.perf_counter()
    state = initial_state(model, config, rng)
    draws = _kriging_engine(model, config).collect(state)
    acceptance = _warn_acceptance(state, config)
    return PosteriorSample(
        draws=draws,
        config=config,
        acceptance=acceptance,
        wall_time=time.perf_counter() - start,
    )


def run(model: KrigingModel, config: SamplerConfig) -> PosteriorSample:
    """
    Sample the Gibbs reference posterior of the inverse correlation lengths.

    Args:
        model: Kriging model
        config: Sampler settings; the draws depend only on these and the model

    Returns:
        PosteriorSample with ``config.n_samples`` MU draws after burn-in and thinning
    """
    if not coordinate_distinct(model.design):
        logger.warning(
            "⚠️ Design is not coordinate-distinct; "
            "posterior properness is not guaranteed"
        )
    logger.info(
        f"🔄 Sampling {config.n_samples} draws (burn-in {config.burn_in}, "
        f"thin {config.thin}, {config.update.value}, seed {config.seed})"
    )
    sample = _run_chain(model, config, np.random.default_rng(config.seed))
    logger.info(
        f"✅ Sampling done in {sample.wall_time:.1f}s, acceptance {sample.acceptance}"
    )
    return sample


def run_custom(
    conditionals: Sequence[CustomConditional],
    config: SamplerConfig,
    init: Sequence[float],
) -> PosteriorSample:
    """
    Random-scan pseudo-Gibbs chain over user-supplied 1-D conditionals.

    Draws are stored in native coordinates. Same burn-in, thinning and seeding contract
    as ``run``.
    """
    start = time.perf_counter()
    positive = all(c.support is Support.POSITIVE for c in conditionals)
    if len(init) != len(conditionals):
        raise DomainError(f"need {len(conditionals)} initial values, got {len(init)}")
    state = ChainState.start(
        np.asarray(init, dtype=float), np.random.default_rng(config.seed), positive
    )
    draws = _custom_engine(conditionals, config).collect(state)
    return PosteriorSample(
        draws=draws,
        config=config,
        acceptance=_warn_acceptance(state, config),
        wall_time=time.perf_counter() - start,
    )


def _chain_task(args: Tuple[KrigingModel, SamplerConfig, int]) -> PosteriorSample:
    model, config, index = args
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    return _run_chain(model, config, rng)


def run_chains(
    model: KrigingModel,
    config: SamplerConfig,
    n_chains: int,
    workers: Optional[int] = None,
) -> PosteriorSample:
    """Independent chains seeded by (seed, chain index), concatenated in chain order."""
    if n_chains < 1:
        raise DomainError(f"n_chains must be >= 1, got {n_chains}")
    samples: List[PosteriorSample] = WorkerPool(workers).map(
        _chain_task, [(model, config, k) for k in range(n_chains)]
    )
    draws = np.vstack([s.draws for s in samples])
    rates = np.array([s.acceptance for s in samples], dtype=float)
    acceptance = np.nanmean(rates, axis=0)
    return PosteriorSample(
        draws=draws,
        config=config,
        acceptance=tuple(float(a) for a in acceptance),
        wall_time=float(sum(s.wall_time for s in samples)),
        n_chains=n_chains,
    )


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation of a 1-D series by FFT."""
    n = x.size
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n]
    return acov / acov[0]


def effective_sample_size(x: np.ndarray) -> float:
    """ESS with Geyer's initial monotone positive sequence; 1 for a constant series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2 or np.all(x == x[0]):
        return 1.0
    rho = autocorrelation(x)
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    tau = -1.0
    running = math.inf
    for g in pairs:
        if g <= 0.0:
            break
        running = min(running, g)
        tau += 2.0 * running
    tau = max(tau, 1e-12)
    return float(min(n, n / tau))


def diagnostics(
    sample: PosteriorSample, map_bandwidth: Optional[Sequence[float]] = None
) -> DiagnosticsReport:
    """
    Per-axis acceptance, effective sample size and trace summaries.

    Raises:
        DomainError: For fewer than 10 draws
    """
    if sample.size < MIN_DIAGNOSTIC_DRAWS:
        raise DomainError(
            f"diagnostics need at least {MIN_DIAGNOSTIC_DRAWS} draws, got {sample.size}"
        )
    logs = np.log(sample.draws)
    per_chain = np.array_split(logs, sample.n_chains)
    ess = [
        float(sum(effective_sample_size(chain[:, j]) for chain in per_chain))
        for j in range(sample.r)
    ]
    quantiles = {
        f"{q:g}": [float(v) for v in np.quantile(sample.draws, q, axis=0)]
        for q in QUANTILE_LEVELS
    }
    return DiagnosticsReport(
        n_draws=sample.size,
        acceptance=list(sample.acceptance),
        ess=ess,
        mean=[float(v) for v in logs.mean(axis=0)],
        sd=[float(v) for v in logs.std(axis=0, ddof=1)],
        quantiles=quantiles,
        map_bandwidth=list(map_bandwidth) if map_bandwidth is not None else None,
    )
