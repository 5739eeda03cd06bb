from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from krig.domain.entities.matern import LengthVector, Parametrization


class UpdateKind(str, Enum):
    METROPOLIS = "metropolis"
    EXACT = "exact"


class SamplerConfig(BaseModel):
    """Pseudo-Gibbs sampler settings. ``init=None`` means AUTO initialization."""

    model_config = ConfigDict(frozen=True)

    n_samples: int = Field(1000, ge=0)
    burn_in: int = Field(100, ge=0)
    thin: int = Field(1, ge=1)
    proposal_sd: float = Field(
        0.4, gt=0.0, description="Random-walk sd in log-length space"
    )
    inner_metropolis_steps: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    init: Optional[LengthVector] = None
    update: UpdateKind = UpdateKind.METROPOLIS
    parametrization: Parametrization = Parametrization.MU


class ChainState(BaseModel):
    """Current point of one chain (MU for Kriging chains), counters and generator."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    current: np.ndarray
    step_count: int = 0
    accepted: np.ndarray
    proposed: np.ndarray
    rng: object

    @classmethod
    def start(
        cls, point: np.ndarray, rng: object, positive: bool = True
    ) -> "ChainState":
        point = np.array(point, dtype=float).reshape(-1)
        if not np.all(np.isfinite(point)) or (positive and np.any(point <= 0.0)):
            raise ValueError(f"invalid chain start {point}")
        r = point.shape[0]
        return cls(
            current=point,
            accepted=np.zeros(r, dtype=np.int64),
            proposed=np.zeros(r, dtype=np.int64),
            rng=rng,
        )

    @property
    def acceptance_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            rates = self.accepted / np.maximum(self.proposed, 1)
            return np.where(self.proposed > 0, rates, np.nan)


class PosteriorSample(BaseModel):
    """Ordered MU draws (rows) from the Gibbs reference posterior, with metadata."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    draws: np.ndarray
    config: SamplerConfig
    acceptance: Tuple[float, ...]
    wall_time: float = 0.0
    n_chains: int = 1

    @property
    def size(self) -> int:
        return int(self.draws.shape[0])

    @property
    def r(self) -> int:
        return int(self.draws.shape[1])

    @property
    def theta(self) -> np.ndarray:
        return 1.0 / self.draws

    def lengths(self) -> list[LengthVector]:
        return [LengthVector.from_mu(row) for row in self.draws]
