import math
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from krig.domain.entities.kriging_model import KrigingModel


class QuadratureConfig(BaseModel):
    """Adaptive Simpson settings for normalizing a conditional over u = log μ_i."""

    model_config = ConfigDict(frozen=True)

    lower: float = -30.0
    upper: float = 30.0
    initial_panels: int = Field(64, ge=2)
    rel_tol: float = Field(1e-8, gt=0.0)
    max_evaluations: int = Field(20000, ge=10)
    max_depth: int = Field(50, ge=1)
    max_expansions: int = Field(6, ge=0)


class ConditionalDensityEval(BaseModel):
    """Normalized conditional posterior of one axis, other axes held fixed (MU)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: KrigingModel
    axis: int = Field(..., ge=0)
    fixed: Tuple[float, ...]
    log_normalizer: float
    nodes: int = Field(..., ge=0)
    est_error: float = Field(..., ge=0.0)

    @property
    def normalizer(self) -> float:
        return math.exp(self.log_normalizer)
