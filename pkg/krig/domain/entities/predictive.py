from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class PredictiveKind(str, Enum):
    PLUGIN = "plugin"
    MIXTURE = "mixture"
    GAUSSIAN = "gaussian"


class PredictiveDist(BaseModel):
    """Student-t (Gaussian when ``dof`` is None) law, or an equal-weight mixture."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: PredictiveKind
    locations: np.ndarray
    scales: np.ndarray
    dof: Optional[int] = None

    @model_validator(mode="after")
    def validate_components(self) -> "PredictiveDist":
        if self.locations.shape != self.scales.shape or self.locations.ndim != 1:
            raise ValueError("locations and scales must be 1-D arrays of equal length")
        if self.locations.size == 0:
            raise ValueError("a predictive distribution needs at least one component")
        if np.any(self.scales < 0.0):
            raise ValueError("predictive scales must be nonnegative")
        if self.kind is not PredictiveKind.MIXTURE and self.locations.size != 1:
            raise ValueError(f"{self.kind.value} predictive has exactly one component")
        if (self.kind is PredictiveKind.GAUSSIAN) != (self.dof is None):
            raise ValueError("only the GAUSSIAN predictive has no degrees of freedom")
        return self

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.scales == 0.0))
