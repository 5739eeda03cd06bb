from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Family(str, Enum):
    GEOMETRIC = "geometric"
    TENSORIZED = "tensorized"


class Parametrization(str, Enum):
    THETA = "theta"  # correlation lengths
    MU = "mu"  # inverse correlation lengths


class MaternSpec(BaseModel):
    """Matérn correlation family with known smoothness."""

    model_config = ConfigDict(frozen=True)

    family: Family = Field(Family.GEOMETRIC, description="Anisotropic form")
    nu: float = Field(..., gt=0.0, description="Smoothness")
    r: int = Field(..., ge=1, description="Input dimension")

    @field_validator("nu")
    @classmethod
    def validate_nu(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("nu must be finite")
        return v


class LengthVector(BaseModel):
    """Per-axis correlation lengths (THETA) or inverse lengths (MU)."""

    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...] = Field(..., min_length=1)
    parametrization: Parametrization = Parametrization.THETA

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError(f"length components must be finite and > 0, got {v}")
        return tuple(float(x) for x in arr)

    @classmethod
    def from_theta(cls, theta: Sequence[float]) -> "LengthVector":
        return cls(values=tuple(theta), parametrization=Parametrization.THETA)

    @classmethod
    def from_mu(cls, mu: Sequence[float]) -> "LengthVector":
        return cls(values=tuple(mu), parametrization=Parametrization.MU)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mu(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        return arr if self.parametrization is Parametrization.MU else 1.0 / arr

    @property
    def theta(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        return arr if self.parametrization is Parametrization.THETA else 1.0 / arr

    def to(self, parametrization: Parametrization) -> "LengthVector":
        """Convert to the requested parametrization (componentwise reciprocal)."""
        if parametrization is self.parametrization:
            return self
        values = self.mu if parametrization is Parametrization.MU else self.theta
        return LengthVector(values=tuple(values), parametrization=parametrization)
