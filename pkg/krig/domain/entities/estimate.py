from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from krig.domain.entities.matern import LengthVector


class StartResult(BaseModel):
    start: Tuple[float, ...]
    end: Tuple[float, ...]
    objective: float
    success: bool


class EstimateReport(BaseModel):
    """Point estimate of the correlation lengths (MLE or MAP)."""

    estimate: LengthVector
    objective: float
    iterations: int = Field(0, ge=0)
    multistart: list[StartResult] = Field(default_factory=list)
    bandwidth: Optional[Tuple[float, ...]] = None

    @field_validator("objective")
    @classmethod
    def validate_objective(cls, v: float) -> float:
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("objective value at the optimum must be finite")
        return v
