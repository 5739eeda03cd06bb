from enum import Enum
from typing import Any, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from krig.domain.entities.matern import Family, MaternSpec
from krig.domain.entities.sampler import SamplerConfig


class ExperimentKind(str, Enum):
    RMSE = "rmse"
    COVERAGE = "coverage"
    ACKLEY = "ackley"


class DesignKind(str, Enum):
    UNIFORM = "uniform"
    LHS = "lhs"
    MAXIMIN_LHS = "maximin_lhs"


class ExperimentConfig(BaseModel):
    """One replication study. For ACKLEY, ``true_theta`` only fixes the dimension."""

    model_config = ConfigDict(frozen=True)

    kind: ExperimentKind = ExperimentKind.COVERAGE
    true_theta: Tuple[float, ...] = (0.5, 0.5, 0.5)
    true_sigma2: float = Field(1.0, gt=0.0)
    n: int = Field(30, ge=2)
    n0: int = Field(100, ge=1)
    m: int = Field(50, ge=1)
    design_kind: DesignKind = DesignKind.UNIFORM
    spec: MaternSpec
    sampler: SamplerConfig = SamplerConfig(n_samples=400)
    master_seed: int = Field(0, ge=0)
    mle_starts: int = Field(5, ge=1)
    level: float = Field(0.95, gt=0.0, lt=1.0)
    max_failure_rate: float = Field(0.1, ge=0.0, le=1.0)

    @model_validator(mode="before")
    @classmethod
    def default_spec(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("spec") is None:
            theta = data.get("true_theta", (0.5, 0.5, 0.5))
            spec = MaternSpec(family=Family.GEOMETRIC, nu=2.5, r=len(theta))
            data = {**data, "spec": spec}
        return data

    @field_validator("true_theta")
    @classmethod
    def validate_theta(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 1 or any(not (t > 0.0) for t in v):
            raise ValueError(f"true_theta must be a nonempty positive vector, got {v}")
        return v

    @model_validator(mode="after")
    def validate_dimension(self) -> "ExperimentConfig":
        if self.spec.r != len(self.true_theta):
            raise ValueError(
                f"spec dimension {self.spec.r} does not match "
                f"true_theta length {len(self.true_theta)}"
            )
        return self

    @property
    def r(self) -> int:
        return len(self.true_theta)


class ExperimentResult(BaseModel):
    """Per-replication records and aggregate rows keyed by method."""

    config: ExperimentConfig
    records: list[dict[str, Any]]
    summary: list[dict[str, Any]]
    failures: int = Field(0, ge=0)
