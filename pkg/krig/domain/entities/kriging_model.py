import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from krig.domain.entities.design import DesignSet
from krig.domain.entities.matern import MaternSpec


class KrigingModel(BaseModel):
    """Simple Kriging model: design, Matérn family and observations."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    design: DesignSet
    spec: MaternSpec
    y: np.ndarray

    @field_validator("y", mode="before")
    @classmethod
    def validate_y(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("observations must be finite")
        if not np.any(arr != 0.0):
            raise ValueError("observation vector must not be identically zero")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_shapes(self) -> "KrigingModel":
        if self.y.shape[0] != self.design.n:
            raise ValueError(
                f"y has {self.y.shape[0]} entries, "
                f"the design has {self.design.n} points"
            )
        if self.spec.r != self.design.r:
            raise ValueError(
                f"spec dimension {self.spec.r} does not match "
                f"design dimension {self.design.r}"
            )
        return self

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def r(self) -> int:
        return self.design.r

    def with_y(self, y: np.ndarray) -> "KrigingModel":
        return KrigingModel(design=self.design, spec=self.spec, y=y)
