import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class DesignSet(BaseModel):
    """n observation points in R^r, one per row."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray

    @field_validator("points", mode="before")
    @classmethod
    def validate_points(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"design must be an n x r table, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("design points must be finite")
        if np.unique(arr, axis=0).shape[0] != arr.shape[0]:
            raise ValueError("design points must be pairwise distinct")
        arr.setflags(write=False)
        return arr

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def r(self) -> int:
        return int(self.points.shape[1])
