from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

ROW_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class FiniteKernelSystem(BaseModel):
    """r conditional probability tables over a finite product space.

    ``kernels[i]`` has the full joint shape ``sizes``; summing it over axis i gives 1,
    so ``kernels[i][ω]`` is π_i(ω_i | ω_{-i}).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sizes: Tuple[int, ...]
    kernels: Tuple[np.ndarray, ...]

    @field_validator("sizes")
    @classmethod
    def validate_sizes(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(v) < 1 or any(s < 1 for s in v):
            raise ValueError(f"axis sizes must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_kernels(self) -> "FiniteKernelSystem":
        if len(self.kernels) != len(self.sizes):
            raise ValueError(
                f"expected {len(self.sizes)} kernels, got {len(self.kernels)}"
            )
        for i, kernel in enumerate(self.kernels):
            if kernel.shape != self.sizes:
                raise ValueError(
                    f"kernel {i} has shape {kernel.shape}, expected {self.sizes}"
                )
            if np.any(kernel < 0.0) or not np.all(np.isfinite(kernel)):
                raise ValueError(f"kernel {i} has negative or non-finite entries")
            worst = float(np.max(np.abs(kernel.sum(axis=i) - 1.0)))
            if worst > ROW_TOL:
                raise ValueError(
                    f"kernel {i} rows do not sum to 1 (max deviation {worst:.3g})"
                )
            _frozen(kernel)
        return self

    @property
    def r(self) -> int:
        return len(self.sizes)

    @property
    def n_states(self) -> int:
        return int(np.prod(self.sizes))


class JointTable(BaseModel):
    """Probability table over the full product space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    probs: np.ndarray

    @field_validator("probs", mode="before")
    @classmethod
    def validate_probs(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("joint probabilities must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > ROW_TOL:
            raise ValueError(f"joint probabilities sum to {total!r}, expected 1")
        return _frozen(arr)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.probs.shape)


class MarginalFamily(BaseModel):
    """For each axis i, the law m_{≠i} of the other axes (axis i kept with size 1)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tables: Tuple[np.ndarray, ...]

    @model_validator(mode="after")
    def validate_tables(self) -> "MarginalFamily":
        for i, table in enumerate(self.tables):
            if np.any(table < 0.0) or abs(float(table.sum()) - 1.0) > ROW_TOL:
                raise ValueError(f"marginal {i} is not a probability table")
            _frozen(table)
        return self
