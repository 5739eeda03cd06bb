"""
JSON files describing finite conditional systems.

Format::

    {
      "sizes": [2, 2],
      "kernels": [
        [[0.5, 0.5], [0.25, 0.75]],
        [[1.0, 0.0], [0.5, 0.5]]
      ]
    }

``kernels[i]`` lists one row per state of the other axes, enumerated in row-major order
(last remaining axis fastest); each row is the law of axis i given that state.
"""

import logging
from importlib import resources
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from krig.domain.entities.kernel_system import FiniteKernelSystem
from krig.errors import InputFormatError

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9


class KernelSystemFile(BaseModel):
    sizes: List[int] = Field(..., min_length=1, description="Axis cardinalities")
    kernels: List[List[List[float]]] = Field(
        ..., description="Rows of each conditional table"
    )


def _axis_table(spec: KernelSystemFile, i: int) -> np.ndarray:
    sizes = spec.sizes
    others = [s for k, s in enumerate(sizes) if k != i]
    rows = spec.kernels[i]
    expected = int(np.prod(others)) if others else 1
    if len(rows) != expected:
        raise InputFormatError(
            f"kernel {i}: expected {expected} rows, found {len(rows)}"
        )
    table = np.empty((expected, sizes[i]))
    for j, row in enumerate(rows):
        values = np.asarray(row, dtype=float)
        if values.shape != (sizes[i],):
            raise InputFormatError(
                f"kernel {i}, row {j}: expected {sizes[i]} entries, found {len(row)}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise InputFormatError(
                f"kernel {i}, row {j}: entries must be finite and nonnegative"
            )
        total = float(values.sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise InputFormatError(
                f"kernel {i}, row {j}: entries sum to {total!r}, expected 1"
            )
        table[j] = values / total
    return np.moveaxis(table.reshape(*others, sizes[i]), -1, i)


def parse_kernel_system(text: str, source: str = "<string>") -> FiniteKernelSystem:
    """
    Build a FiniteKernelSystem from JSON text.

    Raises:
        InputFormatError: On malformed JSON or an invalid row (the row is named)
    """
    try:
        spec = KernelSystemFile.model_validate_json(text)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise InputFormatError(f"{source}: {err['msg']} at {err['loc']}") from exc
    if any(s < 1 for s in spec.sizes):
        raise InputFormatError(
            f"{source}: axis sizes must be positive, got {spec.sizes}"
        )
    if len(spec.kernels) != len(spec.sizes):
        raise InputFormatError(
            f"{source}: {len(spec.sizes)} axes but {len(spec.kernels)} kernel tables"
        )
    try:
        tables = tuple(_axis_table(spec, i) for i in range(len(spec.sizes)))
    except InputFormatError as exc:
        raise InputFormatError(f"{source}: {exc.detail}") from exc
    return FiniteKernelSystem(sizes=tuple(spec.sizes), kernels=tables)


def load_kernel_system(path: Union[str, Path]) -> FiniteKernelSystem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read kernel system file {path}: {exc}") from exc
    system = parse_kernel_system(text, str(path))
    logger.debug(f"📋 Loaded kernel system with sizes {system.sizes} from {path}")
    return system


def bundled(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(str(resources.files("krig") / "data" / name))
