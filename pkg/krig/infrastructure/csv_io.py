"""
CSV readers and writers for designs, observations, prediction points and draws.

Every numeric file has a header row. Floats are written with
``settings.CSV_FLOAT_FORMAT`` so values survive a write/read cycle exactly.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from krig.config import settings
from krig.domain.entities.design import DesignSet
from krig.errors import InputFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_numeric(path: PathLike, what: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise InputFormatError(f"{what} file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputFormatError(f"cannot parse {what} file {path}: {exc}") from exc
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    values = numeric.to_numpy(dtype=float)
    bad = ~np.isfinite(values).all(axis=1) if len(numeric) else np.array([], bool)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        # +2: one for the header, one for 1-based line numbers
        raise InputFormatError(
            f"{what} file {path}, line {row + 2}: non-numeric or non-finite entry "
            f"{frame.iloc[row].tolist()}"
        )
    return numeric


def read_points(path: PathLike) -> np.ndarray:
    """Prediction points (one per row); repeats allowed."""
    frame = _read_numeric(path, "points")
    if frame.shape[1] < 1 or len(frame) < 1:
        raise InputFormatError(f"points file {path} has no data")
    return frame.to_numpy(dtype=float)


def read_design(path: PathLike) -> DesignSet:
    points = read_points(path)
    try:
        return DesignSet(points=points)
    except ValidationError as exc:
        message = exc.errors()[0]["msg"]
        raise InputFormatError(f"invalid design in {path}: {message}") from exc


def read_observations(path: PathLike) -> np.ndarray:
    frame = _read_numeric(path, "observations")
    if frame.shape[1] != 1:
        raise InputFormatError(
            f"observations file {path} must have one column, found {frame.shape[1]}"
        )
    return frame.iloc[:, 0].to_numpy(dtype=float)


def read_draws(path: PathLike) -> np.ndarray:
    """Posterior draws written by ``write_draws`` (columns mu_1..mu_r)."""
    frame = _read_numeric(path, "draws")
    return frame.to_numpy(dtype=float).reshape(len(frame), frame.shape[1])


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n"
    )
    logger.debug(f"📋 Wrote {len(frame)} rows to {path}")
    return path


def write_draws(draws: np.ndarray, path: PathLike) -> Path:
    columns = [f"mu_{j + 1}" for j in range(draws.shape[1])]
    return write_frame(pd.DataFrame(draws, columns=columns), path)


def write_matrix(values: np.ndarray, path: PathLike, prefix: str = "x") -> Path:
    values = np.atleast_2d(values)
    columns = [f"{prefix}{j + 1}" for j in range(values.shape[1])]
    return write_frame(pd.DataFrame(values, columns=columns), path)
