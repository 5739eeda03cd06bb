"""Space-filling designs on the unit cube."""

import logging

import numpy as np
from scipy.spatial.distance import pdist

from krig.domain.entities.design import DesignSet
from krig.errors import DomainError

logger = logging.getLogger(__name__)


def _check_sizes(n: int, r: int) -> None:
    if n < 1 or r < 1:
        raise DomainError(f"design needs n >= 1 and r >= 1, got n={n}, r={r}")


def lhs_points(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube: one uniform point per stratum [(j−1)/n, j/n) of every axis."""
    _check_sizes(n, r)
    strata = np.column_stack([rng.permutation(n) for _ in range(r)]).astype(float)
    return (strata + rng.random((n, r))) / n


def uniform_design(n: int, r: int, seed: int) -> DesignSet:
    """n iid uniform points on [0, 1]^r."""
    _check_sizes(n, r)
    return DesignSet(points=np.random.default_rng(seed).random((n, r)))


def lhs_design(n: int, r: int, seed: int) -> DesignSet:
    return DesignSet(points=lhs_points(n, r, np.random.default_rng(seed)))


def min_distance(points: np.ndarray) -> float:
    return float(np.min(pdist(points))) if points.shape[0] > 1 else float("inf")


def maximin_optimize(design: DesignSet, iterations: int, seed: int) -> DesignSet:
    """
    Pairwise-swap hill climbing on the minimum inter-point distance.

    A proposal swaps one coordinate between two points, which keeps every LHS stratum
    occupied; it is accepted only if the minimum distance does not decrease.
    """
    rng = np.random.default_rng(seed)
    pts = np.array(design.points)
    n, r = pts.shape
    if n < 2:
        return design
    best = min_distance(pts)
    start = best
    for _ in range(iterations):
        a, b = rng.choice(n, size=2, replace=False)
        j = int(rng.integers(0, r))
        pts[[a, b], j] = pts[[b, a], j]
        trial = min_distance(pts)
        if trial >= best:
            best = trial
        else:
            pts[[a, b], j] = pts[[b, a], j]
    logger.debug(
        f"📋 maximin: min distance {start:.4g} -> {best:.4g} over {iterations} swaps"
    )
    return DesignSet(points=pts)
