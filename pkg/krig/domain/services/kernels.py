"""
Matérn correlation kernels, correlation matrices and their μ-derivatives.

All kernels use the 2√ν scaling: the unit-length kernel of smoothness ν is
K(t) = 2^{1−ν}/Γ(ν) · (2√ν t)^ν 𝒦_ν(2√ν t), so K(t) = exp(−√2 t) for ν = 1/2.
Lengths enter through μ = 1/θ; THETA inputs are converted at the boundary.
"""

import logging
import math

import numpy as np
from scipy import linalg
from scipy import special as sc

from krig.domain.entities.corr_matrix import CorrMatrix
from krig.domain.entities.design import DesignSet
from krig.domain.entities.matern import Family, LengthVector, MaternSpec
from krig.domain.services.special import bessel_k
from krig.errors import DomainError, NotPositiveDefinite

logger = logging.getLogger(__name__)

JITTER = 1e-12


def _log_norm_const(nu: float) -> float:
    return (1.0 - nu) * math.log(2.0) - math.lgamma(nu)


def matern_1d(nu: float, t: float) -> float:
    """
    Unit-variance, unit-length Matérn correlation at distance t.

    Evaluated with the scalar Bessel routine; ``matern_values`` is the vectorized twin.

    Raises:
        DomainError: If nu ≤ 0 or t < 0
    """
    if not nu > 0.0:
        raise DomainError(f"smoothness must be > 0, got {nu}")
    if not t >= 0.0:
        raise DomainError(f"distance must be >= 0, got {t}")
    if t == 0.0:
        return 1.0
    y = 2.0 * math.sqrt(nu) * t
    k = bessel_k(nu, y)
    if k == 0.0:
        return 0.0
    return min(1.0, math.exp(_log_norm_const(nu) + nu * math.log(y) + math.log(k)))


def matern_values(nu: float, t: np.ndarray) -> np.ndarray:
    """Vectorized ``matern_1d`` over an array of nonnegative distances."""
    t = np.asarray(t, dtype=float)
    y = 2.0 * math.sqrt(nu) * t
    out = np.ones_like(y)
    pos = y > 0.0
    if np.any(pos):
        yp = y[pos]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            log_val = (
                _log_norm_const(nu) + nu * np.log(yp) + np.log(sc.kve(nu, yp)) - yp
            )
            val = np.exp(log_val)
        # kve overflows only for vanishing y, where K is 1.
        val = np.where(np.isfinite(val), val, 1.0)
        out[pos] = np.minimum(val, 1.0)
    return out


def _derivative_profile(nu: float, y: np.ndarray) -> np.ndarray:
    """c_ν (2√ν)² y^{ν−1} 𝒦_{ν−1}(y) for y > 0; dK/dμ_i = −x_i² μ_i · profile."""
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        log_val = (
            _log_norm_const(nu)
            + math.log(4.0 * nu)
            + (nu - 1.0) * np.log(y)
            + np.log(sc.kve(abs(nu - 1.0), y))
            - y
        )
        return np.exp(log_val)


def _axis_differences(points: np.ndarray, other: np.ndarray) -> np.ndarray:
    """|x_j^(k) − z_j^(l)| with shape (len(points), len(other), r)."""
    return np.abs(points[:, None, :] - other[None, :, :])


def _correlation(spec: MaternSpec, diffs: np.ndarray, mu: np.ndarray) -> np.ndarray:
    scaled = diffs * mu
    if spec.family is Family.GEOMETRIC:
        return matern_values(spec.nu, np.sqrt(np.sum(scaled * scaled, axis=-1)))
    out = np.ones(diffs.shape[:-1])
    for j in range(diffs.shape[-1]):
        out *= matern_values(spec.nu, scaled[..., j])
    return out


def _check_dims(spec: MaternSpec, design: DesignSet, lengths: LengthVector) -> None:
    if not (design.r == spec.r == len(lengths)):
        raise DomainError(
            f"dimension mismatch: design r={design.r}, spec r={spec.r}, "
            f"lengths r={len(lengths)}"
        )


def factorize(sigma: np.ndarray) -> CorrMatrix:
    """
    Cholesky-factorize a correlation matrix with the single-jitter retry policy.

    Raises:
        NotPositiveDefinite: If factorization fails with and without the diagonal jitter
    """
    jittered = False
    try:
        lower = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        jittered = True
        logger.debug(
            f"📋 Cholesky failed for n={sigma.shape[0]}, retrying with jitter {JITTER}"
        )
        try:
            lower = linalg.cholesky(sigma + JITTER * np.eye(sigma.shape[0]), lower=True)
        except linalg.LinAlgError as exc:
            raise NotPositiveDefinite(
                f"correlation matrix of size {sigma.shape[0]} is not positive definite"
            ) from exc
    diag = np.diag(lower)
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0.0):
        raise NotPositiveDefinite("Cholesky factor has a nonpositive pivot")
    sigma.setflags(write=False)
    lower.setflags(write=False)
    return CorrMatrix(
        sigma=sigma,
        cholesky_lower=lower,
        log_det=float(2.0 * np.sum(np.log(diag))),
        jittered=jittered,
    )


def corr_matrix(
    spec: MaternSpec, design: DesignSet, lengths: LengthVector
) -> CorrMatrix:
    """
    Correlation matrix of the design under the Matérn family at the given lengths.

    Args:
        spec: Kernel family and smoothness
        design: Observation points
        lengths: Correlation lengths in either parametrization

    Returns:
        CorrMatrix with cached Cholesky factor and log-determinant

    Raises:
        DomainError: On dimension mismatch
        NotPositiveDefinite: If Σ cannot be factorized after jitter
    """
    _check_dims(spec, design, lengths)
    diffs = _axis_differences(design.points, design.points)
    sigma = _correlation(spec, diffs, lengths.mu)
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    return factorize(sigma)


def corr_matrix_partial(
    spec: MaternSpec, design: DesignSet, mu: LengthVector, i: int
) -> np.ndarray:
    """
    ∂Σ_μ/∂μ_i in closed form (axis index i is 0-based).

    The entries are nonpositive and the diagonal is exactly zero.
    """
    _check_dims(spec, design, mu)
    if not 0 <= i < spec.r:
        raise DomainError(f"axis index {i} outside [0, {spec.r})")
    mu_arr = mu.mu
    diffs = _axis_differences(design.points, design.points)
    xi = diffs[..., i]
    out = np.zeros(diffs.shape[:-1])
    if spec.family is Family.GEOMETRIC:
        scaled = diffs * mu_arr
        s = np.sqrt(np.sum(scaled * scaled, axis=-1))
        mask = (s > 0.0) & (xi > 0.0)
        y = 2.0 * math.sqrt(spec.nu) * s[mask]
        out[mask] = -xi[mask] ** 2 * mu_arr[i] * _derivative_profile(spec.nu, y)
    else:
        mask = xi > 0.0
        y = 2.0 * math.sqrt(spec.nu) * xi[mask] * mu_arr[i]
        out[mask] = -xi[mask] ** 2 * mu_arr[i] * _derivative_profile(spec.nu, y)
        for j in range(spec.r):
            if j != i:
                out *= matern_values(spec.nu, diffs[..., j] * mu_arr[j])
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return out


def cross_corr_matrix(
    spec: MaternSpec, design: DesignSet, lengths: LengthVector, x0: np.ndarray
) -> np.ndarray:
    """Correlations of the rows of ``x0`` (m × r) with the design, an m × n table."""
    _check_dims(spec, design, lengths)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    if x0.shape[1] != design.r:
        raise DomainError(
            f"prediction points have dimension {x0.shape[1]}, expected {design.r}"
        )
    return _correlation(spec, _axis_differences(x0, design.points), lengths.mu)


def point_corr_matrix(
    spec: MaternSpec, lengths: LengthVector, points: np.ndarray
) -> np.ndarray:
    """Correlation table of arbitrary points (repeats allowed), not factorized."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not (points.shape[1] == spec.r == len(lengths)):
        raise DomainError(f"points have dimension {points.shape[1]}, expected {spec.r}")
    sigma = _correlation(spec, _axis_differences(points, points), lengths.mu)
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def cross_corr(
    spec: MaternSpec, design: DesignSet, lengths: LengthVector, x0: np.ndarray
) -> np.ndarray:
    """Correlation vector between Y(x0) and the observations."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    return cross_corr_matrix(spec, design, lengths, x0[None, :])[0]


def coordinate_distinct(design: DesignSet) -> bool:
    """True iff no two design points share a coordinate value on any axis."""
    pts = design.points
    return all(np.unique(pts[:, j]).size == design.n for j in range(design.r))


def median_axis_distance(design: DesignSet) -> np.ndarray:
    """Median pairwise |x_j^(k) − x_j^(l)| per axis (k < l); 1 for a single point."""
    if design.n < 2:
        return np.ones(design.r)
    k, l = np.triu_indices(design.n, k=1)
    med = np.median(np.abs(design.points[k] - design.points[l]), axis=0)
    return np.where(med > 0.0, med, 1.0)
