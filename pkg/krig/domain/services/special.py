"""
Scalar special functions behind the Matérn kernels and the Student-t predictive laws.

The modified Bessel function of the second kind is evaluated without SciPy so that
the vectorized kernel path (``scipy.special.kve``) has an independent reference: a
Temme-type series for small arguments and Steed's continued fraction for large ones,
both at a fractional order |μ| ≤ 1/2, followed by upward recurrence to the requested
order.
"""

import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy import special as sc

from krig.domain.entities.special import SpecialFnConfig
from krig.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_CONFIG = SpecialFnConfig()

SERIES_CROSSOVER = 2.0
_GAMMA_SERIES_CUTOFF = 0.05

# Taylor coefficients of 1/Γ(z) = Σ c_k z^k (c_1 .. c_11).
_RECIP_GAMMA = (
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
)


def _temme_gammas(mu: float) -> Tuple[float, float, float, float]:
    """Return (gam1, gam2, 1/Γ(1+μ), 1/Γ(1−μ)) for |μ| ≤ 1/2."""
    if abs(mu) >= _GAMMA_SERIES_CUTOFF:
        gampl = 1.0 / math.gamma(1.0 + mu)
        gammi = 1.0 / math.gamma(1.0 - mu)
        return (gammi - gampl) / (2.0 * mu), 0.5 * (gammi + gampl), gampl, gammi
    mu2 = mu * mu
    odd = _RECIP_GAMMA[1::2]  # c2, c4, ...
    even = _RECIP_GAMMA[0::2]  # c1, c3, ...
    gam1 = -sum(c * mu2**k for k, c in enumerate(odd))
    gam2 = sum(c * mu2**k for k, c in enumerate(even))
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _k_small(mu: float, z: float, cfg: SpecialFnConfig) -> Tuple[float, float]:
    """𝒦_μ(z) and 𝒦_{μ+1}(z) for z < 2 by the Temme series."""
    x2 = 0.5 * z
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < 1e-16 else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < 1e-16 else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _temme_gammas(mu)

    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    for i in range(1, cfg.max_terms + 1):
        ff = (i * ff + p + q) / (i * i - mu * mu)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * cfg.rel_tol:
            break
    else:
        logger.warning(f"⚠️ Bessel series did not converge (mu={mu}, z={z})")
    return total, total1 * 2.0 / z


def _k_large(mu: float, z: float, cfg: SpecialFnConfig) -> Tuple[float, float]:
    """𝒦_μ(z) and 𝒦_{μ+1}(z) for z ≥ 2 by Steed's continued fraction."""
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, cfg.max_terms + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < cfg.rel_tol:
            break
    else:
        logger.warning(
            f"⚠️ Bessel continued fraction did not converge (mu={mu}, z={z})"
        )
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) / s
    return kmu, kmu * (mu + z + 0.5 - h) / z


def bessel_k(nu: float, z: float, config: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """
    Modified Bessel function of the second kind 𝒦_ν(z).

    Args:
        nu: Order; any finite real (𝒦_{−ν} = 𝒦_ν)
        z: Argument, strictly positive
        config: Accuracy controls

    Returns:
        𝒦_ν(z) > 0 (may underflow to 0 for z beyond ~700)

    Raises:
        DomainError: If z ≤ 0 or either argument is not finite
    """
    if not math.isfinite(nu):
        raise DomainError(f"Bessel order must be finite, got {nu}")
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"Bessel argument must be finite and > 0, got {z}")
    nu = abs(nu)
    nl = int(nu + 0.5)
    mu = nu - nl
    if z < SERIES_CROSSOVER:
        kmu, k1 = _k_small(mu, z, config)
    else:
        kmu, k1 = _k_large(mu, z, config)
    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * (2.0 / z) * k1 + kmu
    return kmu


def log_gamma(x: ArrayLike) -> ArrayLike:
    """ln Γ(x) for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    out = sc.gammaln(arr)
    return float(out) if np.ndim(out) == 0 else out


def _check_dof(dof: int) -> None:
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be an integer >= 1, got {dof}")


def student_t_cdf(t: ArrayLike, dof: int) -> ArrayLike:
    """Student-t cdf through the regularized incomplete beta function."""
    _check_dof(dof)
    arr = np.asarray(t, dtype=float)
    x = dof / (dof + arr * arr)
    tail = 0.5 * sc.betainc(0.5 * dof, 0.5, x)
    out = np.where(arr > 0.0, 1.0 - tail, tail)
    return float(out) if np.ndim(out) == 0 else out


def student_t_pdf(t: ArrayLike, dof: int) -> ArrayLike:
    _check_dof(dof)
    arr = np.asarray(t, dtype=float)
    log_c = (
        sc.gammaln(0.5 * (dof + 1))
        - sc.gammaln(0.5 * dof)
        - 0.5 * math.log(dof * math.pi)
    )
    out = np.exp(log_c - 0.5 * (dof + 1) * np.log1p(arr * arr / dof))
    return float(out) if np.ndim(out) == 0 else out


def student_t_quantile(p: float, dof: int) -> float:
    """
    Inverse Student-t cdf.

    Args:
        p: Probability in (0, 1)
        dof: Degrees of freedom

    Returns:
        t with cdf(t) = p

    Raises:
        DomainError: If p is outside (0, 1)
    """
    _check_dof(dof)
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    tail = min(p, 1.0 - p)
    x = float(sc.betaincinv(0.5 * dof, 0.5, 2.0 * tail))
    t = math.sqrt(dof * (1.0 - x) / x) if x > 0.0 else math.inf
    t = -t if p < 0.5 else t
    # Newton polish on the cdf.
    for _ in range(2):
        dens = student_t_pdf(t, dof)
        if not math.isfinite(t) or dens <= 0.0:
            break
        t -= (student_t_cdf(t, dof) - p) / dens
    return t


def normal_cdf(x: ArrayLike) -> ArrayLike:
    out = sc.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def normal_quantile(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    return float(sc.ndtri(p))
