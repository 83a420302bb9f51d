"""Finite-blocklength limits of the BI-AWGN channel.

All logarithms are base 2. The information density of a +1 symbol received at
SNR rho with noise sample z is ``1 - log2(1 + exp(-2 rho + 2 z sqrt(rho)))``;
capacity is its Gaussian mean and the dispersion its variance.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field
from scipy import integrate, optimize
from scipy.special import erfc, ndtri, roots_hermite

from config.settings import settings
from utils.error_handlers import DomainError, InfeasibleError

logger = structlog.get_logger(__name__)

LOG2E = math.log2(math.e)
ORACLE_HALF_WIDTH = 12.0
MAX_SNR_DB = 80.0
MIN_SNR_DB = -80.0


class FbPoint(BaseModel):
    """One row of the finite-blocklength table."""

    rho_db: float
    C: float = Field(ge=0.0, le=1.0)
    V: float = Field(ge=0.0)
    R: float
    epsilon: float = Field(gt=0.0, lt=1.0)


def qfunc(x) -> np.ndarray:
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def qfunc_inv(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError("Q^-1 requires 0 < p < 1", {"p": p})
    return float(-ndtri(p))


def _density(z: np.ndarray, rho: float) -> np.ndarray:
    return 1.0 - np.logaddexp(0.0, -2.0 * rho + 2.0 * z * math.sqrt(rho)) / math.log(2.0)


@lru_cache(maxsize=8)
def _hermite_nodes(count: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = roots_hermite(count)
    z = math.sqrt(2.0) * t
    w = w / math.sqrt(math.pi)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if rho < 0 or math.isnan(rho):
        raise DomainError("SNR must be non-negative", {"rho": rho})
    return rho


@lru_cache(maxsize=4096)
def capacity(rho: float) -> float:
    """BI-AWGN capacity in bits per channel use (Gauss-Hermite)."""
    rho = _check_rho(rho)
    if rho == 0.0:
        return 0.0
    z, w = _hermite_nodes(settings.quadrature_nodes)
    return float(min(max(np.dot(w, _density(z, rho)), 0.0), 1.0))


@lru_cache(maxsize=4096)
def dispersion(rho: float) -> float:
    """Channel dispersion in bits^2 per channel use (Gauss-Hermite)."""
    rho = _check_rho(rho)
    if rho == 0.0:
        return 0.0
    z, w = _hermite_nodes(settings.quadrature_nodes)
    centred = _density(z, rho) - capacity(rho)
    return float(max(np.dot(w, centred * centred), 0.0))


def _gaussian_expectation(f: Callable[[float], float], rho: float) -> float:
    points = [math.sqrt(rho)] if math.sqrt(rho) < ORACLE_HALF_WIDTH else None
    value, _ = integrate.quad(
        lambda z: f(z) * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi),
        -ORACLE_HALF_WIDTH, ORACLE_HALF_WIDTH,
        points=points, epsabs=1e-14, epsrel=1e-13, limit=400,
    )
    return value


def capacity_oracle(rho: float) -> float:
    """Capacity by adaptive quadrature on a truncated range; independent of the Hermite rule."""
    rho = _check_rho(rho)
    if rho == 0.0:
        return 0.0
    return _gaussian_expectation(lambda z: float(_density(np.float64(z), rho)), rho)


def dispersion_oracle(rho: float) -> float:
    rho = _check_rho(rho)
    if rho == 0.0:
        return 0.0
    c = capacity_oracle(rho)
    return _gaussian_expectation(lambda z: float(_density(np.float64(z), rho) - c) ** 2, rho)


def normal_approx_rate(n: int, rho: float, epsilon: float) -> float:
    """R(n, rho, eps) = C - sqrt(V/n) Q^-1(eps) log2(e). May be negative."""
    if n < 1:
        raise DomainError("Blocklength must be positive", {"n": n})
    q = qfunc_inv(epsilon)
    return capacity(rho) - math.sqrt(dispersion(rho) / n) * q * LOG2E


def fb_point(n: int, rho_db: float, epsilon: float) -> FbPoint:
    rho = 10.0 ** (rho_db / 10.0)
    return FbPoint(rho_db=rho_db, C=capacity(rho), V=dispersion(rho),
                   R=normal_approx_rate(n, rho, epsilon), epsilon=epsilon)


def reference_snr_db(n: int, r: float, epsilon: float) -> float:
    """SNR in dB at which the normal approximation equals rate ``r``."""
    if not 0.0 < r:
        raise DomainError("Rate must be positive", {"r": r})
    if r >= 1.0:
        raise InfeasibleError("Rate at or above the binary-input limit", {"r": r, "n": n})

    def excess(rho_db: float) -> float:
        return normal_approx_rate(n, 10.0 ** (rho_db / 10.0), epsilon) - r

    lo, hi = settings.search_lo_db, settings.search_hi_db
    while excess(lo) > 0:
        lo -= 10.0
        if lo < MIN_SNR_DB:
            raise DomainError("Could not bracket reference SNR from below", {"n": n, "r": r})
    while excess(hi) < 0:
        hi += 10.0
        if hi > MAX_SNR_DB:
            raise InfeasibleError("Rate not achievable at any SNR",
                                  {"n": n, "r": r, "epsilon": epsilon})
    root = optimize.bisect(excess, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=400)
    logger.debug("Reference SNR", n=n, r=r, epsilon=epsilon, rho_db=root)
    return float(root)


def reference_snr(n: int, r: float, epsilon: float) -> float:
    """Linear reference SNR rho_r = R^-1(n, r, eps)."""
    return 10.0 ** (reference_snr_db(n, r, epsilon) / 10.0)


def bounds_table(n: int, epsilon: float, snr_db_grid) -> list:
    """FbPoint rows over an SNR grid in dB."""
    return [fb_point(n, float(s), epsilon) for s in snr_db_grid]
