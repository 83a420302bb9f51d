"""Closed-form complexity and latency accounting for the OS decoder."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union

import structlog
from pydantic import BaseModel, Field

from config.settings import settings
from utils.error_handlers import DomainError, InfeasibleError

logger = structlog.get_logger(__name__)

Order = Union[int, float, str, Fraction]

# Relative slack below which L_M - n T_s counts as zero
LATENCY_SLACK_TOL = 1e-12


def as_order(s: Order) -> Fraction:
    """Exact rational order; floats go through their decimal repr."""
    if isinstance(s, Fraction):
        return s
    if isinstance(s, float):
        if math.isnan(s) or math.isinf(s):
            raise DomainError("Order must be finite", {"s": s})
        return Fraction(repr(s))
    return Fraction(s)


class HardwareProfile(BaseModel):
    """Symbol time, binary-op time and parallel execution parameters."""

    T_s: float = Field(gt=0.0)
    T_b: float = Field(ge=0.0)
    alpha: float = Field(0.0, ge=0.0, le=1.0)
    P: int = Field(1, ge=1)

    @property
    def speedup(self) -> float:
        return amdahl_speedup(self.alpha, self.P)

    @property
    def effective_tb(self) -> float:
        return effective_tb(self.T_b, self.speedup)


class ComplexityReport(BaseModel):
    n: int
    k: int
    q: int
    s: float
    tep_count: int = Field(ge=1)
    K: float = Field(ge=0.0)
    log2_K: float
    L_D: Optional[float] = None
    L_A: Optional[float] = None


class OrderBound(BaseModel):
    s_max_exact: float
    s_max_approx: float
    tau: float
    K_budget: float
    K_at_s_max: float


def tep_count(k: int, s: Order) -> int:
    """Number of test error patterns for order s (exact)."""
    s = as_order(s)
    if k < 1:
        raise DomainError("k must be positive", {"k": k})
    if s < 0 or s > k:
        raise DomainError("Order must satisfy 0 <= s <= k", {"s": str(s), "k": k})
    whole = math.floor(s)
    total = sum(math.comb(k, i) for i in range(whole + 1))
    return total + math.floor((s - whole) * math.comb(k, whole + 1))


def per_bit_complexity_exact(n: int, k: int, q: int, s: Order) -> Fraction:
    """Binary operations per information bit, as an exact rational."""
    if k > n:
        raise DomainError("k must not exceed n", {"k": k, "n": n})
    if q < 1:
        raise DomainError("q must be at least 1", {"q": q})
    count = tep_count(k, s)
    return n * k + Fraction(count, 2) * (n - q + Fraction(q * n, k))


def per_bit_complexity(n: int, k: int, q: int, s: Order) -> float:
    return float(per_bit_complexity_exact(n, k, q, s))


def complexity_report(n: int, k: int, q: int, s: Order, hw: Optional[HardwareProfile] = None) -> ComplexityReport:
    order = as_order(s)
    K = per_bit_complexity(n, k, q, order)
    report = ComplexityReport(n=n, k=k, q=q, s=float(order), tep_count=tep_count(k, order),
                              K=K, log2_K=math.log2(K))
    if hw is not None:
        L_D, L_A = aggregate_latency(n, k, K, hw)
        report.L_D, report.L_A = L_D, L_A
    return report


def complexity_order(n: int, k: int, s: Order) -> dict:
    """Stirling-style growth n k^s / Gamma(s+1) next to the exact leading binomial."""
    order = as_order(s)
    if order < 1:
        raise DomainError("Complexity order is defined for s >= 1", {"s": str(order)})
    s_f = float(order)
    stirling = math.exp(s_f * math.log(k) - math.lgamma(s_f + 1.0))
    exact = math.comb(k, math.floor(order))
    return {
        "order": f"O(n*k^{s_f:g})",
        "leading_stirling": stirling,
        "leading_binomial": exact,
        "ratio": exact / stirling,
        "n_times_stirling": n * stirling,
    }


def amdahl_speedup(alpha: float, P: int) -> float:
    """U = 1 / (alpha/P + 1 - alpha)."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]", {"alpha": alpha})
    if P < 1:
        raise DomainError("Processor count must be at least 1", {"P": P})
    return 1.0 / (alpha / P + (1.0 - alpha))


def effective_tb(T_b: float, U: float) -> float:
    return T_b / U


def aggregate_latency(n: int, k: int, K: float, hw: HardwareProfile) -> tuple:
    """Return (L_D, L_A) with L_D = k K T_b and L_A = n T_s + L_D."""
    L_D = k * K * hw.effective_tb
    return L_D, n * hw.T_s + L_D


def latency_slack(L_M: float, n: int, hw: HardwareProfile) -> float:
    """L_M - n T_s, snapped to zero within rounding; negative means infeasible."""
    slack = L_M - n * hw.T_s
    if abs(slack) <= LATENCY_SLACK_TOL * max(L_M, n * hw.T_s):
        return 0.0
    return slack


def max_blocklength(L_M: float, hw: HardwareProfile) -> int:
    """Largest n with n T_s <= L_M."""
    return int(math.floor(L_M / hw.T_s + 1e-9))


def complexity_budget(L_M: float, n: int, k: int, hw: HardwareProfile) -> float:
    """Per-information-bit operations allowed by the latency budget."""
    slack = latency_slack(L_M, n, hw)
    if slack < 0:
        raise InfeasibleError("Latency budget below airtime",
                              {"L_M": L_M, "n": n, "T_s": hw.T_s})
    tb = hw.effective_tb
    if tb == 0:
        return math.inf
    return slack / (k * tb)


def _order_grid_step(step: Optional[float] = None) -> Fraction:
    return as_order(settings.order_step if step is None else step)


def order_tau(n: int, k: int, q: int, K_budget: float) -> float:
    return k * (K_budget - n * k) / (n * (k + q) - q * k)


def approx_max_order(n: int, k: int, q: int, K_budget: float) -> tuple:
    """Entropy-approximated maximum order; returns (s_approx, tau)."""
    if math.isinf(K_budget):
        return float(k), math.inf
    tau = order_tau(n, k, q, K_budget)
    if tau <= 0.5:
        return 0.0, tau
    eta = 1.0 + math.log2(tau)
    if eta >= k:
        return float(k), tau
    s = 0.5 * (k - math.sqrt(max(k * k - (k * k * eta ** 4) ** (1.0 / 3.0), 0.0)))
    return min(max(s, 0.0), float(k)), tau


def max_order(n: int, k: int, q: int, K_budget: float, step: Optional[float] = None) -> OrderBound:
    """Largest order on the step grid whose complexity fits ``K_budget``."""
    delta = _order_grid_step(step)
    base = per_bit_complexity_exact(n, k, q, 0)
    if not math.isinf(K_budget) and Fraction(K_budget) < base:
        raise InfeasibleError("No decoder fits the complexity budget",
                              {"K_budget": K_budget, "K_min": float(base)})
    top = math.floor(Fraction(k) / delta)
    lo, hi = 0, top
    if math.isinf(K_budget):
        lo = top
    else:
        budget = Fraction(K_budget)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if per_bit_complexity_exact(n, k, q, mid * delta) <= budget:
                lo = mid
            else:
                hi = mid - 1
    s_exact = lo * delta
    s_approx, tau = approx_max_order(n, k, q, K_budget)
    return OrderBound(
        s_max_exact=float(s_exact),
        s_max_approx=s_approx,
        tau=tau,
        K_budget=K_budget,
        K_at_s_max=per_bit_complexity(n, k, q, s_exact),
    )
