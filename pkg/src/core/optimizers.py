"""Link design problems: minimum latency, minimum energy per bit, maximum payload.

Each problem has a linear scan over n that uses the closed-form reductions
(penalty at the power ceiling, penalty at the latency floor, constrained rate)
and a brute-force oracle over a power-penalty grid that only checks the raw
constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from config.settings import settings
from core.complexity import (
    HardwareProfile,
    aggregate_latency,
    latency_slack,
    max_blocklength,
    max_order,
    per_bit_complexity,
)
from core.fb_limits import normal_approx_rate, reference_snr_db
from core.tradeoff import ModelTable, constrained_max_rate, min_power_penalty, predicted_log_complexity
from utils.error_handlers import DomainError, InfeasibleError, WorkbenchError

logger = structlog.get_logger(__name__)

Problem = Literal["latency", "energy", "info-bits"]

DELTA_GRID_STEP_DB = 0.01
# Post-hoc constraint checks allow this much rounding
CHECK_TOL = 1e-9

CURVE_COLUMNS = ["n", "k", "rho_r_db", "delta_rho_db", "log2_K", "K", "L_A", "e_b_db", "feasible"]


class SystemConstraints(BaseModel):
    epsilon_m: float = Field(gt=0.0, lt=1.0)
    rho_m_db: float
    L_M: Optional[float] = Field(None, gt=0.0)


class DesignPoint(BaseModel):
    """Solution of one design problem; fields are null when infeasible."""

    model_config = ConfigDict(ser_json_inf_nan="null")

    problem: Problem
    feasible: bool
    n: Optional[int] = None
    k: Optional[int] = None
    s: Optional[float] = None
    theorem_order: Optional[float] = None
    rho_r_db: Optional[float] = None
    delta_rho_db: Optional[float] = None
    K: Optional[float] = None
    L_A: Optional[float] = None
    e_b_db: Optional[float] = None
    e_b_linear: Optional[float] = None
    k_inf: Optional[int] = None
    n_inf: Optional[int] = None
    reason: Optional[str] = None


def design_point_schema() -> dict:
    return DesignPoint.model_json_schema()


@dataclass
class OptimizationResult:
    point: DesignPoint
    curve: pd.DataFrame


@lru_cache(maxsize=65536)
def _reference_db(n: int, k: int, epsilon: float) -> Optional[float]:
    try:
        return reference_snr_db(n, k / n, epsilon)
    except InfeasibleError:
        return None


def theorem_order(k: int, F: float, n: int) -> float:
    """Closed-form order for complexity 2^F: s = (k - sqrt(k^2 - cbrt(k^2 eta^4)))/2."""
    eta = F + 1.0 - math.log2(n)
    if eta <= 0:
        return 0.0
    if eta >= k:
        return float(k)
    return 0.5 * (k - math.sqrt(max(k * k - (k * k * eta ** 4) ** (1.0 / 3.0), 0.0)))


def executable_order(n: int, k: int, K: float, q: Optional[int] = None) -> Optional[float]:
    """Largest grid order whose complexity fits K, or None when even s=0 does not."""
    q = q or settings.quantization_bits
    if K < per_bit_complexity(n, k, q, 0):
        return None
    return max_order(n, k, q, K).s_max_exact


def default_n_range(k: int, constraints: SystemConstraints, hw: HardwareProfile) -> range:
    upper = settings.n_max_cap
    if constraints.L_M is not None:
        upper = min(upper, max_blocklength(constraints.L_M, hw))
    return range(k, upper + 1)


def _e_b(rho_db: float, rate: float) -> tuple:
    return rho_db - 10.0 * math.log10(rate), 10.0 ** (rho_db / 10.0) / rate


def _curve(rows: List[dict]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def _infeasible(problem: Problem, reason: str) -> DesignPoint:
    return DesignPoint(problem=problem, feasible=False, reason=reason)


def _latency_point(n: int, k: int, rho_r_db: float, delta: float, models: ModelTable,
                   hw: HardwareProfile, problem: Problem) -> DesignPoint:
    F = predicted_log_complexity(models.model_for(n), delta)
    K = 2.0 ** F
    _, L_A = aggregate_latency(n, k, K, hw)
    e_b_db, e_b_linear = _e_b(rho_r_db + delta, k / n)
    return DesignPoint(
        problem=problem, feasible=True, n=n, k=k,
        s=executable_order(n, k, K), theorem_order=theorem_order(k, F, n),
        rho_r_db=rho_r_db, delta_rho_db=delta, K=K, L_A=L_A,
        e_b_db=e_b_db, e_b_linear=e_b_linear,
    )


def _row(point: DesignPoint, n: int, k: int, rho_r_db: Optional[float]) -> dict:
    return {
        "n": n, "k": k, "rho_r_db": rho_r_db,
        "delta_rho_db": point.delta_rho_db if point.feasible else None,
        "log2_K": math.log2(point.K) if point.feasible and point.K else None,
        "K": point.K, "L_A": point.L_A, "e_b_db": point.e_b_db, "feasible": point.feasible,
    }


def _better(candidate: float, best: Optional[float], maximize: bool = False) -> bool:
    if best is None:
        return True
    return candidate > best if maximize else candidate < best


def minimize_latency(k: int, constraints: SystemConstraints, hw: HardwareProfile, models: ModelTable,
                     n_range: Optional[Sequence[int]] = None) -> OptimizationResult:
    """Minimum aggregate latency for k information bits; the penalty sits at the power ceiling."""
    ns = list(n_range) if n_range is not None else list(default_n_range(k, constraints, hw))
    best: Optional[DesignPoint] = None
    rows = []
    for n in ns:
        if n < k:
            continue
        rho_r_db = _reference_db(n, k, constraints.epsilon_m)
        if rho_r_db is None or rho_r_db > constraints.rho_m_db:
            rows.append({"n": n, "k": k, "rho_r_db": rho_r_db, "feasible": False})
            continue
        point = _latency_point(n, k, rho_r_db, constraints.rho_m_db - rho_r_db, models, hw, "latency")
        if constraints.L_M is not None and point.L_A > constraints.L_M * (1 + CHECK_TOL):
            point = _infeasible("latency", "latency budget exceeded")
        rows.append(_row(point, n, k, rho_r_db))
        if point.feasible and _better(point.L_A, best.L_A if best else None):
            best = point
    result = best or _infeasible("latency", "no blocklength meets the SNR ceiling")
    verify_design(result, constraints, hw)
    logger.info("Latency minimised", feasible=result.feasible, n=result.n, L_A=result.L_A)
    return OptimizationResult(point=result, curve=_curve(rows))


def minimize_energy(k: int, constraints: SystemConstraints, hw: HardwareProfile, models: ModelTable,
                    n_range: Optional[Sequence[int]] = None) -> OptimizationResult:
    """Minimum energy per information bit; the penalty sits at the latency floor."""
    if constraints.L_M is None:
        raise DomainError("Energy minimisation needs a latency budget")
    ns = list(n_range) if n_range is not None else list(default_n_range(k, constraints, hw))
    best: Optional[DesignPoint] = None
    rows = []
    for n in ns:
        if n < k:
            continue
        rho_r_db = _reference_db(n, k, constraints.epsilon_m)
        if rho_r_db is None or rho_r_db > constraints.rho_m_db:
            rows.append({"n": n, "k": k, "rho_r_db": rho_r_db, "feasible": False})
            continue
        try:
            delta = min_power_penalty(models.model_for(n), constraints.L_M, n, k, hw)
        except InfeasibleError:
            rows.append({"n": n, "k": k, "rho_r_db": rho_r_db, "feasible": False})
            continue
        if math.isinf(delta) or rho_r_db + delta > constraints.rho_m_db:
            rows.append({"n": n, "k": k, "rho_r_db": rho_r_db, "feasible": False})
            continue
        point = _latency_point(n, k, rho_r_db, delta, models, hw, "energy")
        rows.append(_row(point, n, k, rho_r_db))
        if _better(point.e_b_linear, best.e_b_linear if best else None):
            best = point
    result = best or _infeasible("energy", "no blocklength meets the SNR ceiling within the latency budget")
    verify_design(result, constraints, hw)
    logger.info("Energy minimised", feasible=result.feasible, n=result.n, e_b_db=result.e_b_db)
    return OptimizationResult(point=result, curve=_curve(rows))


def k_infinite_compute(constraints: SystemConstraints, hw: HardwareProfile) -> tuple:
    """(n_inf, k_inf) for unlimited decoding speed."""
    n_inf = max_blocklength(constraints.L_M, hw)
    if n_inf < 1:
        return n_inf, 0
    rate = normal_approx_rate(n_inf, 10.0 ** (constraints.rho_m_db / 10.0), constraints.epsilon_m)
    return n_inf, max(0, min(n_inf, math.floor(n_inf * rate)))


def maximize_info_bits(constraints: SystemConstraints, hw: HardwareProfile, models: ModelTable,
                       n_range: Optional[Sequence[int]] = None) -> OptimizationResult:
    """Largest payload k over n <= L_M / T_s; ties go to the shorter block.

    With free decoding (T_b = 0) the answer is the infinite-compute design
    (n_inf, k_inf) whenever n_inf is scanned, even if a shorter block ties.
    """
    if constraints.L_M is None:
        raise DomainError("Payload maximisation needs a latency budget")
    n_inf, k_inf = k_infinite_compute(constraints, hw)
    ns = list(n_range) if n_range is not None else list(range(1, min(n_inf, settings.n_max_cap) + 1))
    best: Optional[DesignPoint] = None
    at_n_inf: Optional[DesignPoint] = None
    rows = []
    for n in ns:
        if n > n_inf:
            continue
        try:
            res = constrained_max_rate(models, n, constraints.rho_m_db, constraints.epsilon_m,
                                       constraints.L_M, hw)
        except InfeasibleError:
            res = None
        if res is None or not res.feasible:
            rows.append({"n": n, "k": 0, "feasible": False})
            continue
        rho_r_db = _reference_db(n, res.k, constraints.epsilon_m)
        if rho_r_db is None:
            rows.append({"n": n, "k": 0, "feasible": False})
            continue
        point = _latency_point(n, res.k, rho_r_db, res.delta_rho_m_db, models, hw, "info-bits")
        rows.append(_row(point, n, res.k, rho_r_db))
        if best is None or res.k > best.k:
            best = point
        if n == n_inf:
            at_n_inf = point
    if hw.effective_tb == 0 and at_n_inf is not None and best is not None and at_n_inf.k == best.k:
        best = at_n_inf
    if best is None:
        result = _infeasible("info-bits", "no blocklength carries a payload")
    else:
        result = best.model_copy(update={"k_inf": k_inf, "n_inf": n_inf})
    verify_design(result, constraints, hw)
    logger.info("Payload maximised", feasible=result.feasible, n=result.n, k=result.k, k_inf=k_inf)
    return OptimizationResult(point=result, curve=_curve(rows))


def verify_design(point: DesignPoint, constraints: SystemConstraints, hw: HardwareProfile) -> None:
    """Check a returned point against the raw constraints."""
    if not point.feasible:
        return
    violations = []
    if point.k > point.n:
        violations.append("k > n")
    if point.delta_rho_db < -CHECK_TOL:
        violations.append("negative power penalty")
    if point.rho_r_db + point.delta_rho_db > constraints.rho_m_db + 1e-7:
        violations.append("SNR ceiling exceeded")
    if constraints.L_M is not None and point.problem != "latency" \
            and point.L_A > constraints.L_M * (1 + 1e-7):
        violations.append("latency budget exceeded")
    if point.s is not None and not 0 <= point.s <= point.k:
        violations.append("order out of range")
    if violations:
        raise WorkbenchError("Design point violates its constraints",
                             {"violations": violations, "n": point.n, "k": point.k})


def _delta_grid(upper: float) -> np.ndarray:
    """0, 0.01, ... up to ``upper`` with the endpoint appended."""
    if upper < 0:
        return np.empty(0)
    if math.isinf(upper):
        return np.array([math.inf])
    steps = int(math.floor(upper / DELTA_GRID_STEP_DB + 1e-9))
    grid = np.round(np.arange(steps + 1) * DELTA_GRID_STEP_DB, 10)
    if grid[-1] < upper:
        grid = np.append(grid, upper)
    return grid


def _first_feasible_delta(grid: np.ndarray, fits: Callable[[float], bool]) -> Optional[float]:
    """Smallest grid value that fits, refined by bisection against the previous grid value."""
    for i, delta in enumerate(grid):
        if fits(float(delta)):
            if i == 0 or math.isinf(delta):
                return float(delta)
            lo, hi = float(grid[i - 1]), float(delta)
            return float(optimize.bisect(lambda d: 1.0 if fits(d) else -1.0, lo, hi, xtol=1e-12))
    return None


def _latency_fits(n: int, k: int, models: ModelTable, hw: HardwareProfile, L_M: float) -> Callable[[float], bool]:
    model = models.model_for(n)

    def fits(delta: float) -> bool:
        K = 2.0 ** predicted_log_complexity(model, delta)
        return aggregate_latency(n, k, K, hw)[1] <= L_M * (1 + CHECK_TOL)
    return fits


def brute_force_oracle(problem: Problem, constraints: SystemConstraints, hw: HardwareProfile,
                       models: ModelTable, n_grid: Sequence[int], k: Optional[int] = None) -> DesignPoint:
    """Exhaustive scan over (n, k, power-penalty grid) against the raw constraints."""
    best: Optional[DesignPoint] = None
    eps, rho_m = constraints.epsilon_m, constraints.rho_m_db

    if problem in ("latency", "energy"):
        if k is None:
            raise DomainError("Oracle needs k for this problem")
        for n in n_grid:
            if n < k:
                continue
            rho_r_db = _reference_db(n, k, eps)
            if rho_r_db is None or rho_r_db > rho_m:
                continue
            grid = _delta_grid(rho_m - rho_r_db)
            if problem == "latency":
                candidates = [_latency_point(n, k, rho_r_db, float(d), models, hw, problem) for d in grid]
                if constraints.L_M is not None:
                    candidates = [c for c in candidates if c.L_A <= constraints.L_M * (1 + CHECK_TOL)]
                if not candidates:
                    continue
                point = min(candidates, key=lambda c: c.L_A)
                if _better(point.L_A, best.L_A if best else None):
                    best = point
            else:
                if latency_slack(constraints.L_M, n, hw) < 0:
                    continue
                delta = _first_feasible_delta(grid, _latency_fits(n, k, models, hw, constraints.L_M))
                if delta is None:
                    continue
                point = _latency_point(n, k, rho_r_db, delta, models, hw, problem)
                if _better(point.e_b_linear, best.e_b_linear if best else None):
                    best = point
        return best or _infeasible(problem, "oracle found no feasible point")

    if problem != "info-bits":
        raise DomainError(f"Unknown problem: {problem}")
    for n in n_grid:
        if latency_slack(constraints.L_M, n, hw) < 0:
            continue
        ceiling = normal_approx_rate(n, 10.0 ** (rho_m / 10.0), eps)
        top = min(n - 1, math.floor(n * ceiling) + 1) if ceiling > 0 else 0
        for kk in range(top, 0, -1):
            rho_r_db = _reference_db(n, kk, eps)
            if rho_r_db is None or rho_r_db > rho_m:
                continue
            grid = _delta_grid(rho_m - rho_r_db)
            delta = _first_feasible_delta(grid, _latency_fits(n, kk, models, hw, constraints.L_M))
            if delta is None:
                continue
            point = _latency_point(n, kk, rho_r_db, delta, models, hw, problem)
            if best is None or kk > best.k:
                best = point
            break
    return best or _infeasible(problem, "oracle found no feasible point")


def solve(problem: Problem, constraints: SystemConstraints, hw: HardwareProfile, models: ModelTable,
          k: Optional[int] = None, n_range: Optional[Sequence[int]] = None) -> OptimizationResult:
    if problem == "latency":
        return minimize_latency(k, constraints, hw, models, n_range)
    if problem == "energy":
        return minimize_energy(k, constraints, hw, models, n_range)
    if problem == "info-bits":
        return maximize_info_bits(constraints, hw, models, n_range)
    raise DomainError(f"Unknown problem: {problem}")
