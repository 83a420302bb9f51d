"""Complexity versus power-penalty law log2(K) = F(d) = 1 / (a sqrt(d) + b).

The power penalty d is in dB throughout this module.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, Field, field_validator

from config.settings import settings
from core.complexity import HardwareProfile, latency_slack
from core.fb_limits import capacity, normal_approx_rate
from utils.error_handlers import DomainError, FitError, InfeasibleError

logger = structlog.get_logger(__name__)

POINT_COLUMNS = ["n", "k", "s", "q", "delta_rho_db", "log2_K", "source"]
GRADIENT_TOL = 1e-10
MAX_ITERATIONS = 200

Interpolation = Literal["nearest", "linear"]


class TradeoffModel(BaseModel):
    n: int = Field(ge=1)
    a: float = Field(gt=0.0)
    b: float = Field(gt=0.0)
    fit_rmse: float = Field(0.0, ge=0.0)


class TradeoffPoint(BaseModel):
    n: int = Field(ge=1)
    k: Optional[int] = None
    s: Optional[float] = None
    q: Optional[int] = None
    delta_rho_db: float = Field(ge=0.0)
    log2_K: float = Field(gt=0.0)
    source: Literal["measured", "ingested"] = "measured"


class ModelTable(BaseModel):
    """Per-blocklength models with a lookup rule for unlisted n."""

    entries: Dict[int, TradeoffModel]
    interpolation: Interpolation = "nearest"

    @field_validator("entries")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValueError("model table needs at least one entry")
        return value

    @classmethod
    def of(cls, models: Iterable[TradeoffModel], interpolation: Optional[Interpolation] = None) -> "ModelTable":
        return cls(entries={m.n: m for m in models},
                   interpolation=interpolation or settings.model_interpolation)

    def model_for(self, n: int) -> TradeoffModel:
        if n in self.entries:
            return self.entries[n]
        keys = sorted(self.entries)
        if self.interpolation == "nearest" or n < keys[0] or n > keys[-1]:
            nearest = min(keys, key=lambda key: (abs(key - n), key))
            src = self.entries[nearest]
            return TradeoffModel(n=n, a=src.a, b=src.b, fit_rmse=src.fit_rmse)
        upper = next(key for key in keys if key > n)
        lower = max(key for key in keys if key < n)
        w = (n - lower) / (upper - lower)
        lo, hi = self.entries[lower], self.entries[upper]
        return TradeoffModel(n=n, a=(1 - w) * lo.a + w * hi.a, b=(1 - w) * lo.b + w * hi.b,
                             fit_rmse=max(lo.fit_rmse, hi.fit_rmse))

    def to_json(self) -> dict:
        return {
            "entries": [self.entries[n].model_dump() for n in sorted(self.entries)],
            "interpolation": self.interpolation,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelTable":
        models = [TradeoffModel(**entry) for entry in obj.get("entries", [])]
        if not models:
            raise FitError("Model table has no entries")
        return cls.of(models, obj.get("interpolation", "nearest"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModelTable":
        return cls.from_json(json.loads(Path(path).read_text()))

    def merged(self, other: "ModelTable") -> "ModelTable":
        entries = dict(self.entries)
        entries.update(other.entries)
        return ModelTable(entries=entries, interpolation=self.interpolation)


def predicted_log_complexity(model: TradeoffModel, delta_rho_db: float) -> float:
    """F(d); 1/b at zero penalty, decreasing to 0."""
    if delta_rho_db < 0:
        raise DomainError("Power penalty must be non-negative", {"delta_rho_db": delta_rho_db})
    if math.isinf(delta_rho_db):
        return 0.0
    return 1.0 / (model.a * math.sqrt(delta_rho_db) + model.b)


def _residuals(a: float, b: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y - 1.0 / (a * x + b)


def fit(points: Sequence[TradeoffPoint], n: int) -> TradeoffModel:
    """Least-squares fit of (a, b) on log2 complexity."""
    if len(points) < 2:
        raise FitError("At least two points are needed", {"points": len(points)})
    delta = np.array([p.delta_rho_db for p in points], dtype=np.float64)
    y = np.array([p.log2_K for p in points], dtype=np.float64)
    if np.unique(delta).size < 2:
        raise FitError("Points need at least two distinct power penalties")
    x = np.sqrt(delta)

    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design, 1.0 / y, rcond=None)

    for iteration in range(MAX_ITERATIONS):
        denom = a * x + b
        if np.any(denom <= 0):
            raise FitError("Model denominator became non-positive", {"a": a, "b": b})
        r = _residuals(a, b, x, y)
        J = np.column_stack([-x / denom ** 2, -1.0 / denom ** 2])
        gradient = J.T @ r
        if np.linalg.norm(gradient) <= GRADIENT_TOL:
            break
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        cost = float(r @ r)
        scale = 1.0
        while scale > 1e-12:
            na, nb = a + scale * step[0], b + scale * step[1]
            if np.all(na * x + nb > 0):
                nr = _residuals(na, nb, x, y)
                if float(nr @ nr) < cost:
                    a, b = na, nb
                    break
            scale *= 0.5
        else:
            break

    if a <= 0 or b <= 0:
        raise FitError("Fitted coefficients violate positivity", {"a": float(a), "b": float(b)})
    rmse = float(np.sqrt(np.mean(_residuals(a, b, x, y) ** 2)))
    logger.info("Trade-off model fitted", n=n, a=float(a), b=float(b), rmse=rmse, points=len(points))
    return TradeoffModel(n=n, a=float(a), b=float(b), fit_rmse=rmse)


def fit_table(points: Sequence[TradeoffPoint], ns: Optional[Sequence[int]] = None,
              interpolation: Optional[Interpolation] = None) -> ModelTable:
    """Fit one model per blocklength present in ``points`` (or the listed ones)."""
    groups: Dict[int, List[TradeoffPoint]] = {}
    for p in points:
        groups.setdefault(p.n, []).append(p)
    wanted = sorted(groups) if not ns else list(ns)
    missing = [n for n in wanted if n not in groups]
    if missing:
        raise FitError("No points for requested blocklengths", {"missing": missing})
    return ModelTable.of([fit(groups[n], n) for n in wanted], interpolation)


def min_power_penalty(model: TradeoffModel, L_M: float, n: int, k: int, hw: HardwareProfile) -> float:
    """Smallest power penalty (dB) whose predicted complexity fits the latency budget."""
    slack = latency_slack(L_M, n, hw)
    tb = hw.effective_tb
    if slack < 0 or (slack == 0 and tb > 0):
        raise InfeasibleError("Latency budget leaves no decoding time",
                              {"L_M": L_M, "n": n, "T_s": hw.T_s})
    if tb == 0:
        return 0.0
    log_budget = math.log2(slack / (k * tb))
    if log_budget <= 0:
        return math.inf
    return ((1.0 / model.a) * max(1.0 / log_budget - model.b, 0.0)) ** 2


class RateResult(BaseModel):
    n: int
    k: int
    rate: float
    delta_rho_m_db: Optional[float]
    feasible: bool


def _db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def constrained_max_rate(models: ModelTable, n: int, rho_db: float, epsilon: float,
                         L_M: float, hw: HardwareProfile) -> RateResult:
    """Largest k/n meeting k/n <= R(n, rho - d_m(n, k), eps)."""
    slack = latency_slack(L_M, n, hw)
    if slack < 0 or (slack == 0 and hw.effective_tb > 0):
        raise InfeasibleError("Latency budget leaves no decoding time", {"L_M": L_M, "n": n})
    model = models.model_for(n)
    unconstrained = normal_approx_rate(n, _db_to_linear(rho_db), epsilon)
    top = min(n, math.floor(n * unconstrained)) if unconstrained > 0 else 0
    for k in range(top, 0, -1):
        penalty = min_power_penalty(model, L_M, n, k, hw)
        if math.isinf(penalty):
            continue
        if k / n <= normal_approx_rate(n, _db_to_linear(rho_db - penalty), epsilon):
            return RateResult(n=n, k=k, rate=k / n, delta_rho_m_db=penalty, feasible=True)
    return RateResult(n=n, k=0, rate=0.0, delta_rho_m_db=None, feasible=False)


def constrained_rate_curve(models: ModelTable, n: int, epsilon: float, L_M: float,
                           hw: HardwareProfile, snr_db_grid: Iterable[float]) -> pd.DataFrame:
    """Rows (snr_db, C, R, M) over an SNR grid."""
    rows = []
    for snr_db in snr_db_grid:
        rho = _db_to_linear(float(snr_db))
        rows.append({
            "snr_db": float(snr_db),
            "C": capacity(rho),
            "R": normal_approx_rate(n, rho, epsilon),
            "M": constrained_max_rate(models, n, float(snr_db), epsilon, L_M, hw).rate,
        })
    return pd.DataFrame(rows, columns=["snr_db", "C", "R", "M"])


def points_to_frame(points: Sequence[TradeoffPoint]) -> pd.DataFrame:
    return pd.DataFrame([p.model_dump() for p in points], columns=POINT_COLUMNS)


def write_points(points: Sequence[TradeoffPoint], path: Union[str, Path]) -> None:
    points_to_frame(points).to_csv(path, index=False)


def read_points(path: Union[str, Path]) -> List[TradeoffPoint]:
    frame = pd.read_csv(path)
    missing = [c for c in ("n", "delta_rho_db", "log2_K") if c not in frame.columns]
    if missing:
        raise FitError("Points file lacks required columns", {"missing": missing})
    points = []
    for row in frame.to_dict(orient="records"):
        clean = {key: (None if isinstance(val, float) and math.isnan(val) else val)
                 for key, val in row.items() if key in POINT_COLUMNS}
        for key in ("k", "q"):
            if clean.get(key) is not None:
                clean[key] = int(clean[key])
        clean["n"] = int(clean["n"])
        if clean.get("source") is None:
            clean["source"] = "ingested"
        points.append(TradeoffPoint(**clean))
    return points
