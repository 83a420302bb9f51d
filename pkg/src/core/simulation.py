"""Monte Carlo codeword-error estimation and SNR searches.

Trial t draws its message and noise from generators seeded by (seed, t), so
results do not depend on how trials are split into batches or workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, Field
from scipy.special import ndtri

from config.settings import settings
from core.channel import (
    MESSAGE_STREAM,
    NOISE_STREAM,
    ChannelParams,
    Observation,
    modulate,
    transmit,
    trial_rng,
)
from core.codes import LinearCode
from core.complexity import per_bit_complexity
from core.fb_limits import reference_snr_db
from core.os_decoder import DecoderConfig, decode, ml_decode
from core.tradeoff import TradeoffPoint
from utils.error_handlers import DomainError, SearchError
from utils.logging_config import metrics

logger = structlog.get_logger(__name__)

DecoderKind = Literal["osd", "ml"]
WILSON_Z = float(ndtri(0.975))
BRACKET_STEP_DB = 2.0


class StopRule(BaseModel):
    target_errors: int = Field(default_factory=lambda: settings.target_errors, ge=1)
    max_trials: int = Field(default_factory=lambda: settings.max_trials, ge=1)


class CepEstimate(BaseModel):
    cep: float
    trials: int
    errors: int
    ci95: Tuple[float, float]
    seed: int
    rho_db: float
    s: str
    decoder: DecoderKind = "osd"


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def draw_trial(code: LinearCode, rho: float, seed: int, trial: int,
               all_zero: bool = False) -> Tuple[np.ndarray, np.ndarray, Observation]:
    """(message, codeword, observation) for one trial."""
    if all_zero:
        u = np.zeros(code.k, dtype=np.uint8)
    else:
        u = trial_rng(seed, trial, MESSAGE_STREAM).integers(0, 2, size=code.k, dtype=np.uint8)
    c = code.encode(u)
    obs = transmit(modulate(c), ChannelParams.from_linear(rho), trial_rng(seed, trial, NOISE_STREAM))
    return u, c, obs


@dataclass(frozen=True)
class _Batch:
    code: LinearCode
    cfg: DecoderConfig
    rho: float
    seed: int
    start: int
    count: int
    all_zero: bool
    decoder: DecoderKind


def _run_batch(batch: _Batch) -> Tuple[np.ndarray, int]:
    flags = np.zeros(batch.count, dtype=bool)
    teps = 0
    for i in range(batch.count):
        _, c, obs = draw_trial(batch.code, batch.rho, batch.seed, batch.start + i, batch.all_zero)
        if batch.decoder == "ml":
            result = ml_decode(obs, batch.code)
        else:
            result = decode(obs, batch.code, batch.cfg)
        flags[i] = not np.array_equal(result.codeword, c)
        teps += result.teps_evaluated
    return flags, teps


def _batches(template: dict, max_trials: int, batch_size: int) -> Iterator[_Batch]:
    for start in range(0, max_trials, batch_size):
        yield _Batch(start=start, count=min(batch_size, max_trials - start), **template)


def _ordered_results(batches: Iterator[_Batch], workers: int) -> Iterator[Tuple[np.ndarray, int]]:
    if workers <= 1:
        for batch in batches:
            yield _run_batch(batch)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = []
        try:
            for batch in batches:
                pending.append(pool.submit(_run_batch, batch))
                if len(pending) >= 2 * workers:
                    yield pending.pop(0).result()
            while pending:
                yield pending.pop(0).result()
        finally:
            for future in pending:
                future.cancel()


def estimate_cep(code: LinearCode, cfg: DecoderConfig, rho_db: float, seed: int,
                 stop: Optional[StopRule] = None, workers: Optional[int] = None,
                 batch_size: Optional[int] = None, all_zero: bool = False,
                 decoder: DecoderKind = "osd") -> CepEstimate:
    """Codeword error probability at ``rho_db`` until the stop rule fires."""
    if cfg.s > code.k:
        raise DomainError("Order exceeds code dimension", {"s": str(cfg.s), "k": code.k})
    stop = stop or StopRule()
    workers = workers or settings.workers
    batch_size = batch_size or settings.batch_size
    rho = ChannelParams.from_db(rho_db).rho
    template = dict(code=code, cfg=cfg, rho=rho, seed=seed, all_zero=all_zero, decoder=decoder)

    trials = errors = 0
    for flags, teps in _ordered_results(_batches(template, stop.max_trials, batch_size), workers):
        metrics.increment("teps_evaluated", teps)
        positions = np.flatnonzero(flags)
        needed = stop.target_errors - errors
        if positions.size >= needed:
            trials += int(positions[needed - 1]) + 1
            errors += needed
            break
        trials += flags.size
        errors += int(positions.size)

    metrics.increment("trials", trials)
    estimate = CepEstimate(cep=errors / trials, trials=trials, errors=errors,
                           ci95=wilson_interval(errors, trials), seed=seed, rho_db=rho_db,
                           s=str(cfg.s), decoder=decoder)
    logger.info("CEP estimated", rho_db=rho_db, s=str(cfg.s), trials=trials, errors=errors, cep=estimate.cep)
    return estimate


class SnrSearchResult(BaseModel):
    rho_db: float
    lo_db: float
    hi_db: float
    probes: List[CepEstimate]


def required_snr_for_cep(code: LinearCode, cfg: DecoderConfig, epsilon_target: float, seed: int,
                         start_lo_db: float = 0.0, start_hi_db: float = 8.0,
                         bracket_tol_db: Optional[float] = None, stop: Optional[StopRule] = None,
                         workers: Optional[int] = None, decoder: DecoderKind = "osd") -> SnrSearchResult:
    """Bisection in dB for the SNR where the CEP crosses ``epsilon_target``.

    Every probe reuses the same seed, so probes see identical messages and noise.
    """
    if not 0.0 < epsilon_target < 1.0:
        raise DomainError("Target CEP must lie in (0, 1)", {"epsilon": epsilon_target})
    tol = bracket_tol_db or settings.bracket_tol_db
    floor_db, ceil_db = settings.search_lo_db, settings.search_hi_db
    probes: List[CepEstimate] = []

    def cep_at(rho_db: float) -> float:
        est = estimate_cep(code, cfg, rho_db, seed, stop=stop, workers=workers, decoder=decoder)
        probes.append(est)
        return est.cep

    lo = min(max(start_lo_db, floor_db), ceil_db)
    hi = max(min(start_hi_db, ceil_db), lo)
    while cep_at(lo) <= epsilon_target:
        if lo <= floor_db:
            raise SearchError("CEP below target across the search range", {"lo_db": lo})
        hi, lo = lo, max(lo - BRACKET_STEP_DB, floor_db)
    while cep_at(hi) > epsilon_target:
        if hi >= ceil_db:
            raise SearchError("CEP above target across the search range", {"hi_db": hi})
        lo, hi = hi, min(hi + BRACKET_STEP_DB, ceil_db)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cep_at(mid) > epsilon_target:
            lo = mid
        else:
            hi = mid
    result = SnrSearchResult(rho_db=0.5 * (lo + hi), lo_db=lo, hi_db=hi, probes=probes)
    logger.info("Required SNR found", s=str(cfg.s), epsilon=epsilon_target, rho_db=result.rho_db)
    return result


def build_tradeoff_dataset(code: LinearCode, orders: Sequence, epsilon_target: float, seed: int,
                           q: Optional[int] = None, stop: Optional[StopRule] = None,
                           workers: Optional[int] = None, bracket_tol_db: Optional[float] = None) -> List[TradeoffPoint]:
    """(power penalty, log2 complexity) for each order."""
    if not orders:
        raise DomainError("At least one order is required")
    q = q or settings.quantization_bits
    rho_r_db = reference_snr_db(code.n, code.rate, epsilon_target)
    points = []
    for s in orders:
        cfg = DecoderConfig.of(s, q_bits=q)
        search = required_snr_for_cep(code, cfg, epsilon_target, seed, bracket_tol_db=bracket_tol_db,
                                      stop=stop, workers=workers,
                                      start_lo_db=math.floor(rho_r_db), start_hi_db=math.floor(rho_r_db) + 4)
        delta = search.rho_db - rho_r_db
        if delta < 0:
            logger.warning("Negative power penalty clamped", s=str(cfg.s), delta_rho_db=delta)
            delta = 0.0
        points.append(TradeoffPoint(
            n=code.n, k=code.k, s=float(cfg.s), q=q, delta_rho_db=delta,
            log2_K=math.log2(per_bit_complexity(code.n, code.k, q, cfg.s)), source="measured",
        ))
    return points


@dataclass
class OrderComparison:
    """Per-trial outcomes of several orders on shared noise."""

    orders: List[str]
    best_distance: np.ndarray
    errors: np.ndarray

    @property
    def distance_monotone_fraction(self) -> float:
        """Share of trials whose best distance never increases with the order."""
        if self.best_distance.shape[0] == 0:
            return 1.0
        steps = np.diff(self.best_distance, axis=1)
        tol = 1e-9 * np.maximum(1.0, np.abs(self.best_distance[:, 1:]))
        return float(np.mean(np.all(steps <= tol, axis=1)))

    def summary(self) -> pd.DataFrame:
        trials = self.errors.shape[0]
        rows = []
        for j, s in enumerate(self.orders):
            e = int(self.errors[:, j].sum())
            lo, hi = wilson_interval(e, trials)
            rows.append({"s": s, "trials": trials, "errors": e, "cep": e / trials if trials else 0.0,
                         "ci_lo": lo, "ci_hi": hi})
        return pd.DataFrame(rows)


def compare_orders(code: LinearCode, orders: Sequence, rho_db: float, trials: int, seed: int,
                   q: Optional[int] = None) -> OrderComparison:
    """Decode identical observations with every order."""
    cfgs = sorted((DecoderConfig.of(s, q_bits=q or settings.quantization_bits) for s in orders),
                  key=lambda cfg: cfg.s)
    rho = ChannelParams.from_db(rho_db).rho
    distance = np.zeros((trials, len(cfgs)))
    errors = np.zeros((trials, len(cfgs)), dtype=bool)
    for t in range(trials):
        _, c, obs = draw_trial(code, rho, seed, t)
        for j, cfg in enumerate(cfgs):
            result = decode(obs, code, cfg)
            distance[t, j] = result.best_distance
            errors[t, j] = not np.array_equal(result.codeword, c)
    metrics.increment("trials", trials)
    return OrderComparison(orders=[str(cfg.s) for cfg in cfgs], best_distance=distance, errors=errors)
