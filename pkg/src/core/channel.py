"""BPSK mapping and BI-AWGN transmission with unit-variance noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from utils.error_handlers import DomainError

# RNG stream identifiers, mixed into the per-trial seed
NOISE_STREAM = 0
MESSAGE_STREAM = 1


@dataclass(frozen=True)
class ChannelParams:
    """Channel SNR in linear and dB form."""

    rho: float
    rho_db: float

    def __post_init__(self):
        if self.rho < 0 or math.isnan(self.rho):
            raise DomainError("SNR must be non-negative", {"rho": self.rho})

    @classmethod
    def from_linear(cls, rho: float) -> "ChannelParams":
        rho = float(rho)
        return cls(rho=rho, rho_db=10.0 * math.log10(rho) if rho > 0 else -math.inf)

    @classmethod
    def from_db(cls, rho_db: float) -> "ChannelParams":
        return cls(rho=10.0 ** (float(rho_db) / 10.0), rho_db=float(rho_db))


@dataclass(frozen=True)
class Observation:
    """Received real vector; ``rho`` is carried along when known."""

    y: np.ndarray
    rho: Optional[float] = None

    def __len__(self) -> int:
        return int(np.asarray(self.y).size)


def modulate(bits) -> np.ndarray:
    """Map bits to symbols with x = 2b - 1."""
    b = np.asarray(bits)
    if np.any((b != 0) & (b != 1)):
        raise DomainError("Bits must be 0 or 1")
    return 2.0 * b.astype(np.float64) - 1.0


def trial_rng(seed: int, trial: int, stream: int = NOISE_STREAM) -> np.random.Generator:
    """Generator whose output depends only on (seed, trial, stream)."""
    return np.random.default_rng([int(seed), int(trial), int(stream)])


def transmit(x, params: ChannelParams, rng: np.random.Generator) -> Observation:
    """y = sqrt(rho) x + z with z ~ N(0, I)."""
    x = np.asarray(x, dtype=np.float64)
    z = rng.standard_normal(x.shape)
    return Observation(y=math.sqrt(params.rho) * x + z, rho=params.rho)


def bit_error_prob_uncoded(rho: float) -> float:
    """Uncoded BPSK bit error probability Q(sqrt(rho))."""
    if rho < 0:
        raise DomainError("SNR must be non-negative", {"rho": rho})
    return float(0.5 * erfc(math.sqrt(rho) / math.sqrt(2.0)))
