"""Order-s ordered-statistics decoding.

Candidates are ranked by correlation discrepancy: the sum of |y'_j| over the
positions where a candidate disagrees with the hard decision of y'. For BPSK
candidates of fixed energy this orders candidates exactly as the squared
Euclidean distance to y' does.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Literal, Optional, Tuple

import numpy as np
import structlog

from core.codes import LinearCode
from core.complexity import Order, as_order, tep_count
from core.gf2 import Permutation, SystematicForm, apply_permutation, systematic_form
from core.channel import Observation
from utils.error_handlers import DimensionError, DomainError

logger = structlog.get_logger(__name__)

TieBreak = Literal["first-found", "lowest-index-pattern"]

# Full weight layers up to this many patterns are materialised once and cached
CACHED_LAYER_LIMIT = 2_000_000
# Upper bound on pattern-rows x parity-columns per evaluation chunk
CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class DecoderConfig:
    """Order, quantization width (accounting only) and tie rule."""

    s: Fraction
    q_bits: int = 8
    tie_break: TieBreak = "first-found"
    early_exit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "s", as_order(self.s))
        if self.s < 0:
            raise DomainError("Order must be non-negative", {"s": str(self.s)})
        if self.q_bits < 1:
            raise DomainError("q_bits must be at least 1", {"q_bits": self.q_bits})
        if self.tie_break not in ("first-found", "lowest-index-pattern"):
            raise DomainError(f"Unknown tie rule: {self.tie_break}")

    @classmethod
    def of(cls, s: Order, **kwargs) -> "DecoderConfig":
        return cls(s=as_order(s), **kwargs)


@dataclass(frozen=True)
class SortedObservation:
    """Observation after reliability sorting and MRB elimination."""

    form: SystematicForm
    y_perm: np.ndarray
    hard: np.ndarray
    reliabilities: np.ndarray

    @property
    def kappa(self) -> Permutation:
        return self.form.permutation


@dataclass
class DecodeResult:
    info_bits: np.ndarray
    codeword: np.ndarray
    best_distance: float
    discrepancy: float
    teps_evaluated: int
    measured_xor_ops: int
    best_pattern: Tuple[int, ...] = ()


def sort_reliabilities(obs: Observation, code: LinearCode) -> SortedObservation:
    """Sort by descending |y| (stable on index) and build the most reliable basis."""
    y = np.asarray(obs.y, dtype=np.float64).ravel()
    if y.size != code.n:
        raise DimensionError("Observation length does not match code length",
                             {"observation": int(y.size), "n": code.n})
    preference = Permutation(np.argsort(-np.abs(y), kind="stable"))
    form = systematic_form(code.G, preference)
    y_perm = apply_permutation(y, form.permutation)
    hard = (y_perm > 0).astype(np.uint8)
    return SortedObservation(form=form, y_perm=y_perm, hard=hard[:code.k].copy(),
                             reliabilities=np.abs(y_perm))


@lru_cache(maxsize=32)
def _combination_table(k: int, w: int) -> np.ndarray:
    table = np.array(list(itertools.combinations(range(k), w)), dtype=np.int16).reshape(-1, w)
    table.setflags(write=False)
    return table


def _full_layer(k: int, w: int, chunk: int) -> Iterator[np.ndarray]:
    """All weight-w supports in lexicographic order, in chunks."""
    if w == 0:
        yield np.zeros((1, 0), dtype=np.int16)
        return
    if math.comb(k, w) <= CACHED_LAYER_LIMIT:
        table = _combination_table(k, w)
        for start in range(0, table.shape[0], chunk):
            yield table[start:start + chunk]
        return
    combos = itertools.combinations(range(k), w)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int16)


def best_first_supports(reliabilities: np.ndarray, w: int, count: int) -> List[Tuple[int, ...]]:
    """The ``count`` weight-w supports with the smallest reliability sums.

    Supports come out in nondecreasing sum order; equal sums are ordered
    lexicographically on their sorted index tuples.
    """
    k = int(reliabilities.size)
    if count <= 0 or w > k:
        return []
    rel = [float(v) for v in reliabilities]
    ranked = sorted(range(k), key=lambda i: (rel[i], i))

    def support(ranks: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(sorted(ranked[r] for r in ranks))

    def total(ranks: Tuple[int, ...]) -> float:
        return math.fsum(rel[ranked[r]] for r in ranks)

    start = tuple(range(w))
    heap = [(total(start), support(start), start)]
    visited = {start}
    out: List[Tuple[int, ...]] = []

    def push_successors(ranks: Tuple[int, ...]) -> None:
        for j in range(w):
            limit = ranks[j + 1] if j + 1 < w else k
            if ranks[j] + 1 < limit:
                nxt = ranks[:j] + (ranks[j] + 1,) + ranks[j + 1:]
                if nxt not in visited:
                    visited.add(nxt)
                    heapq.heappush(heap, (total(nxt), support(nxt), nxt))

    while heap and len(out) < count:
        level = heap[0][0]
        group = []
        while heap and heap[0][0] == level:
            _, supp, ranks = heapq.heappop(heap)
            group.append(supp)
            push_successors(ranks)
        group.sort()
        out.extend(group[:count - len(out)])
    return out


class TepList:
    """Lazy list of test error patterns for order s over k MRB positions."""

    def __init__(self, k: int, s: Order, reliabilities: Optional[np.ndarray] = None):
        self.k = k
        self.s = as_order(s)
        if self.s > k:
            raise DomainError("Order exceeds code dimension", {"s": str(self.s), "k": k})
        self.count = tep_count(k, self.s)
        self.full_weight = math.floor(self.s)
        self.partial_weight = self.full_weight + 1
        self.partial_count = math.floor((self.s - self.full_weight) * math.comb(k, self.partial_weight))
        if reliabilities is None:
            reliabilities = np.zeros(k)
        self.reliabilities = np.asarray(reliabilities, dtype=np.float64)[:k]

    def __len__(self) -> int:
        return self.count

    def chunks(self, chunk: int = 4096) -> Iterator[np.ndarray]:
        """Pattern supports as int arrays of shape (m, weight), weight ascending."""
        for w in range(self.full_weight + 1):
            yield from _full_layer(self.k, w, chunk)
        if self.partial_count:
            supports = best_first_supports(self.reliabilities, self.partial_weight, self.partial_count)
            table = np.array(supports, dtype=np.int16).reshape(-1, self.partial_weight)
            for start in range(0, table.shape[0], chunk):
                yield table[start:start + chunk]

    @property
    def patterns(self) -> Iterator[Tuple[int, ...]]:
        for block in self.chunks():
            for row in block:
                yield tuple(int(i) for i in row)


def build_tep_list(k: int, s: Order, reliabilities: Optional[np.ndarray] = None) -> TepList:
    return TepList(k, s, reliabilities)


def _euclidean(y_perm: np.ndarray, discrepancy: float, rho: Optional[float]) -> float:
    """Squared distance from y' to sqrt(rho)(2c-1) given the candidate's discrepancy."""
    if rho is None:
        return discrepancy
    amp = math.sqrt(rho)
    correlation = float(np.abs(y_perm).sum()) - 2.0 * discrepancy
    value = float(np.dot(y_perm, y_perm)) + y_perm.size * rho - 2.0 * amp * correlation
    return max(value, 0.0)


def _pattern_key(support: Tuple[int, ...]) -> Tuple[int, Tuple[int, ...]]:
    return len(support), support


def decode(obs: Observation, code: LinearCode, cfg: DecoderConfig) -> DecodeResult:
    """Order-s OS decoding of one observation."""
    if cfg.s > code.k:
        raise DomainError("Order exceeds code dimension", {"s": str(cfg.s), "k": code.k})
    k, n = code.k, code.n
    sorted_obs = sort_reliabilities(obs, code)
    G_kappa = sorted_obs.form.generator.to_dense()
    P = G_kappa[:, k:]
    rel = sorted_obs.reliabilities
    rel_info, rel_par = rel[:k], rel[k:]
    hard_par = (sorted_obs.y_perm[k:] > 0).astype(np.uint8)
    r = sorted_obs.hard
    base_par = (r.astype(np.int64) @ P.astype(np.int64) % 2).astype(np.uint8)
    d0 = base_par ^ hard_par

    teps = TepList(k, cfg.s, rel_info)
    chunk = max(1, CHUNK_CELLS // max(1, (n - k) * max(1, teps.partial_weight)))

    best_cost = math.inf
    best_support: Tuple[int, ...] = ()
    best_mask = d0
    evaluated = 0
    xors = sorted_obs.form.row_xors * n + int(r.sum()) * (n - k)

    for block in teps.chunks(chunk):
        m, w = block.shape
        if w == 0:
            masks = d0[None, :]
            costs = np.array([float(d0 @ rel_par)])
        else:
            idx = block.astype(np.intp)
            masks = d0[None, :] ^ np.bitwise_xor.reduce(P[idx], axis=1)
            costs = rel_info[idx].sum(axis=1) + masks @ rel_par
        evaluated += m
        xors += m * w * (n - k)

        low = float(costs.min())
        if cfg.tie_break == "first-found":
            if low < best_cost:
                pos = int(np.argmin(costs))
                best_cost, best_mask = low, masks[pos].copy()
                best_support = tuple(int(i) for i in block[pos])
        else:
            tied = np.flatnonzero(costs == low)
            pos = min(tied, key=lambda p: _pattern_key(tuple(int(i) for i in block[p])))
            support = tuple(int(i) for i in block[pos])
            if low < best_cost or (low == best_cost and _pattern_key(support) < _pattern_key(best_support)):
                best_cost, best_mask, best_support = low, masks[pos].copy(), support

        if cfg.early_exit and best_cost == 0.0:
            break

    info = r.copy()
    if best_support:
        info[list(best_support)] ^= 1
    parity = hard_par ^ best_mask
    c_perm = np.concatenate([info, parity])
    codeword = apply_permutation(c_perm, sorted_obs.kappa, "inverse")
    message = (info.astype(np.int64) @ sorted_obs.form.row_transform.astype(np.int64) % 2).astype(np.uint8)

    return DecodeResult(
        info_bits=message,
        codeword=codeword.astype(np.uint8),
        best_distance=_euclidean(sorted_obs.y_perm, best_cost, obs.rho),
        discrepancy=best_cost,
        teps_evaluated=evaluated,
        measured_xor_ops=xors,
        best_pattern=best_support,
    )


def ml_decode(obs: Observation, code: LinearCode) -> DecodeResult:
    """Exhaustive maximum-likelihood decoding over the whole codebook (k <= 16)."""
    y = np.asarray(obs.y, dtype=np.float64).ravel()
    if y.size != code.n:
        raise DimensionError("Observation length does not match code length",
                             {"observation": int(y.size), "n": code.n})
    words, messages = code.codebook()
    hard = (y > 0).astype(np.uint8)
    costs = (words ^ hard[None, :]) @ np.abs(y)
    best = int(np.argmin(costs))
    discrepancy = float(costs[best])
    return DecodeResult(
        info_bits=messages[best].copy(),
        codeword=words[best].copy(),
        best_distance=_euclidean(y, discrepancy, obs.rho),
        discrepancy=discrepancy,
        teps_evaluated=int(words.shape[0]),
        measured_xor_ops=0,
    )


def required_order(code: LinearCode) -> int:
    """Near-ML order rule min(ceil(d_min/4 - 1), k), floored at zero."""
    if code.d_min < 1:
        raise DomainError("d_min must be positive", {"d_min": code.d_min})
    return max(0, min(math.ceil(Fraction(code.d_min, 4) - 1), code.k))
