"""Bit-level linear algebra over GF(2).

Matrices are stored row-major with each row packed MSB-first into bytes
(column 0 is the most significant bit of the first byte). Tail bits past the
last column are always zero, so equality and hashing are bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Literal, Sequence, Tuple

import numpy as np
import structlog

from utils.error_handlers import DimensionError, DomainError, RankDeficientError

logger = structlog.get_logger(__name__)

Direction = Literal["forward", "inverse"]


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """Immutable packed binary matrix."""

    rows: int
    cols: int
    packed: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionError("BitMatrix needs at least one row and one column",
                                 {"rows": self.rows, "cols": self.cols})
        packed = np.ascontiguousarray(self.packed, dtype=np.uint8)
        width = (self.cols + 7) // 8
        if packed.shape != (self.rows, width):
            raise DimensionError("Packed storage has wrong shape",
                                 {"expected": (self.rows, width), "got": packed.shape})
        tail = width * 8 - self.cols
        if tail and np.any(packed[:, -1] & ((1 << tail) - 1)):
            raise DomainError("Non-zero tail bits in packed row")
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        arr = np.atleast_2d(np.asarray(dense, dtype=np.uint8))
        if arr.ndim != 2:
            raise DimensionError("Dense matrix must be two-dimensional")
        if np.any(arr > 1):
            raise DomainError("Dense matrix entries must be 0 or 1")
        return cls(arr.shape[0], arr.shape[1], np.packbits(arr, axis=1))

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "BitMatrix":
        """Build from strings of '0'/'1' characters, one per row."""
        return cls.from_dense([[int(ch) for ch in row] for row in rows])

    @classmethod
    def identity(cls, size: int) -> "BitMatrix":
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    def to_dense(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.cols)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def row_hex(self) -> List[str]:
        return [bytes(row).hex() for row in self.packed]

    @classmethod
    def from_row_hex(cls, rows: int, cols: int, row_hex: Sequence[str]) -> "BitMatrix":
        if len(row_hex) != rows:
            raise DimensionError("row_hex length does not match rows",
                                 {"rows": rows, "row_hex": len(row_hex)})
        width = (cols + 7) // 8
        packed = np.zeros((rows, width), dtype=np.uint8)
        for i, text in enumerate(row_hex):
            raw = bytes.fromhex(text)
            if len(raw) != width:
                raise DimensionError("Hex row has wrong width", {"row": i, "bytes": len(raw), "expected": width})
            packed[i] = np.frombuffer(raw, dtype=np.uint8)
        return cls(rows, cols, packed)

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "row_hex": self.row_hex()}

    @classmethod
    def from_json(cls, obj: dict) -> "BitMatrix":
        return cls.from_row_hex(int(obj["rows"]), int(obj["cols"]), obj["row_hex"])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.packed, other.packed)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.packed.tobytes()))


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection on {0, ..., n-1}.

    Forward application gathers: ``result[i] = v[map[i]]``.
    """

    map: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.map, dtype=np.int64).ravel()
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise DomainError("Permutation map is not a bijection")
        arr.setflags(write=False)
        object.__setattr__(self, "map", arr)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    def __len__(self) -> int:
        return int(self.map.size)

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.map)
        inv[self.map] = np.arange(self.map.size)
        return Permutation(inv)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.map, other.map)

    def __hash__(self) -> int:
        return hash(self.map.tobytes())


@dataclass(frozen=True)
class SystematicForm:
    """Result of systematic elimination.

    ``row_transform`` is the k x k matrix A with ``generator = A * G[:, kappa]``,
    so a systematic information word u_k maps back to the message ``u_k A``.
    """

    generator: BitMatrix
    permutation: Permutation
    row_transform: np.ndarray
    row_xors: int


def mat_vec_mod2(M: BitMatrix, v) -> np.ndarray:
    """Return ``v M`` over GF(2) for a length-``M.rows`` bit vector."""
    vec = np.asarray(v, dtype=np.uint8).ravel()
    if vec.size != M.rows:
        raise DimensionError("Vector length does not match matrix rows",
                             {"vector": int(vec.size), "rows": M.rows})
    return (vec.astype(np.int64) @ M.to_dense().astype(np.int64) % 2).astype(np.uint8)


def _row_reduce(dense: np.ndarray, max_pivots: int) -> Tuple[np.ndarray, List[int], List[int], np.ndarray, int]:
    """Gauss-Jordan reduce ``dense`` scanning columns left to right.

    Returns (reduced, pivot_cols, deferred_cols, row_transform, row_xors);
    scanning stops after ``max_pivots`` pivots.
    """
    R = dense.copy()
    m, n = R.shape
    A = np.eye(m, dtype=np.uint8)
    pivots: List[int] = []
    deferred: List[int] = []
    row = 0
    xors = 0
    for col in range(n):
        if row == max_pivots or row == m:
            break
        hits = np.flatnonzero(R[row:, col])
        if hits.size == 0:
            deferred.append(col)
            continue
        found = row + int(hits[0])
        if found != row:
            R[[row, found]] = R[[found, row]]
            A[[row, found]] = A[[found, row]]
        targets = np.flatnonzero(R[:, col])
        targets = targets[targets != row]
        if targets.size:
            R[targets] ^= R[row]
            A[targets] ^= A[row]
            xors += int(targets.size)
        pivots.append(col)
        row += 1
    return R, pivots, deferred, A, xors


def rank_mod2(M: BitMatrix) -> int:
    """GF(2) rank."""
    _, pivots, _, _, _ = _row_reduce(M.to_dense(), M.rows)
    return len(pivots)


def systematic_form(G: BitMatrix, preference: Permutation) -> SystematicForm:
    """Gauss-Jordan elimination of ``G`` under a column preference order.

    Columns are visited in preference order; a column dependent on the pivots
    already chosen is deferred to the non-pivot segment. Both segments keep
    their relative preference order.
    """
    k, n = G.shape
    if len(preference) != n:
        raise DimensionError("Preference length does not match code length",
                             {"preference": len(preference), "cols": n})
    permuted = G.to_dense()[:, preference.map]
    R, pivots, _, A, xors = _row_reduce(permuted, k)
    if len(pivots) < k:
        raise RankDeficientError("rank-deficient generator", {"rank": len(pivots), "k": k})
    pivot_set = set(pivots)
    rest = [c for c in range(n) if c not in pivot_set]
    local = np.array(pivots + rest, dtype=np.int64)
    kappa = Permutation(preference.map[local])
    return SystematicForm(
        generator=BitMatrix.from_dense(R[:, local]),
        permutation=kappa,
        row_transform=A,
        row_xors=xors,
    )


def gauss_jordan_systematic(G: BitMatrix, preference: Permutation) -> Tuple[BitMatrix, Permutation]:
    """Return ``(G_kappa, kappa)`` with ``G_kappa = [I_k | P]``."""
    form = systematic_form(G, preference)
    return form.generator, form.permutation


def apply_permutation(v, kappa: Permutation, direction: Direction = "forward") -> np.ndarray:
    """Apply ``kappa`` to ``v``; forward gathers, inverse scatters back."""
    vec = np.asarray(v)
    if vec.shape[-1] != len(kappa):
        raise DimensionError("Vector length does not match permutation",
                             {"vector": int(vec.shape[-1]), "permutation": len(kappa)})
    if direction == "forward":
        return vec[..., kappa.map]
    if direction == "inverse":
        out = np.empty_like(vec)
        out[..., kappa.map] = vec
        return out
    raise DomainError(f"Unknown permutation direction: {direction}")
