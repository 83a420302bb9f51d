"""Extended BCH construction and linear code files.

Polynomials over GF(2) are Python ints: bit i holds the coefficient of x^i.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import galois
import jsonschema
import numpy as np
import structlog

from core.gf2 import BitMatrix, rank_mod2
from utils.error_handlers import CodeConstructionError, CodeFileError, DomainError, RankDeficientError

logger = structlog.get_logger(__name__)

CODE_FILE_SCHEMA = {
    "type": "object",
    "required": ["label", "n", "k", "d_min", "G"],
    "properties": {
        "label": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "d_min": {"type": "integer", "minimum": 1},
        "G": {
            "type": "object",
            "required": ["rows", "cols", "row_hex"],
            "properties": {
                "rows": {"type": "integer", "minimum": 1},
                "cols": {"type": "integer", "minimum": 1},
                "row_hex": {"type": "array", "items": {"type": "string", "pattern": "^[0-9a-fA-F]*$"}},
            },
        },
    },
}

# Exhaustive distance checks are limited to small codebooks
EXHAUSTIVE_K_LIMIT = 12


def is_primitive(poly: int) -> bool:
    """True when the GF(2) polynomial ``poly`` (degree m >= 1) is primitive."""
    if poly.bit_length() < 2:
        return False
    return bool(galois.Poly.Int(poly).is_primitive())


@lru_cache(maxsize=None)
def default_primitive_poly(m: int) -> int:
    """Smallest primitive polynomial of degree ``m`` (integer order)."""
    try:
        return int(galois.primitive_poly(2, m, method="min"))
    except (ValueError, RuntimeError) as e:
        raise CodeConstructionError(f"No primitive polynomial of degree {m}") from e


@dataclass(frozen=True, eq=False)
class GF2mField:
    """GF(2^m) generated by a primitive polynomial, with alpha = x."""

    m: int
    primitive_poly: int
    GF: type = field(repr=False)

    @property
    def order(self) -> int:
        return (1 << self.m) - 1

    @property
    def size(self) -> int:
        return 1 << self.m

    @property
    def alpha(self):
        return self.GF(2)

    def alpha_pow(self, e: int) -> int:
        return int(self.alpha ** (e % self.order))

    def mul(self, a: int, b: int) -> int:
        return int(self.GF(a) * self.GF(b))


@lru_cache(maxsize=None)
def build_field(m: int, primitive_poly: Optional[int] = None) -> GF2mField:
    """Build GF(2^m); the default polynomial is the smallest primitive one."""
    if not 2 <= m <= 16:
        raise DomainError("Extension degree must be in [2, 16]", {"m": m})
    poly = default_primitive_poly(m) if primitive_poly is None else int(primitive_poly)
    if poly.bit_length() - 1 != m:
        raise CodeConstructionError("Polynomial degree does not match m", {"m": m, "poly": bin(poly)})
    if not is_primitive(poly):
        raise CodeConstructionError(f"Polynomial {bin(poly)} is not primitive", {"m": m})
    GF = galois.GF(2 ** m, irreducible_poly=galois.Poly.Int(poly))
    return GF2mField(m=m, primitive_poly=poly, GF=GF)


def cyclotomic_coset(i: int, length: int) -> Tuple[int, ...]:
    coset, e = [], i % length
    while e not in coset:
        coset.append(e)
        e = (2 * e) % length
    return tuple(sorted(coset))


def minimal_polynomial(gf: GF2mField, i: int) -> int:
    """Minimal polynomial of alpha^i as a GF(2) polynomial."""
    return int((gf.alpha ** (i % gf.order)).minimal_poly())


def bch_generator_polynomials(m: int, gf: Optional[GF2mField] = None) -> Dict[int, Tuple[int, int]]:
    """Map designed t -> (generator polynomial, dimension) for narrow-sense BCH of length 2^m - 1."""
    gf = gf or build_field(m)
    length = gf.order
    result: Dict[int, Tuple[int, int]] = {}
    g, seen = galois.Poly.One(), set()
    for t in range(1, length // 2 + 1):
        for i in (2 * t - 1, 2 * t):
            coset = cyclotomic_coset(i, length)
            if coset not in seen:
                seen.add(coset)
                g *= galois.Poly.Int(minimal_polynomial(gf, i))
        dim = length - g.degree
        if dim < 1:
            break
        result[t] = (int(g), dim)
    return result


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear block code given by its generator matrix."""

    n: int
    k: int
    G: BitMatrix
    d_min: int
    label: str = ""

    def __post_init__(self):
        if self.G.shape != (self.k, self.n):
            raise CodeFileError("Generator shape does not match (k, n)",
                                {"shape": self.G.shape, "k": self.k, "n": self.n})
        if self.k > self.n:
            raise CodeFileError("k must not exceed n", {"k": self.k, "n": self.n})
        rank = rank_mod2(self.G)
        if rank != self.k:
            raise RankDeficientError("rank-deficient generator", {"rank": rank, "k": self.k})

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        return (u @ self.G.to_dense().astype(np.int64) % 2).astype(np.uint8)

    def codebook(self) -> Tuple[np.ndarray, np.ndarray]:
        """All 2^k codewords, row i encoding the message whose bit j is bit (k-1-j) of i."""
        if self.k > 16:
            raise DomainError("Codebook enumeration limited to k <= 16", {"k": self.k})
        messages = ((np.arange(1 << self.k)[:, None] >> np.arange(self.k - 1, -1, -1)) & 1)
        return self.encode(messages), messages.astype(np.uint8)

    def min_distance(self) -> int:
        """Exhaustive minimum weight of nonzero codewords."""
        words, _ = self.codebook()
        return int(words[1:].sum(axis=1).min())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearCode):
            return NotImplemented
        return (self.n, self.k, self.d_min, self.label) == (other.n, other.k, other.d_min, other.label) \
            and self.G == other.G


def build_ebch(n: int, k: int) -> LinearCode:
    """Extended narrow-sense BCH code of length n = 2^m and dimension k."""
    m = int(round(math.log2(n))) if n > 1 else 0
    if n < 4 or (1 << m) != n:
        raise CodeConstructionError("eBCH length must be a power of two >= 4", {"n": n})
    designs = bch_generator_polynomials(m)
    matches = [t for t, (_, dim) in designs.items() if dim == k]
    if not matches:
        achievable = sorted({dim for _, dim in designs.values()}, reverse=True)
        raise CodeConstructionError(
            f"No BCH code ({n - 1}, {k}); achievable k for m={m}: {achievable}",
            {"n": n, "k": k, "achievable": achievable},
        )
    t = max(matches)
    g, _ = designs[t]
    length = n - 1
    dense = np.zeros((k, n), dtype=np.uint8)
    g_bits = np.array([(g >> d) & 1 for d in range(g.bit_length())], dtype=np.uint8)
    for i in range(k):
        dense[i, i:i + g_bits.size] = g_bits
    dense[:, length] = dense[:, :length].sum(axis=1) % 2
    d_min = 2 * t + 2
    logger.debug("eBCH constructed", n=n, k=k, t=t, d_min=d_min)
    return LinearCode(n=n, k=k, G=BitMatrix.from_dense(dense), d_min=d_min, label=f"eBCH({n},{k})")


def code_to_json(code: LinearCode) -> dict:
    return {"label": code.label, "n": code.n, "k": code.k, "d_min": code.d_min, "G": code.G.to_json()}


def code_from_json(obj: dict) -> LinearCode:
    try:
        jsonschema.validate(obj, CODE_FILE_SCHEMA)
    except jsonschema.ValidationError as e:
        raise CodeFileError(f"Code file schema violation: {e.message}")
    if obj["k"] > obj["n"]:
        raise CodeFileError("k must not exceed n", {"k": obj["k"], "n": obj["n"]})
    G = BitMatrix.from_json(obj["G"])
    code = LinearCode(n=obj["n"], k=obj["k"], G=G, d_min=obj["d_min"], label=obj["label"])
    if code.k <= EXHAUSTIVE_K_LIMIT and code.min_distance() < code.d_min:
        raise CodeFileError("Declared d_min exceeds the exhaustive minimum distance",
                            {"declared": code.d_min, "actual": code.min_distance()})
    return code


def save_code(code: LinearCode, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(code_to_json(code), indent=2, sort_keys=True) + "\n")
    logger.info("Code saved", label=code.label, path=str(path))


def load_code(path: Union[str, Path]) -> LinearCode:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise CodeFileError(f"Code file is not valid JSON: {e}")
    return code_from_json(obj)
