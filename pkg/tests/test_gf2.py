"""Tests for GF(2) bit matrices and systematic elimination."""

import numpy as np
import pytest

from core.gf2 import (
    BitMatrix,
    Permutation,
    apply_permutation,
    gauss_jordan_systematic,
    mat_vec_mod2,
    rank_mod2,
    systematic_form,
)
from utils.error_handlers import DimensionError, DomainError, RankDeficientError


def test_packing_and_hex():
    """Rows pack MSB-first and round-trip through hex."""
    M = BitMatrix.from_rows(["1100", "0110"])
    assert M.shape == (2, 4)
    assert M.row_hex() == ["c0", "60"]
    assert BitMatrix.from_json(M.to_json()) == M
    np.testing.assert_array_equal(M.to_dense(), [[1, 1, 0, 0], [0, 1, 1, 0]])


def test_nonzero_tail_bits_rejected():
    with pytest.raises(DomainError):
        BitMatrix(1, 4, np.array([[0x0F]], dtype=np.uint8))


def test_bad_hex_width_rejected():
    with pytest.raises(DimensionError):
        BitMatrix.from_row_hex(1, 12, ["ff"])


def test_equality_and_hash():
    a = BitMatrix.from_rows(["101"])
    b = BitMatrix.from_dense([[1, 0, 1]])
    assert a == b
    assert hash(a) == hash(b)
    assert a != BitMatrix.from_rows(["100"])


def test_rank():
    assert rank_mod2(BitMatrix.from_rows(["1100", "0110"])) == 2
    assert rank_mod2(BitMatrix.from_rows(["1100", "1100"])) == 1
    assert rank_mod2(BitMatrix.identity(5)) == 5


def test_mat_vec():
    G = BitMatrix.from_rows(["1100", "0110"])
    np.testing.assert_array_equal(mat_vec_mod2(G, [1, 1]), [1, 0, 1, 0])
    with pytest.raises(DimensionError):
        mat_vec_mod2(G, [1, 0, 1])


def test_systematic_identity_preference():
    """Independent leading columns keep the identity permutation."""
    G = BitMatrix.from_rows(["1100", "0110"])
    G_kappa, kappa = gauss_jordan_systematic(G, Permutation.identity(4))
    assert kappa == Permutation.identity(4)
    assert G_kappa == BitMatrix.from_rows(["1010", "0110"])


def test_dependent_column_deferred():
    """A dependent column moves behind the pivots in preference order."""
    G = BitMatrix.from_rows(["1100", "1111"])
    G_kappa, kappa = gauss_jordan_systematic(G, Permutation.identity(4))
    np.testing.assert_array_equal(kappa.map, [0, 2, 1, 3])
    assert G_kappa == BitMatrix.from_rows(["1010", "0101"])


def test_rank_deficient_generator():
    with pytest.raises(RankDeficientError):
        systematic_form(BitMatrix.from_rows(["1100", "1100"]), Permutation.identity(4))


def test_preference_length_mismatch():
    with pytest.raises(DimensionError):
        systematic_form(BitMatrix.from_rows(["1100", "0110"]), Permutation.identity(3))


def test_row_transform_reproduces_generator():
    """G_kappa = A G[:, kappa] and starts with the identity, on random full-rank matrices."""
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 25:
        dense = rng.integers(0, 2, size=(6, 14), dtype=np.uint8)
        G = BitMatrix.from_dense(dense)
        if rank_mod2(G) < 6:
            continue
        pref = Permutation(rng.permutation(14))
        form = systematic_form(G, pref)
        Gk = form.generator.to_dense()
        np.testing.assert_array_equal(Gk[:, :6], np.eye(6, dtype=np.uint8))
        rebuilt = form.row_transform.astype(np.int64) @ dense[:, form.permutation.map].astype(np.int64) % 2
        np.testing.assert_array_equal(rebuilt, Gk)
        checked += 1


def test_pivots_follow_preference_order():
    """Pivot columns appear in the same relative order as in the preference."""
    rng = np.random.default_rng(5)
    dense = rng.integers(0, 2, size=(4, 10), dtype=np.uint8)
    dense[:, :4] = np.eye(4, dtype=np.uint8)
    pref = Permutation(rng.permutation(10))
    form = systematic_form(BitMatrix.from_dense(dense), pref)
    rank_in_pref = {int(c): i for i, c in enumerate(pref.map)}
    head = [rank_in_pref[int(c)] for c in form.permutation.map[:4]]
    tail = [rank_in_pref[int(c)] for c in form.permutation.map[4:]]
    assert head == sorted(head)
    assert tail == sorted(tail)


def test_permutation_apply_and_inverse():
    kappa = Permutation([2, 0, 3, 1])
    v = np.array([10, 11, 12, 13])
    forward = apply_permutation(v, kappa)
    np.testing.assert_array_equal(forward, [12, 10, 13, 11])
    np.testing.assert_array_equal(apply_permutation(forward, kappa, "inverse"), v)
    np.testing.assert_array_equal(apply_permutation(forward, kappa.inverse()), v)


def test_permutation_validation():
    with pytest.raises(DomainError):
        Permutation([0, 0, 1])
    with pytest.raises(DimensionError):
        apply_permutation(np.zeros(3), Permutation.identity(4))


def _naive_rank(dense) -> int:
    """Rank by repeated pivot XOR on integer-encoded rows."""
    rows = [int("".join(str(int(b)) for b in row) or "0", 2) for row in dense]
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot:
            rank += 1
            low = pivot & -pivot
            rows = [r ^ pivot if r & low else r for r in rows]
    return rank


def test_rank_of_zero_matrix():
    assert rank_mod2(BitMatrix.from_dense(np.zeros((3, 5), dtype=np.uint8))) == 0


def test_rank_with_dependent_rows():
    """Third row is the XOR of the first two."""
    assert rank_mod2(BitMatrix.from_rows(["110", "011", "101"])) == 2


def test_rank_matches_naive_elimination():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        rows, cols = rng.integers(1, 33, size=2)
        density = rng.uniform(0.05, 0.6)
        dense = (rng.random((rows, cols)) < density).astype(np.uint8)
        if rng.random() < 0.3 and rows > 1:
            dense[-1] = dense[0] ^ dense[rows // 2]
        assert rank_mod2(BitMatrix.from_dense(dense)) == _naive_rank(dense)


def _codebook(dense: np.ndarray) -> set:
    k = dense.shape[0]
    messages = (np.arange(1 << k)[:, None] >> np.arange(k)) & 1
    words = messages.astype(np.int64) @ dense.astype(np.int64) % 2
    return {tuple(w) for w in words}


def test_systematic_form_preserves_row_space():
    """The permuted code equals the code spanned by the systematic generator."""
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 40:
        k = int(rng.integers(1, 13))
        n = int(rng.integers(k, 17))
        dense = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if n > 1 and rng.random() < 0.5:
            dense[:, 1] = dense[:, 0]
        G = BitMatrix.from_dense(dense)
        if rank_mod2(G) < k:
            continue
        form = systematic_form(G, Permutation(rng.permutation(n)))
        assert _codebook(form.generator.to_dense()) == _codebook(dense[:, form.permutation.map])
        checked += 1


def test_forward_permutation_gathers():
    """kappa = (2, 0, 1) maps (a, b, c) to (c, a, b)."""
    v = np.array([10, 11, 12])
    np.testing.assert_array_equal(apply_permutation(v, Permutation([2, 0, 1])), [12, 10, 11])
    np.testing.assert_array_equal(apply_permutation(v, Permutation.identity(3)), v)


def test_permutation_round_trip_random():
    rng = np.random.default_rng(3)
    for n in (1, 5, 64, 257):
        kappa = Permutation(rng.permutation(n))
        v = rng.standard_normal(n)
        np.testing.assert_array_equal(apply_permutation(apply_permutation(v, kappa), kappa, "inverse"), v)
