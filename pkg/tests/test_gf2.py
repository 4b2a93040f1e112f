from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlqec import gf2
from mlqec.gf2 import BinaryMatrix, ShapeError


def bit_matrices(max_rows=9, max_cols=70):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r)
        )
    )


def naive_mul(a, b):
    a, b = np.asarray(a), np.asarray(b)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=int)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            out[i, j] = sum(int(a[i, k]) * int(b[k, j]) for k in range(a.shape[1])) % 2
    return out


def naive_rank(a):
    m = [list(r) for r in np.asarray(a, dtype=int)]
    rank, col = 0, 0
    rows, cols = len(m), len(m[0])
    while rank < rows and col < cols:
        piv = next((i for i in range(rank, rows) if m[i][col]), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rows):
            if i != rank and m[i][col]:
                m[i] = [(x + y) % 2 for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def test_identity_product():
    i3 = gf2.identity(3)
    assert gf2.mat_mul(i3, i3) == i3


def test_one_plus_one_is_zero():
    assert gf2.mat_mul(BinaryMatrix([[1, 1]]), BinaryMatrix([[1], [1]])) == BinaryMatrix([[0]])


def test_hamming_times_transpose_matches_entrywise(hamming):
    got = gf2.mat_mul(hamming, gf2.transpose(hamming))
    assert np.array_equal(got.bits, naive_mul(hamming.bits, hamming.bits.T))
    # the [7,4] Hamming parity checks are mutually orthogonal
    assert got.is_zero()


def test_hamming_rows():
    assert gf2.hamming_parity_check(3).to_rows() == ["0001111", "0110011", "1010101"]


def test_mat_mul_shape_mismatch():
    with pytest.raises(ShapeError):
        gf2.mat_mul(gf2.identity(2), gf2.identity(3))


def test_kron_examples():
    assert gf2.kron(gf2.identity(2), gf2.identity(2)) == gf2.identity(4)
    got = gf2.kron(BinaryMatrix([[1, 0], [0, 1]]), BinaryMatrix([[1, 1]]))
    assert got == BinaryMatrix([[1, 1, 0, 0], [0, 0, 1, 1]])


def test_rank_examples(hamming):
    assert gf2.rank(gf2.zeros(3, 7)) == 0
    assert gf2.rank(gf2.identity(4)) == 4
    assert gf2.rank(hamming) == 3


def test_stack_examples(hamming):
    assert gf2.hstack(gf2.identity(2), gf2.zeros(2, 1)) == BinaryMatrix([[1, 0, 0], [0, 1, 0]])
    big = gf2.hstack(gf2.kron(hamming, gf2.identity(7)), gf2.kron(gf2.identity(3), gf2.transpose(hamming)))
    assert big.shape == (21, 58)
    with pytest.raises(ShapeError):
        gf2.hstack(gf2.identity(2), gf2.identity(3))
    assert gf2.vstack(gf2.identity(2), gf2.zeros(1, 2)).shape == (3, 2)


def test_rejects_non_binary():
    with pytest.raises(ValueError):
        BinaryMatrix([[0, 2]])


def test_immutable():
    m = gf2.identity(3)
    with pytest.raises(ValueError):
        m.bits[0, 0] = 0


@settings(max_examples=60, deadline=None)
@given(bit_matrices(), st.integers(1, 70), st.randoms(use_true_random=False))
def test_mat_mul_matches_naive(a_rows, cols_b, rnd):
    a = BinaryMatrix(a_rows)
    b = BinaryMatrix([[rnd.randint(0, 1) for _ in range(cols_b)] for _ in range(a.cols)])
    assert np.array_equal(gf2.mat_mul(a, b).bits, naive_mul(a.bits, b.bits))


@settings(max_examples=80, deadline=None)
@given(bit_matrices())
def test_rank_matches_naive_and_bounds(rows):
    a = BinaryMatrix(rows)
    r = gf2.rank(a)
    assert r == naive_rank(a.bits)
    assert r <= min(a.shape)
    assert r == gf2.rank(gf2.transpose(a))


@settings(max_examples=40, deadline=None)
@given(bit_matrices(5, 6), bit_matrices(4, 5))
def test_kron_rank_multiplicative(a_rows, b_rows):
    a, b = BinaryMatrix(a_rows), BinaryMatrix(b_rows)
    assert gf2.rank(gf2.kron(a, b)) == gf2.rank(a) * gf2.rank(b)


@settings(max_examples=40, deadline=None)
@given(bit_matrices(6, 12))
def test_transpose_involution_and_product_transpose(rows):
    a = BinaryMatrix(rows)
    assert gf2.transpose(gf2.transpose(a)) == a
    lhs = gf2.transpose(gf2.mat_mul(a, gf2.transpose(a)))
    assert lhs == gf2.mat_mul(a, gf2.transpose(a))


def test_row_basis(hamming):
    dup = gf2.vstack(hamming, BinaryMatrix([hamming.bits[0] ^ hamming.bits[1]]))
    basis = gf2.row_basis(dup)
    assert basis.rows == 3 and gf2.rank(basis) == 3
    assert gf2.row_basis(gf2.zeros(2, 3)) is None


def test_text_round_trip(tmp_path, hamming):
    path = tmp_path / "h.txt"
    gf2.write_matrix(hamming, path)
    assert gf2.read_matrix(path) == hamming
    assert gf2.parse_matrix_text("# comment\n\n101\n011\n") == BinaryMatrix([[1, 0, 1], [0, 1, 1]])
    with pytest.raises(ShapeError):
        gf2.parse_matrix_text("101\n01\n")
