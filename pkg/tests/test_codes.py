from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlqec import gf2
from mlqec.codes import (
    CodeError,
    code_from_dict,
    code_params,
    code_to_dict,
    css_check_matrix,
    hypergraph_product,
    hypergraph_product_code,
    load_code,
    save_code,
    syndrome,
    syndromes,
)
from mlqec.gf2 import BinaryMatrix
from mlqec.pauli import PauliString, symplectic_product


def full_rank_matrices(max_m=4, max_n=8):
    def build(args):
        m, n, seed = args
        rng = np.random.default_rng(seed)
        while True:
            h = BinaryMatrix(rng.integers(0, 2, (m, n), dtype=np.uint8))
            if gf2.rank(h) == m:
                return h

    return st.integers(1, max_m).flatmap(
        lambda m: st.tuples(st.just(m), st.integers(m + 1, max_n), st.integers(0, 2**32 - 1))
    ).map(build)


def test_hamming_product_parameters(hamming, hgp58):
    hx, hz = hypergraph_product(hamming)
    assert hx.shape == hz.shape == (21, 58)
    assert code_params(hgp58) == (58, 16)
    assert hgp58.n_generators == 42


def test_repetition_product():
    hx, hz = hypergraph_product(BinaryMatrix([[1, 1]]))
    assert hx.shape == hz.shape == (2, 5)
    assert code_params(hypergraph_product_code(BinaryMatrix([[1, 1]]))) == (5, 1)


@settings(max_examples=40, deadline=None)
@given(full_rank_matrices())
def test_product_is_valid_css(h):
    hx, hz = hypergraph_product(h)
    assert gf2.mat_mul(hx, gf2.transpose(hz)).is_zero()
    m, n = h.shape
    code = css_check_matrix(hx, hz)
    assert code.n == n * n + m * m
    assert code.k == (n - m) ** 2


def test_product_rejects_rank_deficient():
    with pytest.raises(CodeError, match="rank deficient"):
        hypergraph_product(BinaryMatrix([[1, 1, 0], [1, 1, 0]]))


def test_steane_from_hamming(hamming):
    code = css_check_matrix(hamming, hamming)
    assert code_params(code) == (7, 1)
    assert code.n_generators == 6


def test_anticommuting_pair_rejected():
    with pytest.raises(CodeError, match="H_X H_Z"):
        css_check_matrix(BinaryMatrix([[1, 0]]), BinaryMatrix([[1, 0]]))


def test_five_qubit_code(five):
    assert code_params(five) == (5, 1)
    assert [str(g) for g in five.generators()] == ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
    for a in five.generators():
        for b in five.generators():
            assert symplectic_product(a, b) == 0


def test_syndrome_examples(five, hgp58):
    assert not syndrome(five, PauliString.identity(5)).any()
    for g in five.generators():
        assert not syndrome(five, g).any()
    assert syndrome(five, PauliString.from_string("XIIII")).tolist() == [0, 0, 0, 1]
    for g in hgp58.generators():
        assert not syndrome(hgp58, g).any()


def test_syndrome_matches_symplectic_oracle(five, rng):
    for _ in range(50):
        e = PauliString(rng.integers(0, 2, 5), rng.integers(0, 2, 5))
        expect = [symplectic_product(g, e) for g in five.generators()]
        assert syndrome(five, e).tolist() == expect


def test_syndrome_batch_is_linear(hgp58, rng):
    x1, z1 = rng.integers(0, 2, (20, 58)), rng.integers(0, 2, (20, 58))
    x2, z2 = rng.integers(0, 2, (20, 58)), rng.integers(0, 2, (20, 58))
    lhs = syndromes(hgp58, x1 ^ x2, z1 ^ z2)
    assert np.array_equal(lhs, syndromes(hgp58, x1, z1) ^ syndromes(hgp58, x2, z2))


def test_code_file_round_trip(tmp_path, hgp58, five):
    for code in (hgp58, five):
        path = tmp_path / "c.json"
        save_code(code, path)
        back = load_code(path)
        assert back == code and back.name == code.name
        assert code_from_dict(code_to_dict(code)) == code


def test_corrupted_code_file(tmp_path, hgp58):
    doc = code_to_dict(hgp58)
    row = doc["check"][0]
    doc["check"][0] = ("1" if row[0] == "0" else "0") + row[1:]
    doc.pop("hx")
    doc.pop("hz")
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(CodeError, match="generators do not commute"):
        load_code(path)
    path.write_text("{not json")
    with pytest.raises(CodeError, match="malformed"):
        load_code(path)


def test_dependent_generators_rejected(five):
    rows = five.check.to_rows()
    extra = "".join(str(int(a) ^ int(b)) for a, b in zip(rows[0], rows[1]))
    with pytest.raises(CodeError, match="not independent"):
        code_from_dict({"n": 5, "k": 0, "check": rows + [extra]})
