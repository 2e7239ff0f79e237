import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progeng.codes import (CodeSpec, CodeSpecError, build_permutation_code, build_rotation_code,
                           decode, encode, encode_nodes, parity_equation, rotation_perm,
                           shift_table, rotation63_code)

# (a index, b index) for every parity row of the (5,2) and (4,2) permutation codes
PERM52 = [
    [(t, t) for t in range(9)],
    [(3, 1), (4, 2), (5, 0), (6, 4), (7, 5), (8, 3), (0, 7), (1, 8), (2, 6)],
    [(6, 2), (7, 0), (8, 1), (0, 5), (1, 3), (2, 4), (3, 8), (4, 6), (5, 7)],
]
PERM42 = [
    [(t, t) for t in range(4)],
    [(2, 1), (3, 0), (0, 3), (1, 2)],
]


def test_rotation_perm():
    assert rotation_perm(1, 4) == (1, 2, 3, 0)
    assert rotation_perm(3, 4) == (3, 0, 1, 2)
    assert rotation_perm(0, 3) == (0, 1, 2)


@pytest.mark.parametrize("nk,cells", [((5, 2), PERM52), ((4, 2), PERM42)])
def test_permutation_cells(nk, cells):
    spec = build_permutation_code(*nk)
    assert spec.L == (nk[0] - nk[1]) ** nk[1]
    for j, rows in enumerate(cells):
        for t, (ia, ib) in enumerate(rows):
            eq = parity_equation(spec, j, t)
            assert [(i, r) for i, r, _ in eq] == [(0, ia), (1, ib)]
            # coefficients are powers of the per-node scalars
            base = spec.lambdas[0]
            f = spec.field
            assert [c for _, _, c in eq] == [f.pow(base[0], j + 1), f.pow(base[1], j + 1)]


def test_rotation63_equations(rot63):
    assert parity_equation(rot63, 1, 0) == [(0, 0, 1), (1, 1, 2), (2, 3, 3)]
    assert shift_table(rot63) == ((0, 0, 0), (0, 1, 3), (0, 2, 1))
    assert rot63.lambdas == ((1, 1, 1), (1, 2, 3), (1, 4, 5))


def test_rotation63_encode_unit_vectors(rot63):
    f = rot63.field
    # one symbol per block, data[i][t] = distinct nonzero values
    data = np.arange(1, 13, dtype=np.uint8).reshape(3, 4)
    par = encode(rot63, data)[..., 0]
    for j in range(3):
        for t in range(4):
            want = 0
            for i, r, c in parity_equation(rot63, j, t):
                want ^= f.mul(c, int(data[i, r]))
            assert par[j, t] == want
    # P2 row 0 = a(0) + 2 b(1) + 3 c(3)
    assert par[1, 0] == data[0, 0] ^ f.mul(2, int(data[1, 1])) ^ f.mul(3, int(data[2, 3]))


def test_permutation_p1_is_plain_sum(perm52):
    rng = np.random.default_rng(0)
    data = rng.integers(0, 256, size=(2, 9, 16), dtype=np.uint8)
    f = perm52.field
    l1, l2 = perm52.lambdas[0]
    par = encode(perm52, data)
    assert np.array_equal(par[0], f.scale(l1, data[0]) ^ f.scale(l2, data[1]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.integers(0, 255))
def test_encode_linearity(seed, c):
    spec = rotation63_code()
    f = spec.field
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 256, size=(3, 4, 8), dtype=np.uint8)
    y = rng.integers(0, 256, size=(3, 4, 8), dtype=np.uint8)
    assert np.array_equal(encode(spec, x ^ y), encode(spec, x) ^ encode(spec, y))
    assert np.array_equal(encode(spec, f.scale(c, x)), f.scale(c, encode(spec, x)))


@pytest.mark.parametrize("w", [8, 16, 32])
def test_encode_decode_any_k_nodes(w):
    from itertools import combinations
    spec = build_rotation_code(4, 2, 2, [[0, 0], [0, 1]], [[1, 1], [1, 2]], w)
    f = spec.field
    rng = np.random.default_rng(w)
    data = rng.integers(0, 1 << w, size=(2, 2, 5), dtype=np.uint64).astype(f.dtype)
    nodes = encode_nodes(spec, data)
    for sub in combinations(range(4), 2):
        assert np.array_equal(decode(spec, {v: nodes[v] for v in sub}), data)


def test_spec_json_round_trip(tmp_path, rot63, perm52):
    for spec in (rot63, perm52):
        again = CodeSpec.from_json(spec.to_json())
        assert again == spec and again.digest() == spec.digest()
        spec.save(tmp_path / "s.json")
        assert CodeSpec.load(tmp_path / "s.json") == spec


def test_spec_validation():
    with pytest.raises(CodeSpecError):
        build_rotation_code(6, 3, 4, [[0, 0, 0]] * 3, [[1, 1, 0]] * 3)
    with pytest.raises(CodeSpecError):
        build_rotation_code(3, 3, 4, [], [])
    with pytest.raises(CodeSpecError):
        build_rotation_code(6, 3, 4, [[0, 0, 0]] * 2, [[1, 1, 1]] * 2)
    bad = rotation63_code().to_dict()
    bad["rotations"][0][0] = [0, 0, 1, 2]
    with pytest.raises(CodeSpecError):
        CodeSpec.from_dict(bad)
    bad = rotation63_code().to_dict()
    bad["poly"] = 0x11B
    with pytest.raises(CodeSpecError):
        CodeSpec.from_dict(bad)


def test_encode_shape_error(rot63):
    with pytest.raises(CodeSpecError):
        encode(rot63, np.zeros((2, 4), dtype=np.uint8))


def test_node_labels(rot63):
    assert [rot63.node_label(v) for v in range(6)] == ["S1", "S2", "S3", "P1", "P2", "P3"]
