"""Linear vector codes over blocks: rotation, permutation and Reed-Solomon.

Conventions used throughout the package:

* systematic nodes are ``0..k-1`` and parity nodes ``0..m-1`` (``m = n - k``);
  global node ids put parity ``j`` at ``k + j``;
* ``lambdas[j][i]`` is the coefficient of systematic node ``i`` in parity ``j``;
* ``rotations[j][i]`` is an index array ``perm`` such that row ``t`` of parity
  ``j`` reads block ``perm[t]`` of systematic node ``i``.

So ``parity_j[t] = sum_i lambdas[j][i] * a_i[rotations[j][i][t]]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .gf import POLYNOMIALS, FieldContext, make_field
from .linalg import inverse, matmul

KINDS = ("rotation", "permutation", "reed_solomon")


class CodeSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    kind: str
    n: int
    k: int
    L: int
    w: int
    lambdas: tuple[tuple[int, ...], ...]
    rotations: tuple[tuple[tuple[int, ...], ...], ...]
    # test hook for deliberately broken (zero-coefficient) mutants
    allow_zero: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CodeSpecError(f"unknown code kind {self.kind!r}")
        if self.w not in POLYNOMIALS:
            raise CodeSpecError(f"unsupported symbol width {self.w}")
        if self.k < 1 or self.n <= self.k:
            raise CodeSpecError(f"need k >= 1 and n > k, got n={self.n} k={self.k}")
        if self.n >= (1 << self.w) - 1:
            raise CodeSpecError(f"n={self.n} violates n < 2^{self.w} - 1")
        if self.L < 1:
            raise CodeSpecError("L must be positive")
        shape_ok = len(self.lambdas) == self.m and all(len(r) == self.k for r in self.lambdas)
        shape_ok &= len(self.rotations) == self.m and all(len(r) == self.k for r in self.rotations)
        if not shape_ok:
            raise CodeSpecError(f"lambdas/rotations must be {self.m}x{self.k} tables")
        q = 1 << self.w
        for j, row in enumerate(self.lambdas):
            for i, lam in enumerate(row):
                if not 0 <= lam < q:
                    raise CodeSpecError(f"lambda[{j}][{i}]={lam} outside GF(2^{self.w})")
                if lam == 0 and not self.allow_zero:
                    raise CodeSpecError(f"lambda[{j}][{i}] is zero")
        ident = list(range(self.L))
        for j, row in enumerate(self.rotations):
            for i, perm in enumerate(row):
                if sorted(perm) != ident:
                    raise CodeSpecError(f"rotation[{j}][{i}] is not a permutation of 0..{self.L - 1}")
        if self.kind == "permutation" and self.L != self.m ** self.k:
            raise CodeSpecError(f"permutation code needs L = (n-k)^k = {self.m ** self.k}")

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def poly(self) -> int:
        return POLYNOMIALS[self.w]

    @property
    def field(self) -> FieldContext:
        return make_field(self.w)

    @cached_property
    def perm_array(self) -> np.ndarray:
        """``(m, k, L)`` int array of the rotation tables."""
        return np.array(self.rotations, dtype=np.int64).reshape(self.m, self.k, self.L)

    @cached_property
    def inv_perm_array(self) -> np.ndarray:
        """``inv[j, i, b]`` = parity row of parity ``j`` that contains block ``b`` of node ``i``."""
        inv = np.empty_like(self.perm_array)
        rows = np.arange(self.L)
        for j in range(self.m):
            for i in range(self.k):
                inv[j, i, self.perm_array[j, i]] = rows
        return inv

    def node_label(self, node: int) -> str:
        return f"S{node + 1}" if node < self.k else f"P{node - self.k + 1}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "k": self.k,
            "L": self.L,
            "w": self.w,
            "poly": self.poly,
            "lambdas": [list(r) for r in self.lambdas],
            "rotations": [[list(p) for p in r] for r in self.rotations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict, allow_zero: bool = False) -> CodeSpec:
        w = int(d["w"])
        if "poly" in d and w in POLYNOMIALS and int(d["poly"]) != POLYNOMIALS[w]:
            raise CodeSpecError(f"poly 0x{int(d['poly']):x} does not match GF(2^{w}) default")
        return cls(
            kind=d["kind"], n=int(d["n"]), k=int(d["k"]), L=int(d["L"]), w=w,
            lambdas=tuple(tuple(int(x) for x in r) for r in d["lambdas"]),
            rotations=tuple(tuple(tuple(int(x) for x in p) for p in r) for r in d["rotations"]),
            allow_zero=allow_zero,
        )

    @classmethod
    def from_json(cls, text: str, allow_zero: bool = False) -> CodeSpec:
        return cls.from_dict(json.loads(text), allow_zero)

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_json().encode()).digest()

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path, allow_zero: bool = False) -> CodeSpec:
        return cls.from_json(Path(path).read_text(), allow_zero)


def rotation_perm(l: int, L: int) -> tuple[int, ...]:
    """Cyclic shift ``t -> (t + l) mod L`` (``l = 0`` is the identity)."""
    if not 0 <= l < L:
        raise CodeSpecError(f"shift {l} out of range for L={L}")
    return tuple((t + l) % L for t in range(L))


def invert_perm(perm) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for t, b in enumerate(perm):
        inv[b] = t
    return tuple(inv)


def build_rotation_code(n, k, L, rotations, lambdas, w=8) -> CodeSpec:
    """Rotation code from an ``m x k`` table of shifts (ints) or explicit index arrays."""
    m = n - k
    if len(rotations) != m or any(len(r) != k for r in rotations):
        raise CodeSpecError(f"rotations must be a {m}x{k} table")
    table = tuple(
        tuple(rotation_perm(r, L) if isinstance(r, (int, np.integer)) else tuple(int(x) for x in r)
              for r in row)
        for row in rotations
    )
    lam = tuple(tuple(int(x) for x in row) for row in lambdas)
    return CodeSpec("rotation", n, k, L, w, lam, table)


def rotation63_code() -> CodeSpec:
    """The (6,3), L=4 rotation code with lambda_1=2, lambda_2=3 over GF(2^8)."""
    fc = make_field(8)
    l1, l2 = 2, 3
    lambdas = [[1, 1, 1], [1, l1, l2], [1, fc.mul(l1, l1), fc.mul(l2, l2)]]
    return build_rotation_code(6, 3, 4, [[0, 0, 0], [0, 1, 3], [0, 2, 1]], lambdas, 8)


def digits(t: int, radix: int, k: int) -> tuple[int, ...]:
    """Digit vector of block index ``t``, most significant digit first."""
    out = []
    for _ in range(k):
        t, d = divmod(t, radix)
        out.append(d)
    return tuple(reversed(out))


def undigits(x, radix: int) -> int:
    t = 0
    for d in x:
        t = t * radix + d
    return t


def permutation_rotations(n: int, k: int) -> tuple:
    """Index tables of the permutation code: parity ``j`` shifts coordinate ``i`` by ``j``."""
    r = n - k
    L = r ** k
    table = []
    for j in range(r):
        row = []
        for i in range(k):
            perm = []
            for t in range(L):
                x = list(digits(t, r, k))
                x[i] = (x[i] + j) % r
                perm.append(undigits(x, r))
            row.append(tuple(perm))
        table.append(tuple(row))
    return tuple(table)


def permutation_lambdas(base, m: int, w: int) -> tuple:
    """Coefficient of node ``i`` in parity ``j`` is ``base[i] ** (j + 1)``."""
    fc = make_field(w)
    return tuple(tuple(fc.pow(b, j + 1) for b in base) for j in range(m))


def build_permutation_code(n, k, w=8, base_lambdas=None, seed=0, budget=1000) -> CodeSpec:
    """Permutation code with ``L = (n-k)^k``.

    Without ``base_lambdas`` the per-node scalars are drawn by
    :func:`progeng.mds.assign_lambdas` and verified MDS.
    """
    if k < 1 or n - k < 1:
        raise CodeSpecError("need k >= 1 and n > k")
    m = n - k
    L = m ** k
    if L > 1 << 16:
        raise CodeSpecError(f"L = {L} blocks per node is beyond supported sizes")
    if base_lambdas is None:
        from .mds import assign_lambdas
        lam = assign_lambdas(n, k, L, permutation_rotations(n, k), w, seed=seed,
                             budget=budget, kind="permutation")
    else:
        lam = permutation_lambdas(base_lambdas, m, w)
    return CodeSpec("permutation", n, k, L, w, lam, permutation_rotations(n, k))


def build_rs_code(n, k, L=1, w=8) -> CodeSpec:
    """Systematic Reed-Solomon baseline: Vandermonde rows normalised by the top k x k block."""
    if n >= (1 << w) - 1:
        raise CodeSpecError(f"n={n} violates n < 2^{w} - 1")
    if k < 1 or n <= k:
        raise CodeSpecError("need k >= 1 and n > k")
    fc = make_field(w)
    V = np.array([[fc.pow(x, e) for e in range(k)] for x in range(n)], dtype=fc.dtype)
    G = matmul(fc, V, inverse(fc, V[:k]))
    parity = G[k:]
    ident = tuple(range(L))
    lambdas = tuple(tuple(int(parity[j, i]) for i in range(k)) for j in range(n - k))
    rotations = tuple(tuple(ident for _ in range(k)) for _ in range(n - k))
    return CodeSpec("reed_solomon", n, k, L, w, lambdas, rotations)


def parity_equation(spec: CodeSpec, j: int, row: int) -> list[tuple[int, int, int]]:
    """Terms ``(systematic node, block index, coefficient)`` of parity ``j`` row ``row``."""
    if not 0 <= j < spec.m or not 0 <= row < spec.L:
        raise IndexError(f"parity {j} row {row} out of range")
    return [(i, int(spec.perm_array[j, i, row]), spec.lambdas[j][i]) for i in range(spec.k)]


def _as_data(spec: CodeSpec, data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[:2] != (spec.k, spec.L):
        raise CodeSpecError(f"expected data of shape (k={spec.k}, L={spec.L}, s), got {arr.shape}")
    return arr.astype(spec.field.dtype, copy=False)


def encode(spec: CodeSpec, data) -> np.ndarray:
    """Parity content, shape ``(m, L, s)``, for systematic data of shape ``(k, L, s)``."""
    data = _as_data(spec, data)
    fc = spec.field
    out = np.zeros((spec.m,) + data.shape[1:], dtype=fc.dtype)
    for j in range(spec.m):
        acc = out[j]
        for i in range(spec.k):
            acc ^= fc.scale(spec.lambdas[j][i], data[i][spec.perm_array[j, i]])
    return out


def encode_nodes(spec: CodeSpec, data) -> np.ndarray:
    """All ``n`` node contents (systematic then parity), shape ``(n, L, s)``."""
    data = _as_data(spec, data)
    return np.concatenate([data, encode(spec, data)], axis=0)


def node_matrix(spec: CodeSpec, node: int) -> np.ndarray:
    """``L x kL`` coefficient band expressing ``node`` in terms of the systematic blocks."""
    L, k = spec.L, spec.k
    M = np.zeros((L, k * L), dtype=spec.field.dtype)
    rows = np.arange(L)
    if node < k:
        M[rows, node * L + rows] = 1
        return M
    j = node - k
    for i in range(k):
        M[rows, i * L + spec.perm_array[j, i]] = spec.lambdas[j][i]
    return M


def decode(spec: CodeSpec, nodes: dict[int, np.ndarray]) -> np.ndarray:
    """Recover systematic data ``(k, L, s)`` from exactly ``k`` node contents."""
    ids = sorted(nodes)
    if len(ids) != spec.k:
        raise CodeSpecError(f"decode needs exactly k={spec.k} nodes, got {len(ids)}")
    fc = spec.field
    if ids == list(range(spec.k)):
        return np.stack([np.asarray(nodes[i], dtype=fc.dtype) for i in ids])
    A = np.concatenate([node_matrix(spec, v) for v in ids], axis=0)
    Ainv = inverse(fc, A)
    y = np.concatenate([np.asarray(nodes[v], dtype=fc.dtype).reshape(spec.L, -1) for v in ids])
    s = y.shape[1]
    x = np.zeros((spec.k * spec.L, s), dtype=fc.dtype)
    for c in range(y.shape[0]):
        col = Ainv[:, c]
        nz = np.flatnonzero(col)
        if nz.size:
            x[nz] ^= fc.mul_array(col[nz][:, None], y[c][None, :])
    return x.reshape(spec.k, spec.L, s)


def shift_table(spec: CodeSpec) -> tuple[tuple[int, ...], ...] | None:
    """Cyclic shift amounts if every rotation entry is a cyclic shift, else None."""
    out = []
    for j in range(spec.m):
        row = []
        for i in range(spec.k):
            perm = spec.rotations[j][i]
            l = perm[0]
            if perm != rotation_perm(l, spec.L):
                return None
            row.append(l)
        out.append(tuple(row))
    return tuple(out)
