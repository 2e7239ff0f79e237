"""MDS verification by rank over GF(2**w), and coefficient assignment.

Two routes decide whether a k-subset of nodes is information-complete:

``dense``
    Stack the subset's ``L x kL`` coefficient bands and compute the rank.
``structured``
    Every rotation in the codes built here is a translation of an abelian
    group (cyclic for rotation/RS codes, ``Z_m^k`` for permutation codes), so
    all bands commute.  The square block system restricted to the missing
    systematic nodes is invertible iff its determinant, computed in the group
    algebra, is a unit; that is one ``L x L`` rank check per subset instead of
    a ``kL x kL`` one.

``auto`` uses the structured route whenever the rotations are translations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .codes import CodeSpec, node_matrix, permutation_lambdas
from .gf import FieldContext, make_field
from .linalg import rank_gf

__all__ = [
    "CoefficientMatrix", "MDSResult", "LambdaSearchExhausted", "coefficient_matrix",
    "rank_gf", "is_mds", "assign_lambdas", "subset_full_rank",
]

DEFAULT_BUDGET = 1000


class LambdaSearchExhausted(RuntimeError):
    pass


@dataclass
class CoefficientMatrix:
    matrix: np.ndarray
    nodes: tuple[int, ...]
    bands: dict[int, slice] = field(default_factory=dict)


@dataclass(frozen=True)
class MDSResult:
    ok: bool
    failing: tuple[int, ...] | None = None
    checked: int = 0

    def __bool__(self):
        return self.ok


def coefficient_matrix(spec: CodeSpec, nodes) -> CoefficientMatrix:
    nodes = tuple(nodes)
    if not nodes:
        raise ValueError("empty node subset")
    for v in nodes:
        if not 0 <= v < spec.n:
            raise ValueError(f"node {v} out of range")
    bands = {v: slice(r * spec.L, (r + 1) * spec.L) for r, v in enumerate(nodes)}
    M = np.concatenate([node_matrix(spec, v) for v in nodes], axis=0)
    return CoefficientMatrix(M, nodes, bands)


# -- group algebra -----------------------------------------------------------


class _Group:
    """Mixed-radix abelian group on block indices (most significant digit first)."""

    def __init__(self, radices):
        self.radices = tuple(radices)
        self.shape = self.radices
        self.size = int(np.prod(self.radices))
        coords = np.indices(self.radices).reshape(len(self.radices), -1)
        self.coords = coords  # (ndim, size)

    def index(self, coords) -> np.ndarray:
        return np.ravel_multi_index(tuple(c % r for c, r in zip(coords, self.radices)), self.radices)

    def translation(self, g: int) -> np.ndarray:
        gc = np.array(np.unravel_index(g, self.radices))[:, None]
        return self.index(self.coords + gc)

    def difference_table(self) -> np.ndarray:
        """``D[h, h2]`` = index of ``h - h2``."""
        c = self.coords
        diff = c[:, :, None] - c[:, None, :]
        return self.index(diff)


def _group_for(spec: CodeSpec) -> _Group | None:
    if spec.kind == "permutation":
        group = _Group((spec.m,) * spec.k)
    else:
        group = _Group((spec.L,))
    perms = spec.perm_array
    for j in range(spec.m):
        for i in range(spec.k):
            g = int(perms[j, i, 0])
            if not np.array_equal(perms[j, i], group.translation(g)):
                return None
    return group


class _Algebra:
    def __init__(self, fc: FieldContext, group: _Group):
        self.fc = fc
        self.group = group
        self._diff = None

    def monomial(self, coeff: int, g: int) -> np.ndarray:
        u = np.zeros(self.group.size, dtype=self.fc.dtype)
        u[g] = coeff
        return u

    def mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        vg = v.reshape(self.group.shape)
        for g in np.flatnonzero(u):
            shift = np.unravel_index(int(g), self.group.shape)
            out ^= self.fc.scale(int(u[g]), np.roll(vg, shift, axis=tuple(range(vg.ndim))).ravel())
        return out

    def det(self, M) -> np.ndarray:
        """Laplace expansion along rows, memoised on the remaining column set."""
        q = len(M)
        memo = {}

        def rec(r, cols):
            if r == q:
                return self.monomial(1, 0)
            key = (r, cols)
            if key in memo:
                return memo[key]
            acc = np.zeros(self.group.size, dtype=self.fc.dtype)
            for c in cols:
                if not M[r][c].any():
                    continue
                sub = rec(r + 1, tuple(x for x in cols if x != c))
                if sub.any():
                    acc ^= self.mul(M[r][c], sub)  # char 2: cofactor signs vanish
            memo[key] = acc
            return acc

        return rec(0, tuple(range(q)))

    def is_unit(self, u: np.ndarray) -> bool:
        nz = np.count_nonzero(u)
        if nz == 0:
            return False
        if nz == 1:
            return True
        if self._diff is None:
            self._diff = self.group.difference_table()
        return rank_gf(self.fc, u[self._diff]) == self.group.size


def subset_full_rank(spec: CodeSpec, nodes, method: str = "auto", _cache=None) -> bool:
    """True iff the given k nodes determine all systematic data."""
    nodes = tuple(nodes)
    fc = spec.field
    if method == "dense":
        return rank_gf(fc, coefficient_matrix(spec, nodes).matrix) == spec.k * spec.L
    group = _cache if _cache is not None else _group_for(spec)
    if group is None:
        if method == "structured":
            raise ValueError("rotations are not group translations; use the dense route")
        return rank_gf(fc, coefficient_matrix(spec, nodes).matrix) == spec.k * spec.L
    alg = group if isinstance(group, _Algebra) else _Algebra(fc, group)
    present = {v for v in nodes if v < spec.k}
    missing = [i for i in range(spec.k) if i not in present]
    parities = [v - spec.k for v in nodes if v >= spec.k]
    if len(parities) < len(missing):
        return False
    if not missing:
        return True
    # extra parities beyond the missing count cannot occur for |nodes| == k
    M = [[alg.monomial(spec.lambdas[j][i], int(spec.perm_array[j, i, 0])) for i in missing]
         for j in parities[: len(missing)]]
    return alg.is_unit(alg.det(M))


def is_mds(spec: CodeSpec, method: str = "auto") -> MDSResult:
    """Check every k-subset; reports the lexicographically first failing one."""
    cache = None
    if method != "dense":
        group = _group_for(spec)
        if group is None and method == "structured":
            raise ValueError("rotations are not group translations; use the dense route")
        cache = _Algebra(spec.field, group) if group is not None else None
    use = method if cache is not None or method == "dense" else "dense"
    checked = 0
    for subset in combinations(range(spec.n), spec.k):
        checked += 1
        if not subset_full_rank(spec, subset, use, cache):
            return MDSResult(False, subset, checked)
    return MDSResult(True, None, checked)


def _nonzero(rng, q: int, size=None):
    return rng.integers(1, q, size=size)


def assign_lambdas(n, k, L, rotations, w=8, seed=0, budget=DEFAULT_BUDGET, kind="rotation",
                   method="auto"):
    """Seeded random search for coefficients making the structure MDS.

    ``kind="rotation"``: parity 0 and systematic node 0 are pinned to 1 (scaling a
    node never changes the MDS property); the remaining entries are uniform over
    the nonzero elements.  ``kind="permutation"``: per-node scalars ``b_i`` are
    drawn pairwise distinct and the table is ``b_i ** (j + 1)``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if kind not in ("rotation", "permutation"):
        raise ValueError(f"unsupported kind {kind!r}")
    fc = make_field(w)
    q = fc.order
    m = n - k
    rng = np.random.default_rng(seed)
    rotations = tuple(tuple(tuple(int(x) for x in p) for p in row) for row in rotations)
    for _ in range(budget):
        if kind == "permutation":
            if k >= q - 1:
                raise LambdaSearchExhausted("field too small for distinct scalars")
            base = [int(x) for x in rng.choice(np.arange(1, q), size=k, replace=False)] \
                if q <= 1 << 16 else _distinct_large(rng, q, k)
            lambdas = permutation_lambdas(base, m, w)
        else:
            table = _nonzero(rng, q, size=(m, k))
            table[0, :] = 1
            table[:, 0] = 1
            lambdas = tuple(tuple(int(x) for x in row) for row in table)
        spec = CodeSpec(kind, n, k, L, w, lambdas, rotations)
        if is_mds(spec, method):
            return lambdas
    raise LambdaSearchExhausted(f"no MDS coefficients found within {budget} candidates")


def _distinct_large(rng, q, k):
    seen: list[int] = []
    while len(seen) < k:
        x = int(rng.integers(1, q))
        if x not in seen:
            seen.append(x)
    return seen
