"""Computer search over rotation codes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

from .codes import CodeSpec, build_rotation_code, shift_table
from .mds import DEFAULT_BUDGET, LambdaSearchExhausted, assign_lambdas
from .repair import EXHAUSTIVE_CAP, BandwidthProfile, bandwidth_profile, check_progressive


@dataclass(frozen=True)
class SearchConfig:
    n: int
    k: int
    L: int
    w: int = 8
    symmetry: bool = True
    cap: int = EXHAUSTIVE_CAP
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    limit: int | None = None  # max candidates examined

    @property
    def m(self) -> int:
        return self.n - self.k

    def free_positions(self) -> list[tuple[int, int]]:
        """(parity, systematic) cells that carry a free shift, parity-major."""
        lo = 1 if self.symmetry else 0
        return [(j, i) for j in range(lo, self.m) for i in range(lo, self.k)]

    def space_size(self) -> int:
        return self.L ** len(self.free_positions())


@dataclass
class SearchResult:
    candidate: int
    shifts: tuple[tuple[int, ...], ...]
    spec: CodeSpec
    profile: BandwidthProfile
    progressive: bool

    @property
    def gamma_bar(self) -> tuple[Fraction, ...]:
        return self.profile.values()

    def rank_key(self):
        return tuple(reversed(self.gamma_bar)), self.candidate


def enumerate_candidates(config: SearchConfig):
    """Yield ``(candidate id, m x k shift table)`` in lexicographic order."""
    cells = config.free_positions()
    for idx, values in enumerate(product(range(config.L), repeat=len(cells))):
        if config.limit is not None and idx >= config.limit:
            return
        table = [[0] * config.k for _ in range(config.m)]
        for (j, i), v in zip(cells, values):
            table[j][i] = v
        yield idx, tuple(tuple(r) for r in table)


def evaluate_candidate(config: SearchConfig, idx: int, shifts) -> SearchResult | None:
    """MDS coefficients plus bandwidth profile; ``None`` when no coefficients are found."""
    rot = build_rotation_code(config.n, config.k, config.L, shifts,
                              [[1] * config.k for _ in range(config.m)], config.w).rotations
    try:
        lambdas = assign_lambdas(config.n, config.k, config.L, rot, config.w,
                                 seed=config.seed, budget=config.budget)
    except LambdaSearchExhausted:
        return None
    spec = build_rotation_code(config.n, config.k, config.L, shifts, lambdas, config.w)
    mode = "exact" if config.m ** config.L <= config.cap else "greedy"
    profile = bandwidth_profile(spec, mode, config.cap)
    return SearchResult(idx, shifts, spec, profile, bool(check_progressive(profile)))


def search_rotation_codes(config: SearchConfig, keep_all: bool = False) -> list[SearchResult]:
    """Progressive MDS rotation codes ranked by ``(gamma_bar(m), gamma_bar(m-1), ...)``."""
    results = []
    for idx, shifts in enumerate_candidates(config):
        res = evaluate_candidate(config, idx, shifts)
        if res is None:
            continue
        if res.progressive or keep_all:
            results.append(res)
    results.sort(key=SearchResult.rank_key)
    return results


def canonical_shifts(shifts, L: int) -> tuple[tuple[int, ...], ...]:
    """Smallest representative under parity relabelling and row/column translation.

    Re-indexing the rows of one parity node adds a constant to its row of
    shifts; re-indexing the blocks of one systematic node adds a constant to
    its column.  Both leave MDS-ness and every repair cost unchanged.
    """
    m = len(shifts)
    best = None
    for order in permutations(range(m)):
        S = [shifts[j] for j in order]
        norm = tuple(
            tuple((S[j][i] - S[j][0] - S[0][i] + S[0][0]) % L for i in range(len(S[0])))
            for j in range(m)
        )
        if best is None or norm < best:
            best = norm
    return best


def dedupe_equivalent(results: list[SearchResult]) -> list[SearchResult]:
    """Keep one result per equivalence class, preserving rank order.

    Within a class the kept member is the one with the lexicographically
    smallest shift table.
    """
    groups: dict = {}
    for r in results:
        key = canonical_shifts(_shifts_of(r), r.spec.L)
        cur = groups.get(key)
        if cur is None or _shifts_of(r) < _shifts_of(cur):
            groups[key] = r
    keep = {id(r) for r in groups.values()}
    return [r for r in results if id(r) in keep]


def _shifts_of(r: SearchResult):
    return r.shifts if r.shifts is not None else shift_table(r.spec)
