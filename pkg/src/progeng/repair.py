"""Single-failure repair planning and execution.

With all ``k - 1`` surviving systematic nodes available, each parity block
contains exactly one block of the failed systematic node, so a repair plan is
a choice of one covering parity row per lost block.  The cost of a plan is the
size of the union of every block it touches (the parity rows plus their
systematic companions).  :func:`plan_repair_exact` minimises that union,
:func:`plan_repair_greedy` is the fast heuristic, and
:func:`plan_repair_permutation` is the closed-form two-phase scheme for
permutation codes.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil

import numpy as np

from .codes import CodeSpec, node_matrix
from .linalg import SingularMatrixError, inverse

EXHAUSTIVE_CAP = 10 ** 6
NODE_BUDGET = 2 * 10 ** 6

Block = tuple[int, int]  # (node id, block row)


class PlanError(ValueError):
    pass


class InsufficientHelpers(PlanError):
    pass


@dataclass(frozen=True)
class DecodeStep:
    """Lost block ``target`` equals ``sum(coeff * downloaded[node, row])``."""

    target: int
    terms: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class RepairPlan:
    failed: int
    parities: tuple[int, ...]
    downloads: tuple[Block, ...]
    steps: tuple[DecodeStep, ...]
    kind: str  # exact | heuristic | two-phase | rebuild
    exact: bool = True
    phases: tuple[tuple[Block, ...], ...] = ()

    @property
    def cost(self) -> int:
        return len(self.downloads)

    @property
    def helpers(self) -> tuple[int, ...]:
        return tuple(sorted({v for v, _ in self.downloads}))

    def rows_by_node(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for v, r in self.downloads:
            out.setdefault(v, []).append(r)
        return {v: sorted(rs) for v, rs in sorted(out.items())}

    def validate(self, spec: CodeSpec) -> None:
        dl = set(self.downloads)
        if len(dl) != len(self.downloads):
            raise PlanError("duplicate downloads")
        for v, r in dl:
            if not (0 <= v < spec.n and 0 <= r < spec.L) or v == self.failed:
                raise PlanError(f"invalid download ({v}, {r})")
        targets = sorted(s.target for s in self.steps)
        if targets != list(range(spec.L)):
            raise PlanError("decode steps must produce every lost block exactly once")
        for s in self.steps:
            for v, r, _ in s.terms:
                if (v, r) not in dl:
                    raise PlanError(f"step for block {s.target} reads undownloaded ({v}, {r})")


# -- option model ------------------------------------------------------------


@dataclass(frozen=True)
class _Option:
    parity: int
    row: int
    blocks: tuple[Block, ...]  # parity block first
    mask: int
    comp_mask: int


def _check_args(spec: CodeSpec, failed: int, parities) -> tuple[int, ...]:
    if not 0 <= failed < spec.k:
        raise PlanError(f"failed node {failed} is not a systematic node")
    ps = tuple(sorted(set(int(j) for j in parities)))
    if not ps:
        raise PlanError("at least one parity node must participate")
    if ps[0] < 0 or ps[-1] >= spec.m:
        raise PlanError(f"parity indices must lie in 0..{spec.m - 1}")
    return ps


def _options(spec: CodeSpec, failed: int, parities) -> list[list[_Option]]:
    k, L = spec.k, spec.L
    out = []
    for t in range(L):
        opts = []
        for j in parities:
            if spec.lambdas[j][failed] == 0:
                continue
            r = int(spec.inv_perm_array[j, failed, t])
            comps = tuple((i, int(spec.perm_array[j, i, r])) for i in range(k) if i != failed)
            comp_mask = 0
            for v, b in comps:
                comp_mask |= 1 << (v * L + b)
            mask = comp_mask | 1 << ((k + j) * L + r)
            opts.append(_Option(j, r, ((k + j, r),) + comps, mask, comp_mask))
        if not opts:
            raise PlanError(f"no parity equation covers lost block {t}")
        out.append(opts)
    return out


def _plan_from_choice(spec, failed, parities, choice, kind, exact) -> RepairPlan:
    fc = spec.field
    downloads: set[Block] = set()
    steps = []
    for t, opt in enumerate(choice):
        downloads.update(opt.blocks)
        lam_inv = fc.inv(spec.lambdas[opt.parity][failed])
        terms = [(spec.k + opt.parity, opt.row, lam_inv)]
        for v, b in opt.blocks[1:]:
            terms.append((v, b, fc.mul(spec.lambdas[opt.parity][v], lam_inv)))
        steps.append(DecodeStep(t, tuple(terms)))
    return RepairPlan(failed, tuple(parities), tuple(sorted(downloads)), tuple(steps), kind, exact)


def _greedy_choice(options):
    union = 0
    choice = []
    for opts in options:
        best = min(opts, key=lambda o: (o.mask & ~union).bit_count())
        choice.append(best)
        union |= best.mask
    return choice, union.bit_count()


def _exhaustive(options):
    best_cost = None
    best: list[_Option] = []
    chosen: list[_Option] = []
    L = len(options)

    def rec(t, union):
        nonlocal best_cost, best
        if t == L:
            c = union.bit_count()
            if best_cost is None or c < best_cost:
                best_cost, best = c, list(chosen)
            return
        for opt in options[t]:
            chosen.append(opt)
            rec(t + 1, union | opt.mask)
            chosen.pop()

    rec(0, 0)
    return best, best_cost


def _branch_and_bound(options, budget=NODE_BUDGET):
    """Lexicographically first optimum; returns (choice, cost, completed)."""
    L = len(options)
    best, bound = _greedy_choice(options)
    found = False
    chosen: list[_Option] = []
    nodes = 0

    def lower_bound(t, union):
        extra = 0
        for opts in options[t:]:
            need = min((o.comp_mask & ~union).bit_count() for o in opts)
            if need > extra:
                extra = need
        return union.bit_count() + (L - t) + extra

    def rec(t, union):
        nonlocal best, bound, found, nodes
        nodes += 1
        if nodes > budget:
            raise _BudgetExceeded
        if t == L:
            c = union.bit_count()
            if c < bound or (not found and c <= bound):
                best, bound, found = list(chosen), c, True
            return
        lb = lower_bound(t, union)
        if lb > bound or (found and lb >= bound):
            return
        for opt in options[t]:
            chosen.append(opt)
            rec(t + 1, union | opt.mask)
            chosen.pop()

    try:
        rec(0, 0)
    except _BudgetExceeded:
        return best, bound, False
    return best, bound, True


class _BudgetExceeded(Exception):
    pass


def plan_repair_exact(spec: CodeSpec, failed: int, parities, cap: int = EXHAUSTIVE_CAP,
                      node_budget: int = NODE_BUDGET, method: str = "auto") -> RepairPlan:
    """Minimum-union repair of systematic node ``failed`` from the given parities.

    Enumerates all ``p ** L`` choices when that is at most ``cap``, otherwise
    runs branch and bound.  Ties go to the lexicographically first choice
    (lost blocks in order, parities by index).  If branch and bound runs out
    of ``node_budget`` the best plan found is returned with ``exact=False``.
    """
    ps = _check_args(spec, failed, parities)
    options = _options(spec, failed, ps)
    if method == "exhaustive" or (method == "auto" and len(ps) ** spec.L <= cap):
        choice, _ = _exhaustive(options)
        return _plan_from_choice(spec, failed, ps, choice, "exact", True)
    choice, _, done = _branch_and_bound(options, node_budget)
    return _plan_from_choice(spec, failed, ps, choice, "exact" if done else "heuristic", done)


def plan_repair_greedy(spec: CodeSpec, failed: int, parities) -> RepairPlan:
    ps = _check_args(spec, failed, parities)
    choice, _ = _greedy_choice(_options(spec, failed, ps))
    return _plan_from_choice(spec, failed, ps, choice, "heuristic", False)


def _digit(spec: CodeSpec, t: int, i: int) -> int:
    return (t // spec.m ** (spec.k - 1 - i)) % spec.m


def plan_repair_permutation(spec: CodeSpec, failed: int, parities) -> RepairPlan:
    """Two-phase repair for permutation codes.

    Phase 1 reads the rows whose ``failed`` coordinate is 0 from every helper
    and solves the lost blocks those parity rows carry.  Phase 2 takes the
    lowest-index selected parity and, for each block still missing, reads the
    parity row holding it plus that row's systematic companions.
    """
    if spec.kind != "permutation":
        raise PlanError("two-phase repair needs a permutation code")
    ps = _check_args(spec, failed, parities)
    k, L = spec.k, spec.L
    fc = spec.field
    perm, inv = spec.perm_array, spec.inv_perm_array
    base_rows = [t for t in range(L) if _digit(spec, t, failed) == 0]

    def step(j, row):
        lam_inv = fc.inv(spec.lambdas[j][failed])
        terms = [(k + j, row, lam_inv)]
        terms += [(i, int(perm[j, i, row]), fc.mul(spec.lambdas[j][i], lam_inv))
                  for i in range(k) if i != failed]
        return DecodeStep(int(perm[j, failed, row]), tuple(terms))

    phase1: list[Block] = [(i, t) for i in range(k) if i != failed for t in base_rows]
    phase1 += [(k + j, t) for j in ps for t in base_rows]
    steps = [step(j, t) for j in ps for t in base_rows]

    covered = {s.target for s in steps}
    j_star = ps[0]
    phase2: list[Block] = []
    for y in range(L):
        if y in covered:
            continue
        row = int(inv[j_star, failed, y])
        phase2.append((k + j_star, row))
        phase2 += [(i, int(perm[j_star, i, row])) for i in range(k) if i != failed]
        steps.append(step(j_star, row))
    steps.sort(key=lambda s: s.target)
    downloads = tuple(sorted(set(phase1) | set(phase2)))
    return RepairPlan(failed, ps, downloads, tuple(steps), "two-phase", True,
                      (tuple(phase1), tuple(phase2)))


def plan_rebuild(spec: CodeSpec, failed: int, helpers=None) -> RepairPlan:
    """Decode from ``k`` whole helper nodes and re-encode the lost node.

    This is how parity nodes are repaired; it always costs ``kL`` blocks.
    Helpers default to the systematic nodes (parities fill in for a failed one).
    """
    k, L = spec.k, spec.L
    if not 0 <= failed < spec.n:
        raise PlanError(f"node {failed} out of range")
    if helpers is None:
        helpers = [v for v in range(spec.n) if v != failed][:k]
    helpers = sorted(set(int(v) for v in helpers))
    if failed in helpers:
        raise PlanError("failed node cannot be a helper")
    if len(helpers) < k:
        raise InsufficientHelpers(f"need {k} helper nodes, have {len(helpers)}")
    helpers = helpers[:k]
    fc = spec.field
    target = node_matrix(spec, failed)  # L x kL over systematic blocks
    if helpers == list(range(k)):
        coeffs = target
    else:
        A = np.concatenate([node_matrix(spec, v) for v in helpers], axis=0)
        try:
            Ainv = inverse(fc, A)
        except SingularMatrixError as exc:
            raise PlanError(f"helpers {helpers} do not determine the data") from exc
        coeffs = np.zeros((L, k * L), dtype=fc.dtype)
        for c in range(k * L):
            col = target[:, c]
            nz = np.flatnonzero(col)
            if nz.size:
                coeffs[nz] ^= fc.mul_array(col[nz][:, None], Ainv[c][None, :])
    cols = [(v, r) for v in helpers for r in range(L)]
    steps = []
    for t in range(L):
        nz = np.flatnonzero(coeffs[t])
        steps.append(DecodeStep(t, tuple((cols[c][0], cols[c][1], int(coeffs[t, c])) for c in nz)))
    parities = tuple(v - k for v in helpers if v >= k)
    return RepairPlan(failed, parities, tuple(cols), tuple(steps), "rebuild", True)


def plan_repair(spec: CodeSpec, failed: int, parities=None, mode: str = "auto",
                cap: int = EXHAUSTIVE_CAP) -> RepairPlan:
    """Dispatch on node role and code kind.

    ``failed`` is a global node id.  Parity failures are rebuilt from ``k``
    nodes.  ``mode`` is one of auto, exact, greedy, two-phase.
    """
    if failed >= spec.k:
        helpers = list(range(spec.k))
        return plan_rebuild(spec, failed, helpers)
    if parities is None:
        parities = range(spec.m)
    if mode == "auto":
        if spec.kind == "permutation":
            mode = "two-phase"
        elif len(set(parities)) ** spec.L <= cap:
            mode = "exact"
        else:
            mode = "greedy"
    if mode == "exact":
        return plan_repair_exact(spec, failed, parities, cap=cap)
    if mode == "greedy":
        return plan_repair_greedy(spec, failed, parities)
    if mode == "two-phase":
        return plan_repair_permutation(spec, failed, parities)
    raise ValueError(f"unknown planner mode {mode!r}")


def execute_plan(spec: CodeSpec, nodes, plan: RepairPlan) -> np.ndarray:
    """Run ``plan`` and return the ``(L, s)`` recovered content.

    ``nodes`` is a mapping or sequence of ``(L, s)`` node arrays, or a callable
    ``(node, row) -> block``.  Only the blocks in ``plan.downloads`` are read.
    """
    plan.validate(spec)
    fc = spec.field
    if callable(nodes):
        read: Callable = nodes
    else:
        def read(v, r):
            return np.asarray(nodes[v][r])
    fetched = {b: np.asarray(read(*b), dtype=fc.dtype) for b in plan.downloads}
    sample = next(iter(fetched.values()))
    out = np.zeros((spec.L,) + sample.shape, dtype=fc.dtype)
    for s in plan.steps:
        acc = out[s.target]
        for v, r, c in s.terms:
            acc ^= fc.scale(c, fetched[(v, r)])
    return out


# -- closed forms and profiles ----------------------------------------------


def gamma_permutation(n: int, k: int, p: int) -> int:
    """Two-phase repair bandwidth ``kL - (L / (n-k)) (p-1)(k-1)`` with ``L = (n-k)^k``."""
    m = n - k
    if not 1 <= p <= m:
        raise ValueError(f"p must lie in 1..{m}")
    L = m ** k
    return k * L - (L // m) * (p - 1) * (k - 1)


def gamma_lower_bound(L: int, k: int, p: int) -> Fraction:
    """Cut-set bound ``L (p + k - 1) / p`` for exact repair with ``p`` parities."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return Fraction(L * (p + k - 1), p)


@dataclass(frozen=True)
class ProfileCell:
    failed: int
    parities: tuple[int, ...]
    cost: int
    exact: bool


@dataclass
class BandwidthProfile:
    n: int
    k: int
    L: int
    cells: list[ProfileCell] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def gamma_bar(self) -> dict[int, Fraction]:
        sums: dict[int, list[int]] = {}
        for c in self.cells:
            sums.setdefault(len(c.parities), []).append(c.cost)
        return {p: Fraction(sum(v), len(v)) for p, v in sorted(sums.items())}

    def __getitem__(self, p: int) -> Fraction:
        return self.gamma_bar[p]

    def values(self) -> tuple[Fraction, ...]:
        g = self.gamma_bar
        return tuple(g[p] for p in range(1, self.m + 1))

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.cells)

    def cost(self, failed: int, parities) -> int:
        key = tuple(sorted(parities))
        for c in self.cells:
            if c.failed == failed and c.parities == key:
                return c.cost
        raise KeyError((failed, key))


def bandwidth_profile(spec: CodeSpec, planner: str = "auto", cap: int = EXHAUSTIVE_CAP,
                      failed_nodes=None) -> BandwidthProfile:
    """Plan every (failed systematic node, nonempty parity subset) pair."""
    prof = BandwidthProfile(spec.n, spec.k, spec.L)
    failed_nodes = range(spec.k) if failed_nodes is None else failed_nodes
    for i in failed_nodes:
        for p in range(1, spec.m + 1):
            for subset in combinations(range(spec.m), p):
                plan = plan_repair(spec, i, subset, planner, cap)
                prof.cells.append(ProfileCell(i, subset, plan.cost, plan.exact))
    return prof


@dataclass(frozen=True)
class ProgressiveCheck:
    ok: bool
    violation: tuple[int, int] | None = None

    def __bool__(self):
        return self.ok


def check_progressive(profile) -> ProgressiveCheck:
    """Average bandwidth must strictly drop with every added parity node."""
    g = profile.gamma_bar if isinstance(profile, BandwidthProfile) else dict(profile)
    ps = sorted(g)
    for a, b in zip(ps, ps[1:]):
        if not g[a] > g[b]:
            return ProgressiveCheck(False, (a, b))
    return ProgressiveCheck(True)


def lower_bound_ceil(spec: CodeSpec, p: int) -> int:
    return ceil(gamma_lower_bound(spec.L, spec.k, p))


__all__ = [
    "PlanError", "InsufficientHelpers", "DecodeStep", "RepairPlan", "plan_repair_exact",
    "plan_repair_greedy", "plan_repair_permutation", "plan_rebuild", "plan_repair",
    "execute_plan", "gamma_permutation", "gamma_lower_bound", "BandwidthProfile",
    "ProfileCell", "bandwidth_profile", "check_progressive", "ProgressiveCheck",
    "lower_bound_ceil", "EXHAUSTIVE_CAP",
]
