from fractions import Fraction
from itertools import combinations
from math import ceil

import numpy as np
import pytest

from progeng.codes import CodeSpec, build_rotation_code, encode_nodes
from progeng.mds import assign_lambdas
from progeng.repair import (DecodeStep, InsufficientHelpers, PlanError, RepairPlan,
                            bandwidth_profile, check_progressive, execute_plan, gamma_lower_bound,
                            gamma_permutation, plan_rebuild, plan_repair, plan_repair_exact,
                            plan_repair_greedy, plan_repair_permutation)

S1_COSTS_63 = {(0,): 12, (1,): 12, (2,): 12, (0, 1): 8, (0, 2): 9, (1, 2): 9, (0, 1, 2): 8}


def subsets(m):
    for p in range(1, m + 1):
        yield from combinations(range(m), p)


def random_data(spec, s=4, seed=0):
    rng = np.random.default_rng(seed)
    q = 1 << spec.w
    return rng.integers(0, q, size=(spec.k, spec.L, s), dtype=np.uint64).astype(spec.field.dtype)


def test_single_failure_costs_63(rot63):
    for ps, cost in S1_COSTS_63.items():
        assert plan_repair_exact(rot63, 0, ps).cost == cost


def test_download_sets_63(rot63):
    k = 3
    plan = plan_repair_exact(rot63, 0, (0, 1))
    # p2(3), p2(1), p1(2), p1(0), c(0), c(2), b(0), b(2)
    want = {(k + 1, 3), (k + 1, 1), (k, 2), (k, 0), (2, 0), (2, 2), (1, 0), (1, 2)}
    assert set(plan.downloads) == want
    single = plan_repair_exact(rot63, 0, (0,))
    assert set(single.downloads) == {(v, r) for v in (1, 2, 3) for r in range(4)}


def test_plans_recover_data(rot63):
    nodes = encode_nodes(rot63, random_data(rot63, 16, 1))
    for failed in range(3):
        for ps in subsets(3):
            for mode in ("exact", "greedy"):
                plan = plan_repair(rot63, failed, ps, mode)
                assert np.array_equal(execute_plan(rot63, nodes, plan), nodes[failed])


def test_execute_reads_only_downloads(rot63):
    nodes = encode_nodes(rot63, random_data(rot63))
    plan = plan_repair_exact(rot63, 0, (0, 1))
    seen = []

    def read(v, r):
        seen.append((v, r))
        return nodes[v][r]

    execute_plan(rot63, read, plan)
    assert sorted(seen) == sorted(plan.downloads) and len(seen) == plan.cost


def test_step_reading_undownloaded_block_is_rejected(rot63):
    plan = plan_repair_exact(rot63, 0, (0,))
    bad_step = DecodeStep(0, ((5, 0, 1),))
    broken = RepairPlan(plan.failed, plan.parities, plan.downloads,
                        (bad_step,) + plan.steps[1:], plan.kind)
    with pytest.raises(PlanError):
        broken.validate(rot63)
    with pytest.raises(PlanError):
        execute_plan(rot63, encode_nodes(rot63, random_data(rot63)), broken)


def random_rotation_spec(n, k, L, seed):
    rng = np.random.default_rng(seed)
    shifts = rng.integers(0, L, size=(n - k, k))
    shifts[0, :] = 0
    shifts[:, 0] = 0
    rot = build_rotation_code(n, k, L, shifts.tolist(), [[1] * k] * (n - k)).rotations
    lam = assign_lambdas(n, k, L, rot, seed=seed)
    return build_rotation_code(n, k, L, shifts.tolist(), lam)


@pytest.mark.parametrize("seed", range(6))
def test_branch_and_bound_matches_exhaustive(seed):
    spec = random_rotation_spec(6, 3, 4, seed)
    for failed in range(3):
        for ps in subsets(3):
            ex = plan_repair_exact(spec, failed, ps, method="exhaustive")
            bb = plan_repair_exact(spec, failed, ps, method="bnb")
            assert bb.exact and bb.cost == ex.cost
            assert bb.downloads == ex.downloads


def test_branch_and_bound_on_rotation63(rot63):
    for ps, cost in S1_COSTS_63.items():
        assert plan_repair_exact(rot63, 0, ps, method="bnb").cost == cost


def test_budget_exhaustion_falls_back(rot63):
    plan = plan_repair_exact(rot63, 0, (0, 1, 2), method="bnb", node_budget=3)
    assert not plan.exact and plan.kind == "heuristic"
    assert plan.cost >= 8


def test_greedy_never_beats_exact(rot63):
    for failed in range(3):
        for ps in subsets(3):
            assert plan_repair_greedy(rot63, failed, ps).cost >= plan_repair_exact(rot63, failed, ps).cost


@pytest.mark.parametrize("fixture", ["rot63", "perm42", "perm52", "rs63"])
def test_costs_within_bounds(request, fixture):
    spec = request.getfixturevalue(fixture)
    for failed in range(spec.k):
        for ps in subsets(spec.m):
            c = plan_repair(spec, failed, ps).cost
            assert ceil(gamma_lower_bound(spec.L, spec.k, len(ps))) <= c <= spec.k * spec.L


@pytest.mark.parametrize("seed", range(4))
def test_adding_a_parity_never_hurts_exact(seed):
    spec = random_rotation_spec(6, 3, 4, seed)
    for failed in range(3):
        for ps in subsets(3):
            c = plan_repair_exact(spec, failed, ps).cost
            for j in set(range(3)) - set(ps):
                assert plan_repair_exact(spec, failed, ps + (j,)).cost <= c


@pytest.mark.parametrize("nk", [(4, 2), (5, 2), (6, 3), (10, 3)])
def test_two_phase_closed_form(request, nk):
    spec = request.getfixturevalue(f"perm{nk[0]}{nk[1]}")
    n, k = nk
    m = n - k
    for p in range(1, m + 1):
        want = gamma_permutation(n, k, p)
        assert want == k * spec.L - spec.L // m * (p - 1) * (k - 1)
        ps_list = list(combinations(range(m), p)) if m <= 4 else [tuple(range(p))]
        for ps in ps_list:
            plan = plan_repair_permutation(spec, 0, ps)
            assert plan.cost == want
            ph1, ph2 = plan.phases
            assert not set(ph1) & set(ph2)
            assert len(ph1) + len(ph2) == want


def test_two_phase_decodes(perm52, perm63):
    for spec in (perm52, perm63):
        nodes = encode_nodes(spec, random_data(spec, 8, 2))
        for failed in range(spec.k):
            for ps in subsets(spec.m):
                plan = plan_repair_permutation(spec, failed, ps)
                assert np.array_equal(execute_plan(spec, nodes, plan), nodes[failed])


def test_two_phase_is_optimal_on_small_codes(perm42):
    # exhaustive search over covering equations agrees with the closed form here
    for ps in subsets(2):
        assert plan_repair_exact(perm42, 0, ps).cost == plan_repair_permutation(perm42, 0, ps).cost


def test_gamma_formulas():
    assert [gamma_permutation(5, 2, p) for p in (1, 2, 3)] == [18, 15, 12]
    assert gamma_lower_bound(4, 3, 2) == 8
    assert gamma_lower_bound(4, 3, 3) == Fraction(20, 3)
    assert gamma_lower_bound(4, 3, 1) == 12
    assert [gamma_permutation(10, 3, p) for p in (1, 7)] == [1029, 441]
    assert gamma_lower_bound(343, 3, 7) == 441


def test_profiles(rot63, perm52, rs63):
    assert bandwidth_profile(rot63, "exact").values() == (12, Fraction(26, 3), 8)
    assert bandwidth_profile(perm52).values() == (18, 15, 12)
    rs = bandwidth_profile(rs63)
    assert rs.values() == (12, 12, 12)
    assert check_progressive(bandwidth_profile(rot63))
    assert check_progressive(bandwidth_profile(perm52))
    bad = check_progressive(rs)
    assert not bad and bad.violation == (1, 2)


def test_profile_cell_lookup(rot63):
    prof = bandwidth_profile(rot63)
    assert prof.cost(0, (1, 0)) == 8 and prof.exact


def test_parity_failure_rebuild(rot63):
    nodes = encode_nodes(rot63, random_data(rot63, 4, 5))
    for failed in range(3, 6):
        plan = plan_repair(rot63, failed)
        assert plan.kind == "rebuild" and plan.cost == 12
        assert np.array_equal(execute_plan(rot63, nodes, plan), nodes[failed])
        others = [v for v in range(6) if v != failed]
        for helpers in combinations(others, 3):
            plan = plan_rebuild(rot63, failed, helpers)
            assert np.array_equal(execute_plan(rot63, nodes, plan), nodes[failed])


def test_rebuild_errors(rot63):
    with pytest.raises(InsufficientHelpers):
        plan_rebuild(rot63, 4, [0, 1])
    with pytest.raises(PlanError):
        plan_rebuild(rot63, 4, [4, 0, 1])


def test_planner_argument_errors(rot63):
    with pytest.raises(PlanError):
        plan_repair_exact(rot63, 0, ())
    with pytest.raises(PlanError):
        plan_repair_exact(rot63, 0, (3,))
    with pytest.raises(PlanError):
        plan_repair_exact(rot63, 4, (0,))
    with pytest.raises(PlanError):
        plan_repair_permutation(rot63, 0, (0,))


def test_zero_coefficient_parity_cannot_cover(rot63):
    lam = [list(r) for r in rot63.lambdas]
    lam[1][0] = 0
    spec = CodeSpec(rot63.kind, 6, 3, 4, 8, tuple(map(tuple, lam)), rot63.rotations, allow_zero=True)
    with pytest.raises(PlanError):
        plan_repair_exact(spec, 0, (1,))
    assert plan_repair_exact(spec, 0, (0, 1)).cost == 12
