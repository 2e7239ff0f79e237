"""MDS erasure codes whose single-failure repair gets cheaper as more parity nodes help."""

from .codes import (CodeSpec, CodeSpecError, build_permutation_code, build_rotation_code,
                    build_rs_code, decode, encode, encode_nodes, rotation63_code)
from .gf import FieldContext, FieldError, make_field
from .helpers import SelectionResult, Weights, cost_curve, select_helpers, select_helpers_bruteforce
from .mds import LambdaSearchExhausted, MDSResult, assign_lambdas, coefficient_matrix, is_mds
from .repair import (BandwidthProfile, InsufficientHelpers, PlanError, RepairPlan,
                     bandwidth_profile, check_progressive, execute_plan, gamma_lower_bound,
                     gamma_permutation, plan_rebuild, plan_repair, plan_repair_exact,
                     plan_repair_greedy, plan_repair_permutation)
from .search import SearchConfig, dedupe_equivalent, search_rotation_codes

__version__ = "0.1.0"

__all__ = [
    "CodeSpec", "CodeSpecError", "build_permutation_code", "build_rotation_code", "build_rs_code",
    "decode", "encode", "encode_nodes", "rotation63_code",
    "FieldContext", "FieldError", "make_field",
    "SelectionResult", "Weights", "cost_curve", "select_helpers", "select_helpers_bruteforce",
    "LambdaSearchExhausted", "MDSResult", "assign_lambdas", "coefficient_matrix", "is_mds",
    "BandwidthProfile", "InsufficientHelpers", "PlanError", "RepairPlan", "bandwidth_profile",
    "check_progressive", "execute_plan", "gamma_lower_bound", "gamma_permutation", "plan_rebuild",
    "plan_repair", "plan_repair_exact", "plan_repair_greedy", "plan_repair_permutation",
    "SearchConfig", "dedupe_equivalent", "search_rotation_codes",
]
