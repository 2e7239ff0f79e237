"""File-level operations behind the command line: encode, repair, figures, bench."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from math import ceil
from pathlib import Path

import numpy as np

from .codes import CodeSpec, CodeSpecError, build_permutation_code, build_rs_code, \
    build_rotation_code, encode, encode_nodes, rotation63_code
from .helpers import cost_curve
from .mds import assign_lambdas, is_mds
from .repair import (InsufficientHelpers, PlanError, RepairPlan, bandwidth_profile, execute_plan,
                     gamma_lower_bound, gamma_permutation, plan_rebuild,
                     plan_repair)
from .shards import ShardError, ShardReader, header_for, shard_name, symbol_dtype, write_shard

log = logging.getLogger(__name__)

SPEC_FILE = "spec.json"


def resolve_spec(text: str, w: int = 8, seed: int = 0, allow_zero: bool = False) -> CodeSpec:
    """A spec from a JSON path or a shorthand.

    Shorthands: ``rotation63`` (the (6,3) L=4 rotation code with coefficients
    2 and 3), ``permutation:N,K``, ``rs:N,K,L`` and
    ``rotation:N,K,L:SHIFTS`` where SHIFTS lists each parity's shifts,
    e.g. ``0,0,0/0,1,3/0,2,1``.  ``allow_zero`` admits zero coefficients in
    JSON files, so a degenerate spec can still be checked.
    """
    p = Path(text)
    if p.suffix == ".json" or p.exists():
        return CodeSpec.load(p, allow_zero)
    try:
        if text == "rotation63":
            return rotation63_code()
        kind, _, rest = text.partition(":")
        if kind == "permutation":
            n, k = (int(x) for x in rest.split(","))
            return build_permutation_code(n, k, w, seed=seed)
        if kind == "rs":
            n, k, L = (int(x) for x in rest.split(","))
            return build_rs_code(n, k, L, w)
        if kind == "rotation":
            dims, _, shifts = rest.partition(":")
            n, k, L = (int(x) for x in dims.split(","))
            table = [[int(x) for x in row.split(",")] for row in shifts.split("/")]
            rot = build_rotation_code(n, k, L, table, [[1] * k] * (n - k), w).rotations
            lam = assign_lambdas(n, k, L, rot, w, seed=seed)
            return build_rotation_code(n, k, L, table, lam, w)
    except (ValueError, TypeError) as exc:
        raise CodeSpecError(f"cannot parse spec {text!r}: {exc}") from exc
    raise CodeSpecError(f"unknown spec {text!r}")


# -- encode / repair ---------------------------------------------------------


def symbols_per_block(spec: CodeSpec, nbytes: int) -> int:
    return max(1, ceil(nbytes / (spec.k * spec.L * (spec.w // 8))))


def split_file(spec: CodeSpec, data: bytes) -> tuple[np.ndarray, int]:
    s = symbols_per_block(spec, len(data))
    total = spec.k * spec.L * s * (spec.w // 8)
    buf = np.zeros(total, dtype=np.uint8)
    buf[: len(data)] = np.frombuffer(data, dtype=np.uint8)
    arr = buf.view(symbol_dtype(spec.w)).astype(spec.field.dtype).reshape(spec.k, spec.L, s)
    return arr, s


def cmd_encode(input_path, spec: CodeSpec, out_dir, verify: bool = True) -> list[Path]:
    """Split, pad and encode a file into ``n`` shards plus ``spec.json``."""
    if verify:
        res = is_mds(spec)
        if not res:
            raise CodeSpecError(f"spec is not MDS; failing subset "
                                f"{[spec.node_label(v) for v in res.failing]}")
    data = Path(input_path).read_bytes()
    arr, s = split_file(spec, data)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec.save(out / SPEC_FILE)
    paths = []
    for i in range(spec.k):
        paths.append(out / shard_name(spec, i))
        write_shard(paths[-1], header_for(spec, i, s, len(data)), arr[i])
    par = encode(spec, arr)
    for j in range(spec.m):
        node = spec.k + j
        paths.append(out / shard_name(spec, node))
        write_shard(paths[-1], header_for(spec, node, s, len(data)), par[j])
    return paths


def cmd_decode(shard_dir, spec: CodeSpec | None = None) -> bytes:
    """Reassemble the original file from the systematic shards."""
    shard_dir = Path(shard_dir)
    spec = spec or CodeSpec.load(shard_dir / SPEC_FILE)
    parts = []
    length = None
    for i in range(spec.k):
        with ShardReader(shard_dir / shard_name(spec, i), spec) as r:
            parts.append(r.read_all())
            length = r.header.length
    raw = np.stack(parts).astype(symbol_dtype(spec.w)).tobytes()
    return raw[:length]


@dataclass
class RepairReport:
    failed: str
    plan: RepairPlan
    blocks_read: int
    bytes_read: int
    lower_bound: Fraction | None
    output: Path

    @property
    def kind(self) -> str:
        return self.plan.kind

    def lines(self, spec: CodeSpec) -> list[str]:
        out = [f"repaired {self.failed} -> {self.output}",
               f"plan: {self.plan.kind}" + ("" if self.plan.exact else " (not proven optimal)"),
               f"helpers: {' '.join(spec.node_label(v) for v in self.plan.helpers)}",
               f"blocks read: {self.blocks_read} blocks",
               f"bytes read: {self.bytes_read}"]
        if self.lower_bound is not None:
            out.append(f"lower bound: {float(self.lower_bound):.4f} blocks ({self.lower_bound})")
        return out


def available_nodes(spec: CodeSpec, shard_dir) -> list[int]:
    d = Path(shard_dir)
    return [v for v in range(spec.n) if (d / shard_name(spec, v)).exists()]


def cmd_repair(shard_dir, failed: int, parities=None, spec: CodeSpec | None = None,
               out=None, mode: str = "auto") -> RepairReport:
    """Regenerate the shard of global node ``failed`` from the surviving ones.

    ``parities`` are 0-based parity indices (default: every available parity).
    """
    shard_dir = Path(shard_dir)
    spec = spec or CodeSpec.load(shard_dir / SPEC_FILE)
    if not 0 <= failed < spec.n:
        raise PlanError(f"node {failed} out of range")
    have = [v for v in available_nodes(spec, shard_dir) if v != failed]
    if failed < spec.k:
        missing = [i for i in range(spec.k) if i != failed and i not in have]
        if missing:
            raise InsufficientHelpers(
                f"systematic helpers missing: {[spec.node_label(v) for v in missing]}")
        if parities is None:
            parities = [v - spec.k for v in have if v >= spec.k]
        for j in parities:
            if spec.k + j not in have:
                raise InsufficientHelpers(f"parity shard {spec.node_label(spec.k + j)} not found")
        plan = plan_repair(spec, failed, parities, mode)
        bound = gamma_lower_bound(spec.L, spec.k, len(plan.parities))
    else:
        if len(have) < spec.k:
            raise InsufficientHelpers(f"need {spec.k} surviving shards, found {len(have)}")
        # systematic shards first: the rebuild is then a plain re-encode
        plan = plan_rebuild(spec, failed, have[: spec.k])
        bound = None
    readers = {}
    try:
        for v in plan.helpers:
            readers[v] = ShardReader(shard_dir / shard_name(spec, v), spec)
        lengths = {r.header.length for r in readers.values()}
        sizes = {r.header.s for r in readers.values()}
        if len(lengths) != 1 or len(sizes) != 1:
            raise ShardError("helper shards disagree on file geometry")
        recovered = execute_plan(spec, lambda v, r: readers[v].read_block(r), plan)
        blocks = sum(r.blocks_read for r in readers.values())
        nbytes = sum(r.bytes_read for r in readers.values())
        s, length = sizes.pop(), lengths.pop()
    finally:
        for r in readers.values():
            r.close()
    if blocks != plan.cost:
        raise PlanError(f"read {blocks} blocks but plan costs {plan.cost}")
    dest = Path(out) if out is not None else shard_dir / shard_name(spec, failed)
    write_shard(dest, header_for(spec, failed, s, length), recovered.reshape(spec.L, s))
    return RepairReport(spec.node_label(failed), plan, blocks, nbytes, bound, dest)


# -- figures ----------------------------------------------------------------


def _fmt(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{float(x):.6f}"


def reference_rotation_code(n: int, k: int, w: int = 8, seed: int = 0) -> CodeSpec:
    """The rotation code used in the bandwidth figure for ``(n, k)``."""
    if (n, k) == (6, 3):
        return rotation63_code()
    if (n, k) == (4, 2):
        return resolve_spec("rotation:4,2,2:0,0/0,1", w, seed)
    raise CodeSpecError(f"no reference rotation code for ({n},{k})")


def figure_repair_bw(configs=((6, 3), (4, 2)), w: int = 8, seed: int = 0) -> list[list[str]]:
    """Bandwidth versus p for rotation, permutation and RS codes plus the cut-set bound.

    Every column is in blocks of the rotation code's node size; the permutation
    code (``L = (n-k)^k``) is rescaled to it, with its raw count in
    ``permutation_blocks``.
    """
    rows = [["n", "k", "p", "rotation", "permutation", "rs", "lower_bound", "permutation_blocks"]]
    for n, k in configs:
        spec = reference_rotation_code(n, k, w, seed)
        prof = bandwidth_profile(spec, "exact")
        L = spec.L
        Lp = (n - k) ** k
        for p in range(1, n - k + 1):
            gp = gamma_permutation(n, k, p)
            rows.append([str(n), str(k), str(p), _fmt(prof[p]), _fmt(Fraction(gp * L, Lp)),
                         str(k * L), _fmt(gamma_lower_bound(L, k, p)), str(gp)])
    return rows


def figure_total_cost(costs=tuple(range(1, 8)), weights=(Fraction(1, 2), Fraction(1, 2)),
                      n: int = 10, k: int = 3, normalize: bool = True,
                      gamma=None) -> list[list[str]]:
    """Weighted accessing plus bandwidth cost of cost-sorted prefixes; RS for comparison."""
    gamma = gamma or (lambda p: gamma_permutation(n, k, p))
    full = k * (n - k) ** k
    rows = [["p", "access", "bandwidth", "total", "total_rs"]]
    curve = cost_curve(costs, gamma, weights, normalize, full)
    rs = cost_curve(costs, lambda p: full, weights, normalize, full)
    for (p, a, b, t), (_, _, _, trs) in zip(curve, rs):
        rows.append([str(p), _fmt(a), _fmt(b), _fmt(t), _fmt(trs)])
    return rows


def profile_rows(spec: CodeSpec, planner: str = "auto") -> list[list[str]]:
    prof = bandwidth_profile(spec, planner)
    rows = [["p", "gamma_bar", "gamma_min", "gamma_rs"]]
    for p in range(1, spec.m + 1):
        rows.append([str(p), _fmt(prof[p]), _fmt(gamma_lower_bound(spec.L, spec.k, p)),
                     str(spec.k * spec.L)])
    return rows


# -- bench ------------------------------------------------------------------


@dataclass
class BenchRow:
    w: int
    p: int
    trials: int
    blocks_read: float
    seconds: float
    mb_per_s: float


def cmd_bench(spec: CodeSpec, size: int = 4 << 20, trials: int = 3, widths=(8, 16, 32),
              seed: int = 0) -> list[BenchRow]:
    """Time single-failure recovery per (w, p) on random data.

    Each recovery is compared with the original content before its time
    counts.  The coefficient table is reused at wider symbol widths (its
    entries stay nonzero), so only the arithmetic changes between rows.
    """
    rows: list[BenchRow] = []
    if trials <= 0:
        return rows
    rng = np.random.default_rng(seed)
    for w in widths:
        sw = spec if w == spec.w else replace(spec, w=w)
        if w < spec.w:
            raise CodeSpecError("bench widths must not be narrower than the code's")
        s = symbols_per_block(sw, size)
        q = 1 << w
        data = rng.integers(0, q, size=(sw.k, sw.L, s), dtype=np.uint64).astype(sw.field.dtype)
        nodes = encode_nodes(sw, data)
        for p in range(1, sw.m + 1):
            total_t = 0.0
            blocks = 0
            for _ in range(trials):
                failed = int(rng.integers(0, sw.k))
                subset = sorted(int(x) for x in rng.choice(sw.m, size=p, replace=False))
                plan = plan_repair(sw, failed, subset)
                t0 = time.perf_counter()
                out = execute_plan(sw, nodes, plan)
                dt = time.perf_counter() - t0
                if not np.array_equal(out, nodes[failed]):
                    raise PlanError(f"bench recovery mismatch (w={w}, p={p}, node {failed})")
                total_t += dt
                blocks += plan.cost
            recovered_mb = trials * sw.L * s * (w // 8) / 1e6
            rows.append(BenchRow(w, p, trials, blocks / trials, total_t,
                                 recovered_mb / total_t if total_t > 0 else float("inf")))
            log.info("w=%d p=%d %.1f blocks %.1f MB/s", w, p, blocks / trials, rows[-1].mb_per_s)
    return rows


__all__ = [
    "resolve_spec", "cmd_encode", "cmd_decode", "cmd_repair", "RepairReport", "figure_repair_bw",
    "figure_total_cost", "profile_rows", "cmd_bench", "BenchRow", "reference_rotation_code",
    "available_nodes",
]
