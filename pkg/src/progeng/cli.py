"""``progeng`` command line.

Node labels on the command line are 1-based (``S1``..``Sk``, ``P1``..``Pm``);
the library itself indexes from 0.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import commands as ops
from .codes import CodeSpec, CodeSpecError
from .helpers import SelectionError, cost_curve, select_helpers
from .mds import LambdaSearchExhausted, is_mds
from .repair import PlanError, bandwidth_profile, gamma_lower_bound, gamma_permutation, plan_repair
from .search import SearchConfig, dedupe_equivalent, search_rotation_codes
from .shards import ShardError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("progeng")


class UsageError(Exception):
    pass


def parse_node(text: str, k: int) -> int:
    """``S2`` / ``P1`` / bare ``2`` (systematic) to a 0-based global node id."""
    t = text.strip().upper()
    try:
        if t.startswith("P"):
            return k + int(t[1:]) - 1
        if t.startswith("S"):
            t = t[1:]
        return int(t) - 1
    except ValueError:
        raise UsageError(f"bad node label {text!r}") from None


def parse_parities(text: str | None, m: int) -> list[int] | None:
    if text is None or text.strip().lower() == "all":
        return None
    out = []
    for part in text.split(","):
        part = part.strip().upper().lstrip("P")
        try:
            j = int(part) - 1
        except ValueError:
            raise UsageError(f"bad parity list {text!r}") from None
        if not 0 <= j < m:
            raise UsageError(f"parity {j + 1} out of range 1..{m}")
        out.append(j)
    return out


def parse_fracs(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad number list {text!r}") from None


def _fmt(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.6f}"


def write_csv(rows, path=None):
    if path is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerows(rows)
    else:
        with open(path, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)


def _spec(args, allow_zero: bool = False) -> CodeSpec:
    if not args.spec:
        raise UsageError("--spec is required")
    return ops.resolve_spec(args.spec, args.w, args.seed, allow_zero)


# -- subcommands ------------------------------------------------------------


def cmd_make_spec(args) -> int:
    spec = _spec(args)
    if args.out:
        spec.save(args.out)
    else:
        print(spec.to_json())
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _spec(args, allow_zero=True)
    res = is_mds(spec, args.method)
    if res:
        print(f"MDS: all {res.checked} subsets of {spec.k} nodes decode")
        return EXIT_OK
    print("NOT MDS: failing subset " + " ".join(spec.node_label(v) for v in res.failing))
    return EXIT_FAIL


def cmd_encode(args) -> int:
    spec = _spec(args)
    paths = ops.cmd_encode(args.input, spec, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_repair_plan(args) -> int:
    spec = _spec(args)
    failed = parse_node(args.failed, spec.k)
    if not 0 <= failed < spec.n:
        raise UsageError(f"node {args.failed} out of range")
    plan = plan_repair(spec, failed, parse_parities(args.parities, spec.m), args.mode)
    print(f"failed: {spec.node_label(failed)}")
    print(f"plan: {plan.kind}" + ("" if plan.exact else " (not proven optimal)"))
    print("parities: " + " ".join(spec.node_label(spec.k + j) for j in plan.parities))
    for v, rows in plan.rows_by_node().items():
        print(f"  {spec.node_label(v)}: rows {','.join(map(str, rows))}")
    if args.verbose:
        for s in plan.steps:
            terms = " + ".join(f"{c}*{spec.node_label(v)}[{r}]" for v, r, c in s.terms)
            print(f"  block {s.target} = {terms}")
    print(f"cost: {plan.cost} blocks")
    if failed < spec.k:
        print(f"lower bound: {_fmt(gamma_lower_bound(spec.L, spec.k, len(plan.parities)))}")
    return EXIT_OK


def cmd_repair(args) -> int:
    shard_dir = Path(args.dir)
    spec = ops.resolve_spec(args.spec, args.w, args.seed) if args.spec else CodeSpec.load(
        shard_dir / ops.SPEC_FILE)
    failed = parse_node(args.failed, spec.k)
    rep = ops.cmd_repair(shard_dir, failed, parse_parities(args.parities, spec.m), spec,
                         args.out, args.mode)
    for line in rep.lines(spec):
        print(line)
    return EXIT_OK


def cmd_decode(args) -> int:
    data = ops.cmd_decode(args.dir)
    Path(args.out).write_bytes(data)
    print(f"wrote {len(data)} bytes to {args.out}")
    return EXIT_OK


def cmd_profile(args) -> int:
    write_csv(ops.profile_rows(_spec(args), args.planner), args.csv)
    return EXIT_OK


def cmd_search(args) -> int:
    cfg = SearchConfig(args.n, args.k, args.L, args.w, not args.no_symmetry, seed=args.seed,
                       limit=args.limit)
    t0 = time.perf_counter()
    results = search_rotation_codes(cfg, keep_all=args.all)
    if args.dedupe:
        results = dedupe_equivalent(results)
    log.info("search: %d results in %.2f s", len(results), time.perf_counter() - t0)
    out = Path(args.out) if args.out else None
    m = cfg.m
    rows = [["candidate"] + [f"gamma_bar_{p}" for p in range(1, m + 1)] + ["progressive", "shifts"]]
    for r in results:
        shifts = "/".join(",".join(map(str, row)) for row in r.shifts)
        rows.append([str(r.candidate)] + [_fmt(g) for g in r.gamma_bar]
                    + [str(int(r.progressive)), shifts])
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            r.spec.save(out / f"candidate_{r.candidate:06d}.json")
        write_csv(rows, out / "results.csv")
        print(f"{len(results)} codes written to {out}")
    else:
        write_csv(rows)
    return EXIT_OK


def _gamma_source(args, m: int):
    """Returns ``(gamma callable, full bandwidth kL)``."""
    g = args.gamma
    if g is None:
        raise UsageError("--gamma is required")
    kind, _, rest = g.partition(":")
    if kind == "permutation" and not Path(g).exists():
        try:
            n, k = (int(x) for x in rest.split(","))
        except ValueError:
            raise UsageError(f"bad --gamma {g!r}") from None
        if n - k != m:
            raise UsageError(f"--gamma has {n - k} parities but --costs lists {m}")
        return (lambda p: gamma_permutation(n, k, p)), k * (n - k) ** k
    if kind == "list":
        vals = parse_fracs(rest)
        if len(vals) != m:
            raise UsageError("--gamma list length must match --costs")
        return (lambda p: vals[p - 1]), vals[0]
    spec = ops.resolve_spec(g, args.w, args.seed)
    if spec.m != m:
        raise UsageError(f"spec has {spec.m} parities but --costs lists {m}")
    prof = bandwidth_profile(spec)
    return (lambda p: prof[p]), spec.k * spec.L


def cmd_select(args) -> int:
    costs = parse_fracs(args.costs)
    weights = parse_fracs(args.weights)
    if len(weights) != 2:
        raise UsageError("--weights takes two values")
    gamma, full = _gamma_source(args, len(costs))
    normalize = not args.raw
    if args.csv:
        rows = [["p", "access", "bandwidth", "total"]]
        for p, a, b, t in cost_curve(costs, gamma, weights, normalize, full):
            rows.append([str(p), _fmt(a), _fmt(b), _fmt(t)])
        write_csv(rows)
        return EXIT_OK
    res = select_helpers(costs, gamma, weights, normalize, full)
    print(f"p*: {res.p}")
    print("selected: " + " ".join(f"P{j + 1}" for j in res.selected))
    print(f"objective: {res.objective} ({float(res.objective):.6f})")
    for p, t in enumerate(res.trace, start=1):
        print(f"  p={p} total={_fmt(t)}")
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.which == "repair_bw":
        rows = ops.figure_repair_bw(w=args.w, seed=args.seed)
    else:
        costs = parse_fracs(args.costs)
        weights = parse_fracs(args.weights)
        if len(weights) != 2:
            raise UsageError("--weights takes two values")
        if len(costs) != args.n - args.k:
            raise UsageError("--costs must list one value per parity")
        rows = ops.figure_total_cost(costs, weights, args.n, args.k, not args.raw)
    write_csv(rows, args.csv)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = _spec(args)
    widths = [int(x) for x in args.widths.split(",")]
    rows = ops.cmd_bench(spec, int(args.size_mb * (1 << 20)), args.trials, widths, args.seed)
    out = [["w", "p", "trials", "blocks_read", "seconds", "mb_per_s"]]
    for r in rows:
        out.append([str(r.w), str(r.p), str(r.trials), f"{r.blocks_read:g}", f"{r.seconds:.4f}",
                    f"{r.mb_per_s:.2f}"])
    write_csv(out, args.csv)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def globals_(suppress: bool) -> argparse.ArgumentParser:
        # the subcommand copy must not overwrite flags given before the subcommand
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--spec", default=d(None), help="CodeSpec JSON file or shorthand "
                       "(rotation63, permutation:N,K, rs:N,K,L, rotation:N,K,L:SHIFTS)")
        g.add_argument("--seed", type=int, default=d(0))
        g.add_argument("--w", type=int, default=d(8), choices=(8, 16, 32), help="symbol width")
        g.add_argument("-v", "--verbose", action="store_true", default=d(False))
        return g

    common = globals_(True)
    ap = argparse.ArgumentParser(prog="progeng", parents=[globals_(False)],
                                 description="Progressive-engagement MDS erasure codes")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("make-spec", cmd_make_spec, "write a CodeSpec JSON")
    p.add_argument("--out")

    p = add("verify-mds", cmd_verify, "check every k-subset of nodes")
    p.add_argument("--method", default="auto", choices=("auto", "dense", "structured"))

    p = add("encode", cmd_encode, "split and encode a file into shards")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output directory")

    modes = ("auto", "exact", "greedy", "two-phase")
    p = add("repair-plan", cmd_repair_plan, "print a single-failure repair plan")
    p.add_argument("--failed", required=True, help="S<i>, P<j> or a systematic index (1-based)")
    p.add_argument("--parities", help="comma list of parity numbers (1-based) or 'all'")
    p.add_argument("--mode", default="auto", choices=modes)

    p = add("repair", cmd_repair, "rebuild a lost shard from the others")
    p.add_argument("dir", help="shard directory")
    p.add_argument("--failed", required=True)
    p.add_argument("--parities")
    p.add_argument("--mode", default="auto", choices=modes)
    p.add_argument("--out", help="where to write the shard (default: back into dir)")

    p = add("decode", cmd_decode, "reassemble the file from systematic shards")
    p.add_argument("dir")
    p.add_argument("--out", required=True)

    p = add("profile", cmd_profile, "average bandwidth per number of parities (CSV)")
    p.add_argument("--planner", default="auto", choices=("auto", "exact", "greedy", "two-phase"))
    p.add_argument("--csv", help="write to file instead of stdout")

    p = add("search", cmd_search, "search rotation codes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--out", help="directory for spec JSONs and results.csv")
    p.add_argument("--no-symmetry", action="store_true")
    p.add_argument("--dedupe", action="store_true", help="one code per equivalence class")
    p.add_argument("--all", action="store_true", help="keep non-progressive codes too")

    p = add("select", cmd_select, "choose parity helpers")
    p.add_argument("--costs", required=True, help="accessing cost per parity, comma separated")
    p.add_argument("--weights", default="1/2,1/2")
    p.add_argument("--gamma", help="permutation:N,K, list:G1,G2,..., or a spec")
    p.add_argument("--raw", action="store_true", help="do not normalise")
    p.add_argument("--csv", action="store_true", help="emit the per-p curve as CSV")

    p = add("figure", cmd_figure, "CSV data for the bandwidth and total-cost plots")
    p.add_argument("which", choices=("repair_bw", "total_cost"))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--costs", default="1,2,3,4,5,6,7")
    p.add_argument("--weights", default="1/2,1/2")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--csv", help="write to file instead of stdout")

    p = add("bench", cmd_bench, "time single-failure recovery")
    p.add_argument("--size-mb", type=float, default=4.0)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--widths", default="8,16,32")
    p.add_argument("--csv")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"progeng: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CodeSpecError, PlanError, ShardError, SelectionError, LambdaSearchExhausted,
            FileNotFoundError) as exc:
        print(f"progeng: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
