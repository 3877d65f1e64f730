"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 malformed input.
Set QITU_DEBUG=1 to run the exhaustive oracles after every solver step.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import serialization as ser
from .demand_graph import MarginalDemandGraph, find_mat, to_dot
from .errors import CapacityError, DomainError, InputError, InvariantError, QituError
from .generate import FAMILIES, random_instance
from .model import ManyToOneMatching, is_feasible, right_slope
from .solver import solve
from .valuations import check_gs
from .verify import (MAX_BRUTE, KnapsackInstance, brute_knapsack, build_nq_from_knapsack,
                     is_competitive_equilibrium, is_nq_competitive_equilibrium, is_partially_stable, is_stable,
                     nq_equilibrium_outcome, nq_utility)

log = logging.getLogger("qitu")

OK, FAILED, BAD_INPUT = 0, 1, 2
BENCH_FIELDS = ("seed", "n", "m", "outer_iters", "price_steps", "segment_crossings", "micros")


class Usage(Exception):
    pass


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return ser.loads(text)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _ints(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


# ---------------------------------------------------------------------------
# solve


def _trace_line(data: dict) -> str:
    row = {"tree_items": data["tree_items"], "d": data["d"], "lambda": data["lambda"], "cause": data["cause"]}
    return json.dumps(ser.jsonable(row), sort_keys=True)


def _matroid_record(ext, data: dict) -> dict:
    root = data["root"]
    buyers = sorted({k[0] for k in data["tree_units"] if k != root})
    prices = data["prices_before"]
    ground = [(i, j) for i in buyers for j in data["tree_items"]]
    return {
        "root": list(root),
        "ground": [list(e) for e in ground],
        "slopes": {f"{i},{j}": ser.rat_str(right_slope(ext.q(i, j), prices[j])) for i, j in ground},
        "basis": [list(e) for e in data["basis"]],
    }


def cmd_solve(args) -> int:
    inst = ser.instance_from_json(_read_json(args.input))
    events = []
    report = solve(inst, strict_gs=not args.assume_gs, debug=True if args.debug else None,
                   on_event=events.append)
    out = report.outcome
    _write(args.output, ser.dumps(ser.outcome_to_json(out)))

    ext = report.extended
    if args.trace:
        lines = [_trace_line(e.data) for e in events if e.kind == "price_increase"]
        Path(args.trace).write_text("".join(x + "\n" for x in lines))
    if args.dump_matroid:
        recs = [_matroid_record(ext, e.data) for e in events if e.kind == "price_increase"]
        Path(args.dump_matroid).write_text(ser.dumps(recs))
    if args.dump_graphs:
        folder = Path(args.dump_graphs)
        folder.mkdir(parents=True, exist_ok=True)
        step = 0
        for e in events:
            if e.kind != "mat_built":
                continue
            nu = ManyToOneMatching(e.data["nu"])
            graph = MarginalDemandGraph(ext, nu, e.data["prices"])
            mat = find_mat(graph, nu, e.data["root"])
            (folder / f"step{step:04d}.dot").write_text(to_dot(graph, nu, mat, name=f"step{step}"))
            step += 1
    log.info("outer=%d price_steps=%d crossings=%d time=%.3fs", report.outer_iterations,
             report.price_increases, report.segment_crossings, report.wall_time)

    if args.seed_check:
        mode = "brute" if inst.n_items <= MAX_BRUTE else "greedy"
        if not is_competitive_equilibrium(inst, out.matching, out.prices, mode=mode):
            print(f"seed-check: outcome is NOT a competitive equilibrium ({mode})", file=sys.stderr)
            return FAILED
        print(f"seed-check: competitive equilibrium ({mode})", file=sys.stderr)
    return OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    inst = ser.instance_from_json(_read_json(args.instance))
    out = ser.outcome_from_json(_read_json(args.outcome))
    for i, j in out.matching:
        if not (0 <= i < inst.n_buyers and 0 <= j < inst.n_items):
            raise InputError(f"outcome pair {(i, j)} is outside the instance")
    for j, x in out.prices.items():
        if not 0 <= j < inst.n_items or x < 0:
            raise InputError(f"bad price entry for item {j}")
    mode = args.mode
    if mode == "brute" and inst.n_items > MAX_BRUTE:
        mode = "greedy"
    load = {}
    for _, j in out.matching:
        load[j] = load.get(j, 0) + 1
    within = all(load[j] <= inst.capacities[j] for j in load)
    verdicts = {
        "capacity": within,
        "feasible": within and is_feasible(inst, out),
        "partially_stable": is_partially_stable(inst, out.matching, out.prices, mode=mode),
        "stable": is_stable(inst, out.matching, out.prices),
        "competitive_equilibrium": is_competitive_equilibrium(inst, out.matching, out.prices, mode=mode),
    }
    for name, ok in verdicts.items():
        print(f"{name}: {'yes' if ok else 'no'}")
    return OK if verdicts["competitive_equilibrium"] else FAILED


# ---------------------------------------------------------------------------
# gen / check-gs / reduce-knapsack


def cmd_gen(args) -> int:
    try:
        inst = random_instance(args.family, args.n, args.m, args.caps, args.segments, args.seed, mixed=args.mixed)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    _write(args.output, ser.dumps(ser.instance_to_json(inst)))
    return OK


def cmd_check_gs(args) -> int:
    inst = ser.instance_from_json(_read_json(args.instance))
    bad = 0
    for i, v in enumerate(inst.valuations):
        w = check_gs(v)
        if w.passed:
            print(f"buyer {i}: pass")
        else:
            bad += 1
            print(f"buyer {i}: {w.kind} violated at bundle={list(w.bundle)} items={list(w.items)}")
    return FAILED if bad else OK


def _knapsack_from_args(args) -> KnapsackInstance:
    if args.input:
        obj = _read_json(args.input)
        try:
            return KnapsackInstance(obj["values"], obj["costs"], obj["budget"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"knapsack file needs values, costs and budget ({exc})") from exc
    if args.values is None or args.costs is None or args.budget is None:
        raise Usage("give a knapsack file or all of --values, --costs, --budget")
    return KnapsackInstance(_ints(args.values), _ints(args.costs), args.budget)


def cmd_reduce_knapsack(args) -> int:
    try:
        ks = _knapsack_from_args(args)
    except (DomainError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    nq = build_nq_from_knapsack(ks)
    bundle, matching, prices = nq_equilibrium_outcome(nq)
    is_ce = is_nq_competitive_equilibrium(nq, matching, prices)
    value = sum(ks.values[j] for j in bundle)
    best, best_bundle = brute_knapsack(ks)
    doc = {
        "instance": ser.instance_to_json(nq.inst),
        "main_buyer": nq.main,
        "value_for_money": ser.price_fn_to_json(nq.r),
        "prices": [ser.rat_str(x) for x in prices],
        "matching": [list(e) for e in sorted(matching)],
        "main_bundle": sorted(bundle),
        "main_utility": ser.rat_str(nq_utility(nq, nq.main, bundle, prices)),
        "bundle_value": value,
        "knapsack_optimum": best,
        "knapsack_bundle": sorted(best_bundle),
        "is_equilibrium": is_ce,
    }
    _write(args.output, ser.dumps(doc))
    return OK if is_ce and value == best else FAILED


# ---------------------------------------------------------------------------
# bench


def _bench_one(job):
    seed, n, m, family, caps, segments, mode = job
    fam = FAMILIES[seed % len(FAMILIES)] if family == "all" else family
    inst = random_instance(fam, n, m, caps, segments, seed)
    t0 = time.perf_counter()
    report = solve(inst, strict_gs=False)
    micros = int((time.perf_counter() - t0) * 1e6)
    out = report.outcome
    ok = is_competitive_equilibrium(inst, out.matching, out.prices, mode=mode)
    row = {"seed": seed, "n": n, "m": m, "outer_iters": report.outer_iterations,
           "price_steps": report.price_increases, "segment_crossings": report.segment_crossings,
           "micros": micros}
    return row, ok, fam


def cmd_bench(args) -> int:
    if args.config:
        cfg = _read_json(args.config)
        if not isinstance(cfg, dict):
            raise InputError("bench config must be a JSON object")
        for key in ("n", "m", "seeds", "family", "caps", "segments", "jobs"):
            if key in cfg:
                setattr(args, key, ",".join(map(str, cfg[key])) if isinstance(cfg[key], list) else cfg[key])
    try:
        ns, ms, seeds = _ints(str(args.n)), _ints(str(args.m)), _ints(str(args.seeds))
    except ValueError as exc:
        raise InputError(f"bad grid specification: {exc}") from exc
    if args.family != "all" and args.family not in FAMILIES:
        raise InputError(f"unknown family {args.family!r}")
    if any(x < 1 for x in ns + ms) or args.caps < 1 or args.segments < 1:
        raise InputError("sizes must be at least 1")
    jobs = [(s, n, m, args.family, args.caps, args.segments, args.mode) for n in ns for m in ms for s in seeds]

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_one, jobs, chunksize=4))
    else:
        results = [_bench_one(j) for j in jobs]

    sink = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(sink, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row, _, _ in results:
            writer.writerow(row)
    finally:
        if sink is not sys.stdout:
            sink.close()
    failures = [(row["seed"], row["n"], row["m"], fam) for row, ok, fam in results if not ok]
    for seed, n, m, fam in failures:
        print(f"verification failed: seed={seed} n={n} m={m} family={fam}", file=sys.stderr)
    return FAILED if failures else OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qitu", description="Competitive equilibria with gross-substitutes buyers "
                                                          "and piecewise linear payments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver statistics to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute a competitive equilibrium")
    s.add_argument("input", help="instance JSON ('-' for stdin)")
    gs = s.add_mutually_exclusive_group()
    gs.add_argument("--strict-gs", action="store_true", help="check every valuation is GS first (default)")
    gs.add_argument("--assume-gs", action="store_true", help="skip the exhaustive GS check")
    s.add_argument("--trace", metavar="FILE", help="one JSON line per price increase")
    s.add_argument("--dump-graphs", metavar="DIR", help="write each demand graph and MAT as DOT")
    s.add_argument("--dump-matroid", metavar="FILE", help="write matroid ground sets, slopes and bases")
    s.add_argument("--seed-check", action="store_true", help="verify the output by brute force")
    s.add_argument("--debug", action="store_true", help="same as QITU_DEBUG=1")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check an outcome against an instance")
    v.add_argument("instance")
    v.add_argument("outcome")
    v.add_argument("--mode", choices=("brute", "greedy"), default="brute")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--caps", type=int, default=1)
    g.add_argument("--segments", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mixed", action="store_true", help="draw each buyer's family at random")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check-gs", help="exhaustive gross-substitutes check of every buyer")
    c.add_argument("instance")
    c.set_defaults(func=cmd_check_gs)

    r = sub.add_parser("reduce-knapsack", help="build the NQ instance for a knapsack problem")
    r.add_argument("input", nargs="?", help='JSON {"values": [...], "costs": [...], "budget": C}')
    r.add_argument("--values")
    r.add_argument("--costs")
    r.add_argument("--budget", type=int)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_reduce_knapsack)

    b = sub.add_parser("bench", help="solve a grid of random instances and emit CSV")
    b.add_argument("--config", help="JSON object overriding the grid options")
    b.add_argument("--n", default="1-4", help="buyer counts, e.g. 1-4 or 2,4,8")
    b.add_argument("--m", default="1-4", help="item counts")
    b.add_argument("--seeds", default="0-49", help="seed list or range")
    b.add_argument("--family", default="all", help="a family name, or 'all' to cycle by seed")
    b.add_argument("--caps", type=int, default=2)
    b.add_argument("--segments", type=int, default=3)
    b.add_argument("--mode", choices=("brute", "greedy"), default="greedy")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except Usage as exc:
        parser.error(str(exc))
    except (InputError, CapacityError, DomainError) as exc:
        print(f"qitu: error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except InvariantError as exc:
        print(f"qitu: internal invariant failed: {exc}", file=sys.stderr)
        if exc.state is not None:
            print(json.dumps(ser.jsonable(exc.state), indent=2), file=sys.stderr)
        return FAILED
    except QituError as exc:
        print(f"qitu: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
