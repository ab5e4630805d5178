"""Command-line front end: ``radius``, ``verify``, ``kernel`` and ``bench``.

Exit codes: 0 ok, 1 violation, 2 usage or parse error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from collections import Counter
from itertools import product as iproduct

import numpy as np

from . import __version__
from . import chains as ch
from .errors import BudgetError, DomainError, HJSRError, InputError
from .io import (
    deterministic_part,
    digest,
    dumps,
    inputs_document,
    load_document,
    parse_range,
    report_document,
    write_report,
)
from .kernels import catalog as kernel_catalog, discretize
from .sets import DEFAULT_MAX_PRODUCTS, EnumerationBudget, MatrixSet, enumerate_products

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEPTH_ENV = "HJSR_DEFAULT_DEPTH"
GRID_CHOICES = (8, 16, 32, 64, 128)

log = logging.getLogger("hjsr")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# shared option handling
# ---------------------------------------------------------------------------

def _depth(args, fallback: int = 6) -> int:
    if args.depth is not None:
        return args.depth
    env = os.environ.get(DEPTH_ENV)
    if env:
        try:
            d = int(env)
        except ValueError:
            raise UsageError(f"{DEPTH_ENV}={env!r} is not an integer") from None
        if d < 1:
            raise UsageError(f"{DEPTH_ENV} must be at least 1")
        return d
    return fallback


def _prune_value(text):
    if text is None:
        return True
    try:
        d = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta {text!r}") from None
    if not d > 0:
        raise argparse.ArgumentTypeError("delta must be positive")
    return d


def _budget(args, default_prune: bool, depth: int | None = None) -> EnumerationBudget:
    prune = args.prune if args.prune is not None else default_prune
    if getattr(args, "no_prune", False):
        prune = False
    return EnumerationBudget(
        max_depth=depth if depth is not None else _depth(args),
        max_products=args.max_products,
        prune=bool(prune),
        delta=prune if isinstance(prune, float) else None,
        workers=args.workers,
    )


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be at least 1")
    return v


def _range_arg(text):
    try:
        return parse_range(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _chains_arg(text):
    try:
        return [c.id for c in ch.select_chains(text)]
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grids_arg(text):
    out = []
    for part in text.split(","):
        try:
            g = int(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {part!r}") from None
        if g not in GRID_CHOICES:
            raise argparse.ArgumentTypeError(f"grid {g} not in {GRID_CHOICES}")
        out.append(g)
    return sorted(set(out))


def _emit(report: dict, args) -> None:
    if args.out:
        write_report(report, args.out)


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.12g}"


# ---------------------------------------------------------------------------
# radius
# ---------------------------------------------------------------------------

def cmd_radius(args) -> int:
    t0 = time.perf_counter()
    doc = load_document(args.input)
    candidates = doc.names("matrix_set") + doc.names("matrix")
    if args.set:
        names = [s.strip() for s in args.set.split(",")]
    elif len(candidates) == 1:
        names = candidates
    else:
        raise UsageError(f"--set is required; the input defines {candidates}")
    budget = _budget(args, default_prune=False)
    t1 = time.perf_counter()
    records, rows = [], []
    for name in names:
        S = doc.as_set(name, path="--set")
        try:
            res = enumerate_products(S, budget)
        except BudgetError as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            records.append({"name": name, "error": str(exc)})
            continue
        b = res.bracket
        records.append({"name": name, "size": len(S), "dim": S.dim, "bracket": b.as_dict(),
                        "prune_norm": res.norm,
                        "levels": [vars(lv) for lv in res.levels]})
        rows.append((name, b))
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["set", "depth", "products", "live", "pruned", "lower", "upper"])
                for lv in res.levels:
                    w.writerow([name, lv.depth, lv.products, lv.live, lv.pruned,
                                repr(lv.lower), repr(lv.upper)])
    t2 = time.perf_counter()

    print(f"{'set':<12} {'lower':>18} {'upper':>18} {'d_lo':>5} {'d_up':>5} {'products':>10}  method")
    for name, b in rows:
        flag = " (truncated)" if b.truncated else ""
        print(f"{name:<12} {b.lower:>18.12g} {b.upper:>18.12g} {b.lower_depth:>5} "
              f"{b.upper_depth:>5} {b.products:>10}  {b.method}{flag}")
    raw = open(args.input).read()
    body = {"depth": budget.max_depth, "pruning": budget.prune, "sets": records}
    _emit(report_document("radius", digest(raw), body,
                          {"parse": t1 - t0, "enumerate": t2 - t1}), args)
    return EXIT_INCONCLUSIVE if any("error" in r for r in records) else EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _summarise(reports) -> dict:
    per_chain: dict = {}
    for r in reports:
        per_chain.setdefault(r.id, Counter())[r.verdict] += 1
    total = Counter(r.verdict for r in reports)
    return {"reports": len(reports),
            "verdicts": {k: total.get(k, 0) for k in (ch.CONSISTENT, ch.VIOLATION, ch.INCONCLUSIVE)},
            "per_chain": {k: dict(sorted(v.items())) for k, v in per_chain.items()}}


def _exit_for(summary: dict) -> int:
    v = summary["verdicts"]
    if v[ch.VIOLATION]:
        return EXIT_VIOLATION
    if v[ch.INCONCLUSIVE]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _print_report_terms(r) -> None:
    print(f"{r.id}: {r.verdict}")
    for si, seq in enumerate(r.sequences):
        for ti, t in enumerate(seq):
            tag = f"  [{si}.{ti}]" if len(r.sequences) > 1 else f"  [{ti}]"
            print(f"{tag} {t.expr:<70} [{_fmt(t.lower)}, {_fmt(t.upper)}]")


def _run_campaign(seed, trials, dims, sizes, budget, tol, chains, counterexamples):
    def on_trial(t, reports):
        bad = [r for r in reports if r.verdict == ch.VIOLATION]
        if bad:
            _, inputs, params = ch.trial_inputs(seed, t, dims, sizes)
            dump = inputs_document(inputs, [r.id for r in bad], params)
            counterexamples.append({"trial": t, "chains": [r.id for r in bad], "input": dump})
            print(f"VIOLATION in trial {t} ({', '.join(r.id for r in bad)}); inputs:", file=sys.stderr)
            print(dumps(dump), file=sys.stderr)
        if (t + 1) % 25 == 0:
            log.info("trial %d/%d done", t + 1, trials)

    return ch.randomized_campaign(seed, trials, dims, sizes, budget, tol, chains, on_trial=on_trial)


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    counterexamples: list = []
    tol = args.tol
    if args.random is not None:
        seed, trials = args.random
        if seed < 0 or trials < 1:
            raise UsageError("--random needs SEED >= 0 and TRIALS >= 1")
        dims = args.dims or (2, 4)
        sizes = args.sizes or (1, 3)
        chains = args.chains or "all"
        budget = _budget(args, default_prune=True)
        input_digest = digest(json.dumps({"random": [seed, trials], "dims": dims, "sizes": sizes,
                                          "chains": chains, "depth": budget.max_depth,
                                          "prune": budget.prune, "delta": budget.delta,
                                          "max_products": budget.max_products, "tol": tol}))
        t1 = time.perf_counter()
        reports = _run_campaign(seed, trials, dims, sizes, budget, tol, chains, counterexamples)
        meta = {"mode": "random", "seed": seed, "trials": trials, "dims": list(dims),
                "set_sizes": list(sizes), "depth": budget.max_depth, "pruning": budget.prune}
    elif args.input:
        doc = load_document(args.input)
        input_digest = digest(open(args.input).read())
        t1 = time.perf_counter()
        reports = []
        meta = {"mode": "input"}
        if doc.campaign is not None:
            c = doc.campaign
            if args.tol == ch.DEFAULT_TOL:
                tol = c.tol
            depth = args.depth if args.depth is not None else c.depth
            budget = _budget(args, default_prune=True if c.pruning is None else c.pruning,
                             depth=depth if depth is not None else _depth(args))
            sel = args.chains or c.chains
            reports += _run_campaign(c.seed, c.trials, args.dims or c.dims, args.sizes or c.set_sizes,
                                     budget, tol, sel, counterexamples)
            meta.update({"seed": c.seed, "trials": c.trials, "depth": budget.max_depth})
        budget = _budget(args, default_prune=True)
        wanted = set(args.chains) if args.chains else None
        for i, req in enumerate(doc.chains):
            if wanted is not None and req.id not in wanted:
                continue
            try:
                spec = ch.get_chain(req.id)
                params = ch.default_params(**req.params)
            except (DomainError, TypeError) as exc:
                raise InputError(str(exc), f"$.chains[{i}]") from None
            roles = spec.roles(params)
            inputs = {}
            for role in sorted(roles):
                target = req.roles.get(role, role)
                inputs[role] = doc.as_set(target, path=f"$.chains[{i}].roles.{role}")
            dims = {S.dim for S in inputs.values()}
            if len(dims) != 1:
                raise InputError(f"chain inputs have dimensions {sorted(dims)}", f"$.chains[{i}]")
            r = ch.evaluate_chain(spec, inputs, budget, tol, params, exact=req.exact,
                                  digest={"request": i, "roles": {k: req.roles.get(k, k) for k in sorted(roles)}})
            reports.append(r)
            if r.verdict == ch.VIOLATION:
                dump = inputs_document({k: (v[0] if len(v) == 1 else v) for k, v in inputs.items()},
                                       [r.id], params)
                counterexamples.append({"request": i, "chains": [r.id], "input": dump})
                print(f"VIOLATION in {r.id}; inputs:", file=sys.stderr)
                print(dumps(dump), file=sys.stderr)
        if not reports:
            raise UsageError("the input has neither a campaign block nor chain requests to run")
    else:
        raise UsageError("verify needs --input or --random SEED TRIALS")
    t2 = time.perf_counter()

    summary = _summarise(reports)
    if args.input and not args.random and len(reports) <= 25:
        for r in reports:
            _print_report_terms(r)
    print(f"{'chain':<6} {'consistent':>10} {'violation':>10} {'inconclusive':>13}")
    for cid, cnt in summary["per_chain"].items():
        print(f"{cid:<6} {cnt.get(ch.CONSISTENT, 0):>10} {cnt.get(ch.VIOLATION, 0):>10} "
              f"{cnt.get(ch.INCONCLUSIVE, 0):>13}")
    v = summary["verdicts"]
    print(f"total: {summary['reports']} reports, {v[ch.VIOLATION]} violations, "
          f"{v[ch.INCONCLUSIVE]} inconclusive")
    body = {"meta": meta, "tol": tol, "summary": summary,
            "counterexamples": counterexamples, "chains": [r.as_dict() for r in reports]}
    _emit(report_document("verify", input_digest, body, {"setup": t1 - t0, "evaluate": t2 - t1}), args)
    return _exit_for(summary)


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

def kernel_study(specs: dict, groups: list, grids, chain_ids, tol: float = ch.DEFAULT_TOL):
    """Evaluate kernel chains for each group of kernel names on each grid.

    Returns ``(records, residual_rows, flips)``; a residual row compares a
    term's midpoint value on grid ``n`` with the next finer grid.
    """
    records, rows, flips = [], [], []
    models = {(name, n): discretize(specs[name], n) for name in specs for n in grids}
    for cid in chain_ids:
        spec = ch.get_chain(cid)
        for group in groups:
            per_grid = []
            for n in grids:
                r = ch.evaluate_kernel_chain(spec, [models[(g, n)] for g in group], tol,
                                             digest={"kernels": list(group), "grid": n})
                per_grid.append(r)
                records.append(r)
            if len({r.verdict for r in per_grid}) > 1:
                flips.append({"chain": cid, "kernels": list(group),
                              "verdicts": [r.verdict for r in per_grid]})
            for a, b, n, n2 in zip(per_grid, per_grid[1:], grids, grids[1:]):
                for si, (sa, sb) in enumerate(zip(a.sequences, b.sequences)):
                    for ti, (ta, tb) in enumerate(zip(sa, sb)):
                        va = 0.5 * (ta.lower + ta.upper)
                        vb = 0.5 * (tb.lower + tb.upper)
                        rows.append({"chain": cid, "kernels": "+".join(group), "term": ti,
                                     "expr": ta.expr, "grid": n, "next_grid": n2,
                                     "value": va, "next_value": vb, "residual": abs(vb - va),
                                     "verdict": a.verdict, "next_verdict": b.verdict})
    return records, rows, flips


def cmd_kernel(args) -> int:
    t0 = time.perf_counter()
    if args.input:
        doc = load_document(args.input)
        specs = {n: doc.entries[n].value for n in doc.names("kernel_spec")}
        input_digest = digest(open(args.input).read())
    else:
        specs = kernel_catalog()
        input_digest = digest(json.dumps({k: v.to_payload() for k, v in specs.items()}))
    if not specs:
        raise UsageError("no kernel specs available")
    if args.kernels:
        names = [s.strip() for s in args.kernels.split(",")]
        for nm in names:
            if nm not in specs:
                raise UsageError(f"unknown kernel {nm!r}; available: {sorted(specs)}")
        groups = [tuple(names)]
    else:
        groups = list(iproduct(sorted(specs), repeat=2))
    chain_ids = args.chains or list(ch.KERNEL_CHAIN_IDS)
    bad = [c for c in chain_ids if c not in ch.KERNEL_CHAIN_IDS]
    if bad:
        raise UsageError(f"chains {bad} are not kernel-operator chains {ch.KERNEL_CHAIN_IDS}")
    grids = args.grids or [16, 32, 64]
    t1 = time.perf_counter()
    records, rows, flips = kernel_study(specs, groups, grids, chain_ids, args.tol)
    t2 = time.perf_counter()

    summary = _summarise(records)
    print(f"{'chain':<6} {'grid':>5} {'consistent':>10} {'violation':>10}")
    for cid in chain_ids:
        for n in grids:
            sel = [r for r in records if r.id == cid and r.digest["grid"] == n]
            c = Counter(r.verdict for r in sel)
            print(f"{cid:<6} {n:>5} {c.get(ch.CONSISTENT, 0):>10} {c.get(ch.VIOLATION, 0):>10}")
    worst = max((r["residual"] for r in rows), default=0.0)
    print(f"max residual between successive grids: {worst:.3e}; verdict flips: {len(flips)}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fields = ["chain", "kernels", "term", "expr", "grid", "next_grid", "value",
                      "next_value", "residual", "verdict", "next_verdict"]
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    body = {"grids": grids, "kernels": {k: v.to_payload() for k, v in specs.items()},
            "summary": summary, "flips": flips, "residuals": rows,
            "chains": [r.as_dict() for r in records]}
    _emit(report_document("kernel", input_digest, body, {"setup": t1 - t0, "evaluate": t2 - t1}), args)
    code = _exit_for(summary)
    return EXIT_VIOLATION if code == EXIT_OK and flips else code


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def bench(S: MatrixSet, depth: int, workers=(1,), delta=None, max_products=DEFAULT_MAX_PRODUCTS) -> dict:
    """Exhaustive vs pruned enumeration of ``S`` at ``depth``."""
    runs = []
    for prune, w in iproduct((False, True), workers):
        budget = EnumerationBudget(max_depth=depth, max_products=max_products, prune=prune,
                                   delta=delta, workers=w)
        t = time.perf_counter()
        res = enumerate_products(S, budget)
        runs.append({"prune": prune, "workers": w, "bracket": res.bracket.as_dict(),
                     "products": res.bracket.products, "seconds": time.perf_counter() - t})
    ex = next(r for r in runs if not r["prune"])
    pr = next(r for r in runs if r["prune"])
    d = pr["bracket"]["delta"]
    same = (abs(ex["bracket"]["lower"] - pr["bracket"]["lower"]) <= d
            and abs(ex["bracket"]["upper"] - pr["bracket"]["upper"]) <= d)
    stable = all(
        (r["bracket"]["lower"], r["bracket"]["upper"])
        == (next(q for q in runs if q["prune"] == r["prune"])["bracket"]["lower"],
            next(q for q in runs if q["prune"] == r["prune"])["bracket"]["upper"])
        for r in runs
    )
    return {"runs": runs, "delta": d, "delta_equal": same, "worker_independent": stable,
            "product_ratio": pr["products"] / ex["products"]}


def cmd_bench(args) -> int:
    if args.input:
        doc = load_document(args.input)
        if not args.set:
            raise UsageError("--set is required with --input")
        S = doc.as_set(args.set, path="--set")
        source = {"input": digest(open(args.input).read()), "set": args.set}
    else:
        rng = np.random.default_rng(args.seed)
        S = ch.random_set(rng, args.dim, args.set_size)
        source = {"seed": args.seed, "dim": args.dim, "set_size": args.set_size}
    depth = _depth(args, fallback=10)
    workers = sorted({1, args.workers})
    delta = args.prune if isinstance(args.prune, float) else None
    res = bench(S, depth, workers, delta, args.max_products)
    print(f"{'mode':<11} {'workers':>7} {'products':>10} {'seconds':>9} {'lower':>16} {'upper':>16}")
    for r in res["runs"]:
        b = r["bracket"]
        print(f"{'pruned' if r['prune'] else 'exhaustive':<11} {r['workers']:>7} {r['products']:>10} "
              f"{r['seconds']:>9.4f} {b['lower']:>16.12g} {b['upper']:>16.12g}")
    print(f"pruned/exhaustive products: {res['product_ratio']:.3f}; delta-equal: {res['delta_equal']}; "
          f"worker-independent: {res['worker_independent']}")
    timing = {f"{'pruned' if r['prune'] else 'exhaustive'}-w{r['workers']}": r["seconds"] for r in res["runs"]}
    for r in res["runs"]:
        r.pop("seconds")
    body = {"source": source, "depth": depth, **res}
    _emit(report_document("bench", digest(json.dumps(source, sort_keys=True)), body, timing), args)
    return EXIT_OK if res["delta_equal"] and res["worker_independent"] else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjsr",
        description="Certified generalized/joint spectral radius brackets and Hadamard inequality checks.",
    )
    parser.add_argument("--version", action="version", version=f"hjsr {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="versioned JSON input document")
    common.add_argument("--depth", type=_positive_int,
                        help=f"maximum product length (default: ${DEPTH_ENV} or built-in)")
    common.add_argument("--prune", nargs="?", const=None, default=argparse.SUPPRESS,
                        metavar="DELTA", help="Gripenberg pruning, optionally with absolute delta")
    common.add_argument("--no-prune", action="store_true", help="force exhaustive enumeration")
    common.add_argument("--max-products", type=_positive_int, default=DEFAULT_MAX_PRODUCTS,
                        help="cap on evaluated products per radius (default: %(default)s)")
    common.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1,
                        help="enumeration threads (default: machine parallelism)")
    common.add_argument("--tol", type=float, default=ch.DEFAULT_TOL,
                        help="relative verdict tolerance (default: %(default)s)")
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("--csv", help="write residual / per-level CSV here")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("radius", parents=[common], help="bracket the joint spectral radius of a set")
    p.add_argument("--set", help="name(s) of matrix or matrix_set entries, comma separated")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("verify", parents=[common], help="check inequality chains")
    p.add_argument("--random", nargs=2, type=int, metavar=("SEED", "TRIALS"))
    p.add_argument("--chains", type=_chains_arg, help="'all' or comma-separated ids C1..C19")
    p.add_argument("--dims", type=_range_arg, metavar="LO..HI")
    p.add_argument("--sizes", type=_range_arg, metavar="LO..HI")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("kernel", parents=[common], help="kernel-operator chains with grid refinement")
    p.add_argument("--kernels", help="kernel_spec names forming one A, B, ... tuple")
    p.add_argument("--grids", type=_grids_arg, help="comma-separated grid sizes (default 16,32,64)")
    p.add_argument("--chains", type=_chains_arg, help="subset of C7,C8,C9,C10")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("bench", parents=[common], help="exhaustive vs pruned enumeration")
    p.add_argument("--set", help="matrix_set entry to benchmark (with --input)")
    p.add_argument("--set-size", type=_positive_int, default=2)
    p.add_argument("--dim", type=_positive_int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    raw_prune = getattr(args, "prune", "absent")
    if raw_prune == "absent":
        args.prune = None
    else:
        try:
            args.prune = _prune_value(raw_prune)
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hjsr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"hjsr {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, HJSRError) as exc:
        print(f"hjsr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hjsr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
