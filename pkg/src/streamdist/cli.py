"""Command-line experiment runner.

Subcommands: ``predicate``, ``distinguish``, ``sweep``, ``verify``,
``reduce``.  Runs are seed-pinned: the same config and seed produce
byte-identical output regardless of thread count.  Output is CSV
(header row, LF endings, floats at 12 significant digits) or JSON;
every row carries the version string, the master seed, and a full
parameter echo.

Exit codes: 0 all pass, 1 usage error, 2 assertable failure, 3 budget
refusal.
"""

from __future__ import annotations

import argparse
import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import (
    FLOAT_SLACK,
    AdvantageEstimate,
    SeedDistribution,
    estimate_success,
    hybrid_deltas,
    predicate_bias_lemma_report,
    shell_bias_claim_check,
    spafour_rows,
    squared_shell_bias,
    wilson_interval,
)
from .bitvec import BitString
from .distinguishers import COMPATIBLE_FAMILY, make_distinguisher
from .predicates import (
    PredicateParseError,
    builtin,
    load_predicate,
    resilience,
    walsh_hadamard,
)
from .reductions import (
    default_feed_budget,
    learn_parity,
    learn_sparse_parity,
    parity_oracle,
    sparse_oracle,
)
from .robp import (
    BudgetExceededError,
    min_entropy_report,
    random_rational_problem,
    random_robp,
)
from .rng import SplitMix64
from .sources import SourceSpec


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's 2
        raise UsageError(message)


_version_cache: Optional[str] = None


def version_string() -> str:
    """git-describe-style version: package version plus commit hash."""
    global _version_cache
    if _version_cache is None:
        tag = f"streamdist-{__version__}"
        try:
            rev = subprocess.run(
                ["git", "rev-parse", "--short", "HEAD"],
                cwd=Path(__file__).parent,
                capture_output=True, text=True, timeout=5,
            )
            if rev.returncode == 0:
                tag += "-g" + rev.stdout.strip()
        except OSError:
            pass
        _version_cache = tag
    return _version_cache


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_rows(out, header: list[str], rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        payload = [{k: row.get(k) for k in header} for row in rows]
        out.write(json.dumps(payload, indent=2, default=fmt_value) + "\n")
        return
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt_value(row.get(k, "")) for k in header) + "\n")


def parse_kv(text: Optional[str]) -> dict:
    """Parse "a=1,b=2.5,c=xor" into {str: int|float|str}."""
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"bad key=value pair: {item!r}")
        key, val = item.split("=", 1)
        try:
            out[key] = int(val)
        except ValueError:
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out


def kv_echo(params: dict) -> str:
    return ";".join(f"{k}={fmt_value(v)}" for k, v in sorted(params.items()))


def build_source(family: str, params: dict) -> SourceSpec:
    n = int(params["n"])
    k = int(params["k"])
    pred = None
    if family == "local_prg":
        pred = builtin(str(params.get("predicate", "xor")), k)
    return SourceSpec(family, n, k, pred)


def add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", default="-")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def make_parser() -> _Parser:
    parser = _Parser(prog="streamdist")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predicate", help="truth table, spectrum, resilience")
    p.add_argument("name_or_file")
    p.add_argument("--k", type=int, default=None)
    add_common(p)

    p = sub.add_parser("distinguish", help="success estimate for a pairing")
    p.add_argument("--distinguisher", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--source", required=True)
    p.add_argument("--source-params", dest="source_params", default="")
    p.add_argument("--stream-len", dest="stream_len", type=int, default=None)
    add_common(p)

    p = sub.add_parser("sweep", help="success curve along a parameter grid")
    p.add_argument("--axis", choices=("memory", "samples"), required=True)
    p.add_argument("--sweep-param", dest="sweep_param", default=None,
                   help="distinguisher parameter to vary (memory axis)")
    p.add_argument("--grid", default="", help="comma-separated values")
    p.add_argument("--distinguisher", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--source", required=True)
    p.add_argument("--source-params", dest="source_params", default="")
    p.add_argument("--stream-len", dest="stream_len", type=int, default=None)
    add_common(p)

    p = sub.add_parser("verify", help="lemma checks at desk scale")
    p.add_argument("--lemma", required=True,
                   choices=("spafour", "cl_spafour", "cl_spafourpred",
                            "minent", "telescope"))
    p.add_argument("--params", default="")
    add_common(p)

    p = sub.add_parser("reduce", help="distinguisher-to-learner reductions")
    p.add_argument("--which", choices=("parity", "sparse"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--inner-m", dest="inner_m", type=int, default=None)
    add_common(p)
    return parser


def cmd_predicate(args, out) -> int:
    src = args.name_or_file
    if Path(src).exists():
        pred = load_predicate(src)
        name = src
    else:
        if args.k is None:
            raise UsageError("--k is required for builtin predicates")
        pred = builtin(src, args.k)
        name = src
    spec = walsh_hadamard(pred)
    t = resilience(pred)
    if args.format == "json":
        out.write(json.dumps({
            "version": version_string(),
            "name": name,
            "k": pred.k,
            "table_size": 1 << pred.k,
            "resilience": t,
            "numerators": list(spec.numerators),
        }, indent=2) + "\n")
        return 0
    out.write(f"predicate {name}: k={pred.k} table_size={1 << pred.k} "
              f"resilience={t}\n")
    nonzero = [(a, v) for a, v in enumerate(spec.numerators) if v]
    out.write(f"nonzero coefficients ({len(nonzero)}):\n")
    for a, v in nonzero:
        out.write(f"  alpha={a:0{pred.k}b} |alpha|={a.bit_count()} "
                  f"coeff={v}/{1 << pred.k}\n")
    return 0


def _distinguish_rows(args, dist_params, src_params, grid_entry=None):
    family = args.source
    if family not in ("subspace", "sparse_parity", "local_prg"):
        raise UsageError(f"unknown source family: {family!r}")
    if COMPATIBLE_FAMILY.get(args.distinguisher) != family:
        raise UsageError(
            f"{args.distinguisher} is not compatible with {family}"
        )
    spec = build_source(family, src_params)
    rng = SplitMix64(args.seed)

    def factory(r):
        return make_distinguisher(args.distinguisher, dist_params, r)

    probe = factory(SplitMix64(0))
    stream_len = args.stream_len or probe.required_stream_len()
    report = estimate_success(factory, spec, stream_len, args.trials,
                              rng, threads=args.threads)
    row = {
        "version": version_string(),
        "seed": args.seed,
        "command": args.command,
        "distinguisher": args.distinguisher,
        "source": family,
        "params": kv_echo({**dist_params, **{f"src_{k}": v for k, v in src_params.items()}}),
        "trials": args.trials,
        "stream_len": stream_len,
        "success": report.estimate.point,
        "ci_low": report.estimate.ci_low,
        "ci_high": report.estimate.ci_high,
        "null_rate": report.null_rate,
        "planted_rate": report.planted_rate,
        "samples_total": report.samples_total,
        "memory_data_bits": report.memory_data_bits,
        "memory_paper_bits": report.memory_paper_bits,
        "memory_declared_bits": report.memory_declared_bits,
    }
    if grid_entry is not None:
        row.update(grid_entry)
    return row


_DIST_HEADER = ["version", "seed", "command", "distinguisher", "source",
                "params", "trials", "stream_len", "success", "ci_low",
                "ci_high", "null_rate", "planted_rate", "samples_total",
                "memory_data_bits", "memory_paper_bits",
                "memory_declared_bits"]


def cmd_distinguish(args, out) -> int:
    dist_params = parse_kv(args.params)
    src_params = parse_kv(args.source_params)
    row = _distinguish_rows(args, dist_params, src_params)
    write_rows(out, _DIST_HEADER, [row], args.format)
    return 0


def cmd_sweep(args, out) -> int:
    header = _DIST_HEADER + ["axis", "grid_value", "nondecreasing"]
    grid = [int(v) for v in args.grid.split(",") if v]
    rows = []
    prev = None
    for value in grid:
        dist_params = parse_kv(args.params)
        src_params = parse_kv(args.source_params)
        if args.axis == "memory":
            if not args.sweep_param:
                raise UsageError("--sweep-param is required for the memory axis")
            dist_params[args.sweep_param] = value
        else:
            args.stream_len = value
        entry = {"axis": args.axis, "grid_value": value}
        row = _distinguish_rows(args, dist_params, src_params, entry)
        row["nondecreasing"] = prev is None or row["success"] >= prev - FLOAT_SLACK
        prev = row["success"]
        rows.append(row)
    write_rows(out, header, rows, args.format)
    return 0


def _verify_spafour(params, seed) -> tuple[list[dict], int]:
    n = int(params.get("n", 64))
    l = int(params.get("l", 4))
    points = int(params.get("points", 20))
    dmin = (8.0 * l / n) ** (l / 2.0)
    if dmin >= 1.0:
        deltas = [1.0]
    else:
        deltas = [dmin + (1.0 - dmin) * i / (points - 1) for i in range(points)]
    rows = []
    rc = 0
    for r in spafour_rows(n, l, deltas):
        rows.append({
            "quantity": "bias_set_size",
            "point": f"n={r['n']};l={r['l']};delta={r['delta']:.6g}",
            "value": r["set_size"],
            "bound": r["bound"],
            "status": "pass" if r["pass"] else "fail",
        })
        if not r["pass"]:
            rc = 2
    return rows, rc


def _random_high_entropy_dist(n: int, rng: SplitMix64) -> SeedDistribution:
    # weights proportional to 1 + u, u uniform in [0,1): max weight < 2/2^n
    raw = [1.0 + rng.random() for _ in range(1 << n)]
    total = math.fsum(raw)
    return SeedDistribution(n, {v: w / total for v, w in enumerate(raw)})


def _verify_cl_spafour(params, seed) -> tuple[list[dict], int]:
    n = int(params.get("n", 14))
    eps = float(params.get("eps", 0.1))
    n_dists = int(params.get("dists", 10))
    ls = [int(v) for v in str(params.get("l", "2")).split("+")]
    rng = SplitMix64(seed)
    rows = []
    rc = 0
    for i in range(n_dists):
        dist = _random_high_entropy_dist(n, rng.spawn(i))
        for l in ls:
            check = shell_bias_claim_check(dist, l, eps)
            row = {
                "quantity": "squared_shell_bias",
                "point": f"dist={i};n={n};l={l};eps={eps}",
                "value": check.get("lhs", ""),
                "bound": check.get("bound", ""),
                "status": check["status"],
            }
            if check["status"] == "skipped":
                row["reasons"] = "|".join(check["reasons"])
            elif check["status"] == "fail":
                rc = 2
            rows.append(row)
    return rows, rc


def _verify_cl_spafourpred(params, seed) -> tuple[list[dict], int]:
    n = int(params.get("n", 12))
    k = int(params.get("k", 2))
    eps = float(params.get("eps", 0.1))
    pred_name = str(params.get("predicate", "xor"))
    pred = builtin(pred_name, k)
    t = resilience(pred)
    rng = SplitMix64(seed)
    dist = _random_high_entropy_dist(n, rng)
    rep = predicate_bias_lemma_report(dist, pred, n, eps, t)
    rows = [{
        "quantity": "mean_square_bias",
        "point": f"n={n};k={k};t={t};eps={eps};predicate={pred_name}",
        "value": rep["mean_square"],
        "bound": f"ratio_to_scale={rep['ms_ratio']:.6g};implied_c2={rep['implied_c2']:.6g}",
        "status": "reported",
    }, {
        "quantity": "fraction_above_threshold",
        "point": f"threshold={rep['threshold']:.6g}",
        "value": rep["fraction_above_threshold"],
        "bound": "constants unpinned: reported, not asserted",
        "status": "reported",
    }]
    rc = 0
    if pred_name == "xor":
        ssb = squared_shell_bias(dist, k)
        agree = abs(rep["mean_square"] - ssb) <= FLOAT_SLACK
        rows.append({
            "quantity": "xor_cross_oracle_identity",
            "point": f"n={n};k={k}",
            "value": rep["mean_square"] - ssb,
            "bound": FLOAT_SLACK,
            "status": "pass" if agree else "fail",
        })
        if not agree:
            rc = 2
    return rows, rc


def _verify_minent(params, seed) -> tuple[list[dict], int]:
    n = int(params.get("n", 10))
    width = int(params.get("width", 8))
    length = int(params.get("length", 4))
    n_programs = int(params.get("programs", 20))
    alphabet = int(params.get("alphabet", 8))
    d_t = Fraction(str(params.get("d_t", "25")))
    rng = SplitMix64(seed)
    rows = []
    rc = 0
    for i in range(n_programs):
        r = rng.spawn(i)
        prob = random_rational_problem(r.spawn(0), n, alphabet)
        widths = [1] + [width] * (length - 1) + [width]
        program = random_robp(r.spawn(1), widths, alphabet)
        rep = min_entropy_report(program, prob, d_t)
        ok = not rep["violations"] and rep["identity_ok"]
        rows.append({
            "quantity": "min_entropy_bound",
            "point": f"program={i};d={rep['d']};d_t={rep['d_t']}",
            "value": rep["heavy_checked"],
            "bound": "max P[x|v] <= d*d_t*2^-n at heavy v; sum_v = 2^-n",
            "status": "pass" if ok else "fail",
        })
        if not ok:
            rc = 2
    return rows, rc


def _verify_telescope(args, params, seed) -> tuple[list[dict], int]:
    n = int(params.get("n", 16))
    k = int(params.get("k", 2))
    m = int(params.get("m", 20))
    w = int(params.get("w", 10))
    count = int(params.get("count", 2 * w))
    trials = int(params.get("trials", args.trials))
    pred = builtin(str(params.get("predicate", "xor")), k)
    rng = SplitMix64(seed)

    def factory(r):
        return make_distinguisher("local_prefix", {
            "w": w, "k": k, "n": n, "count": count, "max_samples": m,
            "predicate": pred,
        }, r)

    rep = hybrid_deltas(factory, pred, n, m, trials, rng,
                        threads=args.threads)
    rows = []
    for j, d in enumerate(rep.deltas, start=1):
        rows.append({
            "quantity": f"delta_{j}",
            "point": f"n={n};k={k};m={m};j={j}",
            "value": d.point,
            "bound": f"[{d.ci_low:.6g},{d.ci_high:.6g}]",
            "status": "estimated",
        })
    ok = rep.consistent
    rows.append({
        "quantity": "telescoped_vs_direct",
        "point": f"n={n};k={k};m={m}",
        "value": rep.residual,
        "bound": f"sum=[{rep.telescoped.low:.6g},{rep.telescoped.high:.6g}];"
                 f"direct=[{rep.direct_gap.low:.6g},{rep.direct_gap.high:.6g}]",
        "status": "pass" if ok else "fail",
    })
    return rows, 0 if ok else 2


def cmd_verify(args, out) -> int:
    params = parse_kv(args.params)
    if args.lemma == "spafour":
        rows, rc = _verify_spafour(params, args.seed)
    elif args.lemma == "cl_spafour":
        rows, rc = _verify_cl_spafour(params, args.seed)
    elif args.lemma == "cl_spafourpred":
        rows, rc = _verify_cl_spafourpred(params, args.seed)
    elif args.lemma == "minent":
        rows, rc = _verify_minent(params, args.seed)
    else:
        rows, rc = _verify_telescope(args, params, args.seed)
    header = ["version", "seed", "command", "lemma", "params", "point",
              "quantity", "value", "ci_low", "ci_high", "bound", "status",
              "reasons"]
    for row in rows:
        row.setdefault("version", version_string())
        row.setdefault("seed", args.seed)
        row.setdefault("command", "verify")
        row.setdefault("lemma", args.lemma)
        row.setdefault("params", kv_echo(params))
    write_rows(out, header, rows, args.format)
    return rc


def cmd_reduce(args, out) -> int:
    rng = SplitMix64(args.seed)
    rows = []
    recovered = 0
    true_votes = 0
    total_votes = 0
    halted = 0
    if args.which == "parity":
        k_prime = args.k
        inner_m = args.inner_m or 8 * k_prime
        for t in range(args.trials):
            r = rng.spawn(t)
            x = BitString(k_prime, r.spawn(0).bits(k_prime))
            oracle = parity_oracle(x, r.spawn(1))

            def factory():
                return make_distinguisher("rank_threshold", {
                    "r": k_prime - 1, "window": inner_m, "n_eff": args.n,
                })

            rep = learn_parity(factory, args.n, k_prime, args.reps,
                               inner_m, oracle, r.spawn(2))
            ok = rep.estimate == x
            recovered += ok
            for i, (c0, c1) in enumerate(rep.per_bit_votes):
                true_votes += (c0, c1)[x[i]]
                total_votes += c0 + c1
            rows.append(_reduce_row(args, t, ok, rep))
    else:
        inner_m = args.inner_m or 4 * args.n
        budget = default_feed_budget(args.n, args.k, inner_m)
        for t in range(args.trials):
            r = rng.spawn(t)
            x = BitString(args.n + 1, r.spawn(0).bits(args.n + 1))
            oracle = sparse_oracle(x, args.k, r.spawn(1))

            def factory():
                return make_distinguisher("sparse_sat",
                                          {"n": args.n, "m0": inner_m})

            rep = learn_sparse_parity(factory, args.n, args.k, args.reps,
                                      inner_m, budget, oracle, r.spawn(2))
            ok = rep.estimate == x
            recovered += ok
            halted += rep.halted
            for i, (c0, c1) in enumerate(rep.per_bit_votes):
                true_votes += (c0, c1)[x[i]]
                total_votes += c0 + c1
            rows.append(_reduce_row(args, t, ok, rep))
    lo, hi = wilson_interval(recovered, args.trials)
    summary = {
        "version": version_string(), "seed": args.seed, "command": "reduce",
        "which": args.which, "trial": "summary",
        "params": kv_echo({"n": args.n, "k": args.k, "reps": args.reps}),
        "recovered": recovered, "trials": args.trials,
        "recovery_rate": recovered / args.trials,
        "ci_low": lo, "ci_high": hi,
        "vote_accuracy": true_votes / total_votes if total_votes else "",
        "halted": halted,
    }
    header = ["version", "seed", "command", "which", "trial", "params",
              "recovered", "trials", "recovery_rate", "ci_low", "ci_high",
              "vote_accuracy", "halted", "mean_margin", "samples"]
    write_rows(out, header, [summary] + rows, args.format)
    return 0


def _reduce_row(args, trial, ok, rep) -> dict:
    margins = [abs(c1 - c0) / max(c0 + c1, 1) for c0, c1 in rep.per_bit_votes]
    return {
        "version": version_string(), "seed": args.seed, "command": "reduce",
        "which": args.which, "trial": trial,
        "params": kv_echo({"n": args.n, "k": args.k, "reps": args.reps}),
        "recovered": int(ok),
        "mean_margin": sum(margins) / len(margins) if margins else "",
        "halted": int(rep.halted),
        "samples": rep.samples_consumed,
    }


def main(argv=None) -> int:
    parser = make_parser()
    try:
        # Config file values act as defaults; explicit flags override.
        pre, _ = parser.parse_known_args(argv)
        if getattr(pre, "config", None):
            with open(pre.config) as fh:
                config = json.load(fh)
            parser.set_defaults(**config)
        args = parser.parse_args(argv)
        if args.out == "-":
            return _dispatch(args, sys.stdout)
        with open(args.out, "w", newline="") as fh:
            return _dispatch(args, fh)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except PredicateParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return 3


def _dispatch(args, out) -> int:
    if args.command == "predicate":
        return cmd_predicate(args, out)
    if args.command == "distinguish":
        return cmd_distinguish(args, out)
    if args.command == "sweep":
        return cmd_sweep(args, out)
    if args.command == "verify":
        return cmd_verify(args, out)
    if args.command == "reduce":
        return cmd_reduce(args, out)
    raise UsageError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
