"""Batch experiment runner.

Subcommands: ``gen`` (emit instance files), ``run`` (one mechanism run),
``sweep`` (grid of runs to CSV), ``oracle`` (exact target/induced
distributions and their TV), ``audit`` (misreport grid), ``diag``
(variance/TV/complexity report, plus correlation stats over a sweep CSV).

Errors print one machine-readable JSON line to stderr, e.g.
``{"error": "SchemaError", "message": "..."}``, and exit nonzero.

CSV schema (normative column order):
instance_id, seed, m, variant, advertiser_id, expected_reward,
normalized_reward, expected_utility, payment, revenue, log_prob_opt,
log_prob_ref, tv_to_opt, wall_time_ms.

Rows are keyed by (instance_id, seed, m, variant, advertiser_id) and written
in sorted key order, so identical master seeds produce identical files except
for the wall_time_ms column.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import seeds
from .diagnostics import (
    DiagnosticsReport,
    expected_reward,
    is_variance_closed_form,
    is_variance_empirical,
    normalized_reward,
    pearson,
    sample_complexity_bound,
    tv_distance,
)
from .errors import MechanismError
from .instances import InstanceSpec, generate, load_instance, save_instance
from .oracle import (
    batch_tv_samples,
    deviation_audit,
    induced_distribution_exact,
    induced_distribution_mc,
    optimal_distribution,
)
from .allocation import run_mechanism
from .payments import PAYMENT_VARIANTS

CSV_COLUMNS = [
    "instance_id",
    "seed",
    "m",
    "variant",
    "advertiser_id",
    "expected_reward",
    "normalized_reward",
    "expected_utility",
    "payment",
    "revenue",
    "log_prob_opt",
    "log_prob_ref",
    "tv_to_opt",
    "wall_time_ms",
]

VARIANTS = ["context-offset", "context-zero", "baseline-offset", "baseline-zero"]


def _fail(exc: Exception, code: int = 1) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def _print_json(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


# ------------------------------------------------------------------ commands

def _cmd_gen(args: argparse.Namespace) -> int:
    spec = InstanceSpec(
        k=args.k,
        n=args.n,
        tau=args.tau,
        tilt_strength=args.tilt_strength,
        reward_scale=args.reward_scale,
        seed=args.seed,
        brand_overlap=args.overlap,
    )
    instance = generate(spec)
    out = Path(args.out) if args.out else Path(f"instance-k{args.k}-n{args.n}-seed{args.seed}.json")
    save_instance(instance, out)
    print(out)
    return 0


def _variant_instance(instance, variant: str, m: int, seed: int):
    base = instance.baseline() if variant.startswith("baseline") else instance
    return base.with_m(m).with_seed(seed)


def _payment_variant(variant: str) -> str:
    kind = variant.rsplit("-", 1)[-1]
    if kind not in PAYMENT_VARIANTS:
        raise ValueError(f"variant must end in one of {PAYMENT_VARIANTS}, got {variant!r}")
    return kind


def _cmd_run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    run = _variant_instance(
        instance,
        args.variant,
        args.m or instance.config.m,
        args.seed if args.seed is not None else instance.config.seed,
    )
    outcome = run_mechanism(run, payment_variant=_payment_variant(args.variant))
    opt = optimal_distribution(run.ref, run.reports, run.config.tau)
    chosen = outcome.chosen_reply
    _print_json(
        {
            "instance_id": instance.id,
            "variant": args.variant,
            "m": run.config.m,
            "seed": run.config.seed,
            "candidates": [c.index for c in outcome.batch.candidates],
            "chosen_slot": outcome.allocation.chosen_slot,
            "chosen_reply": chosen.index,
            "distribution": outcome.allocation.distribution.tolist(),
            "log_prob_opt": opt.distribution.log_density(chosen),
            "log_prob_ref": run.ref.log_density(chosen),
            "payments": [t.payment for t in outcome.per_advertiser],
            "expected_utilities": [t.expected_utility for t in outcome.per_advertiser],
            "revenue": outcome.revenue,
        }
    )
    return 0


def sweep_cell(instance, variant: str, m: int, run_seed: int) -> list[dict]:
    """All CSV rows for one (instance, variant, m, seed) grid cell."""
    started = time.perf_counter()
    run = _variant_instance(instance, variant, m, run_seed)
    payment_kind = _payment_variant(variant)
    outcome = run_mechanism(run, payment_variant=payment_kind)
    opt = optimal_distribution(run.ref, run.reports, run.config.tau)
    tv_rng = seeds.substream(run_seed, seeds.PHASE_CANDIDATES, 7)
    tv_batch = float(batch_tv_samples(run, m, 1, tv_rng)[0])

    rows = []
    for i in range(len(run.reports)):
        cf_seed = seeds.derive_seed(run_seed, seeds.PHASE_COUNTERFACTUAL, i)
        cf_outcome = run_mechanism(
            run.with_report_zeroed(i).with_seed(cf_seed), payment_variant=payment_kind
        )
        terms = outcome.per_advertiser[i]
        rows.append(
            {
                "instance_id": instance.id,
                "seed": run_seed,
                "m": m,
                "variant": variant,
                "advertiser_id": i,
                "expected_reward": expected_reward(run, outcome, i),
                "normalized_reward": normalized_reward(run, outcome, cf_outcome, i),
                "expected_utility": terms.expected_utility,
                "payment": terms.payment,
                "revenue": outcome.revenue,
                "log_prob_opt": opt.distribution.log_density(outcome.chosen_reply),
                "log_prob_ref": run.ref.log_density(outcome.chosen_reply),
                "tv_to_opt": tv_batch,
                "wall_time_ms": (time.perf_counter() - started) * 1000.0,
            }
        )
    return rows


def emit_csv(rows: list[dict], path: str | Path) -> None:
    """Write rows in deterministic sorted-key order with the normative header."""
    ordered = sorted(
        rows,
        key=lambda r: (r["instance_id"], r["seed"], r["m"], r["variant"], r["advertiser_id"]),
    )
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in ordered:
            writer.writerow(row)


def run_sweep(
    instances,
    m_values: list[int],
    variants: list[str],
    seeds_per_cell: int,
    master_seed: int,
    jobs: int = 1,
) -> list[dict]:
    """The full grid; cell seeds split from the master seed per (instance, seed index)."""
    cells = []
    for inst_idx, instance in enumerate(instances):
        for seed_idx in range(seeds_per_cell):
            run_seed = seeds.derive_seed(master_seed, inst_idx, seed_idx)
            for m in m_values:
                for variant in variants:
                    cells.append((instance, variant, m, run_seed))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: sweep_cell(*c), cells))
    else:
        results = [sweep_cell(*c) for c in cells]
    return [row for rows in results for row in rows]


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.m != sorted(set(args.m)):
        raise MechanismError(f"--m values must be strictly ascending, got {args.m}")
    if args.seeds < 1:
        raise MechanismError(f"--seeds must be at least 1, got {args.seeds}")
    instances = [load_instance(p) for p in args.instances]
    rows = run_sweep(
        instances, args.m, args.variants, args.seeds, args.master_seed, jobs=args.jobs
    )
    emit_csv(rows, args.out)
    print(f"{args.out}: {len(rows)} rows")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    opt = optimal_distribution(instance.ref, instance.reports, instance.config.tau)
    doc = {
        "instance_id": instance.id,
        "optimal": opt.distribution.probs().tolist(),
        "log_partition": opt.log_partition,
    }
    if args.m:
        doc["induced"] = {}
        doc["tv_to_opt"] = {}
        for m in args.m:
            if args.mc_trials:
                induced = induced_distribution_mc(instance, m, args.mc_trials)
            else:
                induced = induced_distribution_exact(instance, m)
            doc["induced"][str(m)] = induced.probs().tolist()
            doc["tv_to_opt"][str(m)] = tv_distance(induced, opt.distribution)
    _print_json(doc)
    return 0


def _cmd_audit(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    advertisers = [args.advertiser] if args.advertiser is not None else range(len(instance.reports))
    all_passed = True
    for i in advertisers:
        report = deviation_audit(instance, i, batches=args.batches)
        all_passed &= report.passed
        _print_json(
            {
                "instance_id": instance.id,
                "advertiser_id": i,
                "best_misreport_gain": report.best_misreport_gain,
                "worst_case_report": report.worst_case_report,
                "passed": report.passed,
            }
        )
    return 0 if all_passed else 1


def _cmd_diag(args: argparse.Namespace) -> int:
    if args.stats_csv:
        return _csv_correlation_stats(args.stats_csv)
    instance = load_instance(args.instance)
    opt = optimal_distribution(instance.ref, instance.reports, instance.config.tau)
    m = args.m or instance.config.m
    rng = seeds.substream(instance.config.seed, seeds.PHASE_CANDIDATES, 13)
    weight_bound = float(np.max(opt.distribution.probs() / instance.gen.probs()))
    report = DiagnosticsReport(
        closed_form_variance=is_variance_closed_form(opt.distribution, instance.gen, m),
        empirical_variance=is_variance_empirical(
            opt.distribution, instance.gen, m, args.trials, rng
        ),
        tv_distance=tv_distance(instance.gen, opt.distribution),
        sample_complexity_m=sample_complexity_bound(
            weight_bound, instance.space.size, args.epsilon, args.delta
        ),
        notes=f"proposal-to-target gap for instance {instance.id} at m={m}",
    )
    _print_json({"instance_id": instance.id, "m": m, **asdict(report)})
    return 0


def _csv_correlation_stats(path: str) -> int:
    """Regression/correlation between normalized reward and expected utility.

    Prints key=value lines; the plotting package cross-checks its own
    recomputation against these through this interface.
    """
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != CSV_COLUMNS:
            raise MechanismError(f"unexpected CSV header in {path}")
        xs, ys = [], []
        for row in reader:
            xs.append(float(row["normalized_reward"]))
            ys.append(float(row["expected_utility"]))
    if len(xs) < 2:
        raise MechanismError(f"{path}: not enough rows for correlation statistics")
    x = np.array(xs)
    y = np.array(ys)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = y - y.mean()
    r_squared = 1.0 - float(residual @ residual) / float(total @ total)
    print(f"n={len(xs)}")
    print(f"slope={slope:.12g}")
    print(f"intercept={intercept:.12g}")
    print(f"r_squared={r_squared:.12g}")
    print(f"pearson_r={pearson(x, y):.12g}")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="replyauction", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit a synthetic instance file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--tilt-strength", type=float, default=None)
    p.add_argument("--reward-scale", type=float, default=1.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run the mechanism once and print the outcome")
    p.add_argument("--instance", type=str, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", choices=VARIANTS, default="context-offset")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run the full grid and emit a CSV")
    p.add_argument("--instances", nargs="+", required=True)
    p.add_argument("--m", type=int, nargs="+", required=True)
    p.add_argument("--variants", nargs="+", choices=VARIANTS, default=VARIANTS)
    p.add_argument("--seeds", type=int, default=1, help="seed indices per instance")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("oracle", help="exact target and induced distributions")
    p.add_argument("--instance", type=str, required=True)
    p.add_argument("--m", type=int, nargs="*", default=[])
    p.add_argument("--mc-trials", type=int, default=0, help="estimate instead of enumerate")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("audit", help="strategyproofness misreport grid")
    p.add_argument("--instance", type=str, required=True)
    p.add_argument("--advertiser", type=int, default=None)
    p.add_argument("--batches", type=int, default=5)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("diag", help="estimator diagnostics or CSV correlation stats")
    p.add_argument("--instance", type=str, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--stats-csv", type=str, default=None)
    p.set_defaults(func=_cmd_diag)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "diag" and not args.stats_csv and not args.instance:
        parser.error("diag needs --instance or --stats-csv")
    try:
        return args.func(args)
    except MechanismError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
