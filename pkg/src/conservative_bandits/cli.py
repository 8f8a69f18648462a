"""Command-line entry point: run, sweep, compare, bounds, verify.

Exit codes: 0 success, 2 configuration or file error, 3 runtime numerical
error, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import Instance, load_instance
from .environment import build_environment
from .errors import BanditError, ConfigError, UnsupportedRegimeError
from .harness.bounds import bound_report
from .harness.export import export_csv, export_json
from .harness.metrics import aggregate
from .harness.runner import run_many
from .harness.verify import run_lemma_suite
from .policies import VARIANTS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4
SWEEPABLE = {"alpha": "alpha", "delta": "delta", "R": "R", "lambda": "lam", "gate_scale": "gate_scale"}


def _policy(name: str) -> str:
    if name.lower() not in VARIANTS:
        raise argparse.ArgumentTypeError(f"unknown policy {name!r}; choose from {', '.join(sorted(VARIANTS))}")
    return name.lower()


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _bounds_dict(instance: Instance, policy: str, T: int) -> dict:
    gap = None
    if policy == "sclucb2" and instance.config.gap is None:
        gap = build_environment(instance).gap()
    try:
        return bound_report(policy, instance.config, T, gap=gap).to_dict()
    except UnsupportedRegimeError:
        return {}


def _simulate(instance: Instance, policy: str, args):
    seeds = range(args.seed_offset, args.seed_offset + args.seeds)
    logs = run_many(instance, policy, args.T, seeds, workers=args.workers)
    summary = aggregate(logs, bounds=_bounds_dict(instance, policy, args.T))
    summary.config_echo = instance.echo()
    return logs, summary


def _final_row(label: str, summary) -> dict:
    return {
        "label": label,
        "n_runs": summary.n_runs,
        "T": summary.T,
        "mean_regret": repr(float(summary.mean_regret[-1])),
        "std_regret": repr(float(summary.std_regret[-1])),
        "mean_ntc": repr(float(summary.mean_ntc[-1])),
        "violation_run_fraction": summary.violation_run_fraction,
        "ellipsoid_failure_fraction": summary.ellipsoid_failure_fraction,
    }


def _write_table(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _print_rows(rows: list[dict]) -> None:
    for r in rows:
        print(f"{r['label']}: R(T)={float(r['mean_regret']):.4f} +- {float(r['std_regret']):.4f}  "
              f"N^c(T)={float(r['mean_ntc']):.1f}  violating runs={r['violation_run_fraction']:.3f}  "
              f"ellipsoid failures={r['ellipsoid_failure_fraction']:.3f}")


def cmd_run(args) -> int:
    instance = load_instance(args.config)
    logs, summary = _simulate(instance, args.policy, args)
    out = Path(args.out)
    if args.format == "csv":
        path = export_csv(logs, out / f"{args.policy}_rounds.csv")
    else:
        path = export_json(summary, out / f"{args.policy}_summary.json")
    _print_rows([_final_row(args.policy, summary)])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    instance = load_instance(args.config)
    attr = SWEEPABLE[args.param]
    out = Path(args.out)
    rows = []
    for raw in args.values.split(","):
        value = float(raw)
        inst = instance.with_config(**{attr: value})
        _, summary = _simulate(inst, args.policy, args)
        export_json(summary, out / f"{args.policy}_{args.param}={raw.strip()}.json")
        rows.append({args.param: value, **_final_row(f"{args.param}={raw.strip()}", summary)})
    _write_table(rows, out / f"{args.policy}_sweep_{args.param}.csv")
    _print_rows(rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    instance = load_instance(args.config)
    out = Path(args.out)
    rows = []
    for name in args.policies.split(","):
        policy = _policy(name.strip())
        _, summary = _simulate(instance, policy, args)
        export_json(summary, out / f"{policy}_summary.json")
        rows.append(_final_row(policy, summary))
    _write_table(rows, out / "compare.csv")
    _print_rows(rows)
    return EXIT_OK


def cmd_bounds(args) -> int:
    instance = load_instance(args.config)
    gap = None
    if args.policy == "sclucb2" and instance.config.gap is None:
        gap = build_environment(instance).gap()
    report = bound_report(args.policy, instance.config, args.T, gap=gap)
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.render())
    return EXIT_OK


def cmd_verify(args) -> int:
    instance = load_instance(args.config) if args.config else None
    results = run_lemma_suite(n_runs=args.seeds, instance=instance)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conservative-bandits",
                                     description="Stage-wise conservative linear bandit simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_args(p, policy=True):
        p.add_argument("--config", required=True, help="instance file (YAML or JSON)")
        if policy:
            p.add_argument("--policy", required=True, type=_policy)
        p.add_argument("--T", required=True, type=_positive_int, help="horizon")
        p.add_argument("--seeds", type=_positive_int, default=10, help="number of seeded runs")
        p.add_argument("--seed-offset", type=int, default=0, help="first seed")
        p.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="simulate one policy over several seeds")
    sim_args(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary one config parameter")
    sim_args(p)
    p.add_argument("--param", choices=sorted(SWEEPABLE), default="alpha")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="several policies on one instance")
    sim_args(p, policy=False)
    p.add_argument("--policies", required=True, help="comma-separated policy names")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bounds", help="print the closed-form bound report")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True, type=_policy)
    p.add_argument("--T", required=True, type=_positive_int)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", choices=("lemmas",), default="lemmas")
    p.add_argument("--seeds", type=_positive_int, default=200, help="runs for the simulation-backed checks")
    p.add_argument("--config", default=None, help="instance for the simulation-backed checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BanditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
