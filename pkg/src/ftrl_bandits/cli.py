"""Command-line harness.

Three subcommands:

* ``run CONFIG.json``     run one experiment, write its two CSV files
* ``sweep SWEEP.json``    cartesian product over declared parameter lists
* ``verify``              run the built-in acceptance suite, one line per
                          criterion, exit code 1 on any failure

A sweep file holds a ``base`` experiment config plus ``axes``, a mapping from
dot-separated config paths to value lists, e.g.::

    {"base": {...}, "axes": {"environment.alpha": [0.1, 0.2],
                             "policy.eta": [0.05, 0.1]}}

Every combination runs with CSV prefixes derived from the axis values.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

from .acceptance import run_criteria
from .harness import ExperimentConfig, run_experiment

__all__ = ["main"]


def _print_summary(summary) -> None:
    header = f"{'n':>9}  {'mean_regret':>12}  {'var_regret':>14}  {'stderr':>10}  {'tail_prob':>9}  {'bound':>12}"
    print(header)
    for row in summary.rows:
        bound = f"{row.bound_value:12.2f}" if row.bound_value is not None else " " * 12
        print(
            f"{row.n:>9}  {row.mean_regret:12.4f}  {row.var_regret:14.4f}  "
            f"{row.stderr:10.4f}  {row.tail_prob:9.4f}  {bound}"
        )
    if summary.variance_slope is not None:
        print(f"log-log variance slope: {summary.variance_slope:.3f}")
    if summary.mean_regret_slope is not None:
        print(f"log-log mean-regret slope: {summary.mean_regret_slope:.3f}")


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    summary = run_experiment(config)
    _print_summary(summary)
    if config.output_prefix:
        print(f"wrote {config.output_prefix}_runs.csv and {config.output_prefix}_summary.csv")
    return 0


def _set_path(mapping: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = mapping
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            raise ValueError(f"sweep axis {dotted!r} does not match the base config")
        node = node[key]
    node[keys[-1]] = value


def _axis_tag(dotted: str, value) -> str:
    leaf = dotted.split(".")[-1]
    return f"{leaf}{value}".replace(" ", "").replace("/", "-")


def _cmd_sweep(args) -> int:
    with open(args.config) as handle:
        spec = json.load(handle)
    if "base" not in spec or "axes" not in spec:
        raise ValueError("a sweep file needs 'base' and 'axes' fields")
    axes = spec["axes"]
    if not isinstance(axes, dict) or not axes:
        raise ValueError("'axes' must be a nonempty mapping of dotted paths to lists")
    names = sorted(axes)
    for combo in itertools.product(*(axes[name] for name in names)):
        raw = json.loads(json.dumps(spec["base"]))  # deep copy
        for name, value in zip(names, combo):
            _set_path(raw, name, value)
        prefix = raw.get("output_prefix")
        tags = "_".join(_axis_tag(name, value) for name, value in zip(names, combo))
        if prefix:
            raw["output_prefix"] = f"{prefix}_{tags}"
        config = ExperimentConfig.from_dict(raw)
        print(f"== {tags}")
        _print_summary(run_experiment(config))
    return 0


def _cmd_verify(args) -> int:
    numbers = None
    if args.criteria:
        numbers = [int(piece) for piece in args.criteria.split(",")]
    results = run_criteria(args.output, numbers=numbers)
    failed = [r for r in results if r.status == "FAIL"]
    print(
        f"{len(results)} criteria run: "
        f"{sum(r.status == 'PASS' for r in results)} pass, "
        f"{sum(r.status == 'INFO' for r in results)} informational, "
        f"{len(failed)} fail"
    )
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ftrl-bandits",
        description="Adversarial-bandit FTRL experiments: run, sweep, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run one experiment config")
    run_parser.add_argument("config", help="path to an experiment JSON config")
    run_parser.set_defaults(func=_cmd_run)

    sweep_parser = sub.add_parser("sweep", help="cartesian sweep over parameter lists")
    sweep_parser.add_argument("config", help="path to a sweep JSON file")
    sweep_parser.set_defaults(func=_cmd_sweep)

    verify_parser = sub.add_parser("verify", help="run the built-in acceptance suite")
    verify_parser.add_argument(
        "--output", default="verify_out", help="directory for the CSV artifacts"
    )
    verify_parser.add_argument(
        "--criteria",
        default=None,
        help="comma-separated criterion numbers to run (default: all)",
    )
    verify_parser.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
