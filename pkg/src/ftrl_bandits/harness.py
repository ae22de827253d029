"""Experiment configuration, replicated execution, statistics, CSV emission.

A single experiment runs one (policy, environment) pair over a grid of
horizons with a fixed number of replications per horizon.  Replication r at
horizon n draws all of its randomness from streams derived from
(master_seed, n, r) as documented in :mod:`ftrl_bandits.runner`, so rerunning
a config reproduces its CSV files byte for byte.

CSV schemas (fixed column order):

* runs file:     ``seed,n,k,policy,env,random_regret,best_arm_loss``
* summary file:  ``n,mean_regret,var_regret,stderr,tail_prob,bound_value``

Floats are written with ``repr``, the shortest round-tripping form.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import RunRecord
from .policies import (
    POLICY_KINDS,
    first_order_regret_bound_anytime,
    first_order_regret_bound_known_horizon,
)
from .runner import simulate_replications

__all__ = [
    "ExperimentConfig",
    "HorizonSummary",
    "ExperimentSummary",
    "run_experiment",
    "fit_loglog_slope",
]

_HYBRID_KINDS = ("hybrid_inf_anytime", "hybrid_inf_known_horizon")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    policy: dict
    environment: dict
    horizons: tuple[int, ...]
    replications: int
    master_seed: int
    trace: bool = False
    output_prefix: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.policy, dict) or "kind" not in self.policy:
            raise ValueError("config field 'policy' must be a mapping with a 'kind'")
        if self.policy["kind"] not in POLICY_KINDS:
            raise ValueError(f"config field 'policy.kind': unknown kind {self.policy['kind']!r}")
        if not isinstance(self.environment, dict) or "kind" not in self.environment:
            raise ValueError("config field 'environment' must be a mapping with a 'kind'")
        horizons = tuple(int(n) for n in self.horizons)
        if len(horizons) == 0:
            raise ValueError("config field 'horizons' must be a nonempty list")
        if any(b <= a for a, b in zip(horizons, horizons[1:])):
            raise ValueError("config field 'horizons' must be strictly increasing")
        if self.policy["kind"] in _HYBRID_KINDS and horizons[0] < 3:
            raise ValueError(
                "config field 'horizons': hybrid policies need every horizon >= 3"
            )
        if horizons[0] < 1:
            raise ValueError("config field 'horizons' must be positive")
        object.__setattr__(self, "horizons", horizons)
        if self.replications < 1:
            raise ValueError("config field 'replications' must be at least 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "policy",
            "environment",
            "horizons",
            "replications",
            "master_seed",
            "trace",
            "output_prefix",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        missing = {"policy", "environment", "horizons", "replications", "master_seed"} - set(raw)
        if missing:
            raise ValueError(f"missing config fields: {sorted(missing)}")
        return cls(
            policy=raw["policy"],
            environment=raw["environment"],
            horizons=tuple(raw["horizons"]),
            replications=int(raw["replications"]),
            master_seed=int(raw["master_seed"]),
            trace=bool(raw.get("trace", False)),
            output_prefix=raw.get("output_prefix"),
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


@dataclass(frozen=True)
class HorizonSummary:
    """Replication statistics at one horizon."""

    n: int
    mean_regret: float
    var_regret: float
    stderr: float
    tail_prob: float
    mean_best_arm_loss: float
    bound_value: Optional[float]


@dataclass(frozen=True)
class ExperimentSummary:
    """Per-horizon statistics plus growth-exponent fits across horizons."""

    rows: tuple[HorizonSummary, ...]
    variance_slope: Optional[float]
    mean_regret_slope: Optional[float]
    records: tuple[tuple[RunRecord, ...], ...] = field(repr=False, default=())


def fit_loglog_slope(pairs: Sequence[tuple[float, float]]) -> float:
    """Ordinary least-squares slope of log(value) against log(n)."""
    if len(pairs) < 3:
        raise ValueError("need at least three (n, value) pairs")
    ns = np.asarray([p[0] for p in pairs], dtype=np.float64)
    values = np.asarray([p[1] for p in pairs], dtype=np.float64)
    if np.any(ns <= 0.0) or np.any(values <= 0.0):
        raise ValueError("log-log fits need positive n and positive values")
    slope, _ = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope)


def _bound_for(policy_kind: str, k: int, n: int, mean_best_loss: float) -> Optional[float]:
    if policy_kind == "hybrid_inf_anytime":
        return first_order_regret_bound_anytime(k, n, mean_best_loss)
    if policy_kind == "hybrid_inf_known_horizon":
        return first_order_regret_bound_known_horizon(k, n, mean_best_loss)
    return None


def _summarize_horizon(n: int, policy_kind: str, records: Sequence[RunRecord]) -> HorizonSummary:
    regrets = np.asarray([r.random_regret for r in records])
    best = np.asarray([r.cumulative_best_arm_loss for r in records])
    mean = float(regrets.mean())
    var = float(regrets.var(ddof=1)) if regrets.size > 1 else 0.0
    stderr = math.sqrt(var / regrets.size) if regrets.size > 1 else 0.0
    tail = float(np.mean(regrets >= n / 4.0))
    mean_best = float(best.mean())
    return HorizonSummary(
        n=n,
        mean_regret=mean,
        var_regret=var,
        stderr=stderr,
        tail_prob=tail,
        mean_best_arm_loss=mean_best,
        bound_value=_bound_for(policy_kind, records[0].arm_count, n, mean_best),
    )


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_format(cell) for cell in row) + "\n")


def run_experiment(config: ExperimentConfig, write_csv: bool = True) -> ExperimentSummary:
    """Run the experiment grid and return (and optionally write) its statistics.

    Replications execute in deterministic (horizon, replication) order; the
    two CSV files are written when the config names an ``output_prefix``.
    """
    policy_kind = config.policy["kind"]
    env_kind = config.environment["kind"]
    all_records: list[tuple[RunRecord, ...]] = []
    summaries: list[HorizonSummary] = []
    run_rows = []
    for n in config.horizons:
        records = simulate_replications(
            config.policy,
            config.environment,
            n,
            config.master_seed,
            config.replications,
            trace=config.trace,
        )
        all_records.append(tuple(records))
        summaries.append(_summarize_horizon(n, policy_kind, records))
        for record in records:
            run_rows.append(
                (
                    record.seed,
                    n,
                    record.arm_count,
                    policy_kind,
                    env_kind,
                    record.random_regret,
                    record.cumulative_best_arm_loss,
                )
            )

    def slope_or_none(values):
        pairs = [(s.n, v) for s, v in zip(summaries, values)]
        if len(pairs) < 3 or any(v <= 0.0 for _, v in pairs):
            return None
        return fit_loglog_slope(pairs)

    summary = ExperimentSummary(
        rows=tuple(summaries),
        variance_slope=slope_or_none([s.var_regret for s in summaries]),
        mean_regret_slope=slope_or_none([s.mean_regret for s in summaries]),
        records=tuple(all_records),
    )

    if write_csv and config.output_prefix is not None:
        _write_csv(
            f"{config.output_prefix}_runs.csv",
            ("seed", "n", "k", "policy", "env", "random_regret", "best_arm_loss"),
            run_rows,
        )
        _write_csv(
            f"{config.output_prefix}_summary.csv",
            ("n", "mean_regret", "var_regret", "stderr", "tail_prob", "bound_value"),
            [
                (s.n, s.mean_regret, s.var_regret, s.stderr, s.tail_prob, s.bound_value)
                for s in summaries
            ],
        )
    return summary
