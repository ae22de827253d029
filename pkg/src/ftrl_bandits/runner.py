"""Replicated-run engine.

Replications advance in lockstep as numpy row batches.  The per-round math is
the same kernel code the single-run policy objects use, and every iterative
loop runs a fixed number of rounds, so a batched run reproduces a sequential
run of the same replication bit for bit (the slow explorer's fast path is the
one exception: it sums losses over constant-action segments, which reorders
float additions at the 1e-12 level).

Seed derivation, fixed and documented so results reproduce across platforms:
every stream is a counter-based Philox generator keyed by a SeedSequence over
an integer tuple.

* sampling uniforms of replication r at horizon n: ``(master, n, r, 1)``;
  one uniform per round, consumed by inverse-CDF sampling.
* environment seed of replication r: first 64-bit word of ``(master, n, r, 2)``.
* slow-explorer schedule seed: first 64-bit word of ``(master, n, r, 3)``.
* run fingerprint (the CSV seed column): first 64-bit word of ``(master, n, r)``.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import ProbabilityVector, RoundRecord, RunRecord
from .environments import make_environment
from .policies import (
    exp3_distribution,
    hybrid_distribution,
    inf_premix_distribution,
    pre_mixing_gap_margin,
    resolve_policy_config,
)
from .potentials import HYBRID, LOG_BARRIER, TSALLIS_HALF, Potential, hessian_fn
from .schedules import (
    adaptive_rate_increment,
    chopped_floor,
    eta_zero_hybrid,
    eta_zero_known_horizon,
    inf_mixing_gamma,
    sample_exploration_events,
    slow_set_breakpoints,
)
from .solver import solve_batch

__all__ = [
    "sampling_uniforms",
    "environment_seed",
    "schedule_seed",
    "run_fingerprint",
    "sample_rows",
    "simulate_replications",
]

#: soft cap, in floats, on (uniform block + per-replication loss block) memory
_BATCH_FLOAT_BUDGET = 12_000_000


def _seed_word(entropy: tuple) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def sampling_uniforms(master_seed: int, n: int, r: int, count: int) -> np.ndarray:
    """The first ``count`` sampling uniforms of replication ``r`` at horizon ``n``."""
    seq = np.random.SeedSequence((master_seed, n, r, 1))
    return np.random.Generator(np.random.Philox(seq)).random(count)


def environment_seed(master_seed: int, n: int, r: int) -> int:
    return _seed_word((master_seed, n, r, 2))


def schedule_seed(master_seed: int, n: int, r: int) -> int:
    return _seed_word((master_seed, n, r, 3))


def run_fingerprint(master_seed: int, n: int, r: int) -> int:
    return _seed_word((master_seed, n, r))


def sample_rows(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling, rowwise: the first index whose cdf exceeds u.

    Rounding can leave the last cdf entry a hair under 1; draws beyond it fall
    back to the last arm.
    """
    inside = u[:, None] < cdf
    first = inside.argmax(axis=1)
    return np.where(inside[:, -1], first, cdf.shape[1] - 1)


def _env_is_deterministic(env_config: dict) -> bool:
    kind = env_config.get("kind")
    if kind in ("variance_adversary", "file_replay"):
        return True
    return kind == "linearly_separable" and not env_config.get("noise", True)


def _resolve_env_config(env_config: dict, horizon: int) -> dict:
    out = dict(env_config)
    if out.get("horizon") == "match":
        out["horizon"] = horizon
    return out


class _BatchFtrl:
    """Lockstep state for one batch of replications of an FTRL-family policy."""

    def __init__(self, cfg: dict, k: int, b: int):
        self.kind = cfg["kind"]
        self.k = k
        self.b = b
        self.rows = np.arange(b)
        self.lhat = np.zeros((b, k))
        if self.kind in ("exp3_fixed", "inf_fixed", "logbarrier_fixed"):
            self.eta = float(cfg["eta"])
        elif self.kind in ("hybrid_inf_anytime", "hybrid_inf_known_horizon"):
            self.known_horizon = cfg.get("known_horizon")
            q = float(cfg.get("q", 1.0))
            self.potential = Potential(
                HYBRID, q=q, arm_count=k, known_horizon=self.known_horizon
            )
            if cfg.get("eta0") is not None:
                self.eta0 = float(cfg["eta0"])
            elif self.known_horizon is None:
                self.eta0 = eta_zero_hybrid(k, q)
            else:
                self.eta0 = eta_zero_known_horizon(k)
            self.accumulator = np.zeros(b)
        elif self.kind == "explored_inf":
            self.gap_margin = np.full(b, -np.inf)
        else:
            raise ValueError(f"no batch stepper for policy kind {self.kind!r}")

    def rate(self, t: int):
        if self.kind in ("exp3_fixed", "inf_fixed", "logbarrier_fixed"):
            return np.full(self.b, self.eta)
        if self.kind == "explored_inf":
            return np.full(self.b, math.sqrt(1.0 / t))
        return self.eta0 / np.sqrt(1.0 + self.accumulator)

    def floor(self, t: int) -> float:
        if self.kind in ("hybrid_inf_anytime", "hybrid_inf_known_horizon"):
            return chopped_floor(t, self.k, self.known_horizon)
        return 0.0

    def distribution(self, t: int) -> np.ndarray:
        if self.kind == "exp3_fixed":
            return exp3_distribution(self.lhat, self.eta)
        if self.kind == "inf_fixed":
            return inf_premix_distribution(self.lhat, self.eta)
        if self.kind == "logbarrier_fixed":
            return solve_batch(self.lhat, Potential(LOG_BARRIER), self.eta, 0.0, 1)[0]
        if self.kind == "explored_inf":
            eta = np.full(self.b, math.sqrt(1.0 / t))
            ptilde = inf_premix_distribution(self.lhat, eta)
            self.gap_margin = np.maximum(
                self.gap_margin, pre_mixing_gap_margin(ptilde, self.lhat, eta)
            )
            gamma = inf_mixing_gamma(t)
            return (1.0 - gamma) * ptilde + gamma / self.k
        eta = self.eta0 / np.sqrt(1.0 + self.accumulator)
        return hybrid_distribution(self.lhat, self.potential, eta, self.floor(t), t)

    def update(self, t: int, actions: np.ndarray, la: np.ndarray, pa: np.ndarray):
        self.lhat[self.rows, actions] += la / pa
        if self.kind in ("hybrid_inf_anytime", "hybrid_inf_known_horizon"):
            hess = hessian_fn(self.potential, t)(pa)
            self.accumulator += adaptive_rate_increment(la, pa, hess)

    def extras(self, i: int) -> dict:
        if self.kind == "explored_inf":
            return {"gap_bound_margin": float(self.gap_margin[i])}
        return {}


def _run_ftrl_batch(
    policy_cfg: dict,
    env_cfg: dict,
    n: int,
    master_seed: int,
    rep_indices: range,
    trace: bool,
) -> list[RunRecord]:
    b = len(rep_indices)
    reps = list(rep_indices)
    uniforms = np.stack([sampling_uniforms(master_seed, n, r, n) for r in reps])
    deterministic = _env_is_deterministic(env_cfg)
    if deterministic:
        env = make_environment(env_cfg)
        shared_block = env.loss_block(n)
        k = env.k
        loss3 = None
    else:
        envs = [
            make_environment(env_cfg, seed=environment_seed(master_seed, n, r))
            for r in reps
        ]
        k = envs[0].k
        loss3 = np.stack([e.loss_block(n) for e in envs])
        shared_block = None

    stepper = _BatchFtrl(policy_cfg, k, b)
    rows = stepper.rows
    incurred = np.zeros(b)
    traces: Optional[list[list[RoundRecord]]] = (
        [[] for _ in range(b)] if trace else None
    )

    for t in range(1, n + 1):
        dist = stepper.distribution(t)
        cdf = np.cumsum(dist, axis=1)
        actions = sample_rows(cdf, uniforms[:, t - 1])
        if deterministic:
            la = shared_block[t - 1][actions]
        else:
            la = loss3[rows, t - 1, actions]
        pa = dist[rows, actions]
        stepper.update(t, actions, la, pa)
        incurred += la
        if traces is not None:
            floor_now = stepper.floor(t)
            rate_now = stepper.rate(t)
            for i in range(b):
                traces[i].append(
                    RoundRecord(
                        t=t,
                        action=int(actions[i]),
                        loss_incurred=float(la[i]),
                        distribution=ProbabilityVector(dist[i].copy(), floor=floor_now),
                        learning_rate=float(rate_now[i]),
                    )
                )

    if deterministic:
        best_losses = np.full(b, float(shared_block.sum(axis=0).min()))
    else:
        best_losses = loss3.sum(axis=1).min(axis=1)

    records = []
    for i, r in enumerate(reps):
        records.append(
            RunRecord(
                seed=run_fingerprint(master_seed, n, r),
                horizon=n,
                arm_count=k,
                random_regret=float(incurred[i] - best_losses[i]),
                cumulative_best_arm_loss=float(best_losses[i]),
                trace=tuple(traces[i]) if traces is not None else None,
                extras=stepper.extras(i),
            )
        )
    return records


def _run_slow_explorer_batch(
    policy_cfg: dict,
    env_cfg: dict,
    n: int,
    master_seed: int,
    rep_indices: range,
    trace: bool,
) -> list[RunRecord]:
    """Segment-summed fast path for the slow explorer.

    Between exploration rounds and target-level crossings the played arm is
    constant, so whole stretches reduce to cumulative-sum differences; a run
    costs O(|exploration set| + n) regardless of how long the exploit
    stretches are.  Tracing falls back to the per-round policy object.
    """
    f_table = np.asarray(policy_cfg["f_table"], dtype=np.int64)
    if f_table.size < n:
        raise ValueError("the tabulated exploration target is shorter than the horizon")
    tau = slow_set_breakpoints(f_table)
    deterministic = _env_is_deterministic(env_cfg)
    shared_env = make_environment(env_cfg) if deterministic else None

    records = []
    for r in rep_indices:
        if deterministic:
            env = shared_env
        else:
            env = make_environment(env_cfg, seed=environment_seed(master_seed, n, r))
        k = env.k
        block = env.loss_block(n)
        cums = np.vstack([np.zeros(k), np.cumsum(block, axis=0)])
        events = sample_exploration_events(
            f_table, schedule_seed(master_seed, n, r)
        )
        event_index = {int(t): j for j, t in enumerate(events)}
        uniforms = sampling_uniforms(master_seed, n, r, n)
        uniform_cdf = np.cumsum(np.full((1, k), 1.0 / k), axis=1)

        samples = np.zeros((events.size, k))
        breakpoints = sorted(
            {1, n + 1}
            | {int(t) for t in events if t <= n}
            | {int(tm) + 1 for tm in tau if tm + 1 <= n}
        )
        incurred = 0.0
        segments = []  # (arm, last round) of each exploit stretch
        exploration_count = 0
        for left, right in zip(breakpoints, breakpoints[1:]):
            start = left
            j = event_index.get(left)
            if j is not None:
                a = int(sample_rows(uniform_cdf, uniforms[left - 1 : left])[0])
                loss = float(block[left - 1, a])
                incurred += loss
                samples[j, :] = 0.0
                samples[j, a] = k * loss
                exploration_count += 1
                start = left + 1
            if start < right:
                m = int(f_table[start - 2])
                arm = int(np.argmin(samples[:m].mean(axis=0)))
                incurred += float(cums[right - 1, arm] - cums[start - 1, arm])
                segments.append((arm, right - 1))

        totals = cums[n]
        best_arm = int(np.argmin(totals))
        kappa = 0
        for arm, last_round in segments:
            if arm != best_arm:
                kappa = max(kappa, last_round)

        run_trace = None
        if trace:
            run_trace = _slow_explorer_trace(policy_cfg, env, n, master_seed, r)

        records.append(
            RunRecord(
                seed=run_fingerprint(master_seed, n, r),
                horizon=n,
                arm_count=k,
                random_regret=incurred - float(totals[best_arm]),
                cumulative_best_arm_loss=float(totals[best_arm]),
                trace=run_trace,
                extras={
                    "kappa": float(kappa),
                    "exploration_rounds": float(exploration_count),
                },
            )
        )
    return records


def _slow_explorer_trace(policy_cfg, env, n, master_seed, r):
    """Per-round reference loop used only when a trace was requested."""
    from .policies import make_policy

    policy = make_policy(
        dict(policy_cfg), horizon=n, schedule_seed=schedule_seed(master_seed, n, r)
    )
    uniforms = sampling_uniforms(master_seed, n, r, n)
    out = []
    for t in range(1, n + 1):
        dist = policy.next_distribution()
        cdf = np.cumsum(dist.entries[None, :], axis=1)
        a = int(sample_rows(cdf, uniforms[t - 1 : t])[0])
        loss = float(env.loss_at(t).entries[a])
        out.append(
            RoundRecord(
                t=t,
                action=a,
                loss_incurred=loss,
                distribution=dist,
                learning_rate=1.0,  # rate-free policy; unit placeholder
            )
        )
        policy.observe(a, loss)
    return tuple(out)


def simulate_replications(
    policy_config: dict,
    environment_config: dict,
    horizon: int,
    master_seed: int,
    replications: int,
    *,
    trace: bool = False,
) -> list[RunRecord]:
    """Run independent replications and return their records in order.

    Records come back in replication order regardless of internal batching, so
    any aggregation downstream is a deterministic reduce.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if replications < 1:
        raise ValueError("need at least one replication")
    env_cfg = _resolve_env_config(environment_config, horizon)
    # a placeholder schedule seed satisfies resolution; the slow-explorer path
    # derives one per replication and ignores whatever the config carried
    policy_cfg = resolve_policy_config(policy_config, horizon=horizon, schedule_seed=-1)
    policy_cfg.pop("schedule_seed", None)
    # probe the arm count once so batch sizing can account for loss blocks
    probe_env = make_environment(env_cfg, seed=0 if not _env_is_deterministic(env_cfg) else None)
    k = probe_env.k
    if "k" in policy_cfg and policy_cfg["k"] != k:
        raise ValueError(
            f"policy has {policy_cfg['k']} arms but the environment has {k}"
        )

    if policy_cfg["kind"] == "slow_explorer":
        return _run_slow_explorer_batch(
            policy_cfg, env_cfg, horizon, master_seed, range(replications), trace
        )

    per_rep_floats = horizon * (1 + (k if not _env_is_deterministic(env_cfg) else 0))
    batch = max(1, min(replications, _BATCH_FLOAT_BUDGET // max(per_rep_floats, 1)))
    if trace:
        batch = 1
    records: list[RunRecord] = []
    for start in range(0, replications, batch):
        stop = min(start + batch, replications)
        records.extend(
            _run_ftrl_batch(
                policy_cfg, env_cfg, horizon, master_seed, range(start, stop), trace
            )
        )
    return records
