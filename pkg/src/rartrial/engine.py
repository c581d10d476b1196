"""Staged-trial orchestration and the replicated operating-characteristics
harness.

One trial runs stage-by-stage: enroll, observe outcomes immediately, refit
every arm's posterior on all accumulated data, test the efficacy boundary,
and adapt the next stage's allocation under the configured rule.  Replicates
derive every random stream from (seed, replicate, stage, arm), so results do
not depend on worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .allocation import (
    AllocationResult,
    ComparatorConfig,
    apply_suspension,
    assign_stage,
    fixed_randomization,
    rule1,
    rule2,
    rule3,
    thompson,
    trippa,
)
from .outcome import ScenarioSpec, simulate_outcomes
from .posterior import (
    McmcConfig,
    gibbs_fit_arrays,
    prob_best_draws,
    prob_superiority_draws,
)
from .stopping import SpendingSchedule, check_early_stop
from .streams import substream

RULE_NAMES = ("rule1", "rule2", "rule3", "fr", "ts", "tp")


@dataclass(frozen=True)
class TrialConfig:
    scenario: ScenarioSpec
    rule: str = "rule3"
    total_n: int = 2000
    num_stages: int = 10
    delta: float = 0.65
    hypothesis_r: int = 2
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    comparator: ComparatorConfig = field(default_factory=ComparatorConfig)
    seed: int = 0
    stage1_exact_split: bool = False

    def __post_init__(self):
        if self.rule not in RULE_NAMES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.total_n % self.num_stages:
            raise ValueError("total sample size must divide evenly into stages")
        k = self.scenario.n_treatments
        if not 1 <= self.hypothesis_r <= max(k - 1, 1):
            raise ValueError("hypothesis_r must lie in [1, K-1]")

    @property
    def stage_size(self) -> int:
        return self.total_n // self.num_stages


@dataclass(frozen=True)
class TrialResult:
    stopped_early: bool
    stop_stage: int | None
    rejected: bool
    per_arm_n: np.ndarray
    best_arm_proportion: float
    pps_ha1: float
    pps_ha2: float
    pps_ha3: float
    theta_hats: np.ndarray
    xi_hats: np.ndarray
    suspension_log: tuple


@dataclass(frozen=True)
class ReplicationSummary:
    r_total: int
    rejection_rate: float
    means: dict
    sds: dict


def final_pps(theta_treat: np.ndarray, theta_control: np.ndarray, delta: float,
              r: int) -> tuple[float, float, float]:
    """Posterior superiority probabilities for the three alternatives.

    Treatment draws are compared at matched indices (draw-wise max/min/count)
    against every control draw.  ``theta_treat`` is (K, B).
    """
    k = theta_treat.shape[0]
    if not 1 <= r <= k:
        raise ValueError("r must lie in [1, K]")
    ha1 = prob_superiority_draws(theta_treat.max(axis=0), theta_control, delta)
    ha3 = prob_superiority_draws(theta_treat.min(axis=0), theta_control, delta)
    exceeds = theta_treat[:, :, None] > theta_control[None, None, :] + delta
    ha2 = float((exceeds.sum(axis=0) >= r).mean())
    return ha1, ha2, ha3


def final_pps_samples(samples, delta: float, r: int) -> tuple[float, float, float]:
    """Same as :func:`final_pps` from posterior samples (control first)."""
    thetas = [s.thetas() for s in samples]
    return final_pps(np.vstack(thetas[1:]), thetas[0], delta, r)


def _stage1_allocation(k_total: int) -> AllocationResult:
    return fixed_randomization(k_total)


def _exact_split(stage_size: int, n_arms: int) -> np.ndarray:
    base = stage_size // n_arms
    counts = np.full(n_arms, base, dtype=np.int64)
    counts[: stage_size - base * n_arms] += 1
    return counts


def _next_allocation(config: TrialConfig, thetas: list[np.ndarray],
                     counts: np.ndarray, enrolled: int) -> AllocationResult:
    k = config.scenario.n_treatments
    rule = config.rule
    comp = config.comparator
    if rule in ("rule1", "rule2", "rule3"):
        p_best = prob_best_draws(np.vstack(thetas[1:]))
        active, p_scaled = apply_suspension(p_best, comp.suspension_threshold)
        if rule == "rule1":
            return rule1(p_scaled, k, active)
        if rule == "rule2":
            return rule2(p_scaled, comp.rule2_cap, k, active)
        return rule3(p_scaled, active)
    if rule == "fr":
        return fixed_randomization(k)
    if rule == "ts":
        p_all = prob_best_draws(np.vstack(thetas))
        c = ComparatorConfig.thompson_exponent(enrolled, config.total_n)
        return thompson(p_all, c)
    superiority = np.array([
        prob_superiority_draws(thetas[arm], thetas[0], 0.0)
        for arm in range(1, k + 1)
    ])
    return trippa(superiority, counts, enrolled / config.total_n, comp)


def run_trial(config: TrialConfig, schedule: SpendingSchedule,
              seed: int | None = None, replicate_index: int = 0) -> TrialResult:
    if schedule.num_interims != config.num_stages:
        raise ValueError("schedule length must match the stage count")
    seed = config.seed if seed is None else seed
    arms = config.scenario.arms
    n_arms = len(arms)
    k = n_arms - 1
    stage_size = config.stage_size

    tau = [np.empty(0, dtype=np.int8) for _ in range(n_arms)]
    d = [np.empty(0) for _ in range(n_arms)]
    counts = np.zeros(n_arms, dtype=np.int64)
    alloc = _stage1_allocation(k)
    suspension_log: list[tuple[bool, ...]] = []
    stopped = False
    stop_stage: int | None = None
    rejected = False
    pps = (0.0, 0.0, 0.0)
    thetas: list[np.ndarray] = []

    for stage in range(1, config.num_stages + 1):
        if stage == 1 and config.stage1_exact_split:
            stage_counts = _exact_split(stage_size, n_arms)
        else:
            stage_counts = assign_stage(
                alloc, stage_size, substream(seed, 2, replicate_index, stage, 0, 2))
        for arm in range(n_arms):
            if stage_counts[arm] == 0:
                continue
            t_new, d_new = simulate_outcomes(
                arms[arm], int(stage_counts[arm]),
                substream(seed, 2, replicate_index, stage, arm, 0))
            tau[arm] = np.concatenate([tau[arm], t_new])
            d[arm] = np.concatenate([d[arm], d_new])
        counts += stage_counts

        fits = [
            gibbs_fit_arrays(tau[arm], d[arm], config.mcmc,
                             substream(seed, 2, replicate_index, stage, arm, 1))
            for arm in range(n_arms)
        ]
        thetas = [f.thetas() for f in fits]
        pps = final_pps(np.vstack(thetas[1:]), thetas[0], config.delta,
                        config.hypothesis_r)

        if stage < config.num_stages:
            if check_early_stop(pps[0], float(schedule.c[stage - 1])):
                stopped = True
                stop_stage = stage
                rejected = True
                break
            alloc = _next_allocation(config, thetas, counts, int(counts.sum()))
            suspension_log.append(tuple(bool(s) for s in alloc.suspended))
        else:
            rejected = check_early_stop(pps[0], float(schedule.c[-1]))

    theta_hats = np.array([t.mean() for t in thetas])
    xi_hats = theta_hats[1:] - theta_hats[0]
    best = config.scenario.best_arm_indices()
    best_prop = float(counts[best].sum() / counts.sum())
    return TrialResult(
        stopped_early=stopped,
        stop_stage=stop_stage,
        rejected=rejected,
        per_arm_n=counts,
        best_arm_proportion=best_prop,
        pps_ha1=pps[0],
        pps_ha2=pps[1],
        pps_ha3=pps[2],
        theta_hats=theta_hats,
        xi_hats=xi_hats,
        suspension_log=tuple(suspension_log),
    )


def _trial_chunk(args) -> list[TrialResult]:
    config, schedule, seed, reps = args
    return [run_trial(config, schedule, seed, rep) for rep in reps]


def run_replicates(config: TrialConfig, schedule: SpendingSchedule,
                   r_total: int, seed: int, workers: int = 1) -> list[TrialResult]:
    reps = range(r_total)
    if workers <= 1:
        return [run_trial(config, schedule, seed, rep) for rep in reps]
    chunks = [(config, schedule, seed, list(reps)[i::workers]) for i in range(workers)]
    with get_context("spawn").Pool(workers) as pool:
        parts = pool.map(_trial_chunk, chunks)
    results: list[TrialResult] = [None] * r_total
    for chunk, part in zip(chunks, parts):
        for rep, res in zip(chunk[3], part):
            results[rep] = res
    return results


def summarize(results: list[TrialResult]) -> ReplicationSummary:
    scalars = {
        "stopped_early": np.array([r.stopped_early for r in results], dtype=float),
        "best_arm_proportion": np.array([r.best_arm_proportion for r in results]),
        "pps_ha1": np.array([r.pps_ha1 for r in results]),
        "pps_ha2": np.array([r.pps_ha2 for r in results]),
        "pps_ha3": np.array([r.pps_ha3 for r in results]),
        "total_enrolled": np.array([r.per_arm_n.sum() for r in results], dtype=float),
    }
    per_arm = np.vstack([r.per_arm_n for r in results]).astype(float)
    theta = np.vstack([r.theta_hats for r in results])
    xi = np.vstack([r.xi_hats for r in results])
    means = {name: float(v.mean()) for name, v in scalars.items()}
    sds = {name: float(v.std(ddof=0)) for name, v in scalars.items()}
    means["per_arm_n"] = per_arm.mean(axis=0).tolist()
    sds["per_arm_n"] = per_arm.std(axis=0, ddof=0).tolist()
    means["theta_hats"] = theta.mean(axis=0).tolist()
    sds["theta_hats"] = theta.std(axis=0, ddof=0).tolist()
    means["xi_hats"] = xi.mean(axis=0).tolist()
    sds["xi_hats"] = xi.std(axis=0, ddof=0).tolist()
    rejection = float(np.mean([r.rejected for r in results]))
    return ReplicationSummary(len(results), rejection, means, sds)


def replicate(config: TrialConfig, schedule: SpendingSchedule, r_total: int,
              seed: int, workers: int = 1) -> ReplicationSummary:
    return summarize(run_replicates(config, schedule, r_total, seed, workers))
