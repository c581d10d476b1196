"""Alpha-spending functions, simulation-based critical-value calibration, and
the per-interim efficacy test.

Calibration simulates two-arm null trials (both arms drawn from the null
profile, each stage split equally), records the posterior superiority
probability at every interim, and walks the interims converting spending
increments into empirical quantiles of the surviving replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np
from scipy.special import ndtr, ndtri

from .outcome import ArmModel, simulate_outcomes
from .posterior import McmcConfig, gibbs_fit_arrays, prob_superiority_draws
from .streams import substream

_E_MINUS_1 = math.e - 1.0


class CalibrationError(RuntimeError):
    """No replicate survived to the interim being calibrated."""


def alpha_pocock(t: float, alpha: float) -> float:
    _check_t(t)
    return alpha * math.log(1.0 + _E_MINUS_1 * t)


def alpha_obf(t: float, alpha: float) -> float:
    _check_t(t)
    z = ndtri(1.0 - alpha / 2.0)
    return 2.0 - 2.0 * float(ndtr(z / math.sqrt(t)))


def alpha_power(t: float, alpha: float, gamma: float = 1.0) -> float:
    _check_t(t)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return t**gamma * alpha


def _check_t(t: float) -> None:
    if not 0.0 < t <= 1.0:
        raise ValueError("information fraction must be in (0, 1]")


SPENDING_FUNCTIONS = ("pocock", "obf", "power")


def spending_value(name: str, t: float, alpha: float, gamma: float = 1.0) -> float:
    if name == "pocock":
        return alpha_pocock(t, alpha)
    if name == "obf":
        return alpha_obf(t, alpha)
    if name == "power":
        return alpha_power(t, alpha, gamma)
    raise ValueError(f"unknown spending function {name!r}")


@dataclass(frozen=True)
class SpendingSchedule:
    """Per-interim information fractions, cumulative/incremental spend, and
    calibrated critical values."""

    t: np.ndarray
    alpha_cum: np.ndarray
    delta_alpha: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.alpha_cum) == len(self.delta_alpha) == len(self.c) == n):
            raise ValueError("schedule columns must have equal length")
        if np.any(np.diff(self.alpha_cum) < -1e-12) or np.any(self.delta_alpha < -1e-12):
            raise ValueError("spending must be non-decreasing")

    @property
    def num_interims(self) -> int:
        return len(self.t)

    @property
    def alpha(self) -> float:
        return float(self.alpha_cum[-1])


def spending_grid(name: str, num_stages: int, alpha: float,
                  gamma: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.arange(1, num_stages + 1) / num_stages
    cum = np.array([spending_value(name, tj, alpha, gamma) for tj in t])
    delta = np.diff(cum, prepend=0.0)
    return t, cum, delta


@dataclass(frozen=True)
class CalibrationConfig:
    null_arm: ArmModel
    n_rep: int = 10_000
    stage_size: int = 200
    num_stages: int = 10
    alpha: float = 0.025
    spending: str = "obf"
    power_gamma: float = 1.0
    delta: float = 0.65

    def __post_init__(self):
        if self.n_rep < 100:
            raise ValueError("need at least 100 calibration replicates")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must be in (0, 0.5)")
        if self.spending not in SPENDING_FUNCTIONS:
            raise ValueError(f"unknown spending function {self.spending!r}")


def _null_pps_row(config: CalibrationConfig, mcmc: McmcConfig, seed: int,
                  rep: int) -> np.ndarray:
    """Superiority trajectory of one two-arm null replicate across interims."""
    n_treat = config.stage_size // 2
    n_ctrl = config.stage_size - n_treat
    sizes = (n_ctrl, n_treat)
    tau = [np.empty(0, dtype=np.int8), np.empty(0, dtype=np.int8)]
    d = [np.empty(0), np.empty(0)]
    row = np.empty(config.num_stages)
    for stage in range(1, config.num_stages + 1):
        for arm in (0, 1):
            t_new, d_new = simulate_outcomes(
                config.null_arm, sizes[arm],
                substream(seed, 1, rep, stage, arm, 0))
            tau[arm] = np.concatenate([tau[arm], t_new])
            d[arm] = np.concatenate([d[arm], d_new])
        fits = [
            gibbs_fit_arrays(tau[arm], d[arm], mcmc,
                             substream(seed, 1, rep, stage, arm, 1))
            for arm in (0, 1)
        ]
        row[stage - 1] = prob_superiority_draws(
            fits[1].thetas(), fits[0].thetas(), config.delta)
    return row


def _null_pps_chunk(args) -> list[np.ndarray]:
    config, mcmc, seed, reps = args
    return [_null_pps_row(config, mcmc, seed, rep) for rep in reps]


def simulate_null_matrix(config: CalibrationConfig, mcmc: McmcConfig, seed: int,
                         workers: int = 1) -> np.ndarray:
    """(n_rep, J) matrix of interim superiority probabilities under the null."""
    reps = range(config.n_rep)
    if workers <= 1:
        rows = [_null_pps_row(config, mcmc, seed, rep) for rep in reps]
    else:
        chunks = [(config, mcmc, seed, list(reps)[i::workers]) for i in range(workers)]
        with get_context("spawn").Pool(workers) as pool:
            parts = pool.map(_null_pps_chunk, chunks)
        rows = [None] * config.n_rep
        for chunk, part in zip(chunks, parts):
            for rep, row in zip(chunk[3], part):
                rows[rep] = row
    return np.vstack(rows)


def upper_quantile(values: np.ndarray, level: float) -> float:
    """Inverse-CDF (type-1) empirical quantile: the ceil(level * n)-th order
    statistic."""
    ordered = np.sort(values)
    idx = min(max(int(math.ceil(level * ordered.size)), 1), ordered.size)
    return float(ordered[idx - 1])


def boundaries_from_matrix(pps: np.ndarray, t: np.ndarray, alpha_cum: np.ndarray,
                           delta_alpha: np.ndarray) -> SpendingSchedule:
    """Walk the interims, conditioning each quantile on the survivors of the
    previous boundary."""
    n_rep, num_stages = pps.shape
    c = np.empty(num_stages)
    surviving = np.ones(n_rep, dtype=bool)
    for j in range(num_stages):
        rows = pps[surviving, j]
        if rows.size == 0:
            raise CalibrationError(
                f"no replicates survive to interim {j + 1}; increase n_rep")
        level = 1.0 - (alpha_cum[0] if j == 0 else delta_alpha[j])
        c[j] = upper_quantile(rows, level)
        surviving &= pps[:, j] <= c[j]
    return SpendingSchedule(t, alpha_cum, delta_alpha, c)


def calibrate_boundaries(config: CalibrationConfig, mcmc: McmcConfig, seed: int,
                         workers: int = 1) -> SpendingSchedule:
    t, cum, delta = spending_grid(config.spending, config.num_stages,
                                  config.alpha, config.power_gamma)
    pps = simulate_null_matrix(config, mcmc, seed, workers)
    return boundaries_from_matrix(pps, t, cum, delta)


def check_early_stop(best_vs_control_pps: float, c_j: float) -> bool:
    """Stop for efficacy only on strict exceedance."""
    return best_vs_control_pps > c_j


BOUNDARY_HEADER = "# rartrial boundary file v1"


def write_boundary_file(schedule: SpendingSchedule, path, meta: dict | None = None) -> None:
    lines = [BOUNDARY_HEADER]
    if meta:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in sorted(meta.items())))
    lines.append("j,t,alpha_cum,delta_alpha,c")
    for j in range(schedule.num_interims):
        lines.append(",".join([
            str(j + 1),
            repr(float(schedule.t[j])),
            repr(float(schedule.alpha_cum[j])),
            repr(float(schedule.delta_alpha[j])),
            repr(float(schedule.c[j])),
        ]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_boundary_file(path) -> SpendingSchedule:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != BOUNDARY_HEADER:
        raise ValueError(f"{path}: not a recognized boundary file")
    rows = [ln.split(",") for ln in lines if ln[0] not in "#j"]
    data = np.array(rows, dtype=float)
    return SpendingSchedule(data[:, 1], data[:, 2], data[:, 3], data[:, 4])
