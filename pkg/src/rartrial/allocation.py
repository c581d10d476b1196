"""Per-stage allocation: suspension, the three adaptive rules, and the
fixed/Thompson/Trippa comparators.

All rules return an ``AllocationResult`` whose probability vector runs over
arms 0..K with the control at index 0.  The adaptive rules take the rescaled
best-arm probabilities over the *active* treatment arms; suspended arms are
carried through as exact zeros for the stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ComparatorConfig:
    trippa_gamma_scale: float = 10.0
    trippa_gamma_power: float = 0.75
    trippa_eta_scale: float = 0.25
    rule2_cap: float = 0.8
    suspension_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.rule2_cap <= 1.0:
            raise ValueError("cap must be in (0, 1]")
        if not 0.0 <= self.suspension_threshold < 1.0:
            raise ValueError("suspension threshold must be in [0, 1)")

    @staticmethod
    def thompson_exponent(n_enrolled: int, total_n: int) -> float:
        """Cumulative-enrollment exponent n/(2N) for Thompson sampling."""
        return n_enrolled / (2.0 * total_n)


@dataclass(frozen=True)
class AllocationInput:
    p_best: np.ndarray            # over treatment arms 1..K
    arm_counts: np.ndarray        # cumulative enrollment, arms 0..K
    stage_index: int
    stage_size: int
    total_n: int
    num_stages: int

    def __post_init__(self):
        if abs(float(np.sum(self.p_best)) - 1.0) > 1e-9:
            raise ValueError("best-arm probabilities must sum to 1")
        if np.any(self.arm_counts < 0):
            raise ValueError("negative enrollment count")


@dataclass(frozen=True)
class AllocationResult:
    probs: np.ndarray                       # over arms 0..K, control first
    suspended: np.ndarray = field(default=None)  # bool, over treatment arms

    def __post_init__(self):
        if self.suspended is None:
            object.__setattr__(self, "suspended",
                               np.zeros(len(self.probs) - 1, dtype=bool))
        total = float(np.sum(self.probs))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"allocation sums to {total}, not 1")
        if np.any(self.probs < 0):
            raise ValueError("negative allocation probability")


def apply_suspension(p_best: np.ndarray, threshold: float):
    """Flag treatment arms below the threshold and rescale the rest.

    Returns (active boolean mask, rescaled vector over active arms).  If every
    arm falls below the threshold none are suspended; the control arm is not
    part of the input and is never suspended.
    """
    p_best = np.asarray(p_best, dtype=float)
    active = p_best >= threshold
    if not active.any():
        active = np.ones_like(active)
    kept = p_best[active]
    return active, kept / kept.sum()


def _expand(control: float, treatment: np.ndarray, active: np.ndarray) -> np.ndarray:
    probs = np.zeros(active.size + 1)
    probs[0] = control
    probs[1:][active] = treatment
    return probs


def rule1(p_scaled: np.ndarray, k_total: int,
          active: np.ndarray | None = None) -> AllocationResult:
    """Control pinned at 1/(K+1) of the designed arm count; the rest split
    proportionally over the active arms."""
    p_scaled = np.asarray(p_scaled, dtype=float)
    if active is None:
        active = np.ones(k_total, dtype=bool)
    control = 1.0 / (k_total + 1)
    probs = _expand(control, (1.0 - control) * p_scaled, active)
    return AllocationResult(probs, ~active)


def rule2(p_scaled: np.ndarray, cap: float = 0.8, k_total: int | None = None,
          active: np.ndarray | None = None) -> AllocationResult:
    """Best arm first (capped), control takes 1/K of the remainder, the other
    active arms split the rest proportionally."""
    p_scaled = np.asarray(p_scaled, dtype=float)
    if active is None:
        active = np.ones(p_scaled.size, dtype=bool)
    if k_total is None:
        k_total = active.size
    best = int(np.argmax(p_scaled))
    best_share = min(float(p_scaled[best]), cap)
    remainder = 1.0 - best_share
    control = remainder / k_total
    leftover = remainder - control
    others = np.delete(p_scaled, best)
    treatment = np.empty_like(p_scaled)
    treatment[best] = best_share
    if others.size == 0:
        control += leftover
    elif others.sum() > 0:
        shares = leftover * others / others.sum()
        treatment[np.arange(p_scaled.size) != best] = shares
    else:  # degenerate weights: split the leftover equally, losing no mass
        treatment[np.arange(p_scaled.size) != best] = leftover / others.size
    probs = _expand(control, treatment, active)
    return AllocationResult(probs, ~active)


def rule3(p_scaled: np.ndarray,
          active: np.ndarray | None = None) -> AllocationResult:
    """Control mirrors the best arm's weight, then everything renormalizes."""
    p_scaled = np.asarray(p_scaled, dtype=float)
    if active is None:
        active = np.ones(p_scaled.size, dtype=bool)
    raw_control = float(p_scaled.max())
    total = raw_control + p_scaled.sum()
    probs = _expand(raw_control / total, p_scaled / total, active)
    return AllocationResult(probs, ~active)


def fixed_randomization(k_total: int) -> AllocationResult:
    if k_total < 1:
        raise ValueError("need at least one treatment arm")
    return AllocationResult(np.full(k_total + 1, 1.0 / (k_total + 1)))


def thompson(p_best_incl_control: np.ndarray, c: float) -> AllocationResult:
    """Exponent-tempered best-arm probabilities over all K+1 arms."""
    p = np.asarray(p_best_incl_control, dtype=float)
    weights = np.power(p, c)
    total = weights.sum()
    if total <= 0:
        raise ValueError("all Thompson weights vanished")
    return AllocationResult(weights / total)


def trippa(superiority_probs: np.ndarray, arm_counts: np.ndarray, t: float,
           config: ComparatorConfig) -> AllocationResult:
    """Tempered superiority weights for treatments; the control weight tracks
    the enrollment imbalance against the leading arm."""
    if not 0.0 < t <= 1.0:
        raise ValueError("information fraction must be in (0, 1]")
    probs = np.asarray(superiority_probs, dtype=float)
    counts = np.asarray(arm_counts, dtype=float)
    k = probs.size
    gamma = config.trippa_gamma_scale * t**config.trippa_gamma_power
    eta = config.trippa_eta_scale * t
    raw = np.power(probs, gamma)
    if raw.sum() > 0:
        treatment = raw / raw.sum()
    else:
        treatment = np.full(k, 1.0 / k)
    control = (1.0 / k) * float(np.exp(eta * (counts[1:].max() - counts[0])))
    pi = np.concatenate([[control], treatment])
    return AllocationResult(pi / pi.sum())


def assign_stage(alloc: AllocationResult, stage_size: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Multinomial stage enrollment; suspended arms get exact zeros."""
    if stage_size < 1:
        raise ValueError("stage size must be positive")
    return rng.multinomial(stage_size, alloc.probs)
