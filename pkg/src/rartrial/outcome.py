"""Composite-endpoint data types, the day-count transform, and the scenario
generator for synthetic patients.

A patient either dies (binary indicator 1, response 0) or survives with an
integer count of organ-support-free days in [1, 28].  Survivor day counts map
to the modeling scale through ``d = 4 - ln(30 - y)``; counts at the 28-day
ceiling are indistinguishable from censoring and sit as a point mass at the
upper bound of that scale.  Logs are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import truncnorm

L_CEILING = 4  # smallest integer above ln(30)
LOWER = L_CEILING - math.log(30.0)  # 0.598797..., image of y -> 30 exclusive
UPPER = L_CEILING - math.log(2.0)   # 3.306853..., image of y = 28


@dataclass(frozen=True)
class TransformConstants:
    """Bounds of the transformed-response scale."""

    l_ceiling: int = L_CEILING
    lower: float = LOWER
    upper: float = UPPER

    def __post_init__(self):
        if self.l_ceiling != 4 or not self.lower < self.upper:
            raise ValueError("inconsistent transform constants")


CONSTANTS = TransformConstants()


@dataclass(frozen=True)
class PatientRecord:
    """One subject: death indicator, reported day count, transformed response.

    ``y_days`` is reporting sugar (None for deaths); ``d`` is authoritative.
    """

    tau: int
    y_days: int | None
    d: float

    def __post_init__(self):
        if self.tau not in (0, 1):
            raise ValueError("tau must be 0 or 1")
        if self.tau == 1:
            if self.d != 0.0:
                raise ValueError("death records carry d = 0")
        elif not (LOWER < self.d <= UPPER):
            raise ValueError(f"alive response {self.d} outside ({LOWER}, {UPPER}]")


@dataclass(frozen=True)
class ArmModel:
    """Generating (or posterior-draw) parameters of one arm.

    lambda_: mortality probability; omega: censoring-mass probability among
    survivors; mu, sigma2: location and squared scale of the truncated-normal
    morbidity component.  mu may lie outside the truncation interval.
    """

    lambda_: float
    omega: float
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (0.0 <= self.lambda_ <= 1.0 and 0.0 <= self.omega <= 1.0):
            raise ValueError("lambda and omega must lie in [0, 1]")
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.lambda_, self.omega, self.mu, self.sigma2)


SCENARIO_LABELS = ("MNN", "SNN", "SMN", "SMM", "SSM")

_CONTROL_MU = -2.3
_CONTROL_SIGMA = 0.8
_EFFECT_SHIFT = {"S": 0.8 * _CONTROL_SIGMA, "M": 0.5 * _CONTROL_SIGMA, "N": 0.0}
_EFFECT_MORTALITY = {"S": 0.15, "M": 0.18, "N": 0.20}


@dataclass(frozen=True)
class ScenarioSpec:
    """Named arm lineup; index 0 is the control arm."""

    name: str
    omega_level: float
    arms: tuple[ArmModel, ...] = field(default=())

    def __post_init__(self):
        if not self.arms:
            raise ValueError("scenario needs at least the control arm")

    @property
    def n_treatments(self) -> int:
        return len(self.arms) - 1

    def true_thetas(self) -> np.ndarray:
        from .posterior import theta_of

        return np.array([theta_of(arm) for arm in self.arms])

    def best_arm_indices(self) -> list[int]:
        """Treatment arms attaining the maximal true mean response (ties all count)."""
        thetas = self.true_thetas()[1:]
        best = thetas.max()
        return [k + 1 for k, t in enumerate(thetas) if best - t < 1e-12]


def transform_osfd(y_days: int, tau: int) -> float:
    """Map a day count to the modeling scale; deaths map to 0."""
    if tau == 1:
        return 0.0
    if not 1 <= y_days <= 28:
        raise ValueError(f"day count {y_days} outside [1, 28]")
    return L_CEILING - math.log(30.0 - y_days)


def osfd_days(d: float) -> float:
    """Continuous inverse of the survivor transform."""
    return 30.0 - math.exp(L_CEILING - d)


def build_scenario(name: str, omega_level: float) -> ScenarioSpec:
    """Control plus one treatment arm per letter of the label."""
    label = name.upper()
    if label not in SCENARIO_LABELS:
        raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_LABELS}")
    if omega_level not in (0.2, 0.3):
        raise ValueError("omega level must be 0.2 or 0.3")
    sigma2 = _CONTROL_SIGMA**2
    control = ArmModel(0.20, omega_level, _CONTROL_MU, sigma2)
    arms = [control]
    for letter in label:
        arms.append(
            ArmModel(
                _EFFECT_MORTALITY[letter],
                omega_level,
                _CONTROL_MU + _EFFECT_SHIFT[letter],
                sigma2,
            )
        )
    return ScenarioSpec(label, omega_level, tuple(arms))


def simulate_outcomes(arm: ArmModel, n: int, rng: np.random.Generator,
                      constants: TransformConstants = CONSTANTS):
    """Vectorized draws: returns (tau, d) arrays of length n."""
    tau = (rng.random(n) < arm.lambda_).astype(np.int8)
    d = np.zeros(n)
    alive = tau == 0
    n_alive = int(alive.sum())
    if n_alive:
        censored = rng.random(n_alive) < arm.omega
        vals = np.full(n_alive, constants.upper)
        n_tn = int((~censored).sum())
        if n_tn:
            vals[~censored] = truncnorm.sample(
                arm.mu, arm.sigma2, constants.lower, constants.upper, n_tn, rng
            )
        d[alive] = vals
    return tau, d


def simulate_patient(arm: ArmModel, constants: TransformConstants,
                     rng: np.random.Generator) -> PatientRecord:
    """Draw a single patient record from an arm's generating model."""
    tau, d = simulate_outcomes(arm, 1, rng, constants)
    if tau[0] == 1:
        return PatientRecord(1, None, 0.0)
    val = float(d[0])
    if val == constants.upper:
        return PatientRecord(0, 28, val)
    days = int(min(max(math.floor(osfd_days(val)), 1), 28))
    return PatientRecord(0, days, val)
