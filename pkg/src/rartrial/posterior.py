"""Posterior machinery: truncated-normal moments, the arm-level estimand,
conjugate full conditionals, the Gibbs fit, and posterior-probability
calculators built on the retained draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels, truncnorm
from .outcome import CONSTANTS, ArmModel, PatientRecord, TransformConstants


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 2000
    burn_in: int = 500
    thin: int = 10

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1 or self.iterations < 1:
            raise ValueError("invalid MCMC sizes")
        if self.burn_in >= self.iterations:
            raise ValueError("burn-in must be shorter than the chain")
        if (self.iterations - self.burn_in) % self.thin:
            raise ValueError("post-burn-in length must be divisible by thin")
        if self.n_draws < 2:
            raise ValueError("need at least 2 retained draws")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


class TnMoments(NamedTuple):
    r_tn: float
    wr_tn: float
    mean: float
    variance: float


class BetaParams(NamedTuple):
    a: float
    b: float


class NormalParams(NamedTuple):
    mean: float
    variance: float


class InverseGammaParams(NamedTuple):
    shape: float
    scale: float


@dataclass(frozen=True)
class PosteriorSample:
    """Retained draws for one arm: (B, 4) array, columns lambda/omega/mu/sigma2."""

    draws: np.ndarray
    latent_z_rate: float | None = None

    def __post_init__(self):
        if self.draws.ndim != 2 or self.draws.shape[1] != 4:
            raise ValueError("draws must be (B, 4)")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    def arm(self, b: int) -> ArmModel:
        lam, omega, mu, sigma2 = self.draws[b]
        return ArmModel(lam, omega, mu, sigma2)

    def thetas(self, constants: TransformConstants = CONSTANTS) -> np.ndarray:
        return theta_draws(self.draws, constants)

    def to_text(self) -> str:
        lines = ["lambda omega mu sigma2"]
        for row in self.draws:
            lines.append(" ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PosteriorSample":
        rows = [line.split() for line in text.strip().splitlines()[1:]]
        return cls(np.array(rows, dtype=float))


def tn_moments(mu: float, sigma2: float,
               constants: TransformConstants = CONSTANTS) -> TnMoments:
    """Mean-shift ratio, variance ratio, mean and variance of the morbidity
    component truncated to the transform bounds."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    r, wr, mean, var = truncnorm.moments(mu, sigma2, constants.lower, constants.upper)
    return TnMoments(float(r), float(wr), float(mean), float(var))


def theta_of(arm: ArmModel, constants: TransformConstants = CONSTANTS) -> float:
    """Expected transformed response of the arm."""
    m = tn_moments(arm.mu, arm.sigma2, constants).mean
    return (arm.omega * constants.upper + (1.0 - arm.omega) * m) * (1.0 - arm.lambda_)


def var_of(arm: ArmModel, constants: TransformConstants = CONSTANTS) -> float:
    """Total variance of the transformed response.

    Computed as E(d^2 | alive) * P(alive) - theta^2; the death spike at zero
    contributes only through the first term's survival factor.
    """
    mom = tn_moments(arm.mu, arm.sigma2, constants)
    second_alive = arm.omega * constants.upper**2 \
        + (1.0 - arm.omega) * (mom.mean**2 + mom.variance)
    theta = theta_of(arm, constants)
    return max(second_alive * (1.0 - arm.lambda_) - theta * theta, 0.0)


def theta_draws(draws: np.ndarray, constants: TransformConstants = CONSTANTS) -> np.ndarray:
    """Vectorized expected response over an array of parameter draws."""
    lam, omega, mu, sigma2 = draws.T
    _, _, mean, _ = truncnorm.moments(mu, sigma2, constants.lower, constants.upper)
    return (omega * constants.upper + (1.0 - omega) * mean) * (1.0 - lam)


def cond_lambda(n_total: int, n_deaths: int) -> BetaParams:
    if not 0 <= n_deaths <= n_total:
        raise ValueError("death count outside [0, n_total]")
    return BetaParams(1.0 + n_deaths, 1.0 + n_total - n_deaths)


def cond_omega(n_alive: int, n_censored: int) -> BetaParams:
    if not 0 <= n_censored <= n_alive:
        raise ValueError("censor count outside [0, n_alive]")
    return BetaParams(1.0 + n_censored, 1.0 + n_alive - n_censored)


def censoring_responsibility(omega: float, psi_upper: float) -> float:
    """Probability that a record at the upper bound came from the censor mass."""
    return omega / (omega + (1.0 - omega) * psi_upper)


def cond_z(d: float, arm: ArmModel, constants: TransformConstants = CONSTANTS) -> float:
    """Censor-mass responsibility of one alive record.

    Interior responses cannot come from the point mass, so the probability is
    0 strictly below the upper bound.
    """
    if d < constants.upper:
        return 0.0
    psi = truncnorm.pdf(constants.upper, arm.mu, arm.sigma2,
                        constants.lower, constants.upper)
    return censoring_responsibility(arm.omega, psi)


def cond_mu(d_values: Sequence[float], sigma2: float) -> NormalParams:
    """Conjugate normal conditional from the alive, uncensored responses."""
    d = np.asarray(d_values, dtype=float)
    m = d.size
    prec = 1e-4 + m / sigma2
    return NormalParams((d.sum() / sigma2) / prec, 1.0 / prec)


def cond_sigma2(d_values: Sequence[float], mu: float) -> InverseGammaParams:
    d = np.asarray(d_values, dtype=float)
    q = float(np.square(d - mu).sum())
    return InverseGammaParams(1e-4 + 0.5 * d.size, 1e-4 + 0.5 * q)


def _sufficient_stats(tau: np.ndarray, d: np.ndarray, upper: float):
    n = tau.size
    n_death = int((tau == 1).sum())
    n_alive = n - n_death
    alive_d = d[tau == 0]
    at_upper = alive_d == upper
    n_upper = int(at_upper.sum())
    interior = alive_d[~at_upper]
    return n_death, n_alive, n_upper, interior


def gibbs_fit_arrays(tau: np.ndarray, d: np.ndarray, config: McmcConfig,
                     rng: np.random.Generator,
                     constants: TransformConstants = CONSTANTS,
                     force_backend: str | None = None) -> PosteriorSample:
    """Gibbs fit on (tau, d) arrays; the hot path used by the trial engine."""
    n_death, n_alive, n_upper, interior = _sufficient_stats(tau, d, constants.upper)
    m_int = interior.size
    s_int = float(interior.sum())
    q2_int = float(np.square(interior).sum())
    if m_int:
        mu0 = s_int / m_int
        var0 = q2_int / m_int - mu0 * mu0
        sigma20 = max(var0, 1e-4) if m_int > 1 else 1.0
    else:
        mu0, sigma20 = 0.0, 1.0
    out = np.empty((config.n_draws, 4))
    z_acc = np.zeros(1)
    kept = kernels.gibbs_sweep(
        n_death, n_alive, n_upper, m_int, s_int, q2_int,
        constants.lower, constants.upper,
        config.iterations, config.burn_in, config.thin,
        mu0, sigma20, rng, out, z_acc,
        force_backend=force_backend,
    )
    assert kept == config.n_draws
    z_rate = float(z_acc[0] / config.iterations) if n_alive > 0 else None
    return PosteriorSample(out, z_rate)


def gibbs_fit(records: Sequence[PatientRecord], config: McmcConfig,
              rng: np.random.Generator,
              constants: TransformConstants = CONSTANTS) -> PosteriorSample:
    """Gibbs fit on patient records; empty data degrades to prior draws."""
    tau = np.array([r.tau for r in records], dtype=np.int8)
    d = np.array([r.d for r in records], dtype=float)
    return gibbs_fit_arrays(tau, d, config, rng, constants)


def estimate_theta(sample: PosteriorSample,
                   constants: TransformConstants = CONSTANTS) -> float:
    return float(sample.thetas(constants).mean())


def estimate_xi(sample_k: PosteriorSample, sample_0: PosteriorSample,
                constants: TransformConstants = CONSTANTS) -> float:
    """Mean contrast over all draw pairs; equals the difference of the two
    per-arm means by linearity."""
    return estimate_theta(sample_k, constants) - estimate_theta(sample_0, constants)


def prob_superiority_draws(theta_k: np.ndarray, theta_0: np.ndarray,
                           delta: float) -> float:
    """Fraction of all cross pairs with theta_k - theta_0 strictly above delta."""
    ref = np.sort(theta_0)
    count = np.searchsorted(ref, theta_k - delta, side="left").sum()
    return float(count) / (theta_k.size * theta_0.size)


def prob_superiority(sample_k: PosteriorSample, sample_0: PosteriorSample,
                     delta: float,
                     constants: TransformConstants = CONSTANTS) -> float:
    return prob_superiority_draws(sample_k.thetas(constants),
                                  sample_0.thetas(constants), delta)


def prob_best_draws(theta_matrix: np.ndarray) -> np.ndarray:
    """Best-arm frequencies over matched draw indices, ties split equally.

    ``theta_matrix`` is (n_arms, B); returns a probability vector over arms.
    """
    n_arms, n_draws = theta_matrix.shape
    best = theta_matrix.max(axis=0)
    is_best = theta_matrix == best
    credit = is_best / is_best.sum(axis=0)
    return credit.sum(axis=1) / n_draws


def prob_best(samples: Sequence[PosteriorSample],
              constants: TransformConstants = CONSTANTS) -> np.ndarray:
    if len({s.n_draws for s in samples}) != 1:
        raise ValueError("all arms must share the same number of draws")
    return prob_best_draws(np.vstack([s.thetas(constants) for s in samples]))
