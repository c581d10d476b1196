"""Exact mixed-measure likelihood for one arm, its score and Fisher
information, the estimand gradient, and delta-method variances.

The dominating measure mixes two atoms (death at zero, censor mass at the
upper bound) with Lebesgue measure on the interior, so each record
contributes one of three closed-form terms.  The information matrix is a
Monte Carlo average of score outer products with the mortality and censoring
diagonal entries replaced by their analytic values, and the block structure
(both spike parameters orthogonal to everything else) enforced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import truncnorm
from .outcome import CONSTANTS, ArmModel, PatientRecord, TransformConstants, simulate_outcomes
from .posterior import theta_of, tn_moments

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AsymptoticChecks:
    """One verification line: name, measured value, tolerance, pass flag."""

    name: str
    value: float
    tolerance: float
    passed: bool


def _split(records) -> tuple[int, int, np.ndarray]:
    tau = np.array([r.tau for r in records], dtype=np.int8)
    d = np.array([r.d for r in records])
    interior = d[(tau == 0) & (d < CONSTANTS.upper)]
    n_death = int((tau == 1).sum())
    n_upper = int(((tau == 0) & (d == CONSTANTS.upper)).sum())
    return n_death, n_upper, interior


def log_likelihood(arm: ArmModel, records,
                   constants: TransformConstants = CONSTANTS) -> float:
    """Sum of per-record log densities under the mixed dominating measure.

    Returns -inf when an observed event has probability zero under ``arm``.
    """
    n_death, n_upper, interior = _split(records)
    lam, omega = arm.lambda_, arm.omega
    total = 0.0
    if n_death:
        if lam == 0.0:
            return -math.inf
        total += n_death * math.log(lam)
    n_alive = n_upper + interior.size
    if n_alive:
        if lam == 1.0:
            return -math.inf
        total += n_alive * math.log(1.0 - lam)
    if n_upper:
        if omega == 0.0:
            return -math.inf
        total += n_upper * math.log(omega)
    if interior.size:
        if omega == 1.0:
            return -math.inf
        total += interior.size * math.log(1.0 - omega)
        total += float(np.sum(truncnorm.logpdf(
            interior, arm.mu, arm.sigma2, constants.lower, constants.upper)))
    return total


def _interior_score(d: np.ndarray, mu: float, sigma2: float,
                    constants: TransformConstants):
    """Per-record partials of the interior log density w.r.t. (mu, sigma2)."""
    s = math.sqrt(sigma2)
    a, b = truncnorm.std_bounds(mu, sigma2, constants.lower, constants.upper)
    z = truncnorm.interval_mass(a, b)
    pa = math.exp(-0.5 * a * a) / _SQRT_2PI
    pb = math.exp(-0.5 * b * b) / _SQRT_2PI
    dlogz_dmu = (pa - pb) / (s * z)
    dlogz_dv = (a * pa - b * pb) / (2.0 * sigma2 * z)
    g_mu = (d - mu) / sigma2 - dlogz_dmu
    g_v = (np.square(d - mu) - sigma2) / (2.0 * sigma2 * sigma2) - dlogz_dv
    return g_mu, g_v


def score(arm: ArmModel, records,
          constants: TransformConstants = CONSTANTS) -> np.ndarray:
    """Gradient of :func:`log_likelihood` in (lambda, omega, mu, sigma2)."""
    n_death, n_upper, interior = _split(records)
    lam, omega = arm.lambda_, arm.omega
    n_alive = n_upper + interior.size
    s_lam = n_death / lam - n_alive / (1.0 - lam)
    s_omega = n_upper / omega - interior.size / (1.0 - omega)
    if interior.size:
        g_mu, g_v = _interior_score(interior, arm.mu, arm.sigma2, constants)
        s_mu, s_v = float(g_mu.sum()), float(g_v.sum())
    else:
        s_mu = s_v = 0.0
    return np.array([s_lam, s_omega, s_mu, s_v])


def per_record_scores(arm: ArmModel, tau: np.ndarray, d: np.ndarray,
                      constants: TransformConstants = CONSTANTS) -> np.ndarray:
    """(n, 4) matrix of per-record score contributions."""
    n = tau.size
    out = np.zeros((n, 4))
    dead = tau == 1
    at_upper = (~dead) & (d == constants.upper)
    interior = (~dead) & (d < constants.upper)
    out[dead, 0] = 1.0 / arm.lambda_
    out[~dead, 0] = -1.0 / (1.0 - arm.lambda_)
    out[at_upper, 1] = 1.0 / arm.omega
    out[interior, 1] = -1.0 / (1.0 - arm.omega)
    if interior.any():
        g_mu, g_v = _interior_score(d[interior], arm.mu, arm.sigma2, constants)
        out[interior, 2] = g_mu
        out[interior, 3] = g_v
    return out


def fisher_info(arm: ArmModel, mc_samples: int, rng: np.random.Generator,
                constants: TransformConstants = CONSTANTS) -> np.ndarray:
    """Per-observation information: Monte Carlo outer products with the spike
    entries analytic and the orthogonal blocks exact zeros."""
    if mc_samples < 10_000:
        raise ValueError("need at least 1e4 Monte Carlo samples")
    for name, value in (("lambda", arm.lambda_), ("omega", arm.omega)):
        if value in (0.0, 1.0):
            raise ValueError(f"degenerate {name}: information undefined at the boundary")
    tau, d = simulate_outcomes(arm, mc_samples, rng, constants)
    scores = per_record_scores(arm, tau, d, constants)
    info = scores.T @ scores / mc_samples
    cross = np.abs(info[np.triu_indices(4, 1)][:-1])  # all but the (mu, sigma2) entry
    scale = max(np.abs(np.diag(info)).max(), 1.0)
    if cross.max() > 0.05 * scale:
        raise RuntimeError("spike cross-terms failed the near-zero check")
    out = np.zeros((4, 4))
    out[0, 0] = 1.0 / (arm.lambda_ * (1.0 - arm.lambda_))
    out[1, 1] = (1.0 - arm.lambda_) / (arm.omega * (1.0 - arm.omega))
    out[2:, 2:] = info[2:, 2:]
    return out


def fisher_info_hessian(arm: ArmModel, mc_samples: int, rng: np.random.Generator,
                        constants: TransformConstants = CONSTANTS,
                        step: float = 1e-5) -> np.ndarray:
    """Negative-Hessian estimate of the per-observation information via
    central differences of the score averaged over simulated records."""
    tau, d = simulate_outcomes(arm, mc_samples, rng, constants)
    records_stats = (tau, d)

    def mean_score(theta: np.ndarray) -> np.ndarray:
        probe = ArmModel(*theta)
        return per_record_scores(probe, *records_stats, constants).mean(axis=0)

    theta0 = np.array(arm.astuple())
    hess = np.zeros((4, 4))
    for i in range(4):
        h = step * max(abs(theta0[i]), 1.0)
        up, dn = theta0.copy(), theta0.copy()
        up[i] += h
        dn[i] -= h
        hess[:, i] = (mean_score(up) - mean_score(dn)) / (2.0 * h)
    return -0.5 * (hess + hess.T)


def grad_theta(arm: ArmModel, constants: TransformConstants = CONSTANTS) -> np.ndarray:
    """Gradient of the expected response in (lambda, omega, mu, sigma2)."""
    mom = tn_moments(arm.mu, arm.sigma2, constants)
    theta = theta_of(arm, constants)
    survival = 1.0 - arm.lambda_
    d_lam = -theta / survival if survival > 0 else -math.inf
    d_omega = survival * (constants.upper - mom.mean)
    dm_dmu, dm_dv = truncnorm.mean_grad(arm.mu, arm.sigma2,
                                        constants.lower, constants.upper)
    factor = survival * (1.0 - arm.omega)
    return np.array([d_lam, d_omega, factor * dm_dmu, factor * dm_dv])


def asymptotic_variance(arm_k: ArmModel, arm_0: ArmModel, n: int,
                        mc_samples: int = 200_000,
                        rng: np.random.Generator | None = None,
                        constants: TransformConstants = CONSTANTS) -> tuple[float, float]:
    """Delta-method variances (var of theta_k-hat, var of the contrast)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(0) if rng is None else rng

    def one(arm: ArmModel) -> float:
        info = fisher_info(arm, mc_samples, rng, constants)
        if np.linalg.cond(info) > 1e10:
            raise np.linalg.LinAlgError("information matrix is numerically singular")
        grad = grad_theta(arm, constants)
        return float(grad @ np.linalg.solve(info, grad)) / n

    var_k = one(arm_k)
    var_0 = var_k if arm_0 == arm_k else one(arm_0)
    return var_k, var_k + var_0


def _fd_score(arm: ArmModel, records, step: float = 1e-6) -> np.ndarray:
    theta0 = np.array(arm.astuple())
    out = np.zeros(4)
    for i in range(4):
        h = step * max(abs(theta0[i]), 1.0)
        up, dn = theta0.copy(), theta0.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (log_likelihood(ArmModel(*up), records)
                  - log_likelihood(ArmModel(*dn), records)) / (2.0 * h)
    return out


def verification_report(arm: ArmModel, seed: int = 0,
                        n_fit: int = 2000, n_fits: int = 200,
                        mc_samples: int = 200_000) -> list[AsymptoticChecks]:
    """Run the module's oracle suite against one arm profile.

    Checks: score vs finite differences, information equality (outer product
    vs negative Hessian), the analytic spike entries, and the delta-method SE
    against the empirical spread of repeated posterior fits.
    """
    from .posterior import McmcConfig, estimate_theta, gibbs_fit_arrays
    from .streams import substream

    checks: list[AsymptoticChecks] = []

    probe_rng = substream(seed, 3, 0)
    tau, d = simulate_outcomes(arm, 500, probe_rng)
    records = [PatientRecord(int(t), None if t else 28, float(x))
               for t, x in zip(tau, d)]
    analytic = score(arm, records)
    fd = _fd_score(arm, records)
    rel = float(np.max(np.abs(analytic - fd) / np.maximum(np.abs(fd), 1.0)))
    checks.append(AsymptoticChecks("score vs finite differences (rel.)", rel, 1e-6, rel < 1e-6))

    info_op = fisher_info(arm, mc_samples, substream(seed, 3, 1))
    info_h = fisher_info_hessian(arm, mc_samples, substream(seed, 3, 1))
    mask = np.abs(info_op) > 1e-3 * np.abs(np.diag(info_op)).max()
    rel_info = float(np.max(np.abs((info_h[mask] - info_op[mask]) / info_op[mask])))
    checks.append(AsymptoticChecks("information equality (rel., major entries)",
                                   rel_info, 0.05, rel_info < 0.05))

    lam_entry = info_op[0, 0] * arm.lambda_ * (1 - arm.lambda_)
    checks.append(AsymptoticChecks("mortality information entry (ratio)",
                                   lam_entry, 1e-12, abs(lam_entry - 1.0) < 1e-12))

    grad = grad_theta(arm)
    theta0 = np.array(arm.astuple())
    fd_grad = np.zeros(4)
    for i in range(4):
        h = 1e-6 * max(abs(theta0[i]), 1.0)
        up, dn = theta0.copy(), theta0.copy()
        up[i] += h
        dn[i] -= h
        fd_grad[i] = (theta_of(ArmModel(*up)) - theta_of(ArmModel(*dn))) / (2 * h)
    rel_grad = float(np.max(np.abs(grad - fd_grad) / np.maximum(np.abs(fd_grad), 1e-9)))
    checks.append(AsymptoticChecks("estimand gradient vs finite differences (rel.)",
                                   rel_grad, 1e-5, rel_grad < 1e-5))

    var_theta, var_xi = asymptotic_variance(arm, arm, n_fit, mc_samples,
                                            substream(seed, 3, 2))
    checks.append(AsymptoticChecks("contrast variance of identical arms (ratio to 2x)",
                                   var_xi / (2 * var_theta), 1e-12,
                                   abs(var_xi / (2 * var_theta) - 1.0) < 1e-12))

    mcmc = McmcConfig()
    theta_hats = np.empty(n_fits)
    for rep in range(n_fits):
        t_r, d_r = simulate_outcomes(arm, n_fit, substream(seed, 3, 10, rep))
        fit = gibbs_fit_arrays(t_r, d_r, mcmc, substream(seed, 3, 11, rep))
        theta_hats[rep] = estimate_theta(fit)
    ratio = float(theta_hats.std(ddof=1) / math.sqrt(var_theta))
    checks.append(AsymptoticChecks("empirical SD of theta-hat vs delta SE (ratio)",
                                   ratio, 0.15, abs(ratio - 1.0) < 0.15))
    return checks


def format_report(checks: list[AsymptoticChecks]) -> str:
    lines = [f"{'check':54s} {'value':>12s} {'tol':>9s} result"]
    for c in checks:
        lines.append(f"{c.name:54s} {c.value:12.4e} {c.tolerance:9.0e} "
                     f"{'pass' if c.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
