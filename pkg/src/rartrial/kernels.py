"""Hot Gibbs-sweep kernel, compiled with numba when available.

The sweep reduces each arm's records to sufficient statistics (death count,
censor-mass count, interior count/sum/sum-of-squares), so one iteration costs
O(1) regardless of sample size.  The same function body is used twice: once
compiled with ``@njit`` and once as plain Python over the identical numpy
``Generator`` calls, so both backends consume the RNG stream identically and
produce bit-identical draws.

Backend selection: the environment variable ``RARTRIAL_KERNEL`` set to
``numpy`` forces the fallback; ``numba`` (or unset, when numba imports)
selects the compiled kernel.  ``benchmarks/bench_gibbs.py`` times the two.
"""

from __future__ import annotations

import math
import os

SIGMA2_FLOOR = 1e-12
SIGMA2_CEIL = 1e12
_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _gibbs_sweep(n_death, n_alive, n_upper, m_int, s_int, q2_int,
                 lower, upper, iters, burn_in, thin,
                 mu0, sigma20, rng, out, z_acc):
    """Systematic sweep lambda -> omega -> z -> mu -> sigma2.

    Conjugate conditionals throughout; the censor-mass responsibility at the
    upper bound is a single binomial because every record there shares one
    Bernoulli probability.  Writes retained draws into ``out`` (B x 4,
    columns lambda/omega/mu/sigma2) and the per-iteration censor-assignment
    fraction sum into ``z_acc[0]``.
    """
    mu = mu0
    sigma2 = sigma20
    n_z1 = n_upper
    kept = 0
    for it in range(1, iters + 1):
        lam = rng.beta(1.0 + n_death, 1.0 + n_alive)
        omega = rng.beta(1.0 + n_z1, 1.0 + n_alive - n_z1)

        s = math.sqrt(sigma2)
        a = (lower - mu) / s
        b = (upper - mu) / s
        if a > 0.0:
            mass = 0.5 * (math.erfc(a / _SQRT2) - math.erfc(b / _SQRT2))
        else:
            mass = 0.5 * (math.erfc(-b / _SQRT2) - math.erfc(-a / _SQRT2))
        num = math.exp(-0.5 * b * b)
        denom = _SQRT_2PI * s * mass
        # prior-dominated states can underflow both terms; resolve by limits
        # (density at the bound vanishing faster than the window mass => the
        # spike takes full responsibility)
        if denom > 0.0:
            psi_upper = num / denom
            if psi_upper > 1e300:
                psi_upper = 1e300
        elif num > 0.0:
            psi_upper = 1e300
        else:
            psi_upper = 0.0
        weight = omega + (1.0 - omega) * psi_upper
        p_z = omega / weight if weight > 0.0 else 0.0
        n_z1 = rng.binomial(n_upper, p_z) if n_upper > 0 else 0

        n_tn_upper = n_upper - n_z1
        m = m_int + n_tn_upper
        total = s_int + n_tn_upper * upper
        prec = 1e-4 + m / sigma2
        mu = rng.normal((total / sigma2) / prec, math.sqrt(1.0 / prec))

        q = q2_int - 2.0 * mu * s_int + m_int * mu * mu \
            + n_tn_upper * (upper - mu) * (upper - mu)
        g = rng.standard_gamma(1e-4 + 0.5 * m)
        if g > 0.0:
            sigma2 = (1e-4 + 0.5 * q) / g
        else:
            sigma2 = SIGMA2_CEIL
        if sigma2 < SIGMA2_FLOOR:
            sigma2 = SIGMA2_FLOOR
        elif sigma2 > SIGMA2_CEIL:
            sigma2 = SIGMA2_CEIL

        if n_alive > 0:
            z_acc[0] += n_z1 / n_alive
        if it > burn_in and (it - burn_in) % thin == 0:
            out[kept, 0] = lam
            out[kept, 1] = omega
            out[kept, 2] = mu
            out[kept, 3] = sigma2
            kept += 1
    return kept


gibbs_sweep_numpy = _gibbs_sweep

try:
    from numba import njit

    gibbs_sweep_numba = njit(cache=True)(_gibbs_sweep)
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    gibbs_sweep_numba = None
    _HAVE_NUMBA = False


def backend() -> str:
    """Active kernel backend, resolved from RARTRIAL_KERNEL at each call."""
    choice = os.environ.get("RARTRIAL_KERNEL", "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("RARTRIAL_KERNEL=numba but numba is not importable")
        return "numba"
    if choice:
        raise ValueError(f"RARTRIAL_KERNEL must be 'numba' or 'numpy', got {choice!r}")
    return "numba" if _HAVE_NUMBA else "numpy"


def gibbs_sweep(*args, force_backend: str | None = None):
    name = force_backend or backend()
    fn = gibbs_sweep_numba if name == "numba" else gibbs_sweep_numpy
    return fn(*args)
