"""Numerics for the doubly truncated normal distribution.

Everything here is phrased in terms of the standardized bounds
``a = (lo - mu) / sigma`` and ``b = (hi - mu) / sigma``.  The normalizing mass
``Phi(b) - Phi(a)`` is evaluated through the survival function whenever both
bounds sit in the same tail, so the routines stay accurate when ``mu`` lies
many standard deviations outside ``[lo, hi]`` (the control arm of the default
scenarios does exactly that).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def interval_mass(a, b):
    """P(a < Z <= b) for standard normal Z, robust in far tails.

    Uses Phi(-b..-a) via the survival side when the interval is in the upper
    tail and a log-space difference when the direct subtraction underflows.
    Never returns 0 for a < b; the floor is the smallest positive double.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper_tail = a > 0
    lo = np.where(upper_tail, -b, a)
    hi = np.where(upper_tail, -a, b)
    mass = ndtr(hi) - ndtr(lo)
    # log-space fallback: Phi(hi) - Phi(lo) = Phi(hi) * (1 - exp(logPhi(lo) - logPhi(hi)))
    tiny = mass <= 0
    if np.any(tiny):
        log_hi = log_ndtr(hi)
        log_lo = log_ndtr(lo)
        with np.errstate(over="ignore"):
            fallback = -np.expm1(log_lo - log_hi) * np.exp(log_hi)
        mass = np.where(tiny, fallback, mass)
    mass = np.maximum(mass, np.finfo(float).tiny)
    return mass if mass.ndim else float(mass)


def std_bounds(mu, sigma2, lo, hi):
    s = np.sqrt(sigma2)
    return (lo - mu) / s, (hi - mu) / s


_TAIL_CUTOFF = 30.0  # beyond this, phi/Phi underflow and ratios go through Mills


def _mills(x):
    """Phi(-x) / phi(x), stable for large positive x."""
    return np.exp(log_ndtr(-x) + 0.5 * x * x + math.log(_SQRT_2PI))


def _tail_ratios(a, b):
    """(r, wr) for an interval deep in the upper tail (a > cutoff).

    Everything is expressed relative to phi(a), which cancels out of both
    ratios, so nothing underflows even when phi itself would.
    """
    density_ratio = np.exp(-0.5 * (b - a) * (b + a))   # phi(b) / phi(a)
    z_over_pa = _mills(a) - _mills(b) * density_ratio
    r = (density_ratio - 1.0) / z_over_pa
    wr = (a - b * density_ratio) / z_over_pa
    return r, wr


def _ratios(a, b):
    """(r, wr) = ((phi(b)-phi(a))/Z, (a phi(a) - b phi(b))/Z), tail-stable."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = interval_mass(a, b)
    pa, pb = _phi(a), _phi(b)
    r = (pb - pa) / z
    wr = (a * pa - b * pb) / z
    upper = a > _TAIL_CUTOFF
    lower = b < -_TAIL_CUTOFF
    if np.any(upper):
        ru, wru = _tail_ratios(a[upper] if a.ndim else a, b[upper] if b.ndim else b)
        r = np.where(upper, ru, r)
        wr = np.where(upper, wru, wr)
    if np.any(lower):
        # mirror: X ~ TN(a, b) iff -X ~ TN(-b, -a); r flips sign, wr is even
        rl, wrl = _tail_ratios(-(b[lower] if b.ndim else b),
                               -(a[lower] if a.ndim else a))
        r = np.where(lower, -rl, r)
        wr = np.where(lower, wrl, wr)
    return r, wr


def moments(mu, sigma2, lo, hi):
    """Mean-shift ratio, variance ratio, mean and variance of TN(mu, sigma2, lo, hi).

    Returns ``(r, wr, mean, var)`` with ``mean = mu - sigma * r`` and
    ``var = sigma2 * (1 + wr - r**2)``; ``r`` has the upper-bound density
    first in its numerator so the usual mean formula carries a minus sign.
    """
    a, b = std_bounds(mu, sigma2, lo, hi)
    s = np.sqrt(sigma2)
    r, wr = _ratios(a, b)
    mean = mu - s * r
    var = sigma2 * (1.0 + wr - r * r)
    mean = np.clip(mean, np.nextafter(lo, hi), np.nextafter(hi, lo))
    return r, wr, mean, np.maximum(var, 0.0)


def mean_grad(mu, sigma2, lo, hi):
    """Partials of the truncated-normal mean w.r.t. mu and sigma2.

    The mu-partial is Var/sigma2 (a standard identity), which stays accurate
    through the tail-stable moment path; the sigma2-partial uses the direct
    ratio forms.
    """
    a, b = std_bounds(mu, sigma2, lo, hi)
    s = math.sqrt(sigma2)
    _, _, _, var = moments(mu, sigma2, lo, hi)
    d_mu = float(var) / sigma2
    z = interval_mass(a, b)
    pa, pb = _phi(a), _phi(b)
    p = (pa - pb) / z           # mean = mu + sigma * p
    q = (a * pa - b * pb) / z
    t = (a * a * pa - b * b * pb) / z
    d_sigma2 = (p + t - p * q) / (2.0 * s)
    return d_mu, d_sigma2


def pdf(x, mu, sigma2, lo, hi):
    """Density of TN(mu, sigma2, lo, hi) at x (0 outside (lo, hi))."""
    x = np.asarray(x, dtype=float)
    a, b = std_bounds(mu, sigma2, lo, hi)
    s = np.sqrt(sigma2)
    z = interval_mass(a, b)
    dens = _phi((x - mu) / s) / (s * z)
    dens = np.where((x < lo) | (x > hi), 0.0, dens)
    return dens if dens.ndim else float(dens)


def logpdf(x, mu, sigma2, lo, hi):
    x = np.asarray(x, dtype=float)
    a, b = std_bounds(mu, sigma2, lo, hi)
    s = np.sqrt(sigma2)
    z = interval_mass(a, b)
    u = (x - mu) / s
    lp = -0.5 * u * u - math.log(_SQRT_2PI) - np.log(s * z)
    lp = np.where((x < lo) | (x > hi), -np.inf, lp)
    return lp if lp.ndim else float(lp)


def sample(mu, sigma2, lo, hi, size, rng):
    """Inverse-CDF draws from TN(mu, sigma2, lo, hi).

    Works through the survival function when the truncation interval lies in
    the upper tail (and by symmetry in the lower tail), never by naive
    accept-reject, so draws remain correct when mu is far outside [lo, hi].
    """
    a, b = std_bounds(mu, sigma2, lo, hi)
    s = math.sqrt(sigma2)
    u = rng.random(size)
    if a > 0:  # interval in the upper tail: parametrize by survival values
        sa, sb = ndtr(-a), ndtr(-b)
        z = -ndtri(sa - u * (sa - sb))
    else:  # ndtr/ndtri are accurate on the lower side, direct inversion is safe
        pa, pb = ndtr(a), ndtr(b)
        z = ndtri(pa + u * (pb - pa))
    d = mu + s * z
    return np.clip(d, np.nextafter(lo, hi), np.nextafter(hi, lo))
