"""Independent arbitrary-precision reference values (mpmath).

Nothing in here calls into :mod:`subdiffusion`.
"""

from __future__ import annotations

import math

import mpmath as mp


def ml_series_mp(rho, mu, z, digits=50, max_terms=200_000, max_lost=None):
    """Partial sums of the defining series at ``digits`` significant digits.

    The working precision is raised by the number of digits the alternating
    series loses to cancellation, so the result keeps ``digits`` correct digits.
    Returns ``None`` when that would need more than ``max_terms`` terms.
    """
    rho = mp.mpf(rho)
    mu = mp.mpf(mu)
    z = mp.mpf(z)
    if z == 0:
        return mp.rgamma(mu)
    # magnitude of the largest term, from a cheap double-precision scan
    x = abs(float(z))
    peak = 0.0
    k = 0
    while True:
        logt = k * math.log(x) - math.lgamma(float(rho) * k + float(mu)) if x > 0 else 0.0
        peak = max(peak, logt)
        if k > 10 and logt < peak - 120:
            break
        k += 1
        if k > max_terms:
            return None
    lost = max(0.0, peak / math.log(10.0)) if z < 0 else 0.0
    if max_lost is not None and lost > max_lost:
        return None
    with mp.workdps(int(digits + lost + 20)):
        total = mp.mpf(0)
        term_k = 0
        while True:
            term = z**term_k / mp.gamma(rho * term_k + mu)
            total += term
            term_k += 1
            if term_k >= 200 and term_k > k and abs(term) < mp.mpf(10) ** (-(digits + lost + 10)) * max(abs(total), mp.mpf(10) ** -300):
                break
            if term_k > max_terms:
                return None
        return +total


def ml_laplace_mp(rho, mu, z, digits=40):
    """``E_{rho,mu}(z)`` for ``z < 0`` by numerical Laplace inversion.

    Uses :math:`\\mathcal{L}[t^{\\mu-1}E_{\\rho,\\mu}(-x t^\\rho)](s) = s^{\\rho-\\mu}/(s^\\rho + x)`
    evaluated at ``t = 1`` with Talbot's contour.
    """
    with mp.workdps(digits):
        x = -mp.mpf(z)
        rho = mp.mpf(rho)
        mu = mp.mpf(mu)
        return mp.invertlaplace(lambda s: s ** (rho - mu) / (s**rho + x), 1, method="talbot")


def ml_reference(rho, mu, z):
    """Series oracle where it is affordable, Laplace inversion otherwise."""
    if z >= 0:
        return ml_series_mp(rho, mu, z)
    val = ml_series_mp(rho, mu, z, max_terms=2000, max_lost=40)
    if val is None:
        val = ml_laplace_mp(rho, mu, z)
    return val


def ml_log_magnitude_positive(rho, mu, z):
    """Natural log of the dominant exponential term of ``E_{rho,mu}(z)``, ``z > 1``."""
    rho = mp.mpf(rho)
    z = mp.mpf(z)
    return z ** (1 / rho) + (1 - mp.mpf(mu)) / rho * mp.log(z) - mp.log(rho)


def rl_integral_mp(h, sigma, t, digits=30):
    """Riemann-Liouville integral of order ``sigma < 0`` at ``t`` by tanh-sinh quadrature."""
    with mp.workdps(digits):
        a = -mp.mpf(sigma)
        t = mp.mpf(t)
        return mp.quad(lambda xi: h(xi) * (t - xi) ** (a - 1), [0, t]) / mp.gamma(a)


def extended_sum(values):
    """Sum at 50 digits."""
    with mp.workdps(50):
        return mp.fsum(values)
