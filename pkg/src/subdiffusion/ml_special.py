r"""Two-parameter Mittag-Leffler function on the real line.

.. math::

    E_{\rho,\mu}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\rho k + \mu)}

Evaluation switches between three regimes, chosen per argument:

* the Taylor series, whenever it can be summed without losing more than two
  digits to cancellation (always for ``z >= 0``);
* the algebraic expansion for large negative arguments,
  :math:`E_{\rho,\mu}(-x) \sim \sum_{k \ge 1} (-1)^{k+1} x^{-k} / \Gamma(\mu - \rho k)`,
  optimally truncated and accepted only when the first omitted term is below
  ``1e-16`` relative;
* otherwise the real-line integral representation (valid on the negative axis
  for ``0 < rho < 1``)

  .. math::

      E_{\rho,\mu}(-x) = \frac{1}{\pi} \int_0^\infty e^{-s} s^{\rho - \mu}
          \frac{s^\rho \sin(\pi\mu) + x \sin(\pi(\mu - \rho))}
               {s^{2\rho} + 2 s^\rho x \cos(\pi\rho) + x^2} \, ds,
          \qquad \mu < 1 + \rho,

  used for ``mu <= 1``; larger ``mu`` is reduced through
  :math:`E_{\rho,\mu}(z) = 1/\Gamma(\mu) + z E_{\rho,\mu+\rho}(z)`.
  For ``rho > 0.99`` the real-line integrand develops a near-pole, so the
  difference from the ``rho = 1`` function is integrated along a rotated ray
  instead.

``rho = 1`` is the confluent case :math:`E_{1,\mu}(z) = {}_1F_1(1; \mu; z)/\Gamma(\mu)`.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from subdiffusion._validation import (
    AccuracyWarning,
    DomainError,
    ParameterError,
    check_order,
    check_positive,
    check_real,
)

__all__ = [
    "MLParams",
    "KernelBound",
    "BoundRegime",
    "gamma",
    "ml_eval",
    "mittag_leffler",
    "ml_neg_asymptotic",
    "propagator",
    "bound_constant_m1",
    "check_m2",
    "log_grid",
    "SERIES_TERM_CAP",
]

#: hard cap on the number of Taylor terms; only reached for tiny ``rho`` near overflow
SERIES_TERM_CAP = 1_000_000
_SERIES_RTOL = 1e-18
_SERIES_CHUNK = 256
# largest tolerated ratio max|term| / |sum| before the series is abandoned
_CANCELLATION_LIMIT = 100.0
_ASYMPTOTIC_RTOL = 1e-16
_ASYMPTOTIC_MAX_TERMS = 400
_LOG_DBL_MAX = math.log(np.finfo(float).max)
# upper cut of the integral representation: exp(-60) is below double resolution
_S_MAX = 60.0
# above this order the negative axis uses the rotated-ray difference integral
_NEAR_ONE = 0.99


@dataclass(frozen=True)
class MLParams:
    """Order ``rho`` in ``(0, 1]`` and second parameter ``mu > 0``."""

    rho: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "rho", check_order(self.rho, "rho"))
        object.__setattr__(self, "mu", check_positive(self.mu, "mu"))


class BoundRegime(enum.Enum):
    #: :math:`|E_{\rho,\rho}(-t)| \le C/(1+t^2)`
    m1_global = "m1_global"
    #: :math:`|t^{\rho-1}E_{\rho,\rho}(-\lambda t^\rho)| \le C\lambda^{\epsilon-1}t^{\epsilon\rho-1}`
    m2_coarse = "m2_coarse"


@dataclass(frozen=True)
class KernelBound:
    """A bound constant certified on a finite grid."""

    constant_C: float
    regime: BoundRegime
    epsilon: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.constant_C) and self.constant_C >= 0.0):
            raise ParameterError(f"constant_C must be finite and >= 0, got {self.constant_C}")
        if self.regime is BoundRegime.m2_coarse:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ParameterError("m2 bounds need 0 < epsilon < 1")


def gamma(x: float) -> float:
    """Euler's gamma function on the real line, including negative non-integers.

    Raises :class:`ParameterError` at the poles ``0, -1, -2, ...``.
    """
    x = check_real(x, "x")
    if x <= 0.0 and x == math.floor(x):
        raise ParameterError(f"gamma has a pole at {x}")
    return math.gamma(x)


# {{{ regimes


def _series(z: float, rho: float, mu: float) -> tuple[float, float]:
    """Sum the Taylor series. Returns ``(value, max |term|)``."""
    if z == 0.0:
        r = float(special.rgamma(mu))
        return r, abs(r)

    logz = math.log(abs(z))
    parts: list[float] = []
    max_term = 0.0
    start = 0
    while True:
        k = np.arange(start, start + _SERIES_CHUNK, dtype=float)
        arg = rho * k + mu
        if (start + _SERIES_CHUNK) * logz < 690.0:
            terms = np.power(z, k) * special.rgamma(arg)
        else:
            sign = np.where((z < 0.0) & (k % 2 == 1), -1.0, 1.0)
            logt = k * logz - special.gammaln(arg)
            if np.max(logt) > _LOG_DBL_MAX:
                raise OverflowError(f"E_{{{rho},{mu}}}({z}) overflows double precision")
            terms = sign * np.exp(logt)
        parts.extend(terms.tolist())
        mags = np.abs(terms)
        max_term = max(max_term, float(mags.max()))
        start += _SERIES_CHUNK

        partial = math.fsum(parts)
        scale = max(abs(partial), 1e-300)
        # stop once past the peak and the tail is negligible
        tail = mags[-8:]
        if tail[-1] < _SERIES_RTOL * scale and np.all(np.diff(tail) <= 0.0):
            break
        if start >= SERIES_TERM_CAP:
            warnings.warn(
                f"Mittag-Leffler series hit the {SERIES_TERM_CAP}-term cap at z={z}",
                AccuracyWarning,
                stacklevel=3,
            )
            break

    value = math.fsum(parts)
    if not math.isfinite(value):
        raise OverflowError(f"E_{{{rho},{mu}}}({z}) overflows double precision")
    return value, max_term


def _series_is_safe(x: float, rho: float, mu: float) -> bool:
    """Cheap screen: the largest term of the series at ``-x`` must stay moderate."""
    if x <= 1.0:
        return True
    # the peak term sits near k ~ x**(1/rho) / rho
    if (1.0 / rho) * math.log(x) > math.log(5000.0 * rho):
        return False
    k = np.arange(0.0, 4.0 * x ** (1.0 / rho) / rho + 64.0)
    logt = k * math.log(x) - special.gammaln(rho * k + mu)
    return float(np.max(logt)) < math.log(1e4)


def _log_rgamma(mu: float, rho: float, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``log|1/Gamma(mu - rho k)|`` and its sign, accurate next to the poles.

    Left of 1/2 the reflection formula is used with the distance to the nearest
    integer formed without cancellation; ``sin(pi y)`` evaluated directly loses
    every digit that ``y`` shares with that integer.
    """
    arg = mu - rho * k
    n = np.round(arg)
    d = arg - n
    if rho >= 0.5:
        # 1 - rho is exact here, so mu - k + k (1 - rho) - n only rounds once
        eps = 1.0 - rho
        near = np.flatnonzero((arg < 0.5) & (np.abs(d) < 1e-2))
        for i in near:
            d[i] = math.fsum((mu, -k[i], k[i] * eps, -n[i]))
    log_rg = np.empty_like(arg)
    sgn = np.empty_like(arg)
    right = arg >= 0.5
    log_rg[right] = -special.gammaln(arg[right])
    sgn[right] = 1.0
    left = ~right
    with np.errstate(divide="ignore"):
        sin_d = np.sin(math.pi * d[left])
        log_rg[left] = special.gammaln(1.0 - arg[left]) + np.log(np.abs(sin_d)) - math.log(math.pi)
    parity = np.where(n[left] % 2 == 0, 1.0, -1.0)
    sgn[left] = np.sign(sin_d) * parity
    return log_rg, sgn


def _rgamma(y: float) -> float:
    """``1/Gamma(y)`` with full relative accuracy next to the poles."""
    if y >= 0.5:
        return float(special.rgamma(y))
    n = round(y)
    d = y - n
    return math.copysign(1.0, 1 - 2 * (n % 2)) * float(special.gamma(1.0 - y)) * math.sin(math.pi * d) / math.pi


def _asymptotic(x: float, rho: float, mu: float) -> tuple[float, float]:
    """Optimally truncated algebraic expansion at ``-x``.

    Returns ``(value, error estimate)`` where the estimate is the first omitted
    nonzero term.
    """
    k = np.arange(1, _ASYMPTOTIC_MAX_TERMS + 1, dtype=float)
    log_rg, sgn_gamma = _log_rgamma(mu, rho, k)
    logmag = -k * math.log(x) + log_rg
    # (-1)^{k+1} (-1)^k ... collapses to: term_k = -(-x)^{-k} / Gamma(mu - rho k)
    sgn = -np.where(k % 2 == 1, -1.0, 1.0) * sgn_gamma

    finite = np.isfinite(logmag)
    idx = np.flatnonzero(finite)
    if idx.size == 0:
        return 0.0, 0.0

    # optimal truncation: stop before the nonzero terms start growing
    mags = logmag[idx]
    stop = idx.size
    for i in range(1, idx.size):
        if mags[i] > mags[i - 1]:
            stop = i
            break
    used = idx[:stop]
    terms = sgn[used] * np.exp(logmag[used])
    value = math.fsum(terms.tolist())
    err = math.exp(logmag[idx[stop]]) if stop < idx.size else 0.0
    return value, err


def _integral(x: float, rho: float, mu: float) -> float:
    """Integral representation on the negative axis, ``0 < rho < 1``."""
    if mu > 1.0:
        # keeps the endpoint exponent rho - mu in [rho - 1, 0)
        lower = _integral(x, rho, mu - rho)
        return (lower - float(special.rgamma(mu - rho))) / (-x)

    # s = u**q removes the s**(rho - mu) endpoint singularity when mu > rho
    q = 1.0 / (1.0 + rho - mu) if mu > rho else 1.0
    expo = q * (1.0 + rho - mu) - 1.0
    a = math.sin(math.pi * mu)
    # sin(pi (1 - mu + rho)) == sin(pi (mu - rho)); exactly 0 when mu == rho
    b = 0.0 if mu == rho else math.sin(math.pi * (mu - rho))
    c = 2.0 * math.cos(math.pi * rho)
    xb = x * b
    x2 = x * x

    def f(u):
        s = u**q
        sr = s**rho
        return q * u**expo * math.exp(-s) * (sr * a + xb) / (sr * sr + c * sr * x + x2)

    u_max = _S_MAX ** (1.0 / q)
    breaks = [1.0]
    if c < 0.0:
        # the denominator dips to x^2 sin^2(pi rho) where s^rho = -x cos(pi rho)
        peak = (-0.5 * c * x) ** (1.0 / rho)
        width = max(abs(math.tan(math.pi * rho)), 1e-3) * peak
        for p in (peak - width, peak, peak + width):
            if 0.0 < p < _S_MAX:
                breaks.append(p ** (1.0 / q))
    edges = [0.0, *sorted(set(b_ for b_ in breaks if b_ < u_max)), u_max]

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            # QUADPACK flags roundoff once it reaches double resolution
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=2e-14, limit=400)
        total += val
    return total / math.pi


def _confluent(x: float, mu: float) -> float:
    """``E_{1,mu}(-x)`` through Kummer's transformation, free of cancellation."""
    if mu == 1.0:
        return math.exp(-x)
    if x < 700.0:
        return math.exp(-x) * float(special.hyp1f1(mu - 1.0, mu, x)) * float(special.rgamma(mu))
    # exp(-x) is below double resolution; the algebraic expansion is exact here
    return _asymptotic(x, 1.0, mu)[0]


def _expm1c(w: complex) -> complex:
    a, b = w.real, w.imag
    s = math.sin(0.5 * b)
    return complex(math.expm1(a) * math.cos(b) - 2.0 * s * s, math.exp(a) * math.sin(b))


def _integral_near_one(x: float, rho: float, mu: float, theta: float = math.pi / 4) -> float:
    """Negative-axis evaluation for ``rho`` close to 1.

    Splits ``E_{rho,mu}(-x) = E_{1,mu}(-x) + D``. Both terms share a Hankel-type
    integral over the ray ``arg r = -theta``, which keeps clear of the pole
    near ``r = x`` that makes the real-line integrand stiff as ``rho -> 1``.
    The integrand of ``D`` is rewritten so that the factor ``1 - rho`` appears
    explicitly through ``expm1`` and nothing cancels pointwise.
    """
    if mu > 1.0:
        lower = _integral_near_one(x, rho, mu - rho, theta)
        return (lower - _rgamma(mu - rho)) / (-x)

    # r = v**q e^{-i theta} removes the r**(rho - mu) endpoint singularity
    q = 1.0 / (1.0 + rho - mu)
    ray = complex(math.cos(theta), -math.sin(theta))

    def f(v):
        lv = q * math.log(v)
        big_l = complex(lv, math.pi - theta)  # log r + i pi
        num = x * cmath.exp((1.0 - mu) * big_l) * _expm1c((rho - 1.0) * big_l)
        den = (cmath.exp(rho * big_l) + x) * (cmath.exp(big_l) + x)
        r = math.exp(lv) * ray
        return (q * v ** (q - 1.0) * ray * cmath.exp(-r) * num / den).imag

    v_max = (_S_MAX / math.cos(theta)) ** (1.0 / q)
    breaks = [p ** (1.0 / q) for p in (1.0, 0.5 * x, x, 2.0 * x)]
    edges = [0.0, *sorted(set(b for b in breaks if b < v_max)), v_max]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=2e-14, limit=400)
        total += val
    return _confluent(x, mu) - total / math.pi


def _scalar(z: float, rho: float, mu: float) -> float:
    if rho == 1.0:
        if mu == 1.0:
            return math.exp(z) if z < _LOG_DBL_MAX else _raise_overflow(z, rho, mu)
        if z < 0.0:
            return _confluent(-z, mu)
        val = float(special.hyp1f1(1.0, mu, z) * special.rgamma(mu))
        if not math.isfinite(val):
            _raise_overflow(z, rho, mu)
        return val

    if z >= 0.0:
        if z > 1.0:
            # dominant exponential term (1/rho) z^{(1-mu)/rho} exp(z^{1/rho})
            log_est = z ** (1.0 / rho) + (1.0 - mu) / rho * math.log(z) - math.log(rho)
            if log_est > _LOG_DBL_MAX + 10.0:
                _raise_overflow(z, rho, mu)
        return _series(z, rho, mu)[0]

    x = -z
    if _series_is_safe(x, rho, mu):
        value, max_term = _series(z, rho, mu)
        if max_term <= _CANCELLATION_LIMIT * abs(value):
            return value
    if x >= 2.0:
        value, err = _asymptotic(x, rho, mu)
        if rho > 2.0 / 3.0:
            # the expansion omits a decaying exponential, negligible only once
            # x^{1/rho} |cos(pi/rho)| is large; it dominates as rho -> 1
            xr = x ** (1.0 / rho)
            err += math.exp(xr * math.cos(math.pi / rho) + (1.0 - mu) / rho * math.log(x)) / rho
        if value != 0.0 and err <= _ASYMPTOTIC_RTOL * abs(value):
            return value
    if rho > _NEAR_ONE:
        return _integral_near_one(x, rho, mu)
    return _integral(x, rho, mu)


def _raise_overflow(z, rho, mu):
    raise OverflowError(f"E_{{{rho},{mu}}}({z}) overflows double precision")


# }}}


def ml_eval(params: MLParams | tuple[float, float], z: float) -> float:
    """Evaluate :math:`E_{\\rho,\\mu}(z)` for real ``z``.

    Relative accuracy is about ``1e-14`` on ``|z| <= 5`` and better than
    ``1e-12`` on the rest of ``[-1e8, 5]``.

    Raises
    ------
    ParameterError
        If ``rho`` is outside ``(0, 1]`` or ``mu <= 0``.
    OverflowError
        If the value exceeds the double-precision range (large positive ``z``).
    """
    if not isinstance(params, MLParams):
        params = MLParams(*params)
    z = check_real(z, "z")
    return _scalar(z, params.rho, params.mu)


def mittag_leffler(z, rho: float, mu: float) -> np.ndarray:
    """Vectorized :func:`ml_eval` over an array of real arguments."""
    params = MLParams(rho, mu)
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.empty_like(flat)
    for i, zi in enumerate(flat):
        out[i] = _cached(float(zi), params.rho, params.mu)
    return out.reshape(z.shape)


@lru_cache(maxsize=65536)
def _cached(z: float, rho: float, mu: float) -> float:
    return _scalar(z, rho, mu)


def ml_neg_asymptotic(rho: float, t: float) -> float:
    """Leading term :math:`-t^{-2}/\\Gamma(-\\rho)` of :math:`E_{\\rho,\\rho}(-t)`.

    The relative error of the leading term is about
    ``|Gamma(-rho) / Gamma(-2 rho)| / t``; use it for ``t >~ 100``.
    """
    rho = check_order(rho, allow_one=False)
    t = check_positive(t, "t")
    return -(t**-2.0) / gamma(-rho)


def propagator(rho: float, lam: float, t):
    r"""The mode kernel :math:`t^{\rho-1} E_{\rho,\rho}(-\lambda t^\rho)`.

    ``t`` may be a scalar or an array; at ``rho = 1`` this is ``exp(-lam t)``.
    """
    rho = check_order(rho)
    lam = check_positive(lam, "lam", strict=False)
    tt = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(tt)) or np.any(tt <= 0.0):
        raise DomainError("propagator needs t > 0 (the kernel is singular at t = 0)")
    if rho == 1.0:
        out = np.exp(-lam * tt)
    else:
        out = tt ** (rho - 1.0) * mittag_leffler(-lam * tt**rho, rho, rho)
    return float(out) if np.ndim(t) == 0 else out


def log_grid(lo: float, hi: float, per_decade: int = 64) -> np.ndarray:
    """Logarithmic grid on ``[lo, hi]`` with ``per_decade`` points per decade."""
    decades = math.log10(hi) - math.log10(lo)
    n = int(round(decades * per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


@lru_cache(maxsize=64)
def _m1_sup(rho: float, per_decade: int) -> float:
    t = np.concatenate([[0.0], log_grid(1e-6, 1e6, per_decade)])
    vals = (1.0 + t**2) * np.abs(mittag_leffler(-t, rho, rho))
    return float(vals.max())


def bound_constant_m1(rho: float, *, per_decade: int = 64, safety: float = 1.01) -> KernelBound:
    """Grid-certified constant ``C`` with ``|E_{rho,rho}(-t)| <= C / (1 + t^2)``.

    The supremum is taken over ``t = 0`` and a logarithmic grid on
    ``[1e-6, 1e6]`` (``per_decade`` points per decade), then padded by
    ``safety``.
    """
    rho = check_order(rho, allow_one=False)
    return KernelBound(safety * _m1_sup(rho, per_decade), BoundRegime.m1_global)


def check_m2(rho: float, epsilon: float, lam: float, t_grid) -> KernelBound:
    r"""Smallest ``C'`` with :math:`|t^{\rho-1}E_{\rho,\rho}(-\lambda t^\rho)| \le
    C' \lambda^{\epsilon-1} t^{\epsilon\rho-1}` on ``t_grid``.
    """
    rho = check_order(rho, allow_one=False)
    epsilon = check_real(epsilon, "epsilon")
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    lam = check_positive(lam, "lam")
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise ParameterError("t_grid must not be empty")
    kernel = np.abs(propagator(rho, lam, t))
    ratio = kernel / (lam ** (epsilon - 1.0) * t ** (epsilon * rho - 1.0))
    return KernelBound(float(ratio.max()), BoundRegime.m2_coarse, epsilon)
