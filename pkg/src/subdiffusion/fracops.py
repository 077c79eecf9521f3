r"""Fractional integrals and derivatives of uniformly sampled signals.

All operators are based at ``t = 0``:

.. math::

    \partial_t^\sigma h(t) = \frac{1}{\Gamma(-\sigma)} \int_0^t
        \frac{h(\xi)}{(t - \xi)^{\sigma + 1}} \, d\xi, \qquad \sigma < 0,

the Riemann-Liouville derivative is :math:`\partial_t^\rho = \frac{d}{dt}\partial_t^{\rho-1}`
and the Caputo derivative is :math:`D_t^\rho = \partial_t^{\rho-1}\frac{d}{dt}`.

Signals that blow up at the origin (the solution of the subdiffusion problem
behaves like :math:`t^{\rho-1}`) cannot be sampled there, so a
:class:`TimeSignal` may carry explicit power terms :math:`c\,t^p` next to its
samples. Power terms are mapped exactly by every operator; the samples (the
regular remainder) go through the discrete schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from subdiffusion._validation import DomainError, ParameterError, check_positive, check_real

__all__ = [
    "TimeSignal",
    "rl_integral",
    "rl_derivative",
    "caputo_derivative",
    "gl_derivative",
    "gl_weights",
    "trapezoid_weights",
]


@dataclass(frozen=True)
class TimeSignal:
    """Samples ``h(t0 + k dt)`` plus optional singular power terms.

    The represented function is ``sum(c * t**p for c, p in singular)`` plus the
    piecewise-linear interpolant of ``values``.
    """

    t0: float
    dt: float
    values: np.ndarray
    singular: tuple[tuple[complex, float], ...] = field(default=())

    def __post_init__(self):
        check_positive(self.dt, "dt")
        t0 = check_real(self.t0, "t0")
        if t0 < 0.0:
            raise ParameterError(f"t0 must be >= 0, got {t0}")
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size == 0:
            raise ParameterError("values must be a non-empty 1-d array")
        if not np.issubdtype(values.dtype, np.complexfloating):
            values = values.astype(float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "singular", tuple((c, float(p)) for c, p in self.singular))

    @classmethod
    def from_function(cls, func, dt: float, n: int, *, singular=()) -> "TimeSignal":
        """Sample ``func`` at ``k dt`` for ``k = 0..n-1``."""
        t = np.arange(n) * dt
        return cls(0.0, dt, np.asarray(func(t)), singular)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size

    def evaluate(self) -> np.ndarray:
        """Samples of the full signal; power terms with ``p < 0`` give ``inf`` at ``t = 0``."""
        t = self.times
        out = self.values.astype(np.result_type(self.values, *(c for c, _ in self.singular)))
        with np.errstate(divide="ignore"):
            for c, p in self.singular:
                out = out + c * _power(t, p)
        return out


def _power(t: np.ndarray, p: float) -> np.ndarray:
    if p == 0.0:
        return np.ones_like(t)
    with np.errstate(divide="ignore"):
        return np.where(t > 0.0, t ** p, np.inf if p < 0.0 else 0.0)


def _check_based_at_zero(h: TimeSignal):
    if h.t0 != 0.0:
        raise DomainError("fractional operators are based at t = 0; got a signal with t0 != 0")


def _check_derivative_order(rho) -> float:
    rho = check_real(rho, "rho")
    if not 0.0 < rho <= 1.0:
        raise ParameterError(f"derivative order must lie in (0, 1], got {rho}")
    return rho


def _rl_power(c, p: float, order: float):
    """Exact RL operator of order ``order`` applied to ``c t^p``; ``None`` if it vanishes."""
    if p <= -1.0:
        raise DomainError(f"t^{p} is not locally integrable at 0")
    # Gamma(p+1)/Gamma(p+1+a) t^{p+a}, with a = -order
    q = _snap(p - order, abs(p) + abs(order))
    denom = q + 1.0
    if denom <= 0.0 and denom == math.floor(denom):
        return None
    return c * special.gamma(p + 1.0) * special.rgamma(denom), q


def _snap(x: float, scale: float) -> float:
    """Round ``x`` to the nearest integer when it is one up to rounding error."""
    k = round(x)
    return float(k) if abs(x - k) <= 8.0 * np.finfo(float).eps * max(scale, 1.0) else x


def _expm1_pow(u: np.ndarray, b: float) -> np.ndarray:
    """``(1 + u)**b - 1`` without cancellation."""
    with np.errstate(divide="ignore"):
        return np.expm1(b * np.log1p(u))


def trapezoid_weights(a: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product-trapezoid weights for the integral of order ``a > 0``.

    Returns ``(conv, start)`` such that, with ``h_j`` the samples,
    ``I_m = dt**a / Gamma(a + 2) * (start[m] * h_0 + sum_{j=1}^m conv[m - j] h_j)``.
    """
    b = a + 1.0
    k = np.arange(n, dtype=float)
    conv = np.empty(n)
    conv[0] = 1.0
    if n > 1:
        kk = k[1:]
        # (k+1)^b - 2 k^b + (k-1)^b = k^b [((1+1/k)^b - 1) + ((1-1/k)^b - 1)]
        conv[1:] = kk**b * (_expm1_pow(1.0 / kk, b) + _expm1_pow(-1.0 / kk, b))
    start = np.zeros(n)
    if n > 1:
        m = k[1:]
        # (m-1)^b - (m-1-a) m^a = m^b [((1-1/m)^b - 1) + b/m]
        start[1:] = m**b * (_expm1_pow(-1.0 / m, b) + b / m)
    return conv, start


def _regular_integral(values: np.ndarray, dt: float, a: float) -> np.ndarray:
    n = values.size
    conv, start = trapezoid_weights(a, n)
    out = np.zeros(n, dtype=values.dtype)
    if n > 1:
        out[1:] = np.convolve(conv, values[1:])[: n - 1] + start[1:] * values[0]
    return out * (dt**a / math.gamma(a + 2.0))


def rl_integral(h: TimeSignal, sigma: float) -> TimeSignal:
    """Riemann-Liouville integral of order ``sigma < 0``.

    The samples are integrated by product trapezoidal quadrature (exact kernel
    moments against the piecewise-linear interpolant), second order in ``dt``
    for smooth signals. Power terms are integrated exactly.
    """
    sigma = check_real(sigma, "sigma")
    if sigma >= 0.0:
        raise ParameterError(f"integration order must be < 0, got {sigma}")
    _check_based_at_zero(h)
    a = -sigma
    values = _regular_integral(h.values, h.dt, a)
    singular = tuple(
        term for term in (_rl_power(c, p, sigma) for c, p in h.singular) if term is not None
    )
    return TimeSignal(0.0, h.dt, values, singular)


def _differentiate(h: TimeSignal) -> TimeSignal:
    if len(h) < 3:
        raise ParameterError("differentiation needs at least 3 samples")
    values = np.gradient(h.values, h.dt, edge_order=2)
    singular = tuple((c * p, p - 1.0) for c, p in h.singular if p != 0.0)
    return TimeSignal(h.t0, h.dt, values, singular)


def rl_derivative(h: TimeSignal, rho: float) -> TimeSignal:
    """Riemann-Liouville derivative of order ``rho`` in ``(0, 1]``.

    Finite differences (centered inside, one-sided second order at the ends) of
    :func:`rl_integral` of order ``rho - 1``. The ``t = 0`` sample carries no
    accuracy guarantee.
    """
    rho = _check_derivative_order(rho)
    _check_based_at_zero(h)
    if len(h) < 3:
        raise ParameterError("differentiation needs at least 3 samples")
    if rho == 1.0:
        return _differentiate(h)
    primitive = rl_integral(TimeSignal(0.0, h.dt, h.values), rho - 1.0)
    out = _differentiate(primitive)
    singular = tuple(
        term for term in (_rl_power(c, p, rho) for c, p in h.singular) if term is not None
    )
    return TimeSignal(0.0, h.dt, out.values, singular)


def caputo_derivative(h: TimeSignal, rho: float) -> TimeSignal:
    """Caputo derivative: the integral of order ``rho - 1`` of ``dh/dt``."""
    rho = _check_derivative_order(rho)
    _check_based_at_zero(h)
    for _, p in h.singular:
        if p < 0.0:
            raise DomainError(f"the Caputo derivative of t^{p} is not defined (h' not integrable)")
    slope = _differentiate(h)
    if rho == 1.0:
        return slope
    return rl_integral(slope, rho - 1.0)


def gl_weights(rho: float, n: int) -> np.ndarray:
    """Grünwald-Letnikov weights ``w_0 = 1``, ``w_j = w_{j-1} (1 - (rho + 1)/j)``."""
    j = np.arange(1, n, dtype=float)
    return np.concatenate([[1.0], np.cumprod(1.0 - (rho + 1.0) / j)])


def gl_derivative(h: TimeSignal, rho: float) -> TimeSignal:
    r"""Grünwald-Letnikov approximation, first order in ``dt``.

    .. math::

        \partial_t^\rho h(t_m) \approx \Delta t^{-\rho} \sum_{j=0}^m w_j h(t_{m-j})
    """
    rho = _check_derivative_order(rho)
    _check_based_at_zero(h)
    w = gl_weights(rho, len(h))
    values = np.convolve(w, h.values)[: len(h)] * h.dt**-rho
    singular = tuple(
        term for term in (_rl_power(c, p, rho) for c, p in h.singular) if term is not None
    )
    return TimeSignal(0.0, h.dt, values, singular)
