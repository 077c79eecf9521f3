r"""Fourier-Mittag-Leffler solution of the subdiffusion problem on the torus.

For :math:`\partial_t^\rho u + A u = f` with
:math:`\lim_{t\to 0}\partial_t^{\rho-1}u = \varphi`, every Fourier mode evolves
independently:

.. math::

    u_n(t) = \varphi_n t^{\rho-1} E_{\rho,\rho}(-|n|^2 t^\rho)
        + \int_0^t f_n(t - \xi)\, \xi^{\rho-1} E_{\rho,\rho}(-|n|^2 \xi^\rho) \, d\xi .

The convolution ("Duhamel") term is evaluated by product integration against
the piecewise-linear interpolant of the sampled forcing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from subdiffusion._validation import (
    CoverageError,
    DomainError,
    ParameterError,
    check_order,
    check_positive,
    check_real,
    check_times,
)
from subdiffusion.fracops import TimeSignal
from subdiffusion.ml_special import mittag_leffler, propagator
from subdiffusion.spectral import PhysicalGrid, SpectralField, synthesize

__all__ = [
    "Forcing",
    "ProblemSpec",
    "SolutionSnapshot",
    "QuadratureScheme",
    "DuhamelQuadrature",
    "homogeneous_mode",
    "duhamel_mode",
    "duhamel_constant",
    "solve",
    "solve_classical_limit",
]

# relative slack when matching evaluation times to forcing samples
_GRID_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Forcing:
    """Forcing coefficients ``f_n(t)`` on a fixed set of modes.

    ``dt is None`` marks forcing that is constant in time; ``values`` then has
    shape ``(n_modes,)``. Otherwise ``values`` has shape ``(n_samples, n_modes)``
    with row ``k`` holding ``f_n(k dt)``; between samples the forcing is
    interpolated linearly.
    """

    dim: int
    band_K: float
    modes: np.ndarray
    values: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, self.dim)
        values = np.asarray(self.values, dtype=complex)
        if self.dt is None:
            values = values.reshape(modes.shape[0])
        else:
            check_positive(self.dt, "dt")
            values = values.reshape(-1, modes.shape[0])
            if values.shape[0] < 2:
                raise ParameterError("sampled forcing needs at least two time samples")
        # normalize mode order through SpectralField
        ref = SpectralField(self.dim, self.band_K, modes, np.arange(modes.shape[0]))
        order = ref.coeffs.real.astype(int)
        object.__setattr__(self, "modes", ref.modes)
        object.__setattr__(self, "values", values[..., order])

    @classmethod
    def constant(cls, field: SpectralField) -> "Forcing":
        return cls(field.dim, field.band_K, field.modes, field.coeffs, None)

    @classmethod
    def sampled(cls, dt: float, fields: list[SpectralField]) -> "Forcing":
        """Forcing from snapshots at ``0, dt, 2 dt, ...`` (all on the same modes)."""
        first = fields[0]
        for f in fields[1:]:
            if not np.array_equal(f.modes, first.modes):
                raise ParameterError("all forcing samples must share one mode set")
        values = np.stack([f.coeffs for f in fields])
        return cls(first.dim, first.band_K, first.modes, values, dt)

    @property
    def is_constant(self) -> bool:
        return self.dt is None

    @property
    def horizon(self) -> float:
        return math.inf if self.dt is None else (self.values.shape[0] - 1) * self.dt

    def signal(self, i: int) -> TimeSignal | complex:
        """Mode ``i`` as a :class:`TimeSignal`, or its constant value."""
        if self.dt is None:
            return complex(self.values[i])
        return TimeSignal(0.0, self.dt, self.values[:, i])

    def at(self, t: float) -> SpectralField:
        """Coefficients at time ``t`` (linear interpolation between samples)."""
        if self.dt is None:
            vals = self.values
        else:
            if t < 0.0 or t > self.horizon * (1.0 + _GRID_RTOL):
                raise CoverageError(f"forcing samples do not cover t = {t}")
            x = np.arange(self.values.shape[0]) * self.dt
            vals = np.array(
                [np.interp(t, x, col.real) + 1j * np.interp(t, x, col.imag) for col in self.values.T]
            )
        return SpectralField(self.dim, self.band_K, self.modes, vals)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    r"""Initial-boundary value problem on :math:`\mathbb{T}^N \times (0, T]`."""

    dim: int
    rho: float
    horizon: float
    phi: SpectralField
    forcing: Forcing | None = None

    def __post_init__(self):
        object.__setattr__(self, "rho", check_order(self.rho))
        object.__setattr__(self, "horizon", check_positive(self.horizon, "horizon"))
        if self.phi.dim != self.dim:
            raise ParameterError("phi and the problem must share the dimension")
        if self.forcing is not None:
            f = self.forcing
            if f.dim != self.dim or f.band_K != self.phi.band_K:
                raise ParameterError("phi and forcing must share dim and band_K")
            if f.horizon < self.horizon * (1.0 - _GRID_RTOL):
                raise CoverageError(
                    f"forcing samples end at t = {f.horizon}, before the horizon {self.horizon}"
                )

    @property
    def band_K(self) -> float:
        return self.phi.band_K

    def modes(self) -> np.ndarray:
        """Union of the modes carried by ``phi`` and the forcing."""
        modes = [self.phi.modes]
        if self.forcing is not None:
            modes.append(self.forcing.modes)
        union = np.unique(np.concatenate(modes), axis=0)
        return SpectralField(self.dim, self.band_K, union, np.zeros(len(union))).modes

    def restrict(self, band_K: float) -> "ProblemSpec":
        """The same problem with every field cut to ``|n|^2 < band_K``."""
        phi = self.phi.restrict(band_K)
        forcing = None
        if self.forcing is not None:
            f = self.forcing
            keep = np.sum(f.modes * f.modes, axis=1) < band_K
            forcing = Forcing(f.dim, band_K, f.modes[keep], f.values[..., keep], f.dt)
        return ProblemSpec(self.dim, self.rho, self.horizon, phi, forcing)


@dataclass(frozen=True, eq=False)
class SolutionSnapshot:
    """``u(., t)`` as Fourier coefficients.

    ``regularized`` holds ``t^{1-rho} u(., t)``, which stays bounded as
    ``t -> 0``; ``grid`` is filled when physical samples were requested.
    """

    t: float
    field: SpectralField
    regularized: SpectralField
    grid: PhysicalGrid | None = field(default=None, repr=False)


class QuadratureScheme(enum.Enum):
    #: exact Mittag-Leffler moments against the piecewise-linear forcing
    product_linear = "product_linear"
    #: graded nodes ``t (j/M)^r``, linear interpolation of the smooth factor,
    #: exact ``xi^(rho-1)`` moments
    graded_mesh = "graded_mesh"


@dataclass(frozen=True)
class DuhamelQuadrature:
    scheme: QuadratureScheme = QuadratureScheme.product_linear
    nodes_per_unit: int = 64
    grading_exponent: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", QuadratureScheme(self.scheme))
        if int(self.nodes_per_unit) != self.nodes_per_unit or self.nodes_per_unit < 8:
            raise ParameterError(f"nodes_per_unit must be an integer >= 8, got {self.nodes_per_unit}")
        if self.grading_exponent is not None and self.grading_exponent < 1.0:
            raise ParameterError("grading_exponent must be >= 1")

    def grading(self, rho: float) -> float:
        """Grading exponent, ``2 / rho`` unless set explicitly."""
        return 2.0 / rho if self.grading_exponent is None else float(self.grading_exponent)


# {{{ single modes


def homogeneous_mode(phi_n: complex, lam: float, rho: float, t: float) -> complex:
    r""":math:`\varphi_n t^{\rho-1} E_{\rho,\rho}(-\lambda t^\rho)`."""
    t = check_real(t, "t")
    if t <= 0.0:
        raise DomainError("the solution is singular at t = 0; need t > 0")
    return complex(phi_n) * propagator(rho, lam, t)


def _moments(xi: np.ndarray, lam: float, rho: float) -> tuple[np.ndarray, np.ndarray]:
    r"""Cumulative kernel moments :math:`\int_0^\xi s^k\, s^{\rho-1}E_{\rho,\rho}(-\lambda s^\rho) ds`, k = 0, 1."""
    xi = np.asarray(xi, dtype=float)
    z = -lam * xi**rho
    e1 = mittag_leffler(z, rho, rho + 1.0)
    e2 = mittag_leffler(z, rho, rho + 2.0)
    return xi**rho * e1, xi ** (rho + 1.0) * (e1 - e2)


def _cell_weights(nodes: np.ndarray, m0: np.ndarray, m1: np.ndarray):
    """Weights of the left/right node values for linear data on each cell."""
    a = nodes[:-1]
    h = np.diff(nodes)
    d0 = np.diff(m0)
    d1 = np.diff(m1)
    right = (d1 - a * d0) / h
    return d0 - right, right


def duhamel_constant(f_n: complex, lam: float, rho: float, t: float) -> complex:
    r"""Closed form for constant forcing, :math:`f_n t^\rho E_{\rho,\rho+1}(-\lambda t^\rho)`."""
    return complex(f_n) * t**rho * float(mittag_leffler(-lam * t**rho, rho, rho + 1.0))


def _interp(signal: TimeSignal, s: np.ndarray) -> np.ndarray:
    x = signal.times
    v = signal.values
    if np.iscomplexobj(v):
        return np.interp(s, x, v.real) + 1j * np.interp(s, x, v.imag)
    return np.interp(s, x, v)


def duhamel_mode(
    f_n,
    lam: float,
    rho: float,
    t: float,
    quad: DuhamelQuadrature | None = None,
) -> complex:
    r"""Convolution term :math:`\int_0^t f_n(t-\xi)\xi^{\rho-1}E_{\rho,\rho}(-\lambda\xi^\rho)d\xi`.

    ``f_n`` is a :class:`TimeSignal` starting at 0 or a constant (closed form).
    """
    quad = DuhamelQuadrature() if quad is None else quad
    rho = check_order(rho)
    lam = check_positive(lam, "lam", strict=False)
    t = check_real(t, "t")
    if t <= 0.0:
        raise DomainError("need t > 0")
    if not isinstance(f_n, TimeSignal):
        return duhamel_constant(f_n, lam, rho, t)
    if f_n.t0 != 0.0:
        raise DomainError("forcing samples must start at t = 0")
    span = (len(f_n) - 1) * f_n.dt
    if t > span * (1.0 + _GRID_RTOL):
        raise CoverageError(f"forcing samples end at {span}, cannot integrate up to {t}")
    t = min(t, span)

    if quad.scheme is QuadratureScheme.product_linear:
        # nodes where the interpolant of f(t - xi) breaks: xi = t - k dt
        k_max = int(math.floor(t / f_n.dt * (1.0 + _GRID_RTOL)))
        s = np.arange(k_max, -1, -1) * f_n.dt
        nodes = np.unique(np.clip(np.concatenate([[0.0], t - s, [t]]), 0.0, t))
        values = _interp(f_n, t - nodes)
        m0, m1 = _moments(nodes, lam, rho)
        left, right = _cell_weights(nodes, m0, m1)
        return complex(np.sum(left * values[:-1]) + np.sum(right * values[1:]))

    r = quad.grading(rho)
    M = max(8, int(math.ceil(quad.nodes_per_unit * t)))
    nodes = t * (np.arange(M + 1) / M) ** r
    smooth = _interp(f_n, t - nodes) * _smooth_factor(nodes, lam, rho)
    m0 = nodes**rho / rho
    m1 = nodes ** (rho + 1.0) / (rho + 1.0)
    left, right = _cell_weights(nodes, m0, m1)
    return complex(np.sum(left * smooth[:-1]) + np.sum(right * smooth[1:]))


def _smooth_factor(xi: np.ndarray, lam: float, rho: float) -> np.ndarray:
    return mittag_leffler(-lam * xi**rho, rho, rho)


# }}}


# {{{ full solve


def _on_grid(times: np.ndarray, dt: float) -> np.ndarray | None:
    idx = np.rint(times / dt)
    if np.all(np.abs(idx * dt - times) <= _GRID_RTOL * np.maximum(times, dt)):
        return idx.astype(np.int64)
    return None


def _duhamel_on_grid(values: np.ndarray, dt: float, steps: np.ndarray, lam: float, rho: float):
    """Convolution term at ``t = m dt`` for every ``m`` in ``steps`` and every column of ``values``."""
    n = int(steps.max()) + 1
    nodes = np.arange(n) * dt
    m0, m1 = _moments(nodes, lam, rho)
    left, right = _cell_weights(nodes, m0, m1)
    out = np.zeros((steps.size, values.shape[1]), dtype=complex)
    for col in range(values.shape[1]):
        F = values[:n, col]
        A = np.convolve(left, F)
        B = np.convolve(right, F)
        for i, m in enumerate(steps):
            if m == 0:
                continue
            # cells j = 0..m-1 contribute left[j] F[m-j] + right[j] F[m-1-j]
            out[i, col] = A[m] - (left[m] * F[0] if m < left.size else 0.0) + B[m - 1]
    return out


def solve(
    problem: ProblemSpec,
    eval_times,
    quad: DuhamelQuadrature | None = None,
    *,
    grid_M: int | None = None,
) -> list[SolutionSnapshot]:
    """Evaluate the series solution on every mode of the problem at ``eval_times``.

    Parameters
    ----------
    problem
        The problem; the solution carries the union of the modes of ``phi`` and
        the forcing, nothing is truncated further.
    eval_times
        Increasing times in ``(0, T]``.
    quad
        Quadrature for the forcing term.
    grid_M
        If given, physical samples on a ``grid_M``-point grid are attached.
    """
    quad = DuhamelQuadrature() if quad is None else quad
    times = check_times(eval_times, "eval_times")
    if times[-1] > problem.horizon * (1.0 + _GRID_RTOL):
        raise DomainError(f"eval_times exceed the horizon T = {problem.horizon}")
    rho = problem.rho
    modes = problem.modes()
    lam_all = np.sum(modes * modes, axis=1)
    phi = np.array([problem.phi.coeff(n) for n in modes])
    forcing = problem.forcing
    if forcing is not None:
        fidx = {tuple(n): i for i, n in enumerate(forcing.modes.tolist())}
        f_of_mode = np.array([fidx.get(tuple(n), -1) for n in modes.tolist()])

    raw = np.zeros((times.size, len(modes)), dtype=complex)
    reg = np.zeros_like(raw)
    for lam in np.unique(lam_all):
        cols = np.flatnonzero(lam_all == lam)
        lam = float(lam)
        if not np.any(phi[cols]) and (
            forcing is None or not np.any(forcing.values[..., f_of_mode[cols][f_of_mode[cols] >= 0]])
        ):
            # identically zero data: the coefficients stay exactly zero
            continue
        if rho == 1.0:
            e = np.exp(-lam * times)
        else:
            e = mittag_leffler(-lam * times**rho, rho, rho)
        reg[:, cols] = e[:, None] * phi[cols][None, :]
        raw[:, cols] = (times ** (rho - 1.0) * e)[:, None] * phi[cols][None, :]

        if forcing is None:
            continue
        fcols = f_of_mode[cols]
        active = fcols >= 0
        if not np.any(active):
            continue
        cols = cols[active]
        fcols = fcols[active]
        if forcing.is_constant:
            ep = mittag_leffler(-lam * times**rho, rho, rho + 1.0)
            duh = (times**rho * ep)[:, None] * forcing.values[fcols][None, :]
        else:
            steps = _on_grid(times, forcing.dt)
            if steps is not None and quad.scheme is QuadratureScheme.product_linear:
                duh = _duhamel_on_grid(forcing.values[:, fcols], forcing.dt, steps, lam, rho)
            else:
                duh = np.array(
                    [
                        [duhamel_mode(forcing.signal(fc), lam, rho, t, quad) for fc in fcols]
                        for t in times
                    ]
                )
        raw[:, cols] += duh
        reg[:, cols] += (times ** (1.0 - rho))[:, None] * duh

    return _snapshots(problem, modes, times, raw, reg, grid_M)


def _snapshots(problem, modes, times, raw, reg, grid_M):
    out = []
    for i, t in enumerate(times):
        fld = SpectralField(problem.dim, problem.band_K, modes, raw[i])
        grid = synthesize(fld, grid_M) if grid_M is not None else None
        out.append(
            SolutionSnapshot(
                float(t), fld, SpectralField(problem.dim, problem.band_K, modes, reg[i]), grid
            )
        )
    return out


def solve_classical_limit(
    problem: ProblemSpec,
    eval_times,
    *,
    grid_M: int | None = None,
) -> list[SolutionSnapshot]:
    r"""The ``rho = 1`` heat-equation solution, computed with exponentials only.

    :math:`u_n(t) = \varphi_n e^{-\lambda t} + \int_0^t f_n(t-\xi) e^{-\lambda\xi} d\xi`,
    with the integral done by exact exponential moments against the
    piecewise-linear forcing. It shares no code with the Mittag-Leffler path and
    serves as a cross-check of :func:`solve` at ``rho = 1``.
    """
    if problem.rho != 1.0:
        raise ParameterError("solve_classical_limit needs rho = 1")
    times = check_times(eval_times, "eval_times")
    if times[-1] > problem.horizon * (1.0 + _GRID_RTOL):
        raise DomainError(f"eval_times exceed the horizon T = {problem.horizon}")
    modes = problem.modes()
    lam_all = np.sum(modes * modes, axis=1).astype(float)
    phi = np.array([problem.phi.coeff(n) for n in modes])
    raw = np.exp(-np.outer(times, lam_all)) * phi[None, :]

    forcing = problem.forcing
    if forcing is not None:
        for j, n in enumerate(modes):
            fj = forcing.modes.tolist().index(n.tolist()) if n.tolist() in forcing.modes.tolist() else -1
            if fj < 0:
                continue
            lam = lam_all[j]
            for i, t in enumerate(times):
                raw[i, j] += _exp_duhamel(forcing, fj, lam, t)
    return _snapshots(problem, modes, times, raw, raw.copy(), grid_M)


def _exp_moments(x: np.ndarray, lam: float):
    """``int_0^x e^{-lam s} ds`` and ``int_0^x s e^{-lam s} ds``."""
    if lam == 0.0:
        return x, 0.5 * x * x
    m0 = -np.expm1(-lam * x) / lam
    m1 = (m0 - x * np.exp(-lam * x)) / lam
    return m0, m1


def _exp_duhamel(forcing: Forcing, col: int, lam: float, t: float) -> complex:
    if forcing.is_constant:
        return complex(forcing.values[col]) * float(_exp_moments(np.array(t), lam)[0])
    sig = forcing.signal(col)
    k_max = int(math.floor(t / sig.dt * (1.0 + _GRID_RTOL)))
    s = np.arange(k_max, -1, -1) * sig.dt
    nodes = np.unique(np.clip(np.concatenate([[0.0], t - s, [t]]), 0.0, t))
    values = _interp(sig, t - nodes)
    m0, m1 = _exp_moments(nodes, lam)
    left, right = _cell_weights(nodes, m0, m1)
    return complex(np.sum(left * values[:-1]) + np.sum(right * values[1:]))


# }}}
