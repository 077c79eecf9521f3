"""Checks of computed solutions against the equation, the initial condition and
the kernel estimates.

All reports are plain dataclasses with ``to_dict`` (JSON-ready) and
``to_text`` (aligned columns) renderings.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal as sps
from scipy import special

from subdiffusion._validation import ParameterError, check_order, check_times
from subdiffusion.fracops import gl_weights
from subdiffusion.ml_special import bound_constant_m1, check_m2, log_grid, mittag_leffler
from subdiffusion.solver import (
    DuhamelQuadrature,
    Forcing,
    ProblemSpec,
    SolutionSnapshot,
    solve,
)
from subdiffusion.spectral import SpectralField, min_grid_points, synthesize

__all__ = [
    "ResidualReport",
    "InitialLimitReport",
    "TruncationReport",
    "KernelEstimateRow",
    "KernelEstimateReport",
    "residual_check",
    "residual_study",
    "observed_order",
    "initial_limit_check",
    "closed_form_deviation",
    "truncation_study",
    "kernel_estimate_suite",
    "default_probe_times",
]

_UNIFORM_RTOL = 1e-9


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6e}"
    return str(v)


def _table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


class _Report:
    def to_dict(self) -> dict:
        return asdict(self)


# {{{ residual


@dataclass(frozen=True)
class ResidualReport(_Report):
    """Residual of the equation at the reported times.

    ``residual_l2`` is the spatial L2 norm (normalized so that ``1`` has norm 1)
    of ``d^rho u + A u - f``; ``relative`` divides it by ``scale``, the largest
    of the norms of ``u``, ``A u`` and ``f`` at that time.
    """

    times: list[float]
    residual_l2: list[float]
    scale: list[float]
    relative: list[float]
    dt_used: float
    expected_order: float

    @property
    def max_relative(self) -> float:
        return max(self.relative) if self.relative else 0.0

    def to_text(self) -> str:
        rows = [[t, r, s, q] for t, r, s, q in zip(self.times, self.residual_l2, self.scale, self.relative)]
        head = f"dt = {self.dt_used!r}, expected order = {self.expected_order!r}\n"
        return head + _table(["t", "residual_l2", "scale", "relative"], rows)


def _forcing_matrix(forcing: Forcing | None, modes: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros((times.size, len(modes)), dtype=complex)
    if forcing is None:
        return out
    index = {tuple(n): i for i, n in enumerate(forcing.modes.tolist())}
    for j, n in enumerate(modes.tolist()):
        i = index.get(tuple(n))
        if i is None:
            continue
        if forcing.is_constant:
            out[:, j] = forcing.values[i]
        else:
            x = np.arange(forcing.values.shape[0]) * forcing.dt
            col = forcing.values[:, i]
            out[:, j] = np.interp(times, x, col.real) + 1j * np.interp(times, x, col.imag)
    return out


def _rl_damped_power(p: float, rho: float, c: float, t: np.ndarray) -> np.ndarray:
    r"""RL derivative of order ``rho`` of :math:`t^p e^{-ct}`, ``p > -1``.

    Equals :math:`\Gamma(p+1) t^{p-\rho} M(p+1, p+1-\rho, -ct)/\Gamma(p+1-\rho)`
    with the confluent function regularized in its second argument; Kummer's
    transformation keeps the evaluation free of cancellation.
    """
    a, b = p + 1.0, p + 1.0 - rho
    z = c * t
    reg = np.empty_like(t)
    small = z <= 600.0
    zs = z[small]
    if b == 0.0:
        # limit of M(-rho, b, z)/Gamma(b) as b -> 0
        reg[small] = np.exp(-zs) * (-rho) * zs * special.hyp1f1(1.0 - rho, 2.0, zs)
    else:
        reg[small] = np.exp(-zs) * special.hyp1f1(-rho, b, zs) * special.rgamma(b)
    zl = z[~small]
    if zl.size:
        # algebraic expansion; (1 + rho)_s grows slowly, so a few terms suffice at z > 600
        term = np.ones_like(zl)
        acc = np.ones_like(zl)
        for n in range(30):
            term = term * (a + n) * (1.0 + rho + n) / ((n + 1) * zl)
            acc += term
        reg[~small] = zl**-a * special.rgamma(-rho) * acc
    return special.gamma(a) * t ** (p - rho) * reg


def _singular_part(phi: np.ndarray, lam: np.ndarray, rho: float, times: np.ndarray):
    """Leading terms ``phi (-lam)^k t^{rho(k+1)-1} / Gamma(rho(k+1))`` of ``u``, exponent < 1.

    These are the terms the difference scheme cannot handle near ``t = 0``:
    non-positive exponents make it diverge, exponents in ``(0, 1)`` cost it its
    order during start-up. Each is multiplied by ``2 e^{-ct} - e^{-2ct} = 1 - O(t^2)``
    with ``c = lam^{1/rho}``, the time scale on which they stop dominating ``u``,
    so that the remainder is neither rough at 0 nor a large cancelling
    difference later. Returns the values at ``times`` and the exact RL
    derivatives of order ``rho``.
    """
    value = np.zeros((times.size, lam.size), dtype=complex)
    deriv = np.zeros_like(value)
    for j, l in enumerate(lam):
        if phi[j] == 0.0:
            continue
        c = l ** (1.0 / rho)
        damp = 2.0 * np.exp(-c * times) - np.exp(-2.0 * c * times)
        k = 0
        while rho * (k + 1) - 1.0 < 1.0:
            p = rho * (k + 1) - 1.0
            coef = phi[j] * (-l) ** k / special.gamma(rho * (k + 1))
            value[:, j] += coef * times**p * damp
            d = 2.0 * _rl_damped_power(p, rho, c, times) - _rl_damped_power(p, rho, 2.0 * c, times)
            deriv[:, j] += coef * d
            k += 1
    return value, deriv


def residual_check(
    snapshots: list[SolutionSnapshot],
    forcing: Forcing | None,
    rho: float,
    *,
    phi: SpectralField | None = None,
    burn_in: float = 1.0 / 16.0,
) -> ResidualReport:
    r"""Residual of :math:`\partial_t^\rho u + A u = f` on a dense uniform time grid.

    The snapshots must sit at ``t_k = k dt``, ``k = 1..m``. The work is done per
    mode, so the Laplacian is exact and only the time discretization enters.
    For ``rho < 1`` the time derivative is the Grünwald-Letnikov scheme applied
    to ``u`` minus its non-integrable-derivative part, the terms
    :math:`\varphi_n(-\lambda)^k t^{\rho(k+1)-1}/\Gamma(\rho(k+1))` with
    non-positive exponent, whose derivatives are added back exactly; this
    keeps the scheme first order. ``phi`` must be the initial data of the
    solved problem (``None`` means zero). For ``rho = 1`` a second-order
    finite difference including ``u(0) = phi`` is used instead.

    Times below ``burn_in * t_m`` are dropped from the report, because the
    pointwise error of both difference schemes is largest next to ``t = 0``.
    """
    rho = check_order(rho)
    if not snapshots:
        raise ParameterError("no snapshots")
    times = np.array([s.t for s in snapshots])
    dt = times[0]
    k = np.arange(1, times.size + 1)
    if times.size < 3 or np.any(np.abs(times - k * dt) > _UNIFORM_RTOL * times):
        raise ParameterError("residual_check needs snapshots at t_k = k dt, k = 1..m (m >= 3)")
    modes = snapshots[0].field.modes
    for s in snapshots:
        if not np.array_equal(s.field.modes, modes):
            raise ParameterError("all snapshots must carry the same modes")
    u = np.stack([s.field.coeffs for s in snapshots])
    lam = np.sum(modes * modes, axis=1).astype(float)
    phi_n = np.zeros(len(modes), dtype=complex)
    if phi is not None:
        phi_n = np.array([phi.coeff(n) for n in modes])
    f = _forcing_matrix(forcing, modes, times)

    if rho == 1.0:
        full = np.vstack([phi_n[None, :], u])
        deriv = np.gradient(full, dt, axis=0, edge_order=2)[1:]
    else:
        sing, sing_deriv = _singular_part(phi_n, lam, rho, times)
        regular = np.vstack([np.zeros((1, len(modes))), u - sing])
        w = gl_weights(rho, regular.shape[0])
        conv = sps.fftconvolve(w[:, None], regular, axes=0)[: regular.shape[0]]
        deriv = conv[1:] * dt**-rho + sing_deriv

    res = deriv + lam[None, :] * u - f
    res_l2 = np.sqrt(np.sum(np.abs(res) ** 2, axis=1))
    scale = np.max(
        np.stack(
            [
                np.sqrt(np.sum(np.abs(u) ** 2, axis=1)),
                np.sqrt(np.sum(np.abs(lam[None, :] * u) ** 2, axis=1)),
                np.sqrt(np.sum(np.abs(f) ** 2, axis=1)),
            ]
        ),
        axis=0,
    )
    keep = times >= burn_in * times[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0.0, res_l2 / scale, res_l2)
    return ResidualReport(
        times=times[keep].tolist(),
        residual_l2=res_l2[keep].tolist(),
        scale=scale[keep].tolist(),
        relative=rel[keep].tolist(),
        dt_used=float(dt),
        expected_order=2.0 if rho == 1.0 else 1.0,
    )


def residual_study(
    problem: ProblemSpec,
    steps: int = 4096,
    *,
    quad: DuhamelQuadrature | None = None,
    burn_in: float = 1.0 / 16.0,
) -> tuple[ResidualReport, ResidualReport]:
    """Solve on ``dt = T/steps`` and ``dt/2`` and check both residuals."""
    reports = []
    for m in (steps, 2 * steps):
        times = problem.horizon * np.arange(1, m + 1) / m
        snaps = solve(problem, times, quad)
        reports.append(residual_check(snaps, problem.forcing, problem.rho, phi=problem.phi, burn_in=burn_in))
    return reports[0], reports[1]


def observed_order(coarse: ResidualReport, fine: ResidualReport) -> float:
    """``log2`` of the ratio of the largest residuals at the shared times."""
    fine_at = dict(zip(fine.times, fine.residual_l2))
    shared = [(r, fine_at[t]) for t, r in zip(coarse.times, coarse.residual_l2) if t in fine_at]
    if not shared:
        raise ParameterError("the two reports share no times")
    rc = max(r for r, _ in shared)
    rf = max(r for _, r in shared)
    if rc == 0.0 or rf == 0.0:
        return math.inf
    return math.log2(rc / rf)


# }}}


# {{{ initial limit


@dataclass(frozen=True)
class InitialLimitReport(_Report):
    """Deviation ``||t^{1-rho} u(., t) - phi / Gamma(rho)||`` at decreasing probe times.

    ``decay_exponent`` is the least-squares slope of ``log deviation`` against
    ``log t`` over the second half of the probes; ``monotone_from`` is the first
    index from which the deviations never increase.
    """

    probe_times: list[float]
    deviation: list[float]
    decay_exponent: float | None
    monotone_from: int
    eventually_monotone: bool

    def to_text(self) -> str:
        head = (
            f"decay exponent = {_fmt(self.decay_exponent)}, "
            f"eventually monotone = {_fmt(self.eventually_monotone)} (from index {self.monotone_from})\n"
        )
        return head + _table(["t", "deviation"], [[t, d] for t, d in zip(self.probe_times, self.deviation)])


def default_probe_times() -> np.ndarray:
    """``2^{-j}`` for ``j = 3..20``."""
    return 2.0 ** -np.arange(3, 21, dtype=float)


def closed_form_deviation(phi_n: complex, lam: float, rho: float, t: float) -> float:
    """``|phi_n| |E_{rho,rho}(-lam t^rho) - 1/Gamma(rho)|`` for one homogeneous mode."""
    if rho == 1.0:
        return abs(phi_n) * abs(-math.expm1(-lam * t))
    e = float(mittag_leffler(-lam * t**rho, rho, rho))
    return abs(phi_n) * abs(e - 1.0 / math.gamma(rho))


def initial_limit_check(
    problem: ProblemSpec,
    probe_times=None,
    quad: DuhamelQuadrature | None = None,
    *,
    min_tail: int = 3,
) -> InitialLimitReport:
    """Track ``t^{1-rho} u`` as ``t -> 0``; it must approach ``phi / Gamma(rho)``."""
    probes = default_probe_times() if probe_times is None else np.asarray(probe_times, dtype=float)
    if probes.size < 2 or np.any(np.diff(probes) >= 0.0):
        raise ParameterError("probe_times must be strictly decreasing")
    check_times(probes[::-1], "probe_times")
    snaps = solve(problem, probes[::-1], quad)[::-1]
    target = {
        tuple(n): c / math.gamma(problem.rho) for n, c in problem.phi.to_dict().items()
    }
    dev = []
    for s in snaps:
        diff = [c - target.get(tuple(n), 0.0) for n, c in zip(s.regularized.modes.tolist(), s.regularized.coeffs)]
        dev.append(math.sqrt(math.fsum(abs(d) ** 2 for d in diff)))
    dev = np.array(dev)

    start = len(dev) - 1
    while start > 0 and dev[start] <= dev[start - 1]:
        start -= 1
    half = len(dev) // 2
    tail = dev[half:] > 0.0
    exponent = None
    if np.count_nonzero(tail) >= 2:
        exponent = float(np.polyfit(np.log(probes[half:][tail]), np.log(dev[half:][tail]), 1)[0])
    return InitialLimitReport(
        probe_times=probes.tolist(),
        deviation=dev.tolist(),
        decay_exponent=exponent,
        monotone_from=int(start),
        eventually_monotone=bool(len(dev) - start >= min_tail),
    )


# }}}


# {{{ truncation


@dataclass(frozen=True)
class TruncationReport(_Report):
    """Sup-norm differences between band-limited solutions at one time.

    ``snapshot_diffs[i]`` compares the solutions truncated at
    ``band_K_values[i]`` and ``band_K_values[i + 1]``; ``bound_estimates[i]`` is
    the kernel-estimate bound on everything the first of them drops.
    """

    t: float
    band_K_values: list[float]
    snapshot_diffs: list[float]
    bound_estimates: list[float]
    constant_C: float

    @property
    def bounded(self) -> bool:
        return all(d <= b for d, b in zip(self.snapshot_diffs, self.bound_estimates))

    def to_text(self) -> str:
        rows = [
            [k0, k1, d, b]
            for k0, k1, d, b in zip(
                self.band_K_values[:-1], self.band_K_values[1:], self.snapshot_diffs, self.bound_estimates
            )
        ]
        head = f"t = {self.t!r}, C = {self.constant_C!r}\n"
        return head + _table(["K", "K_next", "sup_diff", "tail_bound"], rows)


def _tail_bound(problem: ProblemSpec, band_K: float, t: float, C: float) -> float:
    r"""Bound on :math:`\sup_x |u - S_K u|` from :math:`|E_{\rho,\rho}(-x)| \le C/(1+x^2)`.

    Mode by mode, :math:`|u_n(t)| \le C t^{\rho-1}|\varphi_n|/(1+\lambda^2 t^{2\rho})
    + C \sup_s|f_n(s)| \arctan(\lambda t^\rho)/(\rho\lambda)`.
    """
    rho = problem.rho
    terms = []
    phi = problem.phi
    lam = phi.eigenvalues.astype(float)
    for l, c in zip(lam, phi.coeffs):
        if l >= band_K:
            terms.append(C * t ** (rho - 1.0) * abs(c) / (1.0 + l * l * t ** (2.0 * rho)))
    f = problem.forcing
    if f is not None:
        fl = np.sum(f.modes * f.modes, axis=1).astype(float)
        sup = np.max(np.abs(f.values.reshape(-1, len(fl))), axis=0)
        for l, s in zip(fl, sup):
            if l >= band_K:
                x = l * t**rho
                integral = math.atan(x) / (rho * l) if l > 0.0 else t**rho / rho
                terms.append(C * s * integral)
    return math.fsum(terms)


def truncation_study(
    problem: ProblemSpec,
    band_K_values,
    t: float,
    quad: DuhamelQuadrature | None = None,
) -> TruncationReport:
    """Compare solutions truncated to increasing bands at time ``t``.

    For ``rho = 1`` the kernel is ``e^{-x}`` and ``C = 1`` suffices, since
    ``(1 + x^2) e^{-x}`` is decreasing.
    """
    Ks = [float(k) for k in band_K_values]
    if len(Ks) < 2 or any(b <= a for a, b in zip(Ks, Ks[1:])):
        raise ParameterError("band_K_values must be increasing with at least two entries")
    C = 1.0 if problem.rho == 1.0 else bound_constant_m1(problem.rho).constant_C
    M = min_grid_points(max(Ks[-1], problem.band_K))
    fields = []
    for K in Ks:
        sub = problem.restrict(min(K, problem.band_K))
        snap = solve(sub, [t], quad)[0]
        fields.append(synthesize(snap.field, M).samples)
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(fields, fields[1:])]
    bounds = [_tail_bound(problem, K, t, C) for K in Ks[:-1]]
    return TruncationReport(float(t), Ks, diffs, bounds, float(C))


# }}}


# {{{ kernel estimates


@dataclass(frozen=True)
class KernelEstimateRow:
    rho: float
    epsilon: float
    m1_constant: float
    m2_constants: list[float] = field(repr=False)
    m2_max: float = 0.0
    variation: float = 0.0
    passed: bool = False


@dataclass(frozen=True)
class KernelEstimateReport(_Report):
    """Constants of the two kernel estimates per ``(rho, epsilon)``.

    ``m2_constants`` holds one constant per ``lambda`` decade (the sup over the
    ``t`` grid); ``variation`` is ``max/min - 1`` across decades. A row passes
    when every ``m2`` constant lies below the ``m1`` constant, the uniform bound
    ``s^{1-eps}|E(-s)| <= C s^{1-eps}/(1+s^2) <= C``.
    """

    lambdas: list[float]
    t_range: tuple[float, float]
    rows: list[KernelEstimateRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_text(self) -> str:
        rows = [[r.rho, r.epsilon, r.m1_constant, r.m2_max, r.variation, r.passed] for r in self.rows]
        return _table(["rho", "epsilon", "C_m1", "C_m2_max", "variation", "pass"], rows)


def kernel_estimate_suite(
    rho_values,
    epsilon_values,
    *,
    lam_decades: tuple[int, int] = (-3, 6),
    t_range: tuple[float, float] = (1e-3, 10.0),
    per_decade: int = 16,
) -> KernelEstimateReport:
    """Sweep both kernel estimates over ``lambda`` in whole decades and a log ``t`` grid."""
    lambdas = [10.0**k for k in range(lam_decades[0], lam_decades[1] + 1)]
    t_grid = log_grid(t_range[0], t_range[1], per_decade)
    rows = []
    for rho in rho_values:
        rho = check_order(rho, allow_one=False)
        C = bound_constant_m1(rho).constant_C
        for eps in epsilon_values:
            consts = [check_m2(rho, eps, lam, t_grid).constant_C for lam in lambdas]
            hi, lo = max(consts), min(consts)
            rows.append(
                KernelEstimateRow(
                    rho=float(rho),
                    epsilon=float(eps),
                    m1_constant=float(C),
                    m2_constants=consts,
                    m2_max=float(hi),
                    variation=float(hi / lo - 1.0) if lo > 0.0 else math.inf,
                    passed=bool(np.all(np.isfinite(consts)) and hi <= C),
                )
            )
    return KernelEstimateReport(lambdas, (float(t_range[0]), float(t_range[1])), rows)


# }}}
