r"""Fourier analysis on the torus :math:`\mathbb{T}^N = (-\pi, \pi]^N`.

Coefficients follow

.. math::

    g_n = (2\pi)^{-N} \int_{\mathbb{T}^N} g(x) e^{-inx} \, dx,
    \qquad g(x) = \sum_n g_n e^{inx},

and a field is band limited to the modes with :math:`|n|^2 < K` (strict).
The Laplacian :math:`A = -\Delta` acts as multiplication by :math:`|n|^2`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from subdiffusion._validation import AliasingError, DomainError, ParameterError, check_positive

__all__ = [
    "SpectralField",
    "PhysicalGrid",
    "MembershipReport",
    "band_modes",
    "min_grid_points",
    "analyze",
    "synthesize",
    "laplacian_apply",
    "frac_power_apply",
    "liouville_norm",
    "membership_report",
]


def band_modes(dim: int, band_K: float) -> np.ndarray:
    """All ``n`` in ``Z^dim`` with ``|n|^2 < band_K``, sorted by ``(|n|^2, n)``."""
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    band_K = check_positive(band_K, "band_K")
    r = math.isqrt(max(math.ceil(band_K) - 1, 0))
    axis = range(-r, r + 1)
    modes = [n for n in itertools.product(axis, repeat=dim) if sum(v * v for v in n) < band_K]
    modes.sort(key=lambda n: (sum(v * v for v in n), n))
    return np.array(modes, dtype=np.int64).reshape(-1, dim)


def min_grid_points(band_K: float) -> int:
    """Smallest points-per-axis that resolves the band without aliasing."""
    return 2 * math.ceil(math.sqrt(band_K)) + 1


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients on a set of modes inside the band ``|n|^2 < band_K``.

    ``modes`` is an ``(M, dim)`` integer array kept in ``(|n|^2, n)`` order and
    ``coeffs`` the matching complex coefficients.
    """

    dim: int
    band_K: float
    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "band_K", check_positive(self.band_K, "band_K"))
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, self.dim)
        coeffs = np.asarray(self.coeffs, dtype=complex).ravel()
        if modes.shape[0] != coeffs.size:
            raise ParameterError("modes and coeffs must have the same length")
        norms = np.sum(modes * modes, axis=1)
        if np.any(norms >= self.band_K):
            raise ParameterError(f"all modes must satisfy |n|^2 < {self.band_K}")
        order = np.lexsort(tuple(modes[:, ::-1].T) + (norms,))
        modes = modes[order]
        if modes.shape[0] > 1 and np.any(np.all(np.diff(modes, axis=0) == 0, axis=1)):
            raise ParameterError("duplicate modes")
        modes.setflags(write=False)
        coeffs = coeffs[order]
        coeffs.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_dict(cls, dim: int, band_K: float, coeffs: dict) -> "SpectralField":
        """Build from ``{mode tuple: coefficient}``."""
        modes = np.array([tuple(n) for n in coeffs], dtype=np.int64).reshape(-1, dim)
        return cls(dim, band_K, modes, np.array(list(coeffs.values()), dtype=complex))

    @classmethod
    def zeros(cls, dim: int, band_K: float) -> "SpectralField":
        modes = band_modes(dim, band_K)
        return cls(dim, band_K, modes, np.zeros(len(modes), dtype=complex))

    @property
    def eigenvalues(self) -> np.ndarray:
        """``|n|^2`` for each stored mode."""
        return np.sum(self.modes * self.modes, axis=1)

    def to_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in n): complex(c) for n, c in zip(self.modes, self.coeffs)}

    def coeff(self, n) -> complex:
        """Coefficient of mode ``n`` (zero when not stored)."""
        n = np.asarray(n, dtype=np.int64)
        hit = np.flatnonzero(np.all(self.modes == n, axis=1))
        return complex(self.coeffs[hit[0]]) if hit.size else 0j

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.dim, self.band_K, self.modes, coeffs)

    def restrict(self, band_K: float) -> "SpectralField":
        """Keep only the modes with ``|n|^2 < band_K``."""
        keep = self.eigenvalues < band_K
        return SpectralField(self.dim, band_K, self.modes[keep], self.coeffs[keep])

    def is_real(self, atol: float = 0.0) -> bool:
        """Whether ``g_{-n} = conj(g_n)`` holds for all stored modes."""
        lookup = self.to_dict()
        for n, c in lookup.items():
            partner = lookup.get(tuple(-v for v in n), 0j)
            if abs(partner - c.conjugate()) > atol:
                return False
        return True

    def __len__(self) -> int:
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.band_K == other.band_K
            and np.array_equal(self.modes, other.modes)
            and np.array_equal(self.coeffs, other.coeffs)
        )


@dataclass(frozen=True, eq=False)
class PhysicalGrid:
    """Samples on the uniform grid ``x_j = -pi + 2 pi (j + 1) / M`` along each axis."""

    dim: int
    points_per_axis: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples)
        shape = (self.points_per_axis,) * self.dim
        if samples.shape != shape:
            raise ParameterError(f"samples must have shape {shape}, got {samples.shape}")
        object.__setattr__(self, "samples", samples)

    @staticmethod
    def axis(points_per_axis: int) -> np.ndarray:
        M = points_per_axis
        return -np.pi + 2.0 * np.pi * (np.arange(M) + 1) / M

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = self.axis(self.points_per_axis)
        return np.meshgrid(*([x] * self.dim), indexing="ij")

    @classmethod
    def from_function(cls, func, dim: int, points_per_axis: int) -> "PhysicalGrid":
        """Sample ``func(x_1, ..., x_N)`` on the grid."""
        x = cls.axis(points_per_axis)
        mesh = np.meshgrid(*([x] * dim), indexing="ij")
        return cls(dim, points_per_axis, np.asarray(func(*mesh)))


def _check_grid(M: int, band_K: float):
    need = min_grid_points(band_K)
    if M < need:
        raise AliasingError(f"{M} points per axis alias the band |n|^2 < {band_K}; need >= {need}")


def _phase(modes: np.ndarray, M: int) -> np.ndarray:
    # grid offset: x_0 = -pi + 2 pi / M
    return np.exp(-1j * (modes.sum(axis=1) * (-np.pi + 2.0 * np.pi / M)))


def analyze(grid: PhysicalGrid, band_K: float) -> SpectralField:
    """Fourier coefficients of the grid samples on the band ``|n|^2 < band_K``."""
    _check_grid(grid.points_per_axis, band_K)
    M = grid.points_per_axis
    spectrum = np.fft.fftn(grid.samples) / M**grid.dim
    modes = band_modes(grid.dim, band_K)
    idx = tuple((modes % M).T)
    coeffs = spectrum[idx] * _phase(modes, M)
    return SpectralField(grid.dim, band_K, modes, coeffs)


def synthesize(field: SpectralField, grid_M: int) -> PhysicalGrid:
    """Samples of ``sum_n g_n exp(i n x)`` on the ``grid_M``-point grid."""
    _check_grid(grid_M, field.band_K)
    spectrum = np.zeros((grid_M,) * field.dim, dtype=complex)
    if len(field):
        idx = tuple((field.modes % grid_M).T)
        spectrum[idx] = field.coeffs / _phase(field.modes, grid_M)
    samples = np.fft.ifftn(spectrum) * grid_M**field.dim
    return PhysicalGrid(field.dim, grid_M, samples)


def laplacian_apply(field: SpectralField) -> SpectralField:
    """``A g = -Laplace g``: multiply each coefficient by ``|n|^2``."""
    return field.with_coeffs(field.coeffs * field.eigenvalues)


def frac_power_apply(field: SpectralField, tau: float) -> SpectralField:
    """Multiply ``g_n`` by ``|n|**tau``.

    ``tau = 2`` reproduces :func:`laplacian_apply`. For ``tau < 0`` the zero mode
    must vanish.
    """
    lam = field.eigenvalues.astype(float)
    zero = lam == 0.0
    if tau < 0.0 and np.any(field.coeffs[zero] != 0.0):
        raise DomainError("negative powers need a vanishing zero-mode coefficient")
    with np.errstate(divide="ignore"):
        mult = np.where(zero, 1.0 if tau == 0.0 else 0.0, lam ** (0.5 * tau))
    return field.with_coeffs(field.coeffs * mult)


def liouville_norm(field: SpectralField, a: float) -> float:
    """``sqrt(sum (1 + |n|^2)^a |g_n|^2)`` over the stored modes."""
    weights = (1.0 + field.eigenvalues.astype(float)) ** a
    return math.sqrt(math.fsum((weights * np.abs(field.coeffs) ** 2).tolist()))


@dataclass(frozen=True)
class MembershipReport:
    """Diagnostics for ``g`` in the Liouville class ``L_2^a(T^N)``.

    ``shells`` lists ``(j, sum over 2^j <= |n|^2 < 2^{j+1} of (1+|n|^2)^a |g_n|^2)``;
    the zero mode is reported under ``j = -1``. ``decay_rate`` is the
    least-squares slope of ``log2`` shell mass against ``j`` (``None`` with
    fewer than two nonzero shells).
    """

    a: float
    dim: int
    condition_met: bool
    norm: float
    shells: tuple[tuple[int, float], ...]
    decay_rate: float | None


def membership_report(field: SpectralField, a: float, N: int | None = None) -> MembershipReport:
    """Check the smoothness condition ``a > N/2`` and profile the shell masses."""
    N = field.dim if N is None else int(N)
    lam = field.eigenvalues
    mass = (1.0 + lam.astype(float)) ** a * np.abs(field.coeffs) ** 2
    shell = np.where(lam == 0, -1, np.floor(np.log2(np.maximum(lam, 1))).astype(int))
    shells = tuple(
        (int(j), math.fsum(mass[shell == j].tolist())) for j in np.unique(shell)
    )
    js = np.array([j for j, m in shells if j >= 0 and m > 0.0], dtype=float)
    ms = np.array([m for j, m in shells if j >= 0 and m > 0.0])
    rate = float(np.polyfit(js, np.log2(ms), 1)[0]) if js.size >= 2 else None
    return MembershipReport(
        a=float(a),
        dim=N,
        condition_met=bool(a > N / 2.0),
        norm=liouville_norm(field, a),
        shells=shells,
        decay_rate=rate,
    )
