"""scikit-learn style wrappers around the transforms and the solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from subdiffusion._validation import ParameterError
from subdiffusion.solver import DuhamelQuadrature, Forcing, ProblemSpec, solve
from subdiffusion.spectral import PhysicalGrid, SpectralField, analyze, synthesize

__all__ = ["FourierAnalyzer", "SubdiffusionSolver"]


def _as_grid(X) -> PhysicalGrid:
    if isinstance(X, PhysicalGrid):
        return X
    X = np.asarray(X)
    if X.ndim < 1 or len(set(X.shape)) != 1:
        raise ParameterError(f"grid samples must form a cube, got shape {X.shape}")
    return PhysicalGrid(X.ndim, X.shape[0], X)


class FourierAnalyzer(TransformerMixin, BaseEstimator):
    """Grid samples to band-limited Fourier coefficients and back.

    Parameters
    ----------
    band_K : float
        Keep the modes with ``|n|^2 < band_K``.
    """

    def __init__(self, band_K=16.0):
        self.band_K = band_K

    def fit(self, X, y=None):
        grid = _as_grid(X)
        # raises AliasingError for grids that cannot carry the band
        analyze(grid, self.band_K)
        self.dim_ = grid.dim
        self.points_per_axis_ = grid.points_per_axis
        return self

    def transform(self, X) -> SpectralField:
        check_is_fitted(self)
        grid = _as_grid(X)
        if grid.dim != self.dim_ or grid.points_per_axis != self.points_per_axis_:
            raise ParameterError("grid shape differs from the one seen in fit")
        return analyze(grid, self.band_K)

    def inverse_transform(self, field: SpectralField) -> np.ndarray:
        check_is_fitted(self)
        return synthesize(field, self.points_per_axis_).samples


class SubdiffusionSolver(BaseEstimator):
    """Solver with the estimator interface.

    ``fit(phi, forcing)`` fixes the data of the problem; ``predict(times)``
    returns the solution snapshots.

    Parameters
    ----------
    rho : float
        Order of the time derivative, in ``(0, 1]``.
    horizon : float
        Final time ``T``.
    scheme, nodes_per_unit, grading_exponent
        Settings of the forcing quadrature, see :class:`DuhamelQuadrature`.
    grid_points : int or None
        Attach physical samples on this many points per axis.
    """

    def __init__(
        self,
        rho=0.5,
        horizon=1.0,
        scheme="product_linear",
        nodes_per_unit=64,
        grading_exponent=None,
        grid_points=None,
    ):
        self.rho = rho
        self.horizon = horizon
        self.scheme = scheme
        self.nodes_per_unit = nodes_per_unit
        self.grading_exponent = grading_exponent
        self.grid_points = grid_points

    def fit(self, phi: SpectralField, forcing: Forcing | None = None):
        if not isinstance(phi, SpectralField):
            raise ParameterError("phi must be a SpectralField")
        self.quadrature_ = DuhamelQuadrature(self.scheme, self.nodes_per_unit, self.grading_exponent)
        self.problem_ = ProblemSpec(phi.dim, self.rho, self.horizon, phi, forcing)
        return self

    def predict(self, times):
        check_is_fitted(self)
        return solve(self.problem_, times, self.quadrature_, grid_M=self.grid_points)

    def predict_coefficients(self, times) -> np.ndarray:
        """``(n_times, n_modes)`` coefficient array, modes in ``problem_.modes()`` order."""
        return np.stack([s.field.coeffs for s in self.predict(times)])
