"""Time-fractional subdiffusion on the N-torus via Fourier-Mittag-Leffler series."""

__version__ = "0.1.0"

from subdiffusion._validation import (
    AccuracyWarning,
    AliasingError,
    CoverageError,
    DomainError,
    ParameterError,
)
from subdiffusion.fracops import (
    TimeSignal,
    caputo_derivative,
    gl_derivative,
    rl_derivative,
    rl_integral,
)
from subdiffusion.ml_special import (
    MLParams,
    bound_constant_m1,
    check_m2,
    ml_eval,
    mittag_leffler,
    propagator,
)
from subdiffusion.solver import (
    DuhamelQuadrature,
    Forcing,
    ProblemSpec,
    SolutionSnapshot,
    solve,
    solve_classical_limit,
)
from subdiffusion.spectral import PhysicalGrid, SpectralField, analyze, synthesize

__all__ = [
    "AccuracyWarning",
    "AliasingError",
    "CoverageError",
    "DomainError",
    "ParameterError",
    "FourierAnalyzer",
    "SubdiffusionSolver",
    "TimeSignal",
    "caputo_derivative",
    "gl_derivative",
    "rl_derivative",
    "rl_integral",
    "MLParams",
    "bound_constant_m1",
    "check_m2",
    "ml_eval",
    "mittag_leffler",
    "propagator",
    "DuhamelQuadrature",
    "Forcing",
    "ProblemSpec",
    "SolutionSnapshot",
    "solve",
    "solve_classical_limit",
    "PhysicalGrid",
    "SpectralField",
    "analyze",
    "synthesize",
]


def __getattr__(name):
    # the estimator wrappers pull in scikit-learn; load them on first use
    if name in ("FourierAnalyzer", "SubdiffusionSolver"):
        from subdiffusion import estimator

        return getattr(estimator, name)
    raise AttributeError(f"module 'subdiffusion' has no attribute {name!r}")
