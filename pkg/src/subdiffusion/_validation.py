"""Exceptions and argument checks shared by every module."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np


class ParameterError(ValueError):
    """A parameter lies outside the domain of the operation."""


class DomainError(ValueError):
    """The operation is not defined at the requested argument (e.g. ``t <= 0``)."""


class CoverageError(ValueError):
    """Sampled data does not cover the interval an operation needs."""


class AliasingError(ValueError):
    """A physical grid is too coarse to represent the requested band."""


class AccuracyWarning(RuntimeWarning):
    """An evaluation hit an internal cap and may be less accurate than advertised."""


def check_real(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(out):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return out


def check_order(rho, name: str = "rho", *, allow_one: bool = True) -> float:
    """Validate a fractional order in ``(0, 1)`` (or ``(0, 1]``)."""
    rho = check_real(rho, name)
    upper_ok = rho <= 1.0 if allow_one else rho < 1.0
    if not (rho > 0.0 and upper_ok):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise ParameterError(f"{name} must lie in {interval}, got {rho}")
    return rho


def check_positive(value, name: str, *, strict: bool = True) -> float:
    value = check_real(value, name)
    if value < 0.0 or (strict and value == 0.0):
        bound = "> 0" if strict else ">= 0"
        raise ParameterError(f"{name} must be {bound}, got {value}")
    return value


def check_times(times: Iterable[float], name: str = "times") -> np.ndarray:
    """Return ``times`` as a sorted, strictly positive float array."""
    arr = np.atleast_1d(np.asarray(times, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite")
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be > 0 (the solution is singular at t = 0)")
    if np.any(np.diff(arr) < 0.0):
        raise ParameterError(f"{name} must be sorted in increasing order")
    return arr
