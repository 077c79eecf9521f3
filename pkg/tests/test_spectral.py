import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiffusion import AliasingError, DomainError, ParameterError
from subdiffusion.spectral import (
    PhysicalGrid,
    SpectralField,
    analyze,
    band_modes,
    frac_power_apply,
    laplacian_apply,
    liouville_norm,
    membership_report,
    min_grid_points,
    synthesize,
)

from oracles import extended_sum


def _random_field(dim, K, seed):
    rng = np.random.default_rng(seed)
    modes = band_modes(dim, K)
    return SpectralField(dim, K, modes, rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes)))


def test_band_modes_strict():
    modes = band_modes(1, 9)
    assert sorted(modes.ravel().tolist()) == [-2, -1, 0, 1, 2]
    assert len(band_modes(2, 2)) == 5
    assert len(band_modes(3, 1)) == 1
    with pytest.raises(ParameterError):
        band_modes(0, 4)


def test_cosine_coefficients():
    grid = PhysicalGrid.from_function(lambda x, y: np.cos(x), 2, 11)
    field = analyze(grid, 9)
    coeffs = {n: c for n, c in field.to_dict().items() if abs(c) > 1e-14}
    assert coeffs.keys() == {(1, 0), (-1, 0)}
    assert all(c == pytest.approx(0.5, abs=1e-15) for c in coeffs.values())


def test_plane_wave():
    grid = PhysicalGrid.from_function(lambda x, y: np.exp(1j * (2 * x - y)), 2, 9)
    field = analyze(grid, 9)
    assert field.coeff((2, -1)) == pytest.approx(1.0, abs=1e-14)
    others = np.delete(field.coeffs, np.flatnonzero(np.all(field.modes == (2, -1), axis=1)))
    assert np.max(np.abs(others)) < 1e-14


@pytest.mark.parametrize("dim,K", [(1, 30), (2, 64), (3, 20)])
def test_round_trip(dim, K):
    field = _random_field(dim, K, 3)
    M = min_grid_points(K)
    back = analyze(synthesize(field, M), K)
    assert np.max(np.abs(back.coeffs - field.coeffs)) < 1e-12
    assert np.array_equal(back.modes, field.modes)


def test_aliasing_rejected():
    field = _random_field(1, 16, 0)
    with pytest.raises(AliasingError):
        synthesize(field, 8)
    with pytest.raises(AliasingError):
        analyze(PhysicalGrid(1, 8, np.zeros(8)), 16)


def test_parseval():
    field = _random_field(2, 30, 1)
    samples = synthesize(field, 13).samples
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(liouville_norm(field, 0.0) ** 2, rel=1e-12)


def test_liouville_norm_extended_precision():
    field = _random_field(2, 200, 2)
    for a in (0.0, 1.5, 3.0):
        terms = [(1 + lam) ** a * abs(c) ** 2 for lam, c in zip(field.eigenvalues.tolist(), field.coeffs)]
        ref = math.sqrt(float(extended_sum(terms)))
        assert liouville_norm(field, a) == pytest.approx(ref, rel=1e-14)


def test_membership():
    modes = band_modes(2, 400)
    lam = np.sum(modes * modes, axis=1).astype(float)
    coeffs = np.where(lam > 0, 1.0, 0.0) / np.maximum(lam, 1.0) ** 2
    field = SpectralField(2, 400, modes, coeffs)
    yes = membership_report(field, 1.5)
    no = membership_report(field, 0.75, N=2)
    assert yes.condition_met and not no.condition_met
    assert yes.shells[0] == (-1, 0.0)
    # shell mass ~ 2^{j(a-3)} up to low-shell effects; one more unit of a adds one to the rate
    assert -2.2 < yes.decay_rate < -1.2
    assert membership_report(field, 2.5).decay_rate - yes.decay_rate == pytest.approx(1.0, abs=0.1)
    assert membership_report(SpectralField.from_dict(1, 4, {(0,): 1.0}), 1.0).decay_rate is None


def test_operators():
    field = SpectralField.from_dict(2, 20, {(0, 0): 2.0, (1, 2): 1.0, (-3, 0): 1j})
    lap = laplacian_apply(field).to_dict()
    assert lap[(1, 2)] == 5.0 and lap[(-3, 0)] == 9j and lap[(0, 0)] == 0
    assert frac_power_apply(field, 2.0) == laplacian_apply(field)
    assert frac_power_apply(field, 0.0).to_dict() == field.to_dict()
    with pytest.raises(DomainError):
        frac_power_apply(field, -1.0)
    no_zero = SpectralField.from_dict(2, 20, {(1, 2): 1.0})
    assert frac_power_apply(no_zero, -1.0).coeff((1, 2)) == pytest.approx(5**-0.5)


def test_field_validation():
    with pytest.raises(ParameterError):
        SpectralField.from_dict(1, 4, {(2,): 1.0})
    with pytest.raises(ParameterError):
        SpectralField(1, 4, np.array([[1], [1]]), [1.0, 2.0])
    with pytest.raises(ParameterError):
        SpectralField(1, 4, np.array([[1]]), [1.0, 2.0])
    f = SpectralField.from_dict(1, 10, {(1,): 1.0, (-1,): 1.0})
    assert f.is_real() and not SpectralField.from_dict(1, 10, {(1,): 1.0}).is_real()
    with pytest.raises(ValueError):
        f.coeffs[0] = 3.0


@settings(max_examples=20, deadline=None)
@given(dim=st.integers(1, 3), K=st.floats(1.0, 40.0), seed=st.integers(0, 1000))
def test_round_trip_property(dim, K, seed):
    field = _random_field(dim, K, seed)
    back = analyze(synthesize(field, min_grid_points(K)), K)
    assert np.max(np.abs(back.coeffs - field.coeffs), initial=0.0) < 1e-12


@settings(max_examples=20, deadline=None)
@given(dim=st.integers(1, 3), K=st.floats(1.0, 40.0), seed=st.integers(0, 1000))
def test_restrict_keeps_lower_modes(dim, K, seed):
    field = _random_field(dim, K, seed)
    sub = field.restrict(K / 2)
    for n, c in sub.to_dict().items():
        assert field.coeff(n) == c
        assert sum(v * v for v in n) < K / 2
