import json
import math

import numpy as np
import pytest

from subdiffusion import ParameterError
from subdiffusion.solver import Forcing, ProblemSpec, solve
from subdiffusion.spectral import SpectralField, band_modes
from subdiffusion.verify import (
    closed_form_deviation,
    default_probe_times,
    initial_limit_check,
    kernel_estimate_suite,
    observed_order,
    residual_check,
    residual_study,
    truncation_study,
)

from oracles import ml_reference


def _single(dim, K, n, value=1.0):
    return SpectralField.from_dict(dim, K, {tuple(n): value})


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.8])
def test_residual_first_order(rho):
    prob = ProblemSpec(1, rho, 1.0, _single(1, 10, (1,), 1 - 0.5j))
    coarse, fine = residual_study(prob, steps=512)
    assert coarse.expected_order == 1.0
    assert coarse.max_relative < 0.01
    assert 0.8 <= observed_order(coarse, fine) <= 1.2


def test_residual_with_forcing():
    rho = 0.6
    modes = band_modes(1, 5)
    vals = np.outer(np.cos(np.linspace(0.0, 1.0, 65)), np.ones(len(modes)))
    prob = ProblemSpec(1, rho, 1.0, _single(1, 5, (1,)), Forcing(1, 5, modes, vals, 1 / 64))
    coarse, fine = residual_study(prob, steps=512)
    assert coarse.max_relative < 0.05
    assert 0.8 <= observed_order(coarse, fine) <= 1.2


def test_residual_classical_limit_is_second_order():
    prob = ProblemSpec(1, 1.0, 1.0, _single(1, 10, (2,)))
    coarse, fine = residual_study(prob, steps=256)
    assert coarse.expected_order == 2.0
    assert observed_order(coarse, fine) == pytest.approx(2.0, abs=0.2)


def test_residual_detects_wrong_solution():
    rho = 0.5
    prob = ProblemSpec(1, rho, 1.0, _single(1, 10, (1,)))
    times = np.arange(1, 257) / 256
    snaps = solve(prob, times)
    good = residual_check(snaps, None, rho, phi=prob.phi)
    # a solution of the equation with a different eigenvalue
    wrong = solve(ProblemSpec(1, rho, 1.0, _single(1, 10, (2,))), times)
    relabeled = [
        type(s)(s.t, SpectralField(1, 10, np.array([[1]]), s.field.coeffs), s.regularized) for s in wrong
    ]
    bad = residual_check(relabeled, None, rho, phi=prob.phi)
    assert bad.max_relative > 100 * good.max_relative


def test_residual_rejects_nonuniform_times():
    prob = ProblemSpec(1, 0.5, 1.0, _single(1, 10, (1,)))
    snaps = solve(prob, [0.1, 0.2, 0.35])
    with pytest.raises(ParameterError):
        residual_check(snaps, None, 0.5, phi=prob.phi)
    with pytest.raises(ParameterError):
        residual_check([], None, 0.5)


def test_observed_order_needs_shared_times():
    prob = ProblemSpec(1, 0.5, 1.0, _single(1, 10, (1,)))
    a, _ = residual_study(prob, steps=64)
    shifted = type(a)([t + 1.0 for t in a.times], a.residual_l2, a.scale, a.relative, a.dt_used, a.expected_order)
    with pytest.raises(ParameterError):
        observed_order(a, shifted)


def test_initial_limit_matches_closed_form():
    rho, lam = 0.4, 5.0
    prob = ProblemSpec(2, rho, 1.0, _single(2, 10, (1, 2), 2 + 1j))
    rep = initial_limit_check(prob)
    assert rep.eventually_monotone
    assert rep.probe_times == default_probe_times().tolist()
    for t, d in zip(rep.probe_times, rep.deviation):
        assert abs(d - closed_form_deviation(2 + 1j, lam, rho, t)) <= 1e-10 * max(d, 1e-300)
    # the deviation vanishes like t^rho as t -> 0
    assert rep.decay_exponent == pytest.approx(rho, abs=0.05)


def test_closed_form_deviation_oracle():
    rho, lam, t = 0.3, 2.0, 0.01
    ref = abs(float(ml_reference(rho, rho, -lam * t**rho)) - 1 / math.gamma(rho))
    assert closed_form_deviation(1.0, lam, rho, t) == pytest.approx(ref, rel=1e-12)
    assert closed_form_deviation(1j, lam, 1.0, t) == pytest.approx(-math.expm1(-lam * t), rel=1e-14)


def test_initial_limit_probe_validation():
    prob = ProblemSpec(1, 0.5, 1.0, _single(1, 10, (1,)))
    with pytest.raises(ParameterError):
        initial_limit_check(prob, [0.1, 0.2])
    with pytest.raises(ParameterError):
        initial_limit_check(prob, [0.1])


def test_truncation_bounded():
    rng = np.random.default_rng(8)
    modes = band_modes(1, 200)
    lam = np.sum(modes * modes, axis=1)
    phi = SpectralField(1, 200, modes, rng.normal(size=len(modes)) / (1.0 + lam))
    for rho in (0.5, 1.0):
        rep = truncation_study(ProblemSpec(1, rho, 1.0, phi), [10, 40, 100, 200], 0.1)
        assert rep.bounded
        assert rep.snapshot_diffs[-1] < rep.snapshot_diffs[0]
        assert "tail_bound" in rep.to_text()
    with pytest.raises(ParameterError):
        truncation_study(ProblemSpec(1, 0.5, 1.0, phi), [10], 0.1)


def test_kernel_suite_small():
    rep = kernel_estimate_suite([0.5], [0.25, 0.75], lam_decades=(-1, 2), per_decade=8)
    assert rep.passed
    assert len(rep.rows) == 2 and len(rep.lambdas) == 4
    for row in rep.rows:
        assert len(row.m2_constants) == 4
        assert row.m2_max <= row.m1_constant
        assert row.variation >= 0.0
    json.dumps(rep.to_dict())
    assert "variation" in rep.to_text()
