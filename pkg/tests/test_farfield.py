import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gptcloak.cgpt_core import FieldCoefficients, cgpt, direct_solve
from gptcloak.farfield import (
    DecayReport,
    decay_exponent,
    evaluate_potential,
    layer_index,
    mode_coefficients,
    transmission_residual,
)
from gptcloak.solver import FixedCore, solve_vanishing
from gptcloak.structure import LayerStructure, equidistant_radii

contrast = st.floats(-0.99, 0.99)


@given(st.sampled_from([2, 3]), st.lists(contrast, min_size=1, max_size=4), st.integers(1, 6))
def test_direct_solution_satisfies_transmission(dim, eta, n):
    radii = tuple(np.linspace(2.0, 0.6, len(eta)))
    s = LayerStructure(dim, radii)
    for res in transmission_residual(s, eta, n):
        assert res.continuity <= 1e-12 and res.flux <= 1e-12


def test_perturbed_coefficients_are_detected():
    s = LayerStructure(2, (1.0, 0.5))
    eta = [0.5, -0.5]
    good = direct_solve(s, eta, 1)
    b = good.b.copy()
    b[1] += 1e-3
    bad = FieldCoefficients(good.mode, good.dimension, good.a, b)
    worst = max(max(r.continuity, r.flux) for r in transmission_residual(s, eta, 1, bad))
    assert worst > 1e-4


def test_insulating_interface_has_zero_outer_flux():
    s = LayerStructure(2, (2.0, 1.0))
    res = transmission_residual(s, [-1.0, 0.4], 2)
    assert res[0].outer_derivative <= 1e-13


def test_layer_index_and_potential():
    s = LayerStructure(2, (2.0, 1.0))
    assert layer_index(s, 3.0) == 0 and layer_index(s, 2.0) == 0
    assert layer_index(s, 1.5) == 1 and layer_index(s, 0.2) == 2
    eta = [0.3, -0.2]
    coeffs = direct_solve(s, eta, 2)
    # far outside, u = H + b_0 r^{-2} cos(2 theta)
    x = np.array([3.0, 4.0])
    r, c = 5.0, 3.0 / 5.0
    want = (r**2 + coeffs.b0 * r**-2) * math.cos(2 * math.acos(c))
    assert evaluate_potential(s, eta, 2, x) == pytest.approx(want, rel=1e-13)
    # continuity across the interface
    inside = evaluate_potential(s, eta, 2, [2.0 - 1e-12, 0.0])
    outside = evaluate_potential(s, eta, 2, [2.0, 0.0])
    assert inside == pytest.approx(outside, rel=1e-10)
    with pytest.raises(ValueError):
        evaluate_potential(s, eta, 2, [1.0, 0.0, 0.0])


def test_three_dimensional_potential_uses_legendre():
    s = LayerStructure(3, (1.0,))
    coeffs = direct_solve(s, [0.5], 2)
    p = np.array([0.0, 0.0, 3.0])
    assert evaluate_potential(s, [0.5], 2, p) == pytest.approx(9.0 + coeffs.b0 * 3.0**-3, rel=1e-13)
    p = np.array([3.0, 0.0, 0.0])  # P_2(0) = -1/2
    assert evaluate_potential(s, [0.5], 2, p) == pytest.approx(-0.5 * (9.0 + coeffs.b0 * 3.0**-3), rel=1e-13)


def test_mode_coefficients_match_cgpt():
    s = LayerStructure(2, (2.0, 1.0))
    eta = [0.2, 0.4]
    b0 = mode_coefficients(s, eta, 3)
    for n, b in enumerate(b0, start=1):
        assert -2 * math.pi * n * b == pytest.approx(cgpt(s, eta, n), rel=1e-12)


def test_uncoated_disk_decays_like_a_dipole():
    s = LayerStructure(2, (1.0,))
    report = decay_exponent(s, [-1.0], K=1)
    assert report.slope == pytest.approx(-1.0, abs=1e-9)
    assert report.leading_mode == 1 and report.target == -1.0


@pytest.mark.parametrize("N", [2, 4])
def test_designed_structures_decay_faster(N):
    s = LayerStructure(2, equidistant_radii(2.0, 1.0, N))
    report = solve_vanishing(s, FixedCore(sigma=0.0))
    decay = decay_exponent(s, report.eta)
    assert decay.passed and decay.slope == pytest.approx(-(N + 1), abs=0.1)
    assert decay.leading_mode == N + 1


def test_three_dimensional_decay_target():
    s = LayerStructure(3, equidistant_radii(2.0, 1.0, 2))
    report = solve_vanishing(s, FixedCore(sigma=0.0))
    decay = decay_exponent(s, report.eta)
    assert decay.target == -4.0 and decay.passed


def test_exactly_neutral_structure():
    s = LayerStructure(2, (2.0, 1.0))
    report = decay_exponent(s, [0.0, 0.0])
    assert report.exact_neutral and report.slope is None and report.passed
    assert report.to_dict()["exact_neutral"] is True


def test_decay_report_csv_and_validation():
    s = LayerStructure(2, (1.0,))
    report = decay_exponent(s, [0.5], K=1, radii=[10.0, 100.0])
    lines = report.csv_text().splitlines()
    assert lines[0] == "R,abs_u_minus_H" and len(lines) == 3
    with pytest.raises(ValueError):
        replace(report, radii=[100.0, 10.0])
    with pytest.raises(ValueError):
        decay_exponent(s, [0.5], radii=[0.5, 10.0])
    with pytest.raises(ValueError):
        decay_exponent(s, [0.5], K=0)
    assert isinstance(report, DecayReport)
