import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gptcloak.cgpt_core import cgpt, polynomial_pair
from gptcloak.proportional import (
    aggregates,
    cgpt_from_aggregates,
    design_weights,
    extreme_asymptotic,
    growth_factor,
    lagrange_at,
    vandermonde_design_targets,
    vandermonde_inverse,
    vandermonde_matrix,
    vandermonde_solve,
    verify_only_trivial,
    xi_aggregates,
    xi_aggregates_and_jacobian,
    zeta_aggregates,
)
from gptcloak.structure import LayerStructure, StructureError, proportional_radii

contrast_lists = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=7)


def brute_xi(eta):
    """Odd-subset weights by explicit loops over index tuples."""
    L = len(eta)
    xi = np.zeros(L)
    for m in range(1, L + 1, 2):
        for sub in itertools.combinations(range(1, L + 1), m):
            w = L + sum(i if j % 2 else -i for j, i in enumerate(sub))
            xi[w] += np.prod([eta[i - 1] for i in sub])
    return xi


def test_xi_small_cases():
    a, b = 0.3, -0.7
    # L = 2: {1} -> weight 1, {2} -> weight 0
    np.testing.assert_allclose(xi_aggregates([a, b]), [b, a])
    assert zeta_aggregates([a, b]) == pytest.approx([a * b])
    assert zeta_aggregates([a]).size == 0


@given(contrast_lists)
def test_xi_matches_brute_force(eta):
    np.testing.assert_allclose(xi_aggregates(eta), brute_xi(eta), atol=1e-14)


@given(contrast_lists)
def test_xi_endpoint_identities(eta):
    xi = xi_aggregates(eta)
    assert xi[0] == pytest.approx(eta[-1], abs=1e-15)
    assert xi[-1] == pytest.approx(eta[0], abs=1e-15)


def test_xi_batch():
    rng = np.random.default_rng(0)
    batch = rng.uniform(-1, 1, (5, 4))
    np.testing.assert_allclose(xi_aggregates(batch), [xi_aggregates(row) for row in batch])


@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=6))
def test_xi_jacobian(eta):
    eta = np.array(eta)
    xi, jac = xi_aggregates_and_jacobian(eta)
    np.testing.assert_allclose(xi, xi_aggregates(eta), atol=1e-15)
    h = 1e-6
    for i in range(eta.size):
        e = np.zeros_like(eta)
        e[i] = h
        fd = (xi_aggregates(eta + e) - xi_aggregates(eta - e)) / (2 * h)
        np.testing.assert_allclose(jac[:, i], fd, atol=1e-8)


@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=7), st.floats(1.05, 1.6), st.integers(1, 5))
def test_cgpt_from_aggregates(eta, gamma, n):
    s = LayerStructure(2, proportional_radii(0.7, gamma, len(eta) - 1))
    if s.n_layers == 1:
        return
    want = cgpt(s, eta, n)
    got = cgpt_from_aggregates(s, aggregates(eta), n)
    p22_bound = polynomial_pair(s, eta, n)[2]
    assert got == pytest.approx(want, abs=1e-12 * s.cgpt_scale(n) * p22_bound)


def test_growth_factor():
    assert growth_factor(LayerStructure(2, proportional_radii(1.0, 1.3, 4))) == pytest.approx(1.3)
    with pytest.raises(StructureError):
        growth_factor(LayerStructure(2, (3.0, 2.0, 1.0)))
    with pytest.raises(StructureError):
        growth_factor(LayerStructure(2, (1.0,)))


@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6, unique=True), st.data())
def test_vandermonde_routines(nodes, data):
    t = np.array(nodes)
    if np.min(np.abs(t[:, None] - t[None, :]) + np.eye(t.size)) < 0.05:
        return
    V = vandermonde_matrix(t)
    rhs = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=t.size, max_size=t.size)))
    x = vandermonde_solve(t, rhs)
    np.testing.assert_allclose(V @ x, rhs, atol=1e-13 * np.linalg.cond(V) * (1 + np.abs(rhs).max()))
    np.testing.assert_allclose(vandermonde_inverse(t) @ V, np.eye(t.size), atol=1e-12 * np.linalg.cond(V))
    z = data.draw(st.floats(-1.0, 6.0))
    np.testing.assert_allclose(V @ lagrange_at(t, z), z ** np.arange(t.size), atol=1e-12 * np.linalg.cond(V))


def test_vandermonde_rejects_repeated_nodes():
    with pytest.raises(ValueError):
        vandermonde_solve([1.0, 1.0], [0.0, 1.0])


@pytest.mark.parametrize("gamma", [1.01, 1.2, 1.5])
@pytest.mark.parametrize("N", [1, 3, 8])
def test_design_weights_solve_the_moment_system(gamma, N):
    s = LayerStructure(2, proportional_radii(1.0, gamma, N))
    g = design_weights(s)
    t = gamma ** (2.0 * np.arange(1, N + 1))
    # sum_k t_k^n g_k = 1 for n = 1..N
    for n in range(1, N + 1):
        terms = t**n * g
        assert terms.sum() == pytest.approx(1.0, abs=1e-12 * np.abs(terms).sum())


def test_design_targets_small_case():
    # N = 1: M_1 = 0 <=> xi_1 + gamma^2 xi_2 = 0 <=> eta_1 = -eta_2 / gamma^2
    s = LayerStructure(2, proportional_radii(1.0, 1.5, 1))
    targets = vandermonde_design_targets(s, -1.0)
    np.testing.assert_allclose(targets, [-1.0, 1.0 / 1.5**2])
    assert cgpt(s, [targets[1], -1.0], 1) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(StructureError):
        vandermonde_design_targets(s, -1.5)


def test_extreme_asymptotic():
    eta = extreme_asymptotic(8, 0.01).eta
    assert eta[0] == pytest.approx(-0.44)
    assert eta[1:] == (1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0)
    assert extreme_asymptotic(2, 0.0).eta == (-1.0, 1.0)
    with pytest.raises(ValueError):
        extreme_asymptotic(0, 0.01)
    with pytest.raises(ValueError):
        extreme_asymptotic(2, -0.1)


@pytest.mark.parametrize("N", [1, 2, 4, 6])
def test_verify_only_trivial(N):
    s = LayerStructure(2, proportional_radii(1.0, 1.2, N))
    report = verify_only_trivial(s, trials=200, seed=N)
    assert report["passed"] and report["peeling_identity"]
    assert report["min_residual"] > 1e-10 and report["counterexamples"] == []


@pytest.mark.parametrize("N", [2, 3, 4])
def test_xi_vanishes_only_at_zero_on_grid(N):
    grid = np.linspace(-1.0, 1.0, 21 if N < 4 else 11)
    points = np.array(list(itertools.product(grid, repeat=N)))
    size = np.abs(points).max(axis=1)
    points, size = points[size > 0], size[size > 0]
    xi = np.abs(xi_aggregates(points)).max(axis=1)
    # the peeling chain gives |xi| >= c |eta'|^N away from the origin
    assert np.min(xi / size**N) > 1e-3
    assert math.isclose(float(xi_aggregates(np.zeros(N)).max()), 0.0)


def test_extreme_asymptotic_stays_in_the_box():
    assert extreme_asymptotic(4, 0.5).eta[0] == 1.0
