"""Proportional-radius theory: subset aggregates, Vandermonde design systems
and the thin-coating asymptotics.

For radii ``r_k = r * gamma^{L-k}`` (``L = N + 1`` layers, ``r`` the core
radius) the transfer-product entries collapse onto powers of ``gamma``::

    p21^(n) = r^{2n} * sum_{k=1..L}   gamma^{2(k-1)n} xi_k
    p22^(n) = 1     + sum_{k=1..L-1} gamma^{-2kn}   zeta_k

where ``xi_{m+1}`` sums ``prod eta_i`` over odd index subsets with weight
``m = L - i_1 + i_2 - ... - i_{2j-1}`` and ``zeta_m`` over even subsets with
weight ``m = -i_1 + i_2 - ... + i_{2j}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gptcloak.cgpt_core import CgptError, normalized_cgpt
from gptcloak.structure import ContrastVector, LayerStructure, StructureError, as_eta_array

MAX_ENUMERATION_LAYERS = 20


@dataclass(frozen=True, eq=False)
class AggregateVector:
    xi: np.ndarray  # xi_1..xi_L
    zeta: np.ndarray  # zeta_1..zeta_{L-1}


def _subset_table(L: int):
    """Membership bits, sizes and 1-based indices of all nonempty subsets of ``1..L``."""
    if L > MAX_ENUMERATION_LAYERS:
        raise ValueError(f"subset enumeration limited to {MAX_ENUMERATION_LAYERS} layers, got {L}")
    masks = np.arange(1, 1 << L, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(L)) & 1).astype(bool)
    pos = np.cumsum(bits, axis=1)
    idx = np.arange(1, L + 1)
    # alternating signed sum of indices: -i_1 + i_2 - i_3 + ...
    signed = np.where(bits, np.where(pos % 2 == 1, -idx, idx), 0).sum(axis=1)
    return bits, bits.sum(axis=1), signed


def _subset_products(bits: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``prod eta_i`` over each subset; ``eta`` may be a batch of shape ``(B, L)``."""
    eta = np.atleast_2d(eta)
    return np.prod(np.where(bits[None, :, :], eta[:, None, :], 1.0), axis=2)


def xi_aggregates(eta) -> np.ndarray:
    """Odd-subset aggregates ``xi_1..xi_L``; a 2-D input is treated as a batch."""
    arr = np.asarray(eta, dtype=float)
    L = arr.shape[-1]
    bits, size, signed = _subset_table(L)
    odd = size % 2 == 1
    weight = L + signed[odd]  # L - i_1 + i_2 - ... - i_{2j-1}, in [0, L-1]
    prods = _subset_products(bits[odd], arr)
    out = np.zeros((prods.shape[0], L))
    for b in range(prods.shape[0]):
        np.add.at(out[b], weight, prods[b])
    return out[0] if arr.ndim == 1 else out


def xi_aggregates_and_jacobian(eta) -> tuple[np.ndarray, np.ndarray]:
    """``xi_1..xi_L`` and ``d xi_m / d eta_i`` (shape ``(L, L)``)."""
    arr = as_eta_array(eta)
    L = arr.size
    bits, size, signed = _subset_table(L)
    odd = size % 2 == 1
    members = bits[odd]
    weight = L + signed[odd]
    factors = np.where(members, arr, 1.0)
    xi = np.zeros(L)
    np.add.at(xi, weight, factors.prod(axis=1))
    jac = np.zeros((L, L))
    for i in range(L):
        others = factors.copy()
        others[:, i] = 1.0
        np.add.at(jac[:, i], weight, np.where(members[:, i], others.prod(axis=1), 0.0))
    return xi, jac


def zeta_aggregates(eta) -> np.ndarray:
    """Even-subset aggregates ``zeta_1..zeta_{L-1}``."""
    arr = as_eta_array(eta)
    L = arr.size
    if L < 2:
        return np.zeros(0)
    bits, size, signed = _subset_table(L)
    even = size % 2 == 0
    prods = _subset_products(bits[even], arr)[0]
    out = np.zeros(L - 1)
    np.add.at(out, signed[even] - 1, prods)
    return out


def aggregates(eta) -> AggregateVector:
    return AggregateVector(xi_aggregates(eta), zeta_aggregates(eta))


def growth_factor(structure: LayerStructure, rtol: float = 1e-10) -> float:
    """``gamma`` of a proportional structure; raises if the radii are not proportional."""
    r = structure.radii_array()
    if r.size < 2:
        raise StructureError("a single layer has no growth factor")
    ratios = r[:-1] / r[1:]
    gamma = float(np.exp(np.mean(np.log(ratios))))
    if np.max(np.abs(ratios / gamma - 1.0)) > rtol:
        raise StructureError(f"radii are not proportional: ratios {ratios}")
    return gamma


def cgpt_from_aggregates(structure: LayerStructure, agg: AggregateVector, n: int) -> float:
    """2D ``M_n`` reassembled from the aggregates (proportional radii only)."""
    gamma = growth_factor(structure)
    L = structure.n_layers
    r_core = structure.radii[-1]
    p21 = r_core ** (2 * n) * float(np.sum(gamma ** (2 * n * np.arange(L)) * agg.xi))
    p22 = 1.0 + float(np.sum(gamma ** (-2.0 * n * np.arange(1, L)) * agg.zeta))
    return 2.0 * math.pi * n * p21 / p22


# ---------------------------------------------------------------------------
# Vandermonde systems, V[i, j] = t_j^i (rows are powers 0..m-1)


def vandermonde_matrix(nodes) -> np.ndarray:
    t = np.asarray(nodes, dtype=float)
    return t[None, :] ** np.arange(t.size)[:, None]


def lagrange_at(nodes, z: float, diffs=None) -> np.ndarray:
    """``l_k(z) = prod_{m != k} (z - t_m) / (t_k - t_m)``: the solution of ``V y = (z^i)_i``.

    ``diffs``, if given, overrides ``diffs[k, m] = t_k - t_m`` (to supply
    differences computed without cancellation).
    """
    t = np.asarray(nodes, dtype=float)
    d = t[:, None] - t[None, :] if diffs is None else np.asarray(diffs, dtype=float)
    out = np.empty(t.size)
    for k in range(t.size):
        others = np.arange(t.size) != k
        out[k] = np.prod((z - t[others]) / d[k, others])
    return out


def vandermonde_inverse(nodes) -> np.ndarray:
    """Explicit inverse: row ``k`` holds the monomial coefficients of ``l_k``."""
    t = np.asarray(nodes, dtype=float)
    m = t.size
    inv = np.empty((m, m))
    for k in range(m):
        others = np.delete(t, k)
        coeffs = np.poly(others)[::-1] if m > 1 else np.ones(1)  # ascending powers
        inv[k] = coeffs / np.prod(t[k] - others)
    return inv


def vandermonde_solve(nodes, rhs) -> np.ndarray:
    """Solve ``V x = rhs`` by the Bjorck-Pereyra recurrences (O(m^2), no pivoting)."""
    x = np.asarray(nodes, dtype=float)
    b = np.array(rhs, dtype=float)
    n = x.size - 1
    if len(set(x.tolist())) != x.size:
        raise ValueError("Vandermonde nodes must be distinct")
    for k in range(n):
        for i in range(n, k, -1):
            b[i] -= x[k] * b[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            b[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            b[i] -= b[i + 1]
    return b


def _proportional_nodes(gamma: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``t_k = gamma^{2(k-1)}``, ``k = 2..N+1``, and their cancellation-free differences."""
    lg = math.log(gamma)
    e = 2.0 * np.arange(1, N + 1)  # exponents 2(k-1)
    t = np.exp(e * lg)
    # t_k - t_m = t_m * (gamma^{e_k - e_m} - 1)
    diffs = t[None, :] * np.expm1((e[:, None] - e[None, :]) * lg)
    return t, diffs


def design_weights(structure: LayerStructure) -> np.ndarray:
    """``g_k = l_k(1) / t_k`` for ``k = 2..N+1``, so that ``M_1 = ... = M_N = 0`` on
    proportional radii is equivalent to ``xi_k = -xi_1 g_k``.

    ``sum_k gamma^{2n(k-1)} xi_k = -xi_1`` (``n = 1..N``) has rows
    ``t_k^{n-1} t_k``; substituting ``y_k = t_k xi_k`` leaves a Vandermonde system
    whose solution is given by the Lagrange product formula. Unlike elimination
    on the Vandermonde matrix, the products stay accurate as ``gamma -> 1``.
    """
    gamma = growth_factor(structure)
    N = structure.n_coatings
    t, diffs = _proportional_nodes(gamma, N)
    return lagrange_at(t, 1.0, diffs) / t


def vandermonde_design_targets(structure: LayerStructure, core_eta: float = -1.0) -> np.ndarray:
    """Aggregates ``xi_1..xi_{N+1}`` forced by ``M_1 = ... = M_N = 0`` with the core
    contrast fixed at ``core_eta`` (``xi_1 = eta_{N+1}``) on proportional radii."""
    if not -1.0 <= core_eta <= 1.0:
        raise StructureError(f"core contrast must lie in [-1, 1], got {core_eta}")
    return np.concatenate(([core_eta], -core_eta * design_weights(structure)))


def extreme_asymptotic(N: int, delta: float) -> ContrastVector:
    """Leading-order thin-coating design: ``eta_1 = (-1)^{N-1}(1 - N(N-1) delta)``,
    ``eta_k = (-1)^{N-k}`` for ``k = 2..N``.

    The correction factor is clipped to ``[-1, 1]``; beyond ``N(N-1) delta > 2``
    the formula has left its regime anyway.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    eta = [(-1.0) ** (N - k) for k in range(1, N + 1)]
    eta[0] *= min(1.0, max(-1.0, 1.0 - N * (N - 1) * delta))
    return ContrastVector(tuple(eta))


def verify_only_trivial(structure: LayerStructure, trials: int = 1000, seed: int = 0, threshold: float = 1e-10) -> dict:
    """With the core contrast at zero, check that no nonzero ``eta'`` makes
    ``M_1..M_N`` vanish on proportional radii.

    Besides random sampling, the peeling argument is checked directly: for
    ``eta'`` whose first ``i`` entries are zero, ``xi_{N-i}(eta') = eta_{i+1}``.
    """
    growth_factor(structure)
    N = structure.n_coatings
    rng = np.random.default_rng(seed)
    counterexamples = []
    smallest = math.inf
    for _ in range(trials):
        eta_prime = rng.uniform(-1.0, 1.0, N)
        eta = np.append(eta_prime, 0.0)
        try:
            res = max(abs(normalized_cgpt(structure, eta, n)) for n in range(1, N + 1))
        except CgptError:
            continue
        smallest = min(smallest, res)
        if res <= threshold:
            counterexamples.append([float(v) for v in eta_prime])
    chain_ok = True
    for i in range(N):
        eta_prime = rng.uniform(-1.0, 1.0, N)
        eta_prime[:i] = 0.0
        xi = xi_aggregates(eta_prime)
        chain_ok &= abs(xi[N - i - 1] - eta_prime[i]) <= 1e-14
    return {
        "trials": trials,
        "min_residual": smallest,
        "threshold": threshold,
        "counterexamples": counterexamples,
        "peeling_identity": bool(chain_ok),
        "passed": not counterexamples and bool(chain_ok),
    }
