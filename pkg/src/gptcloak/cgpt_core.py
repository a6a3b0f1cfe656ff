"""Contracted GPTs ``M_n`` (2D) and ``M~_n`` (3D) of concentric structures.

Four independent evaluation routes are provided:

``transfer``
    Ordered product of per-interface 2x2 factors; O(N) per mode and regular on
    the whole closed box ``[-1, 1]^{N+1}``. This is the production route.
``polynomial``
    Explicit subset expansion of the two transfer-product entries (2D only,
    exponential in the number of layers, for testing).
``matrix``
    Dense ``(N+1) x (N+1)`` formula ``s * c_n * e^T Y P^{-1} e`` built from the
    single-layer-potential system; singular wherever some ``eta_k = 0``.
``direct``
    Global linear solve of the continuity and flux conditions for the
    harmonic-mode coefficients ``(a_k, b_k)``; the ground truth for signs.

Conventions: in 2D the mode-``n`` potential is ``a_k r^n + b_k r^{-n}`` in
layer ``k``, and ``M_n = -2 pi n b_0``. In 3D it is ``a_k r^n + b_k r^{-n-1}``
and ``M~_n = (2n+1) b_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gptcloak.structure import LayerStructure, check_contrasts

ROUTES = ("matrix", "polynomial", "transfer", "direct")

# Global signs of the matrix formulas relative to the direct solve. Both are
# re-derived by ``calibrate_matrix_sign`` and checked in the test-suite.
MATRIX_SIGN_2D = 1.0
MATRIX_SIGN_3D = -1.0

POLYNOMIAL_MAX_LAYERS = 20
RESONANCE_RTOL = 1e-14


class CgptError(ArithmeticError):
    """A CGPT route could not be evaluated at the given parameters."""


class ResonanceError(CgptError):
    """The transfer denominator ``p22`` vanishes (near-resonant structure)."""


@dataclass(frozen=True)
class CgptVector:
    orders: tuple[int, ...]
    values: tuple[float, ...]
    route: str
    dimension: int
    scales: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.orders) != len(self.values):
            raise ValueError("orders and values differ in length")
        if not all(math.isfinite(v) for v in self.values):
            raise CgptError(f"non-finite CGPT values {self.values}")

    def normalized(self) -> np.ndarray:
        """Values divided by their natural scale (see ``LayerStructure.cgpt_scale``)."""
        return np.asarray(self.values) / np.asarray(self.scales)


@dataclass(frozen=True, eq=False)
class FieldCoefficients:
    """Per-layer coefficients of one harmonic mode; index ``k = 0..N+1``."""

    mode: int
    dimension: int
    a: np.ndarray
    b: np.ndarray

    @property
    def b0(self) -> float:
        return float(self.b[0])

    def cgpt(self) -> float:
        if self.dimension == 2:
            return -2.0 * math.pi * self.mode * self.b0
        return (2 * self.mode + 1) * self.b0


@dataclass(frozen=True, eq=False)
class Jacobian:
    """``entries[i, k] = dM_{orders[i]} / d eta_{k+1}``."""

    orders: tuple[int, ...]
    entries: np.ndarray
    method: str

    def normalized(self, structure: LayerStructure) -> np.ndarray:
        scales = np.array([structure.cgpt_scale(n) for n in self.orders])
        return self.entries / scales[:, None]


def _check_mode(n: int) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"mode index must be a positive integer, got {n!r}")
    return int(n)


def _exponent(structure: LayerStructure, n: int) -> int:
    return 2 * n if structure.dimension == 2 else 2 * n + 1


# ---------------------------------------------------------------------------
# transfer route


def _interface_factors(structure: LayerStructure, eta: np.ndarray, n: int):
    """Per-interface factors ``T_k`` and ``dT_k/d eta_k`` in radii scaled by ``r_1``.

    The row vector ``e_2^T T_{N+1} ... T_1`` then holds the normalized
    ``(p21, p22)`` pair, with ``M_n / scale_n = +p21/p22`` (2D) or ``-p21/p22`` (3D).
    """
    rho = structure.radii_array() / structure.r_outer
    x = rho ** _exponent(structure, n)
    if np.any(x == 0.0):
        raise CgptError(f"radius ratio underflows at mode {n}")
    L = eta.size
    T = np.empty((L, 2, 2))
    dT = np.empty((L, 2, 2))
    if structure.dimension == 2:
        T[:, 0, 0] = 1.0
        T[:, 1, 1] = 1.0
        T[:, 0, 1] = eta / x
        T[:, 1, 0] = eta * x
        dT[:, 0, 0] = 0.0
        dT[:, 1, 1] = 0.0
        dT[:, 0, 1] = 1.0 / x
        dT[:, 1, 0] = x
    else:
        c = 2 * n + 1
        T[:, 0, 0] = c + eta
        T[:, 1, 1] = c - eta
        T[:, 0, 1] = 2 * (n + 1) * eta / x
        T[:, 1, 0] = 2 * n * eta * x
        dT[:, 0, 0] = 1.0
        dT[:, 1, 1] = -1.0
        dT[:, 0, 1] = 2 * (n + 1) / x
        dT[:, 1, 0] = 2 * n * x
    return T, dT


def _transfer_row(T: np.ndarray) -> np.ndarray:
    v = np.array([0.0, 1.0])
    for k in range(T.shape[0] - 1, -1, -1):
        v = v @ T[k]
    return v


def _check_resonance(p22: float, T: np.ndarray, n: int) -> None:
    bound = _transfer_row(np.abs(T))[1]
    if abs(p22) <= RESONANCE_RTOL * bound:
        raise ResonanceError(f"p22 = {p22:.3e} vanishes relative to {bound:.3e} at mode {n}")


def transfer_pair(structure: LayerStructure, eta, n: int) -> tuple[float, float]:
    """Normalized ``(p21, p22)`` from the ordered transfer product (radii scaled by ``r_1``)."""
    n = _check_mode(n)
    eta = check_contrasts(structure, eta)
    T, _ = _interface_factors(structure, eta, n)
    p21, p22 = _transfer_row(T)
    _check_resonance(p22, T, n)
    return float(p21), float(p22)


def backward_error(structure: LayerStructure, eta, n: int) -> float:
    """``|p21| / sum |terms of p21|``: the relative size of ``p21`` against its own
    rounding floor. Stays meaningful where ``p22`` is tiny and ``M_n`` amplifies
    every perturbation of ``eta``."""
    n = _check_mode(n)
    eta = check_contrasts(structure, eta)
    T, _ = _interface_factors(structure, eta, n)
    p21 = _transfer_row(T)[0]
    bound = _transfer_row(np.abs(T))[0]
    return float(abs(p21) / bound) if bound > 0 else 0.0


def normalized_cgpt(structure: LayerStructure, eta, n: int) -> float:
    """``M_n / scale_n`` via the transfer route."""
    p21, p22 = transfer_pair(structure, eta, n)
    ratio = p21 / p22
    return ratio if structure.dimension == 2 else -ratio


def cgpt_2d_transfer(structure: LayerStructure, eta, n: int) -> float:
    _require_dim(structure, 2)
    return normalized_cgpt(structure, eta, n) * structure.cgpt_scale(n)


def cgpt_3d_transfer(structure: LayerStructure, eta, n: int) -> float:
    _require_dim(structure, 3)
    return normalized_cgpt(structure, eta, n) * structure.cgpt_scale(n)


def normalized_cgpt_and_gradient(structure: LayerStructure, eta, n: int) -> tuple[float, np.ndarray]:
    """``M_n / scale_n`` and its gradient in ``eta``, by forward differentiation of the product."""
    n = _check_mode(n)
    eta = check_contrasts(structure, eta)
    T, dT = _interface_factors(structure, eta, n)
    L = eta.size
    v = np.array([0.0, 1.0])
    D = np.zeros((L, 2))
    for k in range(L - 1, -1, -1):
        D = D @ T[k]
        D[k] = v @ dT[k]
        v = v @ T[k]
    p21, p22 = v
    _check_resonance(p22, T, n)
    value = p21 / p22
    grad = (D[:, 0] * p22 - p21 * D[:, 1]) / p22**2
    if structure.dimension == 3:
        value, grad = -value, -grad
    return float(value), grad


def jacobian_transfer(structure: LayerStructure, eta, n_list: Iterable[int]) -> Jacobian:
    orders = tuple(_check_mode(n) for n in n_list)
    rows = [normalized_cgpt_and_gradient(structure, eta, n)[1] * structure.cgpt_scale(n) for n in orders]
    return Jacobian(orders, np.array(rows).reshape(len(orders), structure.n_layers), "transfer-diff")


# ---------------------------------------------------------------------------
# polynomial route (2D)


def polynomial_pair(structure: LayerStructure, eta, n: int) -> tuple[float, float, float]:
    """``(p21, p22, 1 + sum |even terms|)`` by explicit subset enumeration, in true radii.

    For a sorted subset ``i_1 < ... < i_m`` the product carries
    ``eta_{i_s} r_{i_s}^{+-2n}``; odd subsets (``p21``) start with ``+2n``, even
    subsets (``p22``) with ``-2n``, matching the ordered product
    ``T_{N+1} ... T_1``.
    """
    _require_dim(structure, 2)
    n = _check_mode(n)
    eta = check_contrasts(structure, eta)
    L = eta.size
    if L > POLYNOMIAL_MAX_LAYERS:
        raise CgptError(f"polynomial route limited to {POLYNOMIAL_MAX_LAYERS} layers, got {L}")
    x = structure.radii_array() ** (2 * n)
    p21 = 0.0
    p22 = 1.0
    p22_abs = 1.0
    idx = np.arange(L)
    chunk = 1 << 14
    for start in range(1, 1 << L, chunk):
        masks = np.arange(start, min(start + chunk, 1 << L), dtype=np.int64)
        bits = ((masks[:, None] >> idx) & 1).astype(bool)
        size = bits.sum(axis=1)
        pos = np.cumsum(bits, axis=1)  # 1-based position of each member
        odd = (size % 2 == 1)[:, None]
        plus = np.where(odd, pos % 2 == 1, pos % 2 == 0)
        factor = np.where(plus, eta * x, eta / x)
        terms = np.prod(np.where(bits, factor, 1.0), axis=1)
        is_odd = size % 2 == 1
        p21 += terms[is_odd].sum()
        p22 += terms[~is_odd].sum()
        p22_abs += np.abs(terms[~is_odd]).sum()
    return float(p21), float(p22), float(p22_abs)


def cgpt_2d_polynomial(structure: LayerStructure, eta, n: int) -> float:
    p21, p22, bound = polynomial_pair(structure, eta, n)
    if abs(p22) <= RESONANCE_RTOL * bound:
        raise ResonanceError(f"p22 = {p22:.3e} vanishes relative to {bound:.3e} at mode {n}")
    return 2.0 * math.pi * n * p21 / p22


# ---------------------------------------------------------------------------
# matrix route


def _nonzero_contrasts(structure: LayerStructure, eta) -> np.ndarray:
    eta = check_contrasts(structure, eta)
    if np.any(eta == 0.0):
        raise CgptError("matrix route needs every eta_k != 0; use the transfer route")
    return eta


def assemble_P_2d(structure: LayerStructure, eta, n: int) -> np.ndarray:
    """Diagonal ``1/eta_k``, upper ``(r_j/r_i)^{2n}`` (j > i), lower ``-1``."""
    _require_dim(structure, 2)
    n = _check_mode(n)
    eta = _nonzero_contrasts(structure, eta)
    r = structure.radii_array()
    ratio = (r[None, :] / r[:, None]) ** (2 * n)
    P = np.where(np.triu(np.ones_like(ratio, dtype=bool), 1), ratio, -1.0)
    np.fill_diagonal(P, 1.0 / eta)
    return P


def assemble_P_3d(structure: LayerStructure, eta, n: int) -> np.ndarray:
    """Diagonal ``(2n+1)/(2n eta_k) - 1/(2n)``, upper ``(r_j/r_i)^{2n+1}``, lower ``-(n+1)/n``.

    Obtained from the single-layer-potential system on spheres (where the
    Neumann-Poincare operator acts on degree-``n`` harmonics as
    ``1/(2(2n+1))``) after the similarity ``Y^{-1} Q^T Y``.
    """
    _require_dim(structure, 3)
    n = _check_mode(n)
    eta = _nonzero_contrasts(structure, eta)
    r = structure.radii_array()
    ratio = (r[None, :] / r[:, None]) ** (2 * n + 1)
    P = np.where(np.triu(np.ones_like(ratio, dtype=bool), 1), ratio, -(n + 1) / n)
    np.fill_diagonal(P, (2 * n + 1) / (2 * n * eta) - 1.0 / (2 * n))
    return P


def _upsilon(structure: LayerStructure, n: int) -> np.ndarray:
    return structure.radii_array() ** _exponent(structure, n)


def _matrix_prefactor(structure: LayerStructure, n: int, sign: float | None) -> float:
    if structure.dimension == 2:
        s = MATRIX_SIGN_2D if sign is None else sign
        return s * 2.0 * math.pi * n
    s = MATRIX_SIGN_3D if sign is None else sign
    return s * (2 * n + 1)


def _solve_P(P: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        sol = np.linalg.solve(P, rhs)
    except np.linalg.LinAlgError as exc:
        raise CgptError("singular P matrix") from exc
    if not np.all(np.isfinite(sol)):
        raise CgptError("singular P matrix")
    return sol


def _assemble(structure: LayerStructure, eta, n: int) -> np.ndarray:
    if structure.dimension == 2:
        return assemble_P_2d(structure, eta, n)
    return assemble_P_3d(structure, eta, n)


def cgpt_matrix(structure: LayerStructure, eta, n: int, *, sign: float | None = None) -> float:
    """``s * c_n * e^T Y P^{-1} e`` with ``c_n = 2 pi n`` (2D) or ``2n+1`` (3D).

    ``sign`` overrides the calibrated global sign (used for calibration itself).
    Interfaces with ``eta_k = 0`` are invisible and are dropped before assembly.
    """
    eta = check_contrasts(structure, eta)
    keep = eta != 0.0
    if not keep.any():
        return 0.0
    if not keep.all():
        structure = LayerStructure(structure.dimension, tuple(np.asarray(structure.radii)[keep]), structure.sigma_background)
        eta = eta[keep]
    P = _assemble(structure, eta, n)
    e = np.ones(structure.n_layers)
    return _matrix_prefactor(structure, n, sign) * float(_upsilon(structure, n) @ _solve_P(P, e))


def cgpt_2d_matrix(structure: LayerStructure, eta, n: int) -> float:
    _require_dim(structure, 2)
    return cgpt_matrix(structure, eta, n)


def cgpt_3d_matrix(structure: LayerStructure, eta, n: int) -> float:
    _require_dim(structure, 3)
    return cgpt_matrix(structure, eta, n)


def jacobian_matrix_analytic(structure: LayerStructure, eta, n_list: Iterable[int]) -> Jacobian:
    """``dM_n/d eta_i`` from ``dP/d eta_i = -w E_ii / eta_i^2`` (``w = 1`` in 2D,
    ``(2n+1)/(2n)`` in 3D)."""
    eta = _nonzero_contrasts(structure, eta)
    orders = tuple(_check_mode(n) for n in n_list)
    e = np.ones(structure.n_layers)
    rows = []
    for n in orders:
        P = _assemble(structure, eta, n)
        right = _solve_P(P, e)  # P^{-1} e
        left = _solve_P(P.T, _upsilon(structure, n))  # (e^T Y P^{-1})^T
        w = 1.0 if structure.dimension == 2 else (2 * n + 1) / (2 * n)
        rows.append(_matrix_prefactor(structure, n, None) * w * left * right / eta**2)
    return Jacobian(orders, np.array(rows), "matrix-analytic")


def calibrate_matrix_sign(dimension: int, radius: float = 1.3, eta: float = 0.4, n: int = 1) -> float:
    """Sign making the matrix route agree with the direct solve on one layer."""
    s = LayerStructure(dimension, (radius,))
    unsigned = cgpt_matrix(s, [eta], n, sign=1.0)
    return math.copysign(1.0, unsigned * direct_solve(s, [eta], n).cgpt())


# ---------------------------------------------------------------------------
# direct transmission solve


def direct_solve(structure: LayerStructure, eta, n: int) -> FieldCoefficients:
    """Solve continuity and flux conditions at every ``r_k`` with ``a_0 = 1``, ``b_{N+1} = 0``.

    Unknowns are ``a_1..a_{N+1}`` and ``beta_0..beta_N`` with
    ``b_k = beta_k r_{k+1}^p`` (``p = 2n`` or ``2n+1``), which keeps every
    coefficient of the assembled system bounded by one. Flux conditions
    ``sigma_{k-1} du/dr|+ = sigma_k du/dr|-`` are divided by
    ``sigma_{k-1} + sigma_k``, i.e. written as
    ``(1 - eta_k) du/dr|+ = (1 + eta_k) du/dr|-``.
    """
    n = _check_mode(n)
    eta = check_contrasts(structure, eta)
    L = structure.n_layers
    r = structure.radii_array()
    p = _exponent(structure, n)
    rho = np.append((r[1:] / r[:-1]) ** p, 0.0)  # (r_{k+1}/r_k)^p, zero at the core
    if structure.dimension == 2:
        da, db = float(n), float(n)
    else:
        da, db = float(n), float(n + 1)
    A = np.zeros((2 * L, 2 * L))
    rhs = np.zeros(2 * L)

    def col_a(k: int) -> int:  # a_k, k = 1..L
        return k - 1

    def col_beta(k: int) -> int:  # beta_k, k = 0..L-1
        return L + k

    for k in range(1, L + 1):
        cont, flux = 2 * (k - 1), 2 * (k - 1) + 1
        wo, wi = 1.0 - eta[k - 1], 1.0 + eta[k - 1]
        # outer side: layer k-1
        if k == 1:
            rhs[cont] -= 1.0
            rhs[flux] -= wo * da
        else:
            A[cont, col_a(k - 1)] += 1.0
            A[flux, col_a(k - 1)] += wo * da
        A[cont, col_beta(k - 1)] += 1.0
        A[flux, col_beta(k - 1)] -= wo * db
        # inner side: layer k
        A[cont, col_a(k)] -= 1.0
        A[flux, col_a(k)] -= wi * da
        if k < L:
            A[cont, col_beta(k)] -= rho[k - 1]
            A[flux, col_beta(k)] += wi * db * rho[k - 1]
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise CgptError("singular transmission system") from exc
    if not np.all(np.isfinite(x)) or np.linalg.cond(A) > 1e14:
        raise CgptError("singular transmission system")
    a = np.concatenate(([1.0], x[:L]))
    b = np.concatenate((x[L:] * r**p, [0.0]))
    return FieldCoefficients(n, structure.dimension, a, b)


def direct_solve_2d(structure: LayerStructure, eta, n: int) -> FieldCoefficients:
    _require_dim(structure, 2)
    return direct_solve(structure, eta, n)


def direct_solve_3d(structure: LayerStructure, eta, n: int) -> FieldCoefficients:
    _require_dim(structure, 3)
    return direct_solve(structure, eta, n)


# ---------------------------------------------------------------------------
# dispatch and finite differences


def _require_dim(structure: LayerStructure, dim: int) -> None:
    if structure.dimension != dim:
        raise ValueError(f"expected a {dim}D structure, got {structure.dimension}D")


def cgpt(structure: LayerStructure, eta, n: int, route: str = "transfer") -> float:
    """Order-``n`` CGPT by the named route."""
    if route == "transfer":
        return normalized_cgpt(structure, eta, n) * structure.cgpt_scale(_check_mode(n))
    if route == "matrix":
        return cgpt_matrix(structure, eta, n)
    if route == "direct":
        return direct_solve(structure, eta, n).cgpt()
    if route == "polynomial":
        if structure.dimension != 2:
            raise CgptError("polynomial route is only available in 2D")
        return cgpt_2d_polynomial(structure, eta, n)
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


def cgpt_vector(structure: LayerStructure, eta, orders: int | Sequence[int], route: str = "transfer") -> CgptVector:
    """CGPTs for ``orders`` (an int ``K`` means ``1..K``)."""
    if isinstance(orders, (int, np.integer)):
        orders = range(1, int(orders) + 1)
    orders = tuple(_check_mode(n) for n in orders)
    values = tuple(cgpt(structure, eta, n, route) for n in orders)
    scales = tuple(structure.cgpt_scale(n) for n in orders)
    return CgptVector(orders, values, route, structure.dimension, scales)


def jacobian_fd(
    structure: LayerStructure,
    eta,
    n_list: Iterable[int],
    step: float = 1e-6,
    route: str = "transfer",
) -> Jacobian:
    """Central differences; second-order one-sided where ``eta_k +- step`` leaves ``[-1, 1]``."""
    eta = check_contrasts(structure, eta)
    orders = tuple(_check_mode(n) for n in n_list)
    J = np.empty((len(orders), eta.size))

    def f(x: np.ndarray) -> np.ndarray:
        return np.array([cgpt(structure, x, n, route) for n in orders])

    for k in range(eta.size):
        def shifted(h: float) -> np.ndarray:
            x = eta.copy()
            x[k] += h
            return f(x)

        if eta[k] - step >= -1.0 and eta[k] + step <= 1.0:
            J[:, k] = (shifted(step) - shifted(-step)) / (2 * step)
        elif eta[k] + 2 * step <= 1.0:
            J[:, k] = (-3 * f(eta) + 4 * shifted(step) - shifted(2 * step)) / (2 * step)
        else:
            J[:, k] = (3 * f(eta) - 4 * shifted(-step) + shifted(-2 * step)) / (2 * step)
    return Jacobian(orders, J, "finite-difference")
