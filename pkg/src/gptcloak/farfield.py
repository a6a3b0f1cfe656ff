"""Physical verification of layered designs: layer-by-layer potentials,
transmission residuals and far-field decay rates.

Mode ``n`` of the potential is ``(a_k r^n + b_k r^{-n}) cos(n theta)`` in layer
``k`` (2D) or ``(a_k r^n + b_k r^{-n-1}) P_n(cos theta)`` (3D, zonal harmonic),
with the background field ``H = r^n cos(n theta)`` (resp. ``r^n P_n``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from gptcloak.cgpt_core import FieldCoefficients, direct_solve
from gptcloak.structure import LayerStructure, check_contrasts

EXACT_NEUTRAL_FLOOR = 1e-300
DEFAULT_SAMPLES = 13


def _angular(dimension: int, n: int, cos_theta: float) -> float:
    if dimension == 2:
        return math.cos(n * math.acos(max(-1.0, min(1.0, cos_theta))))
    return float(legendre.legval(cos_theta, [0.0] * n + [1.0]))


def _polar(point: Sequence[float], dimension: int) -> tuple[float, float]:
    """Radius and ``cos(theta)`` of a point (``theta`` from the x-axis in 2D, z-axis in 3D)."""
    p = np.asarray(point, dtype=float)
    if p.shape != (dimension,):
        raise ValueError(f"expected a {dimension}-D point, got shape {p.shape}")
    r = float(np.linalg.norm(p))
    if r == 0.0:
        return 0.0, 1.0
    axis = p[0] if dimension == 2 else p[2]
    return r, float(axis / r)


def layer_index(structure: LayerStructure, r: float) -> int:
    """Layer containing radius ``r``; a point on ``r_k`` is assigned to the exterior layer ``k-1``."""
    return int(np.sum(structure.radii_array() > r))


def _radial(coeffs: FieldCoefficients, k: int, r: float) -> tuple[float, float]:
    """Radial factor of layer ``k`` and its ``r``-derivative."""
    n = coeffs.mode
    q = n if coeffs.dimension == 2 else n + 1  # decaying power
    a, b = coeffs.a[k], coeffs.b[k]
    value = a * r**n
    deriv = n * a * r ** (n - 1) if n else 0.0
    if b != 0.0:
        value += b * r**-q
        deriv -= q * b * r ** (-q - 1)
    return float(value), float(deriv)


def evaluate_potential(
    structure: LayerStructure, eta, n: int, point: Sequence[float], coeffs: FieldCoefficients | None = None
) -> float:
    """Mode-``n`` potential at ``point``, taking the coefficients of the layer the point lies in."""
    coeffs = coeffs or direct_solve(structure, eta, n)
    r, c = _polar(point, structure.dimension)
    value, _ = _radial(coeffs, layer_index(structure, r), r)
    return value * _angular(structure.dimension, n, c)


@dataclass(frozen=True)
class InterfaceResidual:
    k: int
    radius: float
    continuity: float  # |u+ - u-| / local magnitude
    flux: float  # |(1 - eta_k) u_r+ - (1 + eta_k) u_r-| / local magnitude
    outer_derivative: float  # |u_r+| / local magnitude; the Neumann residual at an insulating interface


def transmission_residual(
    structure: LayerStructure, eta, n: int, coeffs: FieldCoefficients | None = None
) -> list[InterfaceResidual]:
    """Continuity and flux mismatch of the radial factors at every interface.

    Flux is compared as ``sigma_{k-1} u_r|+`` against ``sigma_k u_r|-`` after
    division by ``sigma_{k-1} + sigma_k``, which keeps insulating and perfectly
    conducting interfaces finite. Each residual is normalized by the sum of the
    absolute terms entering it.
    """
    eta = check_contrasts(structure, eta)
    coeffs = coeffs or direct_solve(structure, eta, n)
    n_ = coeffs.mode
    q = n_ if structure.dimension == 2 else n_ + 1
    out = []
    for k, rk in enumerate(structure.radii, start=1):
        u_out, du_out = _radial(coeffs, k - 1, rk)
        u_in, du_in = _radial(coeffs, k, rk)
        # magnitudes of the individual terms on both sides
        mag_u = sum(abs(coeffs.a[j]) * rk**n_ + abs(coeffs.b[j]) * rk**-q for j in (k - 1, k))
        mag_du = sum(n_ * abs(coeffs.a[j]) * rk ** (n_ - 1) + q * abs(coeffs.b[j]) * rk ** (-q - 1) for j in (k - 1, k))
        wo, wi = 1.0 - eta[k - 1], 1.0 + eta[k - 1]
        flux_scale = max(wo, wi) * mag_du
        out.append(
            InterfaceResidual(
                k=k,
                radius=float(rk),
                continuity=float(abs(u_out - u_in) / mag_u) if mag_u else 0.0,
                flux=float(abs(wo * du_out - wi * du_in) / flux_scale) if flux_scale else 0.0,
                outer_derivative=float(abs(du_out) / mag_du) if mag_du else 0.0,
            )
        )
    return out


@dataclass
class DecayReport:
    radii: list[float]
    values: list[float]  # |u - H| at the sample points
    slope: float | None  # fitted d log|u - H| / d log R; None when exactly neutral
    target: float  # -(N+1) in 2D, -(N+2) in 3D
    mode_coefficients: list[float] = field(default_factory=list)  # b_0^(n), n = 1..K
    leading_mode: int | None = None  # lowest n with |b_0^(n)| above the vanishing threshold
    exact_neutral: bool = False

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("sample radii must be strictly increasing")

    @property
    def passed(self) -> bool:
        return self.exact_neutral or (self.slope is not None and abs(self.slope - self.target) <= 0.1)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "target": self.target,
            "passed": self.passed,
            "exact_neutral": self.exact_neutral,
            "leading_mode": self.leading_mode,
            "mode_coefficients": list(self.mode_coefficients),
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["R", "abs_u_minus_H"])
        for R, v in zip(self.radii, self.values):
            writer.writerow([repr(float(R)), repr(float(v))])
        return buf.getvalue()


def mode_coefficients(structure: LayerStructure, eta, K: int) -> np.ndarray:
    """Exterior coefficients ``b_0^(n)``, ``n = 1..K``, from the direct transmission solve."""
    return np.array([direct_solve(structure, eta, n).b0 for n in range(1, K + 1)])


def decay_exponent(
    structure: LayerStructure,
    eta,
    K: int | None = None,
    radii: Sequence[float] | None = None,
    theta: float = 0.0,
    vanish_rtol: float = 1e-9,
) -> DecayReport:
    """Fit the decay rate of ``u - H`` for the probe ``H = sum_{n=1..K} r^n (angular)_n``.

    Outside the inclusion ``u - H`` equals ``sum_n b_0^(n) r^{-q}`` times the
    angular factors, which is summed directly: subtracting ``H`` from a sampled
    ``u`` would cancel away every significant digit of a good design. Samples
    default to ``R`` log-spaced over ``[10 r_1, 1000 r_1]``.
    """
    eta = check_contrasts(structure, eta)
    N = structure.n_coatings
    K = N + 1 if K is None else int(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    r1 = structure.r_outer
    R = np.geomspace(10.0 * r1, 1000.0 * r1, DEFAULT_SAMPLES) if radii is None else np.asarray(radii, dtype=float)
    if np.any(R <= r1):
        raise ValueError("sample radii must lie outside the inclusion")
    b0 = mode_coefficients(structure, eta, K)
    dim = structure.dimension
    c = math.cos(theta)
    scaled = np.array([abs(b) / r1 ** (2 * n if dim == 2 else 2 * n + 1) for n, b in enumerate(b0, start=1)])
    above = np.nonzero(scaled > vanish_rtol)[0]
    leading = int(above[0]) + 1 if above.size else None
    values = np.zeros(R.size)
    for n, b in enumerate(b0, start=1):
        q = n if dim == 2 else n + 1
        values += b * R**-q * _angular(dim, n, c)
    values = np.abs(values)
    target = -(N + 1.0) if dim == 2 else -(N + 2.0)
    if np.all(values < EXACT_NEUTRAL_FLOOR):
        return DecayReport(R.tolist(), values.tolist(), None, target, b0.tolist(), leading, exact_neutral=True)
    keep = values >= EXACT_NEUTRAL_FLOOR
    slope = float(np.polyfit(np.log(R[keep]), np.log(values[keep]), 1)[0]) if keep.sum() >= 2 else None
    return DecayReport(R.tolist(), values.tolist(), slope, target, b0.tolist(), leading)
