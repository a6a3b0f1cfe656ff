"""Geometry and material model of concentric layered inclusions.

Layer ``k`` (1-based, ``k = 1..N+1``) is bounded outside by the circle/sphere
of radius ``r_k``; layer ``N+1`` is the core and layer ``0`` the background.
Materials are described either by conductivities ``sigma_0..sigma_{N+1}`` or
by interface contrasts ``eta_k = (sigma_k - sigma_{k-1}) / (sigma_k + sigma_{k-1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np


class StructureError(ValueError):
    """Invalid geometry, material data or structure configuration."""


def _as_float_tuple(values: Sequence[float], name: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except TypeError as exc:
        raise StructureError(f"{name} must be a sequence of numbers") from exc
    if not all(math.isfinite(v) for v in out):
        raise StructureError(f"{name} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class LayerStructure:
    """Radii ``r_1 > ... > r_{N+1} > 0`` of an (N+1)-layer concentric inclusion."""

    dimension: int
    radii: tuple[float, ...]
    sigma_background: float = 1.0

    def __post_init__(self) -> None:
        if self.dimension not in (2, 3):
            raise StructureError(f"dimension must be 2 or 3, got {self.dimension!r}")
        radii = _as_float_tuple(self.radii, "radii")
        if not radii:
            raise StructureError("at least one radius (the core) is required")
        if any(r <= 0.0 for r in radii):
            raise StructureError(f"radii must be positive, got {radii}")
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise StructureError(f"radii must be strictly decreasing, got {radii}")
        sigma0 = float(self.sigma_background)
        if not (math.isfinite(sigma0) and sigma0 > 0.0):
            raise StructureError(f"sigma_background must be positive, got {sigma0}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "sigma_background", sigma0)

    @property
    def n_layers(self) -> int:
        """Number of layers including the core, ``N + 1``."""
        return len(self.radii)

    @property
    def n_coatings(self) -> int:
        return len(self.radii) - 1

    @property
    def r_outer(self) -> float:
        return self.radii[0]

    def radii_array(self) -> np.ndarray:
        return np.asarray(self.radii, dtype=float)

    def cgpt_scale(self, n: int) -> float:
        """Natural magnitude of the order-``n`` CGPT: ``2 pi n r_1^{2n}`` in 2D,
        ``(2n+1) r_1^{2n+1}`` in 3D."""
        if self.dimension == 2:
            return 2.0 * math.pi * n * self.r_outer ** (2 * n)
        return (2 * n + 1) * self.r_outer ** (2 * n + 1)

    def without_layer(self, k: int) -> "LayerStructure":
        """Structure with the interface ``r_k`` (1-based) removed."""
        if not 1 <= k <= self.n_layers or self.n_layers == 1:
            raise StructureError(f"cannot remove layer {k} from {self.n_layers} layers")
        radii = self.radii[: k - 1] + self.radii[k:]
        return LayerStructure(self.dimension, radii, self.sigma_background)


@dataclass(frozen=True)
class ContrastVector:
    """Interface contrasts ``eta_1..eta_{N+1}``, each in ``[-1, 1]``.

    ``eta = -1`` marks an insulating interface (everything inside has zero
    conductivity); ``eta = +1`` a perfectly conducting one.
    """

    eta: tuple[float, ...]

    def __post_init__(self) -> None:
        eta = _as_float_tuple(self.eta, "eta")
        bad = [e for e in eta if not -1.0 <= e <= 1.0]
        if bad:
            raise StructureError(f"contrasts must lie in [-1, 1], got {bad}")
        object.__setattr__(self, "eta", eta)

    def __len__(self) -> int:
        return len(self.eta)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.asarray(self.eta, dtype=dtype or float)

    @property
    def lam(self) -> tuple[float, ...]:
        """``lambda_k = 1 / (2 eta_k)``; infinite where ``eta_k = 0``."""
        return tuple(math.copysign(math.inf, e) if e == 0 else 0.5 / e for e in self.eta)

    def sigma(self, sigma0: float = 1.0) -> list[float]:
        return sigma_from_eta(self, sigma0)


def as_eta_array(eta: ContrastVector | Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(eta, dtype=float)
    if arr.ndim != 1:
        raise StructureError(f"contrast vector must be 1-D, got shape {arr.shape}")
    return arr


def check_contrasts(structure: LayerStructure, eta) -> np.ndarray:
    """Validate a contrast vector against a structure and return it as an array."""
    arr = as_eta_array(eta)
    if arr.size != structure.n_layers:
        raise StructureError(
            f"expected {structure.n_layers} contrasts for {structure.n_layers} layers, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > 1.0):
        raise StructureError(f"contrasts must lie in [-1, 1], got {arr}")
    return arr


def eta_from_sigma(sigmas: Sequence[float]) -> ContrastVector:
    """Contrasts from conductivities ``sigma_0, sigma_1, ..., sigma_{N+1}``."""
    s = _as_float_tuple(sigmas, "sigmas")
    if len(s) < 2:
        raise StructureError("need the background and at least one layer conductivity")
    if s[0] <= 0.0:
        raise StructureError(f"background conductivity must be positive, got {s[0]}")
    if any(v < 0.0 for v in s):
        raise StructureError(f"conductivities must be nonnegative, got {s}")
    eta = []
    for k in range(1, len(s)):
        total = s[k] + s[k - 1]
        if total == 0.0:
            raise StructureError(f"contrast undefined: sigma_{k - 1} = sigma_{k} = 0")
        eta.append((s[k] - s[k - 1]) / total)
    return ContrastVector(tuple(eta))


def sigma_from_eta(eta, sigma0: float = 1.0) -> list[float]:
    """Conductivities ``[sigma_0, ..., sigma_{N+1}]`` from contrasts.

    ``sigma_k = sigma_0 * prod_{i<=k} (1 + eta_i) / (1 - eta_i)``; an ``eta_i = -1``
    forces every conductivity inside interface ``i`` to zero.
    """
    arr = as_eta_array(eta)
    if sigma0 <= 0.0:
        raise StructureError(f"background conductivity must be positive, got {sigma0}")
    if np.any(arr >= 1.0):
        raise StructureError("eta = 1 gives an infinite conductivity")
    if np.any(arr < -1.0):
        raise StructureError(f"contrasts must lie in [-1, 1], got {arr}")
    out = [float(sigma0)]
    for e in arr:
        out.append(out[-1] * (1.0 + e) / (1.0 - e))
    return out


def eta_core_for_sigma(eta_prime, target_sigma: float, sigma0: float = 1.0) -> float:
    """Core contrast ``eta_{N+1}`` giving core conductivity ``target_sigma``.

    ``eta_prime`` are the coating contrasts ``eta_1..eta_N``.
    """
    ep = as_eta_array(eta_prime)
    if target_sigma < 0.0:
        raise StructureError(f"target conductivity must be nonnegative, got {target_sigma}")
    if np.any(np.abs(ep) >= 1.0):
        raise StructureError("coating contrasts must lie strictly inside (-1, 1)")
    t = target_sigma / sigma0
    a = float(np.prod(1.0 - ep))
    b = float(np.prod(1.0 + ep))
    den = t * a + b
    if den == 0.0:
        raise StructureError("core contrast undefined (zero denominator)")
    return (t * a - b) / den


def eta_core_gradient(eta_prime, target_sigma: float, sigma0: float = 1.0) -> np.ndarray:
    """Gradient of :func:`eta_core_for_sigma` with respect to ``eta_prime``."""
    ep = as_eta_array(eta_prime)
    t = target_sigma / sigma0
    a = float(np.prod(1.0 - ep))
    b = float(np.prod(1.0 + ep))
    den = t * a + b
    if den == 0.0:
        raise StructureError("core contrast undefined (zero denominator)")
    return -4.0 * t * a * b / ((1.0 - ep**2) * den**2)


def equidistant_radii(r_outer: float, r_inner: float, n: int) -> tuple[float, ...]:
    """``n + 1`` equally spaced radii from ``r_outer`` down to ``r_inner``."""
    if not (r_inner > 0.0 and r_outer > r_inner):
        raise StructureError(f"need r_outer > r_inner > 0, got ({r_outer}, {r_inner})")
    if n < 1:
        raise StructureError(f"need at least one coating, got n = {n}")
    step = (r_outer - r_inner) / n
    return tuple(r_outer - i * step for i in range(n)) + (float(r_inner),)


def proportional_radii(r_inner: float, gamma: float, n: int) -> tuple[float, ...]:
    """Radii ``r_k = r_inner * gamma^{n+1-k}``, ``k = 1..n+1``."""
    if not r_inner > 0.0:
        raise StructureError(f"r_inner must be positive, got {r_inner}")
    if not gamma > 1.0:
        raise StructureError(f"growth factor must exceed 1, got {gamma}")
    if n < 0:
        raise StructureError(f"n must be nonnegative, got {n}")
    # successive multiplication keeps every ratio r_{k-1}/r_k within one rounding of gamma
    radii = [float(r_inner)]
    for _ in range(n):
        radii.append(radii[-1] * gamma)
    return tuple(reversed(radii))


_RADII_KEYS = ("radii", "equidistant", "proportional")


def structure_from_config(block: Mapping[str, Any]) -> LayerStructure:
    """Build a :class:`LayerStructure` from a parsed ``structure`` config block.

    Exactly one of ``radii``, ``equidistant: {r_outer, r_inner, n_layers}`` or
    ``proportional: {r_inner, gamma, n_layers}`` must be given; ``n_layers`` is
    the number of coatings ``N``.
    """
    if not isinstance(block, Mapping):
        raise StructureError("structure block must be a mapping")
    allowed = {"dimension", "sigma_background", *_RADII_KEYS}
    unknown = set(block) - allowed
    if unknown:
        raise StructureError(f"unknown structure keys: {sorted(unknown)}")
    given = [k for k in _RADII_KEYS if k in block]
    if len(given) != 1:
        raise StructureError(f"exactly one of {_RADII_KEYS} is required, got {given}")
    kind = given[0]
    params = block[kind]
    try:
        if kind == "radii":
            radii = tuple(params)
        elif kind == "equidistant":
            _check_keys(params, {"r_outer", "r_inner", "n_layers"}, kind)
            radii = equidistant_radii(float(params["r_outer"]), float(params["r_inner"]), int(params["n_layers"]))
        else:
            _check_keys(params, {"r_inner", "gamma", "n_layers"}, kind)
            radii = proportional_radii(float(params["r_inner"]), float(params["gamma"]), int(params["n_layers"]))
    except (TypeError, KeyError) as exc:
        raise StructureError(f"malformed {kind} block: {params!r}") from exc
    return LayerStructure(
        dimension=int(block.get("dimension", 2)),
        radii=radii,
        sigma_background=float(block.get("sigma_background", 1.0)),
    )


def _check_keys(params: Any, required: set[str], kind: str) -> None:
    if not isinstance(params, Mapping):
        raise StructureError(f"{kind} block must be a mapping")
    missing = required - set(params)
    extra = set(params) - required
    if missing or extra:
        raise StructureError(f"{kind} block: missing {sorted(missing)}, unknown {sorted(extra)}")
