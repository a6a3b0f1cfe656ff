"""Randomized property checks over the CGPT routes, the transmission solve and a
designed structure; the backbone of ``gptcloak verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gptcloak import cgpt_core
from gptcloak.cgpt_core import CgptError, calibrate_matrix_sign, cgpt, cgpt_matrix
from gptcloak.farfield import decay_exponent, transmission_residual
from gptcloak.solver import FixedCore, SolverConfig, solve_vanishing
from gptcloak.structure import LayerStructure, equidistant_radii


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tol: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_error": self.max_error,
            "tol": self.tol,
            "samples": self.samples,
        }


def random_structure(rng: np.random.Generator, dimension: int, max_coatings: int = 10) -> LayerStructure:
    """Random radii in ``(0.2, 2]``, strictly decreasing with a minimum relative gap."""
    L = int(rng.integers(1, max_coatings + 2))
    gaps = rng.uniform(0.05, 1.0, L)
    radii = np.cumsum(gaps[::-1])[::-1]
    radii = 0.2 + 1.8 * radii / radii[0]
    return LayerStructure(dimension, tuple(float(r) for r in radii))


def random_contrasts(rng: np.random.Generator, L: int, low: float = 0.01, high: float = 0.95) -> np.ndarray:
    """Contrasts uniform in ``[-high, -low] U [low, high]``."""
    return rng.choice([-1.0, 1.0], L) * rng.uniform(low, high, L)


def _result(name: str, errors: list[float], tol: float) -> CheckResult:
    worst = max(errors) if errors else 0.0
    return CheckResult(name, bool(np.isfinite(worst) and worst <= tol), float(worst), tol, len(errors))


def route_equivalence(rng, samples: int, dimension: int, matrix_sign: float | None = None, tol: float = 1e-10):
    """Max disagreement between routes, relative to ``scale_n``."""
    routes = ("transfer", "polynomial", "direct") if dimension == 2 else ("transfer", "direct")
    errors = []
    for _ in range(samples):
        s = random_structure(rng, dimension)
        eta = random_contrasts(rng, s.n_layers)
        n = int(rng.integers(1, 11))
        try:
            vals = [cgpt(s, eta, n, r) for r in routes]
            vals.append(cgpt_matrix(s, eta, n, sign=matrix_sign))
        except CgptError:
            errors.append(math.inf)
            continue
        errors.append((max(vals) - min(vals)) / s.cgpt_scale(n))
    return _result(f"route_equivalence_{dimension}d", errors, tol)


def oddness(rng, samples: int, tol: float = 1e-12) -> CheckResult:
    errors = []
    for _ in range(samples):
        s = random_structure(rng, 2)
        eta = random_contrasts(rng, s.n_layers)
        n = int(rng.integers(1, 11))
        errors.append(abs(cgpt(s, eta, n) + cgpt(s, -eta, n)) / s.cgpt_scale(n))
    return _result("oddness", errors, tol)


def decoupling(rng, samples: int, tol: float = 1e-12) -> CheckResult:
    """An insulating interface hides everything inside it."""
    errors = []
    for _ in range(samples):
        s = random_structure(rng, int(rng.integers(2, 4)))
        if s.n_layers < 2:
            continue
        eta = random_contrasts(rng, s.n_layers)
        p = int(rng.integers(0, s.n_layers - 1))
        eta[p] = -1.0
        other = eta.copy()
        other[p + 1 :] = random_contrasts(rng, s.n_layers - p - 1)
        n = int(rng.integers(1, 11))
        errors.append(abs(cgpt(s, eta, n) - cgpt(s, other, n)) / s.cgpt_scale(n))
    return _result("decoupling", errors, tol)


def transmission(rng, samples: int, tol: float = 1e-12) -> CheckResult:
    errors = []
    for _ in range(samples):
        s = random_structure(rng, int(rng.integers(2, 4)))
        eta = random_contrasts(rng, s.n_layers, high=0.99)
        n = int(rng.integers(1, 11))
        res = transmission_residual(s, eta, n)
        errors.append(max(max(r.continuity, r.flux) for r in res))
    return _result("transmission_residual", errors, tol)


def jacobian(rng, samples: int, tol: float = 1e-6) -> CheckResult:
    """Transfer-differentiated Jacobian against central differences, relative to the largest entry."""
    errors = []
    for _ in range(samples):
        s = random_structure(rng, int(rng.integers(2, 4)), max_coatings=6)
        eta = random_contrasts(rng, s.n_layers, high=0.9)
        orders = list(range(1, 5))
        exact = cgpt_core.jacobian_transfer(s, eta, orders).entries
        fd = cgpt_core.jacobian_fd(s, eta, orders).entries
        errors.append(float(np.max(np.abs(exact - fd)) / max(np.max(np.abs(exact)), 1e-300)))
    return _result("jacobian_fd", errors, tol)


def designed_decay(N: int = 2, tol: float = 0.1) -> CheckResult:
    """Design an ``N``-vanishing equidistant structure and fit its far-field slope."""
    s = LayerStructure(2, equidistant_radii(2.0, 1.0, N))
    report = solve_vanishing(s, FixedCore(sigma=0.0), SolverConfig())
    if not report.converged:
        return CheckResult("designed_decay", False, math.inf, tol, 1)
    decay = decay_exponent(s, report.eta)
    err = math.inf if decay.slope is None else abs(decay.slope - decay.target)
    return CheckResult("designed_decay", bool(err <= tol), float(err), tol, 1)


def run_suite(seed: int = 0, samples: int = 200, mutate: str = "none") -> dict:
    rng = np.random.default_rng(seed)
    s2d, s3d = calibrate_matrix_sign(2), calibrate_matrix_sign(3)
    flip = -1.0 if mutate == "matrix-sign" else 1.0
    results = [
        route_equivalence(rng, samples, 2, matrix_sign=flip * s2d),
        route_equivalence(rng, samples, 3, matrix_sign=flip * s3d),
        oddness(rng, samples),
        decoupling(rng, samples),
        transmission(rng, samples),
        jacobian(rng, max(1, samples // 10)),
        designed_decay(),
    ]
    return {
        "seed": seed,
        "samples": samples,
        "mutate": mutate,
        "signs": {"s": s2d, "s_tilde": s3d},
        "checks": [r.to_dict() for r in results],
        "passed": all(r.passed for r in results),
    }
