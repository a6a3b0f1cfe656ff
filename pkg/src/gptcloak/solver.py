"""Design of N-GPTs-vanishing coatings: solve ``M_1 = ... = M_N = 0`` for the
coating contrasts ``eta_1..eta_N`` with the core held fixed.

The main solver is a box-projected Newton iteration (pseudo-inverse
direction, backtracking, steepest-descent fallback) on the merit
``0.5 * sum_n (M_n / scale_n)^2``. A continuation driver walks the core
contrast from 0 to its target, and two Picard fixed-point iterations cover the
small-contrast and small-core regimes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gptcloak.cgpt_core import CgptError, backward_error, cgpt, normalized_cgpt, normalized_cgpt_and_gradient
from gptcloak.proportional import (
    MAX_ENUMERATION_LAYERS,
    design_weights,
    growth_factor,
    vandermonde_solve,
    xi_aggregates_and_jacobian,
)
from gptcloak.structure import (
    LayerStructure,
    StructureError,
    eta_core_for_sigma,
    eta_core_gradient,
    sigma_from_eta,
)

log = logging.getLogger(__name__)

INIT_PRESETS = ("zero", "asymptotic", "random")
FORMULATIONS = ("auto", "cgpt", "aggregate")
AGGREGATE_MAX_COATINGS = 14
AGGREGATE_MAX_GROWTH = 0.05  # auto prefers the aggregate residual for gamma - 1 up to this


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-12
    max_iters: int = 200
    backtrack_factor: float = 0.5
    max_backtracks: int = 30
    continuation_steps: int = 10
    max_step_halvings: int = 6
    init: str | tuple[float, ...] = "zero"
    seed: int = 0
    restarts: int = 0
    eps_box: float = 1e-12
    stagnation_window: int = 20
    verify_tol: float = 1e-9
    formulation: str = "auto"
    picard_relaxation: float = 1.0

    def __post_init__(self) -> None:
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_iters < 1 or self.continuation_steps < 1:
            raise ValueError("max_iters and continuation_steps must be >= 1")
        if not 0.0 < self.picard_relaxation <= 1.0:
            raise ValueError("picard_relaxation must lie in (0, 1]")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if isinstance(self.init, str):
            if self.init not in INIT_PRESETS:
                raise ValueError(f"init preset must be one of {INIT_PRESETS}, got {self.init!r}")
        else:
            object.__setattr__(self, "init", tuple(float(v) for v in self.init))


@dataclass(frozen=True)
class FixedCore:
    """The core is held at either a contrast ``eta`` or a conductivity ``sigma``."""

    eta: float | None = None
    sigma: float | None = None

    def __post_init__(self) -> None:
        if (self.eta is None) == (self.sigma is None):
            raise ValueError("give exactly one of eta or sigma for the core")
        if self.eta is not None and not -1.0 <= self.eta <= 1.0:
            raise StructureError(f"core contrast must lie in [-1, 1], got {self.eta}")
        if self.sigma is not None and self.sigma < 0.0:
            raise StructureError(f"core conductivity must be nonnegative, got {self.sigma}")

    def core_eta(self, eta_prime: np.ndarray, sigma0: float) -> float:
        if self.eta is not None:
            return float(self.eta)
        return eta_core_for_sigma(eta_prime, self.sigma, sigma0)

    def core_gradient(self, eta_prime: np.ndarray, sigma0: float) -> np.ndarray:
        if self.eta is not None:
            return np.zeros_like(eta_prime)
        return eta_core_gradient(eta_prime, self.sigma, sigma0)


@dataclass(frozen=True)
class IterationRecord:
    step: int
    direction: str  # "newton" or "gradient"
    step_length: float
    merit: float
    residual_norm: float


@dataclass
class SolveReport:
    eta: np.ndarray
    sigma: list[float] | None
    residual: np.ndarray  # M_n / scale_n, transfer route
    converged: bool
    status: str
    iterations: list[IterationRecord] = field(default_factory=list)
    cross_check: dict[str, float] = field(default_factory=dict)
    stages: list[dict] = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "status": self.status,
            "eta": [float(v) for v in self.eta],
            "sigma": None if self.sigma is None else [float(v) for v in self.sigma],
            "residual": [float(v) for v in self.residual],
            "max_residual": self.max_residual,
            "cross_check": {k: float(v) for k, v in self.cross_check.items()},
            "iterations": [
                {
                    "step": r.step,
                    "direction": r.direction,
                    "step_length": r.step_length,
                    "merit": r.merit,
                    "residual_norm": r.residual_norm,
                }
                for r in self.iterations
            ],
            "stages": self.stages,
        }


class _Problem:
    """Normalized residual map ``eta' -> (M_n / scale_n)_n`` and its Jacobian."""

    def __init__(self, structure: LayerStructure, core: FixedCore, orders: Sequence[int]):
        if structure.n_coatings < 1:
            raise StructureError("at least one coating is needed to design a vanishing structure")
        self.structure = structure
        self.core = core
        self.orders = tuple(orders)
        self.sigma0 = structure.sigma_background

    def full_eta(self, eta_prime: np.ndarray) -> np.ndarray:
        return np.append(eta_prime, self.core.core_eta(eta_prime, self.sigma0))

    def residual(self, eta_prime: np.ndarray) -> np.ndarray:
        eta = self.full_eta(eta_prime)
        return np.array([normalized_cgpt(self.structure, eta, n) for n in self.orders])

    def residual_and_jacobian(self, eta_prime: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        eta = self.full_eta(eta_prime)
        dcore = self.core.core_gradient(eta_prime, self.sigma0)
        F = np.empty(len(self.orders))
        J = np.empty((len(self.orders), eta_prime.size))
        for i, n in enumerate(self.orders):
            F[i], g = normalized_cgpt_and_gradient(self.structure, eta, n)
            J[i] = g[:-1] + g[-1] * dcore
        return F, J


class _AggregateProblem(_Problem):
    """Equivalent residual ``xi_k(eta) + eta_{N+1} g_k`` (``k = 2..N+1``) on 2D
    proportional radii.

    ``M_1..M_N`` vanish exactly when these do, but the map avoids the
    near-confluent Vandermonde system hidden in ``M_n``, so thin coatings
    (``gamma -> 1``) remain solvable to full precision.
    """

    def __init__(self, structure: LayerStructure, core: FixedCore, orders: Sequence[int]):
        super().__init__(structure, core, orders)
        self.weights = design_weights(structure)
        self.scale = max(1.0, float(np.max(np.abs(self.weights))))

    def residual(self, eta_prime: np.ndarray) -> np.ndarray:
        return self.residual_and_jacobian(eta_prime)[0]

    def residual_and_jacobian(self, eta_prime: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        eta = self.full_eta(eta_prime)
        xi, dxi = xi_aggregates_and_jacobian(eta)
        N = eta_prime.size
        F = (xi[1:] + eta[-1] * self.weights) / self.scale
        dcore = self.core.core_gradient(eta_prime, self.sigma0)
        # d eta_{N+1} / d eta' enters through both xi and the weight term
        J = dxi[1:, :N] + np.outer(dxi[1:, N] + self.weights, dcore)
        return F, J / self.scale


def _aggregate_applicable(structure: LayerStructure, orders: Sequence[int]) -> bool:
    N = structure.n_coatings
    if structure.dimension != 2 or tuple(orders) != tuple(range(1, N + 1)):
        return False
    if N > min(AGGREGATE_MAX_COATINGS, MAX_ENUMERATION_LAYERS - 1):
        return False
    try:
        growth_factor(structure)
    except StructureError:
        return False
    return True


def _make_problem(structure: LayerStructure, core: FixedCore, orders: Sequence[int], formulation: str) -> _Problem:
    orders = tuple(orders)
    if formulation == "aggregate":
        if not _aggregate_applicable(structure, orders):
            raise StructureError("the aggregate formulation needs 2D proportional radii and orders 1..N")
        return _AggregateProblem(structure, core, orders)
    return _Problem(structure, core, orders)


def _formulations(structure: LayerStructure, orders: Sequence[int], config: SolverConfig) -> tuple[str, ...]:
    """Residual formulations to try, in order.

    ``auto`` leads with the aggregate residual for thin coatings, where the CGPT
    residual is badly conditioned, and with the CGPT residual otherwise, where
    the aggregate one is badly scaled; the other one is the fallback.
    """
    if config.formulation != "auto":
        return (config.formulation,)
    if not _aggregate_applicable(structure, orders):
        return ("cgpt",)
    if growth_factor(structure) - 1.0 <= AGGREGATE_MAX_GROWTH:
        return ("aggregate", "cgpt")
    return ("cgpt", "aggregate")


def _merit(F: np.ndarray) -> float:
    return 0.5 * float(F @ F)


def newton_direction(F: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``-J^+ F`` (minimum-norm least-squares solution for non-square or singular ``J``)."""
    return -np.linalg.lstsq(J, F, rcond=None)[0]


def gradient_direction(F: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``-J^T F``, the steepest-descent direction of ``0.5 |F|^2``."""
    return -J.T @ F


def _initial_point(structure: LayerStructure, config: SolverConfig, rng: np.random.Generator | None) -> np.ndarray:
    N = structure.n_coatings
    if rng is not None:
        return rng.uniform(-0.5, 0.5, N)
    if isinstance(config.init, tuple):
        x = np.asarray(config.init, dtype=float)
        if x.size == N + 1:
            x = x[:N]
        if x.size != N:
            raise StructureError(f"init has {x.size} entries, expected {N}")
        return x
    if config.init == "asymptotic":
        return asymptotic_init(structure)
    if config.init == "random":
        return np.random.default_rng(config.seed).uniform(-0.5, 0.5, N)
    return np.zeros(N)


def asymptotic_init(structure: LayerStructure) -> np.ndarray:
    """Alternating ``+-1`` coatings, with the thin-coating correction to ``eta_1`` on
    proportional radii (``delta = gamma - 1``)."""
    N = structure.n_coatings
    try:
        delta = growth_factor(structure) - 1.0
    except StructureError:
        delta = 0.0
    eta = np.array([(-1.0) ** (N - k) for k in range(1, N + 1)])
    eta[0] *= float(np.clip(1.0 - N * (N - 1) * delta, -1.0, 1.0))
    return eta


def _project(x: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(x, -1.0 + eps, 1.0 - eps)


def _boundary_fraction(x: np.ndarray, p: np.ndarray, eps: float, tau: float = 0.995) -> float:
    """Largest ``t <= 1`` keeping ``x + t p`` a fraction ``tau`` of the way to the box faces."""
    upper = 1.0 - eps
    with np.errstate(divide="ignore", invalid="ignore"):
        room = np.where(p > 0, (upper - x) / p, np.where(p < 0, (-upper - x) / p, np.inf))
    return float(min(1.0, tau * np.min(room))) if room.size else 1.0


def _line_search(problem: _Problem, x: np.ndarray, p: np.ndarray, merit: float, t: float, config: SolverConfig):
    """Backtrack from ``t`` until the projected trial point strictly lowers the merit."""
    for _ in range(config.max_backtracks + 1):
        trial = _project(x + t * p, config.eps_box)
        try:
            F_trial = problem.residual(trial)
        except (CgptError, StructureError):
            F_trial = None
        if F_trial is not None and np.all(np.isfinite(F_trial)) and _merit(F_trial) < merit:
            return t, trial, _merit(F_trial)
        t *= config.backtrack_factor
    return None


def _polish(problem: _Problem, x: np.ndarray, F: np.ndarray, J: np.ndarray, config: SolverConfig, steps: int = 3):
    """A few full Newton steps past the tolerance, kept while the merit drops, to
    bring ill-conditioned designs down to the rounding floor."""
    merit = _merit(F)
    for _ in range(steps):
        if merit == 0.0:
            break
        trial = _project(x + newton_direction(F, J), config.eps_box)
        try:
            F_trial, J_trial = problem.residual_and_jacobian(trial)
        except (CgptError, StructureError):
            break
        if not np.all(np.isfinite(F_trial)) or _merit(F_trial) >= merit:
            break
        x, F, J, merit = trial, F_trial, J_trial, _merit(F_trial)
    return x, F


def _newton_run(problem: _Problem, x0: np.ndarray, config: SolverConfig) -> tuple[np.ndarray, np.ndarray, list, str]:
    x = _project(np.asarray(x0, dtype=float), config.eps_box)
    F, J = problem.residual_and_jacobian(x)
    merit = _merit(F)
    records: list[IterationRecord] = []
    history = [merit]
    for it in range(1, config.max_iters + 1):
        if np.max(np.abs(F)) <= config.tol_residual:
            return (*_polish(problem, x, F, J, config), records, "converged")
        accepted = None
        newton = newton_direction(F, J)
        # Newton projected onto the box, then Newton kept strictly inside it
        # (fraction-to-boundary); steepest descent as the last resort
        candidates = (
            ("newton", newton, 1.0),
            ("newton", newton, _boundary_fraction(x, newton, config.eps_box)),
            ("gradient", gradient_direction(F, J), 1.0),
        )
        best = merit
        for kind, p, t0 in candidates:
            if not np.all(np.isfinite(p)) or not np.any(p) or t0 <= 0.0:
                continue
            found = _line_search(problem, x, p, merit, t0, config)
            if found is not None and found[2] < best:
                accepted, best = (kind, found[0], found[1]), found[2]
        if accepted is None:
            return x, F, records, "stagnation"
        kind, t, x = accepted
        F, J = problem.residual_and_jacobian(x)
        merit = _merit(F)
        history.append(merit)
        records.append(IterationRecord(it, kind, t, merit, float(np.linalg.norm(F))))
        log.debug("iter %d %s t=%.3g merit=%.3e", it, kind, t, merit)
        # stalled: less than 1% merit reduction over the last window of iterations
        w = config.stagnation_window
        if len(history) > w and history[-1] > 0.99 * history[-1 - w]:
            return x, F, records, "stagnation"
    if np.max(np.abs(F)) <= config.tol_residual:
        return x, F, records, "converged"
    return x, F, records, "max_iters"


def _physical_residual(structure: LayerStructure, eta: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    out = np.empty(len(orders))
    for i, n in enumerate(orders):
        try:
            out[i] = normalized_cgpt(structure, eta, n)
        except (CgptError, StructureError):
            out[i] = math.nan
    return out


def _cross_check(structure: LayerStructure, eta: np.ndarray, orders: Sequence[int]) -> dict[str, float]:
    """Max normalized residual of each independent route at ``eta``, plus the
    largest backward error of ``p21``."""
    out = {}
    routes = ["direct", "matrix"] + (["polynomial"] if structure.dimension == 2 and eta.size <= 16 else [])
    for route in routes:
        try:
            out[route] = max(abs(cgpt(structure, eta, n, route)) / structure.cgpt_scale(n) for n in orders)
        except (CgptError, StructureError):
            out[route] = math.nan
    try:
        out["backward"] = max(backward_error(structure, eta, n) for n in orders)
    except StructureError:
        out["backward"] = math.nan
    return out


def _sigma_or_none(eta: np.ndarray, sigma0: float) -> list[float] | None:
    try:
        return sigma_from_eta(eta, sigma0)
    except StructureError:
        return None


def _finish(problem: _Problem, x: np.ndarray, records, status: str, config: SolverConfig) -> SolveReport:
    """Package a run; success must survive an independent re-check.

    The direct transmission solve must give ``|M_n| / scale_n <= verify_tol``,
    or, for near-resonant designs where ``M_n`` amplifies rounding in ``eta``
    beyond that, ``p21`` must vanish to ``verify_tol`` in backward-error terms.
    """
    eta = problem.full_eta(x)
    checks = _cross_check(problem.structure, eta, problem.orders)
    F = _physical_residual(problem.structure, eta, problem.orders)
    converged = status == "converged"
    tol = max(config.verify_tol, config.tol_residual)
    if converged and not checks.get("direct", math.inf) <= tol:
        if checks.get("backward", math.inf) <= tol:
            status = "converged-backward"
        else:
            status = "verification-failed"
            converged = False
    return SolveReport(eta, _sigma_or_none(eta, problem.sigma0), F, converged, status, list(records), checks)


def solve_vanishing(
    structure: LayerStructure,
    fixed_core: FixedCore,
    config: SolverConfig | None = None,
    *,
    init: Sequence[float] | None = None,
    orders: Sequence[int] | None = None,
) -> SolveReport:
    """Projected Newton solve of ``M_n(eta', core) = 0`` for ``n`` in ``orders`` (default ``1..N``).

    Every successful result is re-checked with the direct transmission solve;
    ``report.cross_check`` holds the residual of each independent route.
    """
    config = config or SolverConfig()
    orders = tuple(orders or range(1, structure.n_coatings + 1))
    x0 = np.asarray(init, dtype=float)[: structure.n_coatings] if init is not None else _initial_point(structure, config, None)
    kinds = _formulations(structure, orders, config)
    report = None
    for kind in kinds:
        problem = _make_problem(structure, fixed_core, orders, kind)
        attempt = _solve_with_restarts(problem, x0, config)
        if report is None or attempt.converged or (not report.converged and attempt.max_residual < report.max_residual):
            report = attempt
        if report.converged:
            break
        if kind != kinds[-1]:
            log.info("%s formulation ended with %s; trying the next one", kind, attempt.status)
    return report


def _solve_with_restarts(problem: _Problem, x0: np.ndarray, config: SolverConfig) -> SolveReport:
    try:
        result = _newton_run(problem, x0, config)
    except (CgptError, StructureError) as exc:
        log.warning("evaluation failed at the initial point: %s", exc)
        return SolveReport(
            np.append(x0, np.nan), None, np.full(len(problem.orders), np.nan), False, "evaluation-failure"
        )
    report = _finish(problem, result[0], result[2], result[3], config)
    rng = np.random.default_rng(config.seed)
    for attempt in range(config.restarts):
        if report.converged:
            break
        log.info("restart %d after %s", attempt + 1, report.status)
        try:
            result = _newton_run(problem, _initial_point(problem.structure, config, rng), config)
        except (CgptError, StructureError):
            continue
        report = _finish(problem, result[0], result[2], result[3], config)
    return report


def continuation_solve(structure: LayerStructure, target_core_eta: float, config: SolverConfig | None = None) -> SolveReport:
    """Walk the core contrast ``0 -> target`` in ``config.continuation_steps`` equal steps,
    warm-starting each solve from the previous stage.

    A failed stage is retried from the last good point with the core step
    halved, at most ``config.max_step_halvings`` times in a row.
    """
    config = config or SolverConfig()
    if not -1.0 <= target_core_eta <= 0.0:
        raise StructureError(f"continuation target must lie in [-1, 0], got {target_core_eta}")
    N = structure.n_coatings
    x = np.zeros(N)
    if target_core_eta == 0.0:
        problem = _make_problem(structure, FixedCore(eta=0.0), range(1, N + 1), "cgpt")
        report = _finish(problem, x, [], "converged", config)
        report.stages = [{"core_eta": 0.0, "status": "converged", "max_residual": report.max_residual, "iterations": 0}]
        return report
    step = target_core_eta / config.continuation_steps
    core = 0.0
    halvings = 0
    stages: list[dict] = []
    records: list[IterationRecord] = []
    report = None
    while core != target_core_eta:
        trial_core = max(core + step, target_core_eta)
        stage = solve_vanishing(structure, FixedCore(eta=trial_core), config, init=x)
        stages.append(
            {
                "core_eta": trial_core,
                "status": stage.status,
                "max_residual": stage.max_residual,
                "iterations": stage.n_iterations,
            }
        )
        records.extend(stage.iterations)
        if stage.converged:
            core, x, report = trial_core, stage.eta[:N], stage
            halvings = 0
            continue
        if halvings >= config.max_step_halvings:
            log.warning("continuation stalled at core eta %.6g: %s", trial_core, stage.status)
            failed = report if report is not None else stage
            failed.converged = False
            failed.status = f"continuation-{stage.status}"
            failed.stages = stages
            failed.iterations = records
            return failed
        step /= 2.0
        halvings += 1
        log.info("continuation stage at core eta %.6g failed (%s); halving the step", trial_core, stage.status)
    report.stages = stages
    report.iterations = records
    return report


# ---------------------------------------------------------------------------
# Picard iterations for the small-contrast and small-core regimes


def _require_2d(structure: LayerStructure) -> None:
    if structure.dimension != 2:
        raise StructureError("Picard iterations are implemented for 2D structures")


def _w_terms(structure: LayerStructure, eta: np.ndarray, N: int) -> np.ndarray:
    """``w_n = b^(n) - sum_j eta_j r_j^{2n}`` for ``n = 1..N`` with ``b^(n) = M_n / (2 pi n)``."""
    r2 = structure.radii_array() ** 2
    out = np.empty(N)
    for n in range(1, N + 1):
        b = normalized_cgpt(structure, eta, n) * structure.r_outer ** (2 * n)
        out[n - 1] = b - float(eta @ r2**n)
    return out


def _picard(step, x0: np.ndarray, config: SolverConfig, residual) -> tuple[np.ndarray, list[IterationRecord], str]:
    x = x0
    omega = config.picard_relaxation
    records: list[IterationRecord] = []
    growing = 0
    last = math.inf
    for it in range(1, config.max_iters + 1):
        x_new = (1.0 - omega) * x + omega * step(x)
        upd = float(np.linalg.norm(x_new - x))
        x = x_new
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 1.0):
            records.append(IterationRecord(it, "picard", upd, math.inf, math.inf))
            return x, records, "diverged"
        F = residual(x)
        records.append(IterationRecord(it, "picard", upd, _merit(F), float(np.linalg.norm(F))))
        if upd <= config.tol_residual * max(1.0, float(np.linalg.norm(x))):
            return x, records, "converged"
        growing = growing + 1 if upd > last else 0
        last = upd
        if growing >= 5:
            return x, records, "diverged"
    return x, records, "max_iters"


def picard_small_contrast(structure: LayerStructure, f0: float, config: SolverConfig | None = None) -> SolveReport:
    """Fixed point of ``V eta + W(eta) = (f0, 0, ..., 0)`` over all ``N+1`` contrasts.

    ``V`` is the Vandermonde matrix with rows ``r_j^{2n}``, ``n = 0..N``; the
    solution satisfies ``sum_j eta_j = f0`` and ``M_1 = ... = M_N = 0``.

    The plain iteration ``eta <- V^{-1}(f - W(eta))`` contracts only for small
    ``f0``; its linearization picks up eigenvalues below ``-1`` as ``f0`` grows
    (about ``-1.09`` at ``f0 = 0.02`` for radii ``2, 1.75, ..., 1``), where it
    settles into a 2-cycle. ``config.picard_relaxation < 1`` averages each
    update with the previous iterate, which keeps the fixed point and restores
    contraction.
    """
    config = config or SolverConfig()
    _require_2d(structure)
    N = structure.n_coatings
    nodes = structure.radii_array() ** 2
    f = np.zeros(N + 1)
    f[0] = f0

    def step(eta: np.ndarray) -> np.ndarray:
        rhs = f - np.concatenate(([0.0], _w_terms(structure, eta, N)))
        return vandermonde_solve(nodes, rhs)

    def residual(eta: np.ndarray) -> np.ndarray:
        return np.array([normalized_cgpt(structure, eta, n) for n in range(1, N + 1)])

    try:
        eta, records, status = _picard(step, np.zeros(N + 1), config, residual)
    except CgptError as exc:
        log.warning("Picard iteration hit an evaluation failure: %s", exc)
        return SolveReport(np.full(N + 1, np.nan), None, np.full(N, np.nan), False, "evaluation-failure")
    problem = _Problem(structure, FixedCore(eta=float(np.clip(eta[-1], -1, 1))), range(1, N + 1))
    return _finish(problem, eta[:N], records, status, config)


def picard_small_core(structure: LayerStructure, fixed_core_eta: float, config: SolverConfig | None = None) -> SolveReport:
    """Fixed point of ``V~ eta' + W~(eta) = -eta_{N+1} (r_{N+1}^{2n})_n`` for the coatings.

    ``V~`` is the ``N x N`` Vandermonde matrix over ``r_1^2..r_N^2`` with rows of
    powers ``1..N``; intended for cores much smaller than the coatings.
    """
    config = config or SolverConfig()
    _require_2d(structure)
    N = structure.n_coatings
    r = structure.radii_array()
    nodes = r[:N] ** 2
    powers = np.arange(1, N + 1)
    f = -fixed_core_eta * r[N] ** (2 * powers)
    problem = _Problem(structure, FixedCore(eta=fixed_core_eta), range(1, N + 1))

    def step(eta_prime: np.ndarray) -> np.ndarray:
        eta = np.append(eta_prime, fixed_core_eta)
        # V~ = V0 diag(r_j^2) with V0 the powers-0..N-1 Vandermonde matrix
        return vandermonde_solve(nodes, f - _w_terms(structure, eta, N)) / nodes

    try:
        eta_prime, records, status = _picard(step, np.zeros(N), config, problem.residual)
    except CgptError as exc:
        log.warning("Picard iteration hit an evaluation failure: %s", exc)
        return SolveReport(np.full(N + 1, np.nan), None, np.full(N, np.nan), False, "evaluation-failure")
    return _finish(problem, eta_prime, records, status, config)
