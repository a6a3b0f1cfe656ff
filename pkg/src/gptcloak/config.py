"""YAML run configuration shared by the command-line tools.

Every block is checked against a fixed key set; unknown keys raise
:class:`ConfigError` so that typos never silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from gptcloak.solver import FixedCore, SolverConfig
from gptcloak.structure import LayerStructure, StructureError, structure_from_config

METHODS = ("auto", "newton", "continuation", "picard-contrast", "picard-core")
MUTATIONS = ("none", "matrix-sign")

# YAML key -> SolverConfig field
_SOLVER_KEYS = {
    "tol": "tol_residual",
    "max_iters": "max_iters",
    "continuation_steps": "continuation_steps",
    "max_step_halvings": "max_step_halvings",
    "init": "init",
    "seed": "seed",
    "restarts": "restarts",
    "formulation": "formulation",
    "picard_relaxation": "picard_relaxation",
    "verify_tol": "verify_tol",
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class DesignOptions:
    method: str = "auto"
    f0: float | None = None  # target sum of contrasts for picard-contrast


@dataclass(frozen=True)
class ExtremeOptions:
    n_coatings: int = 8
    delta: float = 0.01
    r_inner: float = 1.0
    reference_eta: tuple[float, ...] | None = None
    reference_sigma: tuple[float, ...] | None = None


@dataclass(frozen=True)
class VerifyOptions:
    samples: int = 200
    mutate: str = "none"


@dataclass(frozen=True)
class SweepOptions:
    points: tuple[Mapping[str, Any], ...] = ()
    workers: int = 1
    command: str = "design"


@dataclass(frozen=True)
class RunConfig:
    structure: LayerStructure | None = None
    eta: tuple[float, ...] | None = None
    core: FixedCore | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    design: DesignOptions = field(default_factory=DesignOptions)
    extreme: ExtremeOptions = field(default_factory=ExtremeOptions)
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)


_TOP_KEYS = ("structure", "eta", "core", "solver", "design", "extreme", "verify", "sweep")


def _require_mapping(block: Any, name: str) -> Mapping[str, Any]:
    if block is None:
        return {}
    if not isinstance(block, Mapping):
        raise ConfigError(f"{name} block must be a mapping")
    return block


def _reject_unknown(block: Mapping[str, Any], allowed, name: str) -> None:
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {name} keys: {unknown}")


def _floats(values: Any, name: str) -> tuple[float, ...]:
    if isinstance(values, (str, bytes)) or not hasattr(values, "__iter__"):
        raise ConfigError(f"{name} must be a list of numbers")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of numbers") from exc


def parse_solver(block: Any) -> SolverConfig:
    block = _require_mapping(block, "solver")
    _reject_unknown(block, _SOLVER_KEYS, "solver")
    kwargs = {}
    for key, value in block.items():
        name = _SOLVER_KEYS[key]
        if name == "init" and not isinstance(value, str):
            value = _floats(value, "solver.init")
        kwargs[name] = value
    try:
        return SolverConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver block: {exc}") from exc


def parse_core(block: Any) -> FixedCore | None:
    if block is None:
        return None
    block = _require_mapping(block, "core")
    _reject_unknown(block, ("eta", "sigma"), "core")
    try:
        return FixedCore(
            eta=None if block.get("eta") is None else float(block["eta"]),
            sigma=None if block.get("sigma") is None else float(block["sigma"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid core block: {exc}") from exc


def _parse_options(cls, block: Any, name: str, convert: Mapping[str, Any]):
    block = _require_mapping(block, name)
    names = [f.name for f in fields(cls)]
    _reject_unknown(block, names, name)
    kwargs = {}
    for key, value in block.items():
        try:
            kwargs[key] = convert[key](value) if value is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid {name}.{key}: {value!r}") from exc
    return cls(**kwargs)


def parse_config(data: Any) -> RunConfig:
    """Validate a parsed YAML document into a :class:`RunConfig`."""
    data = _require_mapping(data, "top-level")
    _reject_unknown(data, _TOP_KEYS, "top-level")
    try:
        structure = structure_from_config(data["structure"]) if data.get("structure") is not None else None
    except StructureError as exc:
        raise ConfigError(str(exc)) from exc
    eta = _floats(data["eta"], "eta") if data.get("eta") is not None else None
    design = _parse_options(DesignOptions, data.get("design"), "design", {"method": str, "f0": float})
    if design.method not in METHODS:
        raise ConfigError(f"design.method must be one of {METHODS}, got {design.method!r}")
    extreme = _parse_options(
        ExtremeOptions,
        data.get("extreme"),
        "extreme",
        {
            "n_coatings": int,
            "delta": float,
            "r_inner": float,
            "reference_eta": lambda v: _floats(v, "extreme.reference_eta"),
            "reference_sigma": lambda v: _floats(v, "extreme.reference_sigma"),
        },
    )
    verify = _parse_options(VerifyOptions, data.get("verify"), "verify", {"samples": int, "mutate": str})
    if verify.mutate not in MUTATIONS:
        raise ConfigError(f"verify.mutate must be one of {MUTATIONS}, got {verify.mutate!r}")
    sweep_block = _require_mapping(data.get("sweep"), "sweep")
    _reject_unknown(sweep_block, ("points", "workers", "command"), "sweep")
    points = sweep_block.get("points", [])
    if not isinstance(points, list) or not all(isinstance(p, Mapping) for p in points):
        raise ConfigError("sweep.points must be a list of mappings")
    for p in points:
        _reject_unknown(p, ("structure", "eta", "core", "solver", "design"), "sweep point")
    sweep = SweepOptions(tuple(points), int(sweep_block.get("workers", 1)), str(sweep_block.get("command", "design")))
    if sweep.command not in ("design", "gpts"):
        raise ConfigError(f"sweep.command must be 'design' or 'gpts', got {sweep.command!r}")
    if sweep.workers < 1:
        raise ConfigError("sweep.workers must be at least 1")
    return RunConfig(
        structure=structure,
        eta=eta,
        core=parse_core(data.get("core")),
        solver=parse_solver(data.get("solver")),
        design=design,
        extreme=extreme,
        verify=verify,
        sweep=sweep,
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data)


def merge_point(base: Mapping[str, Any], point: Mapping[str, Any]) -> dict[str, Any]:
    """Raw config of one sweep point: ``point`` blocks replace the matching ``base`` blocks."""
    merged = {k: v for k, v in base.items() if k != "sweep"}
    merged.update(point)
    return merged


def with_seed(config: RunConfig, seed: int | None) -> RunConfig:
    if seed is None:
        return config
    return replace(config, solver=replace(config.solver, seed=int(seed)))
