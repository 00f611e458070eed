"""Run configuration: defaults, then a JSON file, then explicit CLI flags."""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path

from .curvature_core import (
    CallbackNonlinearity,
    Geometry,
    Nonlinearity,
    PrototypeNonlinearity,
    check_sign_condition,
)
from .errors import ConfigError, UsageError
from .ivp_integrator import MAX_TOL, MIN_TOL
from .shooting_solver import DEFAULT_GRID_SIZE, Side

SEED_GRID_ENV = "MINKSHOOT_SEED_GRID"


@dataclass(frozen=True)
class RunConfig:
    N: int = 1
    R1: float = 0.0
    R2: float = 1.0
    q: float | None = None
    r: float | None = None
    callback: str | None = None
    s0: float | None = None
    tol: float = 1e-10
    jobs: int = 1
    out: Path = Path(".")
    k: int = 1
    kmax: int = 3
    d: float | None = None
    q_range: tuple[float, float] | None = None
    q_steps: int = 200
    k_max: int = 2
    grid_size: int = DEFAULT_GRID_SIZE
    side: str = "below"
    extended: bool = False
    accept_tol: float = 1e-8

    def geometry(self) -> Geometry:
        try:
            return Geometry(self.N, self.R1, self.R2)
        except UsageError as e:
            raise ConfigError(str(e)) from e

    def nonlinearity(self) -> Nonlinearity:
        """The configured nonlinearity, sampled against the sign condition."""
        try:
            if self.callback is not None:
                if self.s0 is None:
                    raise ConfigError("a callback nonlinearity needs its equilibrium s0")
                nl = CallbackNonlinearity.from_path(self.callback, self.s0)
            elif self.q is None or self.r is None:
                raise ConfigError("set both q and r, or a callback with s0")
            else:
                nl = PrototypeNonlinearity(self.q, self.r)
        except ConfigError:
            raise
        except UsageError as e:
            raise ConfigError(str(e)) from e
        if not check_sign_condition(nl, self.geometry()):
            raise ConfigError(
                "nonlinearity fails f(0) = f(s0) = 0, f < 0 on (0, s0), f > 0 above s0"
            )
        return nl


_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path: str | Path) -> dict:
    """Read a JSON object of RunConfig keys."""
    path = Path(path)
    try:
        values = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(values) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return values


def _seed_grid(env: Mapping[str, str]) -> int | None:
    raw = env.get(SEED_GRID_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_GRID_ENV} must be an integer, got {raw!r}") from e
    if value < 2:
        raise ConfigError(f"{SEED_GRID_ENV} must be >= 2, got {value}")
    return value


def _coerce(values: dict) -> dict:
    out = dict(values)
    try:
        for key in ("N", "jobs", "k", "kmax", "q_steps", "k_max", "grid_size"):
            if key in out:
                value = out[key]
                if isinstance(value, bool) or int(value) != value:
                    raise ConfigError(f"{key} must be an integer, got {value!r}")
                out[key] = int(value)
        for key in ("R1", "R2", "q", "r", "s0", "tol", "d", "accept_tol"):
            if out.get(key) is not None:
                out[key] = float(out[key])
        if out.get("q_range") is not None:
            lo, hi = out["q_range"]
            out["q_range"] = (float(lo), float(hi))
        if "out" in out:
            out["out"] = Path(out["out"])
        if "extended" in out:
            out["extended"] = bool(out["extended"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid config value: {e}") from e
    return out


def _validate(cfg: RunConfig) -> None:
    if not MIN_TOL <= cfg.tol <= MAX_TOL:
        raise ConfigError(f"tol must lie in [{MIN_TOL:g}, {MAX_TOL:g}], got {cfg.tol!r}")
    if cfg.jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {cfg.jobs}")
    for key in ("k", "kmax", "k_max"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be >= 1, got {getattr(cfg, key)}")
    if cfg.grid_size < 2:
        raise ConfigError(f"grid_size must be >= 2, got {cfg.grid_size}")
    if cfg.q_steps < 2:
        raise ConfigError(f"q_steps must be >= 2, got {cfg.q_steps}")
    if cfg.side not in {s.value for s in Side}:
        raise ConfigError(f"side must be 'below' or 'above', got {cfg.side!r}")
    if cfg.d is not None and not cfg.d >= 0.0:
        raise ConfigError(f"d must be >= 0, got {cfg.d!r}")
    if not cfg.accept_tol > 0.0:
        raise ConfigError(f"accept_tol must be positive, got {cfg.accept_tol!r}")


def build_config(
    file_values: Mapping | None = None,
    cli_values: Mapping | None = None,
    env: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge defaults < config file < CLI flags; None CLI values mean "not given".

    MINKSHOOT_SEED_GRID replaces the default grid size only.
    """
    env = os.environ if env is None else env
    merged: dict = {}
    seed_grid = _seed_grid(env)
    if seed_grid is not None:
        merged["grid_size"] = seed_grid
    file_values = dict(file_values or {})
    unknown = sorted(set(file_values) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    merged.update({k: v for k, v in file_values.items() if v is not None})
    merged.update({k: v for k, v in (cli_values or {}).items() if k in _KEYS and v is not None})
    cfg = RunConfig(**_coerce(merged))
    _validate(cfg)
    cfg.geometry()
    return cfg
