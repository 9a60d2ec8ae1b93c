"""Flat ``key = value`` run configuration with ``#`` comments."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import EvoHJError, InvalidParameters
from .model import ModelParams

PARAM_KEYS = ("r1", "r2", "g1", "g2", "theta", "kappa1", "kappa2", "m1", "m2")
OPTIONAL_KEYS = ("eps_list", "zmin", "zmax", "n_points", "tol_solver", "tol_ess")
DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025)


class ConfigError(EvoHJError, ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    eps_list: tuple = DEFAULT_EPS
    zmin: Optional[float] = None
    zmax: Optional[float] = None
    n_points: Optional[int] = None
    tol_solver: float = 1e-10
    tol_ess: float = 1e-8
    out_dir: Path = field(default_factory=lambda: Path("."))

    @property
    def epsilon(self) -> float:
        return self.eps_list[0]


def parse_eps_list(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"eps_list must be a comma separated list of numbers: {text!r}") from exc
    if not values or any(not v > 0 for v in values):
        raise ConfigError("eps_list must be non-empty and strictly positive")
    return values


def parse_config_text(text: str) -> dict:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARAM_KEYS + OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def build_config(entries: dict, out_dir=None) -> RunConfig:
    missing = [k for k in PARAM_KEYS if k not in entries]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    try:
        values = {k: float(entries[k]) for k in PARAM_KEYS}
    except ValueError as exc:
        raise ConfigError(f"non-numeric model parameter: {exc}") from exc
    eps_list = parse_eps_list(entries["eps_list"]) if "eps_list" in entries else DEFAULT_EPS
    try:
        params = ModelParams(**values, epsilon=eps_list[0])
    except InvalidParameters as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(params=params, eps_list=eps_list)
    try:
        for key in ("zmin", "zmax", "tol_solver", "tol_ess"):
            if key in entries:
                setattr(cfg, key, float(entries[key]))
        if "n_points" in entries:
            cfg.n_points = int(entries["n_points"])
    except ValueError as exc:
        raise ConfigError(f"bad numeric value: {exc}") from exc
    if (cfg.zmin is None) != (cfg.zmax is None):
        raise ConfigError("zmin and zmax must be given together")
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)
    return cfg


def load_config(path, out_dir=None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text), out_dir=out_dir)
