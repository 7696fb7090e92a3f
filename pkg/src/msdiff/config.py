"""Run configuration: flat key-value sections parsed from UTF-8 text.

Sections: [grid], [mixture], [solver], [output].  Friction coefficients are
given as "b.i.j = value" keys; values may be plain numbers or a single
division literal like "1/0.833", which is evaluated exactly as written so
reciprocal coefficients need not be truncated to decimals by hand.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec
from .mixture import FrictionMatrix
from .stepper import StepConfig


class ConfigError(ValueError):
    """Configuration rejected; message identifies the offending field."""


_BUILTIN_ICS = ("paper-1d", "paper-2d", "two-species-cosine")


def parse_number(text: str, where: str) -> float:
    """Parse a float or a single division literal "a/b"."""
    text = text.strip()
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as err:
        raise ConfigError(f"{where}: cannot parse number {text!r}") from err


def format_number(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    friction: FrictionMatrix
    dt: float
    steps: int
    initial_condition: str = "paper-1d"  # builtin name or "file:<path>"
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    interior_margin: float = 0.99
    linear_tol: float = 1e-12
    certify_energy: bool = True
    output_dir: str = "out"
    emit_fields_every: int = 0  # 0: only initial and final snapshots
    seed: int = 12345
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("solver.dt: must be positive")
        if self.steps < 0:
            raise ConfigError("solver.steps: must be nonnegative")
        if self.emit_fields_every < 0:
            raise ConfigError("output.emit_fields_every: must be nonnegative")
        if not (self.initial_condition in _BUILTIN_ICS
                or self.initial_condition.startswith("file:")):
            raise ConfigError(
                f"grid.initial_condition: unknown selector {self.initial_condition!r}")

    @property
    def n_species(self) -> int:
        return self.friction.n_species

    def step_config(self) -> StepConfig:
        return StepConfig(dt=self.dt, newton_tol=self.newton_tol,
                          max_newton_iters=self.max_newton_iters,
                          interior_margin=self.interior_margin,
                          linear_tol=self.linear_tol,
                          certify_energy=self.certify_energy)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys like "b.1.2" are case/format sensitive
    return cp


def _friction_from_section(sec, n: int) -> FrictionMatrix:
    entries: dict[tuple[int, int], float] = {}
    for key, raw in sec.items():
        if not key.startswith("b."):
            continue
        parts = key.split(".")
        if len(parts) != 3:
            raise ConfigError(f"mixture.{key}: expected key of form b.i.j")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError as err:
            raise ConfigError(f"mixture.{key}: indices must be integers") from err
        if not (1 <= i <= n and 1 <= j <= n and i != j):
            raise ConfigError(f"mixture.{key}: indices out of range for n={n}")
        pair = (min(i, j), max(i, j))
        val = parse_number(raw, f"mixture.{key}")
        if pair in entries and entries[pair] != val:
            raise ConfigError(f"mixture.{key}: conflicts with b.{pair[0]}.{pair[1]}")
        entries[pair] = val
    b = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in entries:
                raise ConfigError(f"mixture: missing coefficient b.{i}.{j}")
            b[i - 1, j - 1] = b[j - 1, i - 1] = entries[(i, j)]
    try:
        return FrictionMatrix(b)
    except ValueError as err:
        raise ConfigError(f"mixture: {err}") from err


def parse_config(text: str) -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"config parse error: {err}") from err

    def get(section, key, default=None, cast=str):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                if cast is bool:
                    return raw.strip().lower() in ("1", "true", "yes", "on")
                if cast is float:
                    return parse_number(raw, f"{section}.{key}")
                return cast(raw)
            except (ValueError, ConfigError) as err:
                raise ConfigError(f"{section}.{key}: {err}") from err
        if default is None:
            raise ConfigError(f"missing required field {section}.{key}")
        return default

    dim = get("grid", "dim", 1, int)
    N = get("grid", "cells", None, int)
    L = get("grid", "length", 1.0, float)
    try:
        grid = GridSpec(dim=dim, cells_per_axis=N, domain_length=L)
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err

    n = get("mixture", "species", None, int)
    if n < 2:
        raise ConfigError("mixture.species: need at least 2 species")
    friction = _friction_from_section(cp["mixture"] if cp.has_section("mixture") else {}, n)

    known = {("grid", k) for k in ("dim", "cells", "length", "initial_condition")}
    known |= {("mixture", "species")}
    known |= {("solver", k) for k in ("dt", "steps", "newton_tol", "max_newton_iters",
                                     "interior_margin", "linear_tol", "certify_energy")}
    known |= {("output", k) for k in ("dir", "emit_fields_every", "seed")}
    extras = {}
    for section in cp.sections():
        for key in cp[section]:
            if section == "mixture" and key.startswith("b."):
                continue
            if (section, key) not in known:
                extras[f"{section}.{key}"] = cp.get(section, key)

    return RunConfig(
        grid=grid,
        friction=friction,
        dt=get("solver", "dt", None, float),
        steps=get("solver", "steps", None, int),
        initial_condition=get("grid", "initial_condition", "paper-1d"),
        newton_tol=get("solver", "newton_tol", 1e-10, float),
        max_newton_iters=get("solver", "max_newton_iters", 50, int),
        interior_margin=get("solver", "interior_margin", 0.99, float),
        linear_tol=get("solver", "linear_tol", 1e-12, float),
        certify_energy=get("solver", "certify_energy", True, bool),
        output_dir=get("output", "dir", "out"),
        emit_fields_every=get("output", "emit_fields_every", 0, int),
        seed=get("output", "seed", 12345, int),
        extras=extras,
    )


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(cfg: RunConfig) -> str:
    """Echo the effective configuration (defaults applied); re-parses to an
    equivalent RunConfig."""
    cp = _parser()
    cp["grid"] = {
        "dim": str(cfg.grid.dim),
        "cells": str(cfg.grid.cells_per_axis),
        "length": format_number(cfg.grid.domain_length),
        "initial_condition": cfg.initial_condition,
    }
    n = cfg.n_species
    mixture = {"species": str(n)}
    for i in range(n):
        for j in range(i + 1, n):
            mixture[f"b.{i + 1}.{j + 1}"] = format_number(cfg.friction.b[i, j])
    cp["mixture"] = mixture
    cp["solver"] = {
        "dt": format_number(cfg.dt),
        "steps": str(cfg.steps),
        "newton_tol": format_number(cfg.newton_tol),
        "max_newton_iters": str(cfg.max_newton_iters),
        "interior_margin": format_number(cfg.interior_margin),
        "linear_tol": format_number(cfg.linear_tol),
        "certify_energy": "true" if cfg.certify_energy else "false",
    }
    cp["output"] = {
        "dir": cfg.output_dir,
        "emit_fields_every": str(cfg.emit_fields_every),
        "seed": str(cfg.seed),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def paper_1d_config(**overrides) -> RunConfig:
    """The 1D experiment configuration: h=0.01, dt=0.001, 500 steps."""
    base = dict(
        grid=GridSpec(dim=1, cells_per_axis=100),
        friction=FrictionMatrix(np.array([
            [0.0, 1 / 0.833, 1 / 0.833],
            [1 / 0.833, 0.0, 1 / 0.168],
            [1 / 0.833, 1 / 0.168, 0.0]])),
        dt=0.001, steps=500, initial_condition="paper-1d")
    base.update(overrides)
    return RunConfig(**base)


def paper_2d_config(**overrides) -> RunConfig:
    """The 2D experiment configuration: h=0.05, dt=0.001, 500 steps."""
    base = dict(
        grid=GridSpec(dim=2, cells_per_axis=20),
        friction=FrictionMatrix(np.array([
            [0.0, 1 / 0.833, 1 / 0.833],
            [1 / 0.833, 0.0, 1 / 0.168],
            [1 / 0.833, 1 / 0.168, 0.0]])),
        dt=0.001, steps=500, initial_condition="paper-2d")
    base.update(overrides)
    return RunConfig(**base)
