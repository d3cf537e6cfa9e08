# cli/runconfig.py
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from config import (
    CONVERGENCE_ORDERS,
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    FD_STEP,
    TRUE_COST_GRID_ORDER,
    VALIDATION_GRID_POINTS,
    X0_STATE_COUNT,
)
from domain.errors import ConfigError, PceLqrError
from domain.models import OptimizerConfig, ParametricSystem, PolynomialMatrix
from presets import get_preset, mass_spring_system

SECTIONS = ("system", "pce", "cost", "optimizer", "initial_gain", "outputs", "seed", "validation")
SYSTEM_KEYS = ("preset", "masses", "interval", "A", "B", "name")
OPTIMIZER_KEYS = ("step_size", "grad_tol", "max_iters", "mode", "armijo_c", "armijo_shrink",
                  "record_every")
VALIDATION_KEYS = ("grid_points", "grid_order", "fd_step", "x0_count", "orders")
FORMATS = ("json", "csv")
SPD_EIG_FLOOR = 1e-12


@dataclass
class ValidationSettings:
    grid_points: int = VALIDATION_GRID_POINTS
    grid_order: int = TRUE_COST_GRID_ORDER
    fd_step: float = FD_STEP
    x0_count: int = X0_STATE_COUNT
    orders: Tuple[int, ...] = CONVERGENCE_ORDERS


@dataclass
class RunConfig:
    """
    Everything one CLI command needs: plant, order, weights, optimizer, outputs.

    `system_source` keeps the `system` section as it was given (preset name
    or inline polynomial entries) so `to_dict` can echo it.
    """
    system: ParametricSystem
    system_source: Dict[str, Any]
    pce_order: int
    quadrature_order: Optional[int]
    Q: np.ndarray
    R: np.ndarray
    optimizer: OptimizerConfig
    initial_gain: Optional[np.ndarray] = None          # None means "auto"
    out_dir: str = DEFAULT_OUT_DIR
    formats: Tuple[str, ...] = FORMATS
    seed: int = DEFAULT_SEED
    validation: ValidationSettings = field(default_factory=ValidationSettings)

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data echo that `parse_run_config` turns back into an equivalent RunConfig."""
        opt = self.optimizer
        return {
            "system": dict(self.system_source),
            "pce": {"order": self.pce_order, "quadrature_order": self.quadrature_order},
            "cost": {"Q": self.Q.tolist(), "R": self.R.tolist()},
            "optimizer": {
                "step_size": opt.step_size,
                "grad_tol": opt.grad_tol,
                "max_iters": opt.max_iters,
                "mode": opt.line_search,
                "armijo_c": opt.armijo_c,
                "armijo_shrink": opt.armijo_shrink,
                "record_every": opt.record_every,
            },
            "initial_gain": "auto" if self.initial_gain is None else self.initial_gain.tolist(),
            "outputs": {"directory": self.out_dir, "formats": list(self.formats)},
            "seed": self.seed,
            "validation": {
                "grid_points": self.validation.grid_points,
                "grid_order": self.validation.grid_order,
                "fd_step": self.validation.fd_step,
                "x0_count": self.validation.x0_count,
                "orders": list(self.validation.orders),
            },
        }


# ---------------------------------------------------------
# YAML LOCATIONS
# ---------------------------------------------------------
def _line_index(text: str) -> Dict[str, int]:
    """Map dotted key paths to 1-based YAML line numbers."""
    index: Dict[str, int] = {}

    def walk(node, prefix: str):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                index[path] = key.start_mark.line + 1
                walk(value, path)

    try:
        walk(yaml.compose(text), "")
    except yaml.YAMLError:
        pass
    return index


class _Reader:
    """Typed field access that reports the dotted path and YAML line on failure."""

    def __init__(self, lines: Optional[Dict[str, int]] = None):
        self.lines = lines or {}

    def fail(self, path: str, message: str) -> ConfigError:
        line = self.lines.get(path)
        if line is None and "." in path:
            line = self.lines.get(path.rsplit(".", 1)[0])
        return ConfigError(message, field=path, line=line)

    def section(self, data: Dict[str, Any], key: str, allowed) -> Dict[str, Any]:
        value = data.get(key) or {}
        if not isinstance(value, dict):
            raise self.fail(key, "expected a mapping")
        unknown = sorted(set(value) - set(allowed))
        if unknown:
            raise self.fail(f"{key}.{unknown[0]}", f"unknown key; allowed: {', '.join(allowed)}")
        return value

    def number(self, path: str, value, kind=float, positive: bool = False):
        # PyYAML reads exponent literals such as 1e-3 as strings
        try:
            if isinstance(value, bool):
                raise TypeError
            out = kind(float(value)) if kind is int else float(value)
            if kind is int and float(value) != out:
                raise ValueError
        except (TypeError, ValueError, OverflowError):
            raise self.fail(path, f"expected {'an integer' if kind is int else 'a number'}, "
                                  f"got {value!r}") from None
        if not math.isfinite(out):
            raise self.fail(path, "must be finite")
        if positive and out <= 0:
            raise self.fail(path, "must be positive")
        return out

    def matrix(self, path: str, value) -> np.ndarray:
        try:
            M = np.atleast_2d(np.asarray(value, dtype=float))
        except (TypeError, ValueError):
            raise self.fail(path, "expected a row-major nested list of numbers") from None
        if M.ndim != 2:
            raise self.fail(path, f"expected a matrix, got {M.ndim}-d data")
        if not np.all(np.isfinite(M)):
            raise self.fail(path, "entries must be finite")
        return M

    def spd(self, path: str, value, n: int) -> np.ndarray:
        if isinstance(value, str):
            if value.strip().lower() != "identity":
                raise self.fail(path, f"expected 'identity' or a matrix, got {value!r}")
            return np.eye(n)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [[value]]
        M = self.matrix(path, value)
        if M.shape != (n, n):
            raise self.fail(path, f"expected shape ({n}, {n}), got {M.shape}")
        if not np.allclose(M, M.T, rtol=0.0, atol=1e-12):
            raise self.fail(path, "matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(M)) <= SPD_EIG_FLOOR:
            raise self.fail(path, "matrix must be positive definite")
        return M


# ---------------------------------------------------------
# PARSING
# ---------------------------------------------------------
def _poly_matrix(reader: _Reader, path: str, rows) -> PolynomialMatrix:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise reader.fail(path, "expected rows of polynomial coefficient lists")
    try:
        P = PolynomialMatrix.from_entries(rows)
    except (PceLqrError, TypeError, ValueError) as exc:
        raise reader.fail(path, str(getattr(exc, "message", exc))) from None
    return P


def _parse_system(reader: _Reader, section: Dict[str, Any]):
    """Returns (system, preset or None, echo of the section)."""
    if not section:
        raise reader.fail("system", "section is required")
    if "preset" in section:
        extra = set(section) - {"preset", "masses"}
        if extra:
            raise reader.fail(f"system.{sorted(extra)[0]}", "cannot be combined with a preset")
        name = str(section["preset"])
        preset = get_preset(name)
        echo: Dict[str, Any] = {"preset": name}
        if "masses" in section:
            if name != "mass-spring":
                raise reader.fail("system.masses", "only the mass-spring preset takes masses")
            masses = [reader.number("system.masses", m, positive=True)
                      for m in (section["masses"] or [])]
            system = mass_spring_system(masses)
            echo["masses"] = masses
            return system, replace(preset, system=system), echo
        return preset.system, preset, echo

    for key in ("interval", "A", "B"):
        if key not in section:
            raise reader.fail(f"system.{key}", "required for an inline system")
    interval = section["interval"]
    if not isinstance(interval, list) or len(interval) != 2:
        raise reader.fail("system.interval", "expected [a, b]")
    a = reader.number("system.interval", interval[0])
    b = reader.number("system.interval", interval[1])
    A = _poly_matrix(reader, "system.A", section["A"])
    B = _poly_matrix(reader, "system.B", section["B"])
    if not a < b:
        raise reader.fail("system.interval", f"need a < b, got [{a}, {b}]")
    name = str(section.get("name", "custom"))
    try:
        system = ParametricSystem.from_polynomials(A, B, (a, b), name=name)
    except PceLqrError as exc:
        raise reader.fail("system", exc.message) from None
    echo = {"name": name, "interval": [a, b], "A": A.to_entries(), "B": B.to_entries()}
    return system, None, echo


def parse_run_config(data: Any, lines: Optional[Dict[str, int]] = None) -> RunConfig:
    """
    Build a RunConfig from already-loaded YAML/JSON data.

    Raises
    ------
    ConfigError
        Naming the dotted field (and the YAML line when known) of the first problem.
    """
    reader = _Reader(lines)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise reader.fail(unknown[0], f"unknown section; allowed: {', '.join(SECTIONS)}")

    system, preset, echo = _parse_system(reader, reader.section(data, "system", SYSTEM_KEYS))

    pce = reader.section(data, "pce", ("order", "quadrature_order"))
    default_order = preset.order if preset else None
    if "order" not in pce and default_order is None:
        raise reader.fail("pce.order", "required for an inline system")
    order = reader.number("pce.order", pce.get("order", default_order), kind=int)
    if order < 0:
        raise reader.fail("pce.order", "must be nonnegative")
    quad = pce.get("quadrature_order")
    quad = None if quad is None else reader.number("pce.quadrature_order", quad, kind=int, positive=True)

    cost = reader.section(data, "cost", ("Q", "R"))
    Q = reader.spd("cost.Q", cost["Q"], system.n_x) if "Q" in cost else (
        preset.Q if preset else reader.spd("cost.Q", "identity", system.n_x))
    R = reader.spd("cost.R", cost["R"], system.n_u) if "R" in cost else (
        preset.R if preset else reader.spd("cost.R", "identity", system.n_u))

    opt = reader.section(data, "optimizer", OPTIMIZER_KEYS)
    defaults = OptimizerConfig()
    try:
        optimizer = OptimizerConfig(
            step_size=reader.number("optimizer.step_size",
                                    opt.get("step_size", preset.step_size if preset else defaults.step_size)),
            grad_tol=reader.number("optimizer.grad_tol",
                                   opt.get("grad_tol", preset.grad_tol if preset else defaults.grad_tol)),
            max_iters=reader.number("optimizer.max_iters", opt.get("max_iters", defaults.max_iters), kind=int),
            line_search=str(opt.get("mode", defaults.line_search)),
            armijo_c=reader.number("optimizer.armijo_c", opt.get("armijo_c", defaults.armijo_c)),
            armijo_shrink=reader.number("optimizer.armijo_shrink",
                                        opt.get("armijo_shrink", defaults.armijo_shrink)),
            record_every=reader.number("optimizer.record_every",
                                       opt.get("record_every", defaults.record_every), kind=int),
        )
    except ValueError as exc:
        raise reader.fail("optimizer", str(exc)) from None

    gain_value = data.get("initial_gain", "auto")
    initial = None
    if not (gain_value is None or gain_value == "auto"):
        initial = reader.matrix("initial_gain", gain_value)
        if initial.shape != (system.n_u, system.n_x):
            raise reader.fail("initial_gain",
                              f"expected shape ({system.n_u}, {system.n_x}), got {initial.shape}")

    outputs = reader.section(data, "outputs", ("directory", "formats"))
    formats = tuple(outputs.get("formats", FORMATS))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise reader.fail("outputs.formats", f"unknown format {bad[0]!r}; allowed: {', '.join(FORMATS)}")

    val = reader.section(data, "validation", VALIDATION_KEYS)
    vd = ValidationSettings()
    orders = val.get("orders", list(vd.orders))
    if not isinstance(orders, list) or not orders:
        raise reader.fail("validation.orders", "expected a nonempty list of orders")
    validation = ValidationSettings(
        grid_points=reader.number("validation.grid_points", val.get("grid_points", vd.grid_points),
                                  kind=int, positive=True),
        grid_order=reader.number("validation.grid_order", val.get("grid_order", vd.grid_order),
                                 kind=int, positive=True),
        fd_step=reader.number("validation.fd_step", val.get("fd_step", vd.fd_step), positive=True),
        x0_count=reader.number("validation.x0_count", val.get("x0_count", vd.x0_count),
                               kind=int, positive=True),
        orders=tuple(reader.number("validation.orders", o, kind=int) for o in orders),
    )

    return RunConfig(
        system=system,
        system_source=echo,
        pce_order=order,
        quadrature_order=quad,
        Q=Q,
        R=R,
        optimizer=optimizer,
        initial_gain=initial,
        out_dir=str(outputs.get("directory", DEFAULT_OUT_DIR)),
        formats=formats,
        seed=reader.number("seed", data.get("seed", DEFAULT_SEED), kind=int),
        validation=validation,
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from None
    return parse_run_config(data, _line_index(text))


def preset_run_config(name: str) -> RunConfig:
    return parse_run_config({"system": {"preset": name}})


def load_gain_file(path, shape: Tuple[int, int]) -> np.ndarray:
    """
    Read a gain from YAML or JSON.

    Accepts a bare nested list, a mapping with a `gain` key, or a report.json
    (its `final_gain`).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"gain file {path} does not exist", field="--gain")
    try:
        text = path.read_text(encoding="utf-8")
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (OSError, ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse gain file {path}: {exc}", field="--gain") from None
    if isinstance(data, dict):
        data = data.get("final_gain", data.get("gain"))
    reader = _Reader()
    K = reader.matrix("--gain", data)
    if K.shape != tuple(shape):
        raise ConfigError(f"gain has shape {K.shape}, expected {tuple(shape)}", field="--gain")
    return K


def parse_orders(text: str) -> List[int]:
    """'1,2,3' or '1..6'."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            orders = list(range(lo, hi + 1))
        else:
            orders = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse orders {text!r}", field="--orders") from None
    if not orders or min(orders) < 0:
        raise ConfigError(f"orders must be a nonempty list of nonnegative integers, got {text!r}",
                          field="--orders")
    return orders
