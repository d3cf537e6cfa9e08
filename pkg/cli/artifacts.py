# cli/artifacts.py
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from config import CSV_FLOAT_FORMAT
from domain.models import ConvergenceStudy, GradientCheck, OptimizationReport


def _fmt(value) -> str:
    """Numbers at full round-trip precision; everything else via str()."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), CSV_FLOAT_FORMAT)
    return str(value)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


# ---------------------------------------------------------
# PAYLOADS
# ---------------------------------------------------------
def report_payload(report: OptimizationReport, config_echo: Dict[str, Any],
                   timings: Dict[str, float]) -> Dict[str, Any]:
    """Contents of report.json."""
    return {
        "termination": report.termination,
        "diagnostics": report.diagnostics,
        "iterations": report.iterations,
        "final_gain": report.final_gain,
        "final_cost": report.final_cost,
        "final_grad_norm": report.final_grad_norm,
        "initial_gain": report.initial_gain,
        "initial_cost": report.iterates[0].cost,
        "timings": {**timings, "optimize": report.wall_time},
        "config": config_echo,
    }


def history_rows(report: OptimizationReport) -> List[List[Any]]:
    return [[r.iteration, r.cost, r.grad_norm, r.step] for r in report.iterates]


HISTORY_HEADER = ("iter", "cost", "grad_norm", "step")
CONVERGENCE_HEADER = ("N", "surrogate_cost", "abs_error")


def cost_profile_header(state_count: int) -> List[str]:
    return ["xi", "abscissa", "tr_cost"] + [f"x0_cost_{i}" for i in range(state_count)]


def cost_profile_rows(rows: List[Dict[str, Any]]) -> List[List[Any]]:
    return [[r["xi"], r["abscissa"], r["tr_cost"], *r["x0_costs"]] for r in rows]


def convergence_rows(study: ConvergenceStudy) -> List[List[Any]]:
    return [[N, c, e] for N, c, e in zip(study.orders, study.surrogate_costs, study.abs_errors)]


def validation_payload(*, gain: np.ndarray, true_cost: float, surrogate_cost: float,
                       order: int, check: GradientCheck, abscissas: np.ndarray,
                       grid: np.ndarray, admissible: bool, states: np.ndarray,
                       seed: int) -> Dict[str, Any]:
    """Contents of validation.json."""
    rel = abs(true_cost - surrogate_cost) / max(abs(true_cost), 1e-300)
    worst = int(np.argmax(abscissas)) if len(abscissas) else None
    return {
        "gain": gain,
        "true_cost": true_cost,
        "surrogate_cost": surrogate_cost,
        "surrogate_order": order,
        "relative_gap": rel,
        "gradient_check": {
            "max_rel_error": check.max_rel_error,
            "skipped": [list(s) for s in check.skipped],
        },
        "admissibility": {
            "admissible": admissible,
            "grid_points": len(grid),
            "max_abscissa": None if worst is None else float(abscissas[worst]),
            "worst_xi": None if worst is None else float(grid[worst]),
        },
        "initial_states": {"seed": seed, "states": states},
    }
