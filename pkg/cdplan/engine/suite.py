"""
Experiment suites: scenarios × planner settings, one pipeline run per cell.

A suite file is JSON:

    {
      "version": 1,
      "workers": 2,
      "cells": [
        {"name": "shortest", "scenario": "builtin:abcd", "overrides": {"mode": "shortest"}},
        {"name": "L21_Mi0.3", "scenario": "scenes/abcd.json", "overrides": {"mi": 0.3}}
      ]
    }

Scenario paths are relative to the suite file. Overrides use the CLI names
(`mode`, `horizon`, `mi`, `seed_starts`, `max_steps`).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from cdplan.core.errors import CdplanError, ParseError, ValidationError
from cdplan.core.ir import CostKind, Scenario
from cdplan.core.serialization import JsonSerializer
from cdplan.engine.displacement import DisplacementConfig
from cdplan.engine.pipeline import run_pipeline
from cdplan.scenarios import BUILTIN_PREFIX, get_scenario

logger = logging.getLogger(__name__)

OVERRIDE_KEYS = ("mode", "horizon", "mi", "seed_starts", "max_steps")


@dataclass(frozen=True)
class SuiteCell:
    name: str
    scenario: str
    overrides: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SuiteConfig:
    cells: Tuple[SuiteCell, ...]
    workers: int = 1
    name: str = "suite"
    base_dir: Optional[Path] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        names = [c.name for c in self.cells]
        if len(set(names)) != len(names):
            raise ValueError("Suite cell names must be unique")


@dataclass
class SuiteRow:
    """One results-table row."""

    cell: str
    scenario: str
    mode: str
    horizon: int
    mi: float
    status: str
    total_displacement_magnitude: float = 0.0
    displaced_count: int = 0
    overlap_stage_seconds: float = 0.0
    displacement_stage_seconds: float = 0.0
    error: str = ""


def apply_overrides(
    scenario: Scenario,
    overrides: Mapping[str, Any],
    config: Optional[DisplacementConfig] = None,
) -> Tuple[Scenario, DisplacementConfig]:
    """New scenario and displacement config with the given fields replaced."""
    config = config or DisplacementConfig()
    unknown = sorted(set(overrides) - set(OVERRIDE_KEYS))
    if unknown:
        raise ValidationError(f"Unknown override {unknown[0]!r}", field=unknown[0])

    planner = scenario.planner
    try:
        if overrides.get("mode") is not None:
            planner = replace(planner, mode=replace(planner.mode, kind=CostKind(overrides["mode"])))
        if overrides.get("horizon") is not None:
            planner = replace(planner, horizon=int(overrides["horizon"]))
        if overrides.get("max_steps") is not None:
            planner = replace(planner, max_steps=int(overrides["max_steps"]))
        if overrides.get("mi") is not None:
            planner = replace(planner, weights=replace(planner.weights, Mi=float(overrides["mi"])))
        if overrides.get("seed_starts") is not None:
            config = replace(config, seed_starts=int(overrides["seed_starts"]))
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Invalid override: {e}") from e
    return replace(scenario, planner=planner), config


def resolve_scenario(ref: str, base_dir: Optional[Path] = None) -> Scenario:
    """A `builtin:<name>` reference or a scenario file path."""
    if ref.startswith(BUILTIN_PREFIX):
        try:
            return get_scenario(ref)
        except KeyError as e:
            raise ValidationError(str(e.args[0]), field="scenario") from None
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return JsonSerializer.load_scenario(path)


def _cell(name: str, scenario: str, **overrides: Any) -> SuiteCell:
    return SuiteCell(name, scenario, overrides)


PRESETS: Dict[str, SuiteConfig] = {
    "table1": SuiteConfig(
        name="table1",
        cells=(
            _cell("shortest", "builtin:abcd", mode="shortest"),
            _cell("L11_Mi0.7", "builtin:abcd", horizon=11, mi=0.7),
            _cell("L21_Mi0.3", "builtin:abcd", horizon=21, mi=0.3),
            _cell("L21_Mi0.5", "builtin:abcd", horizon=21, mi=0.5),
            _cell("L21_Mi0.7", "builtin:abcd", horizon=21, mi=0.7),
        ),
    ),
    "table2": SuiteConfig(
        name="table2",
        cells=(
            _cell("shortest", "builtin:two_rooms", mode="shortest", horizon=10),
            _cell("mcr_Mi0.5", "builtin:two_rooms", mode="mcr", horizon=10, mi=0.5),
            _cell("mcr_Mi0.7", "builtin:two_rooms", mode="mcr", horizon=10, mi=0.7),
        ),
    ),
}


def suite_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> SuiteConfig:
    if not isinstance(data, dict):
        raise ParseError("A suite file must contain a JSON object")
    cells_data = data.get("cells")
    if not isinstance(cells_data, list) or not cells_data:
        raise ParseError("A suite needs a non-empty 'cells' list", field="cells")
    cells = []
    for i, item in enumerate(cells_data):
        if not isinstance(item, dict) or "scenario" not in item:
            raise ParseError(f"Suite cell {i} needs a 'scenario'", field="cells")
        overrides = item.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ParseError(f"Suite cell {i} overrides must be an object", field="overrides")
        cells.append(SuiteCell(str(item.get("name", f"cell{i}")), str(item["scenario"]), overrides))
    try:
        return SuiteConfig(
            cells=tuple(cells),
            workers=int(data.get("workers", 1)),
            name=str(data.get("name", "suite")),
            base_dir=base_dir,
        )
    except ValueError as e:
        raise ValidationError(str(e)) from e


def load_suite(ref: Union[str, Path]) -> SuiteConfig:
    """A preset (`builtin:table1`) or a suite JSON file."""
    text = str(ref)
    if text.startswith(BUILTIN_PREFIX):
        key = text[len(BUILTIN_PREFIX):]
        if key not in PRESETS:
            raise ValidationError(
                f"Unknown suite {text!r}; available: {', '.join(sorted(PRESETS))}", field="suite"
            )
        return PRESETS[key]
    path = Path(ref)
    return suite_from_dict(JsonSerializer.load_document(path, "suite"), base_dir=path.parent)


def run_cell(cell: SuiteCell, base_dir: Optional[Path] = None, out_dir: Optional[Path] = None) -> SuiteRow:
    """Run one cell; failures become a row with status "error"."""
    try:
        scenario, config = apply_overrides(resolve_scenario(cell.scenario, base_dir), cell.overrides)
    except (CdplanError, FileNotFoundError, ValueError) as e:
        logger.warning("suite cell %s: %s", cell.name, e)
        return SuiteRow(cell.name, cell.scenario, "", 0, 0.0, "error", error=str(e))

    planner = scenario.planner
    row = SuiteRow(
        cell=cell.name,
        scenario=scenario.name,
        mode=planner.mode.kind.value,
        horizon=planner.horizon,
        mi=planner.weights.Mi,
        status="error",
    )
    try:
        report = run_pipeline(scenario, config=config, raise_on_failure=False)
    except (CdplanError, ValueError, ArithmeticError) as e:
        logger.warning("suite cell %s failed: %s", cell.name, e)
        row.error = str(e)
        return row

    row.status = report.status
    row.total_displacement_magnitude = report.metrics.total_displacement_magnitude
    row.displaced_count = report.metrics.displaced_count
    row.overlap_stage_seconds = report.metrics.overlap_stage_seconds
    row.displacement_stage_seconds = report.metrics.displacement_stage_seconds
    if out_dir is not None:
        cell_dir = out_dir / cell.name
        JsonSerializer.save_report(report, cell_dir / "report.json")
        JsonSerializer.save_json(JsonSerializer.timings_to_dict(report), cell_dir / "timings.json")
    logger.info(
        "suite cell %s: %s, magnitude %.4f m, %d displaced",
        cell.name,
        row.status,
        row.total_displacement_magnitude,
        row.displaced_count,
    )
    return row


def run_experiment_suite(config: SuiteConfig, out_dir: Optional[Union[str, Path]] = None) -> List[SuiteRow]:
    """
    Run every cell and return the rows in cell order.

    Cells run in worker processes when `config.workers` > 1. Each cell
    writes only inside its own directory under `out_dir`.
    """
    out = Path(out_dir) if out_dir is not None else None
    if config.workers == 1 or len(config.cells) == 1:
        return [run_cell(c, config.base_dir, out) for c in config.cells]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(run_cell, c, config.base_dir, out) for c in config.cells]
        return [f.result() for f in futures]
