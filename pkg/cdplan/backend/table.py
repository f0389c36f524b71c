"""
Results tables for experiment suites.

Rows come from `run_experiment_suite`. Stage timings are wall-clock and
differ between runs, so they are left out unless asked for; without them
rerunning a suite reproduces the tables byte for byte.

Example:
    >>> rows = run_experiment_suite(load_suite("builtin:table1"))
    >>> print(TableExporter.to_csv(rows))
"""

import csv
import io
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from cdplan.core.serialization import FORMAT_VERSION, JsonSerializer
from cdplan.engine.suite import SuiteRow

__all__ = ["TableExporter"]

TIMING_COLUMNS = ("overlap_stage_seconds", "displacement_stage_seconds")


class TableExporter:
    """Exports suite rows to CSV and JSON."""

    @staticmethod
    def columns(include_timings: bool = False) -> List[str]:
        names = [f.name for f in fields(SuiteRow)]
        if include_timings:
            return names
        return [n for n in names if n not in TIMING_COLUMNS]

    @staticmethod
    def _records(rows: Sequence[SuiteRow], include_timings: bool) -> List[Dict[str, Any]]:
        keep = TableExporter.columns(include_timings)
        return [{k: v for k, v in asdict(row).items() if k in keep} for row in rows]

    @staticmethod
    def to_csv(rows: Sequence[SuiteRow], include_timings: bool = False) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(
            buffer, fieldnames=TableExporter.columns(include_timings), lineterminator="\n"
        )
        writer.writeheader()
        for record in TableExporter._records(rows, include_timings):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in record.items()})
        return buffer.getvalue()

    @staticmethod
    def to_dict(rows: Sequence[SuiteRow], include_timings: bool = False) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "columns": TableExporter.columns(include_timings),
            "rows": TableExporter._records(rows, include_timings),
        }

    @staticmethod
    def export(
        rows: Sequence[SuiteRow], out_dir: Union[str, Path], stem: str = "results"
    ) -> List[Path]:
        """
        Write `<stem>.csv` and `<stem>.json` without timings, plus
        `timings.csv` with every column.
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [
            out / f"{stem}.csv",
            JsonSerializer.save_json(TableExporter.to_dict(rows), out / f"{stem}.json"),
            out / "timings.csv",
        ]
        written[0].write_text(TableExporter.to_csv(rows))
        written[2].write_text(TableExporter.to_csv(rows, include_timings=True))
        return written
