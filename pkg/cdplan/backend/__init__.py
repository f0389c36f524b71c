"""Backend exporters for run reports and suite results."""

from cdplan.backend.svg import SvgExporter
from cdplan.backend.table import TableExporter

__all__ = [
    "SvgExporter",
    "TableExporter",
]
