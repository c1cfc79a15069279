"""Command-line interface and its file formats."""

from .io import bundled_path, format_table, ingest, load_bundled, read_table
from .main import main
from .report import ModelEntry, RunReport, read_report, render_report, write_report
from .simstudy import CellResult, SimStudyConfig, run_simstudy

__all__ = [
    "CellResult",
    "ModelEntry",
    "RunReport",
    "SimStudyConfig",
    "bundled_path",
    "format_table",
    "ingest",
    "load_bundled",
    "main",
    "read_report",
    "read_table",
    "render_report",
    "run_simstudy",
    "write_report",
]
