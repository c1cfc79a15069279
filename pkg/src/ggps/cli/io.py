"""Dataset ingestion, bundled data and numeric table output."""

from __future__ import annotations

import csv
import math
import os
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import DomainError, EmptyDataset, ParseError
from ..estimation import Dataset

#: Environment variable naming the default directory for output files.
OUTPUT_DIR_ENV = "GGPS_OUTPUT_DIR"
BUNDLED = ("glass_fibers", "phosphorus")
_BUNDLED_PREFIX = "bundled:"
SIG_DIGITS = 9


def bundled_path(name: str):
    """Path-like handle to a data file shipped with the package."""
    if name not in BUNDLED:
        raise DomainError(f"no bundled dataset {name!r}; choose from {BUNDLED}")
    return resources.files("ggps").joinpath("data", f"{name}.txt")


def load_bundled(name: str) -> Dataset:
    with resources.as_file(bundled_path(name)) as path:
        data = ingest(path)
    return Dataset(data.values, label=name, source=f"{_BUNDLED_PREFIX}{name}")


def _parse_value(text: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(line, f"not a number: {text.strip()!r}") from None
    if not math.isfinite(v):
        raise ParseError(line, f"value is not finite: {text.strip()!r}")
    if v <= 0:
        raise ParseError(line, f"lifetimes must be positive, got {v!r}")
    return v


def _content_lines(path):
    with open(path, encoding="utf-8", newline="") as fh:
        for number, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text and not text.startswith("#"):
                yield number, text


def _read_lines(path) -> list[float]:
    return [_parse_value(text, number) for number, text in _content_lines(path)]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_csv_column(path, column: str) -> list[float]:
    rows = [(number, next(csv.reader([text]))) for number, text in _content_lines(path)]
    if not rows:
        return []
    first_line, first = rows[0]
    has_header = not all(_is_number(cell) for cell in first)
    if column.lstrip("-").isdigit():
        idx = int(column)
        if idx < 0:
            raise DomainError(f"column index must be >= 0, got {idx}")
    else:
        if not has_header:
            raise ParseError(first_line, f"no header row to look up column {column!r}")
        names = [c.strip() for c in first]
        if column not in names:
            raise ParseError(first_line, f"header has no column {column!r}")
        idx = names.index(column)
    out = []
    for number, cells in rows[1:] if has_header else rows:
        if idx >= len(cells):
            raise ParseError(number, f"row has {len(cells)} fields, column {idx} missing")
        out.append(_parse_value(cells[idx], number))
    return out


def ingest(path, fmt: str = "lines") -> Dataset:
    """Read positive lifetimes from a text file.

    ``fmt`` is ``lines`` (one value per line) or ``csv:COL`` where ``COL`` is
    a header name or a 0-based column index.  Blank lines and lines starting
    with ``#`` are skipped.  ``path`` may also be ``bundled:NAME`` for a data
    file shipped with the package.
    """
    text_path = str(path)
    if text_path.startswith(_BUNDLED_PREFIX):
        return load_bundled(text_path[len(_BUNDLED_PREFIX):])
    if fmt == "lines":
        values = _read_lines(path)
    elif fmt.startswith("csv:") and len(fmt) > 4:
        values = _read_csv_column(path, fmt[4:])
    else:
        raise DomainError(f"format must be 'lines' or 'csv:COL', got {fmt!r}")
    if not values:
        raise EmptyDataset(f"{text_path}: no observations")
    return Dataset(np.array(values), label=Path(text_path).stem, source=text_path)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def resolve_output(path, default_name: str) -> Path:
    """``path`` as given, or ``default_name`` inside the default output directory."""
    if path is not None:
        return Path(path)
    return default_output_dir() / default_name


def fmt_float(v) -> str:
    if v is None:
        return "NA"
    return f"{float(v):.{SIG_DIGITS}g}"


def format_table(columns, rows, header_lines=()) -> str:
    """Tab-separated table under a ``#`` header; floats to 9 significant digits."""
    out = [f"# {line}" for line in header_lines]
    out.append("# " + "\t".join(columns))
    for row in rows:
        out.append("\t".join(c if isinstance(c, str) else fmt_float(c) for c in row))
    return "\n".join(out) + "\n"


def read_table(text: str) -> tuple[list[str], list[list[str]]]:
    """Column names and raw rows of a table written by :func:`format_table`."""
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    if not header:
        raise DomainError("table has no header")
    columns = header[-1][2:].split("\t")
    rows = [ln.split("\t") for ln in lines if ln and not ln.startswith("#")]
    return columns, rows
