# src/cli/output.py

from __future__ import annotations

import csv
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

from src.protocol.runner import format_number


Cell = Union[int, float, str, bool]


def _cell(value: Cell) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format_number(float(value))


def _write(handle: TextIO, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])


def write_table(
    header: Sequence[str],
    rows: Iterable[Sequence[Cell]],
    path: Optional[Union[str, Path]] = None,
) -> None:
    """Comma-separated table with a one-line header, to ``path`` or stdout."""
    if path is None:
        _write(sys.stdout, header, rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as handle:
        _write(handle, header, rows)
