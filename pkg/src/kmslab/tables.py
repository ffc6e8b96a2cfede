"""Deterministic CSV serialization for sweep tables.

Floats are written with 17 significant digits so a reader can reproduce the
binary values exactly; identical inputs yield byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence


def format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def csv_body(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(csv_body(header, rows), encoding="ascii")
