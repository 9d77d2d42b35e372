"""Aligned-text grids and JSON-lines records for every report the harness writes."""
from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction


def fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, (int, float, Fraction)) and not isinstance(value, bool):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.4f}"
    return str(value)


def grid(title: str, row_names: Sequence[str], col_names: Sequence[str],
         cells: Mapping[tuple[str, str], object], corner: str = "") -> str:
    """A fixed-width table; ``cells`` maps (row, column) to a value or a ready string."""
    header = [corner, *col_names]
    body = [[r, *(fmt(cells.get((r, c))) for c in col_names)] for r in row_names]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    def line(row):
        return "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                         for i, (cell, w) in enumerate(zip(row, widths))).rstrip()
    rule = "-" * len(line(header))
    return "\n".join([title, rule, line(header), rule, *map(line, body), rule]) + "\n"


def _jsonable(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_jsonl(records: Iterable[Mapping], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")


def write_text(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
