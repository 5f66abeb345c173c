"""CSV output with '#'-prefixed metadata lines and round-trip float formatting."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, TextIO

import numpy as np

from .estimators import CdfEstimate, EstimatorTag

__all__ = [
    "format_value",
    "write_table",
    "read_table",
    "Table",
    "estimate_rows",
    "write_estimate",
    "read_estimate",
    "ESTIMATE_COLUMNS",
]

ESTIMATE_COLUMNS = ("t", "value", "estimator_tag", "h", "n", "H", "seed")


def format_value(v: Any) -> str:
    """Shortest round-trip text for floats, plain text otherwise; None is empty."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(v)


@dataclass
class Table:
    columns: list[str]
    rows: list[list[str]]
    meta: list[tuple[str, str]] = field(default_factory=list)

    def column(self, name: str) -> list[str]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _meta_text(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, sort_keys=True, separators=(",", ":"), default=str)


def write_table(out: TextIO, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                meta: Optional[Iterable[tuple[str, Any]]] = None) -> None:
    for key, value in meta or ():
        out.write(f"# {key}: {_meta_text(value)}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])


def read_table(source) -> Table:
    """Parse a table written by :func:`write_table` (path or text stream)."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    meta, body = [], []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta.append((key, value))
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    if not rows:
        raise ValueError("table has no header row")
    return Table(rows[0], rows[1:], meta)


def estimate_rows(est: CdfEstimate):
    for i, (t, v) in enumerate(zip(est.eval_points, est.values)):
        yield [float(t), float(v), est.estimator_tag.value, est.bandwidth_at(i), est.n, est.H, est.seed]


def write_estimate(out: TextIO, est: CdfEstimate, meta=None) -> None:
    write_table(out, ESTIMATE_COLUMNS, estimate_rows(est), meta)


def _opt(cast, s: str):
    return cast(s) if s != "" else None


def read_estimate(source) -> tuple[CdfEstimate, list[tuple[str, str]]]:
    table = read_table(source)
    if tuple(table.columns) != ESTIMATE_COLUMNS:
        raise ValueError(f"not an estimate table: columns {table.columns}")
    t = np.array([float(r[0]) for r in table.rows])
    values = np.array([float(r[1]) for r in table.rows])
    tags = {r[2] for r in table.rows}
    if len(tags) > 1:
        raise ValueError("mixed estimator tags in one table")
    tag = EstimatorTag(tags.pop()) if tags else EstimatorTag.EDF_SRS
    hs = [_opt(float, r[3]) for r in table.rows]
    bandwidth = None if not hs or hs[0] is None else np.array(hs, dtype=float)
    first = table.rows[0] if table.rows else ["", "", "", "", "0", "", ""]
    est = CdfEstimate(t, values, tag, bandwidth, int(first[4] or 0), _opt(int, first[5]), _opt(int, first[6]))
    return est, table.meta
