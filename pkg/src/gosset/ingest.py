"""Historical series loading and windowing.

Input is a delimited text file (comma or tab, UTF-8) with a header row,
carrying either closing prices or precomputed log returns.  Column mapping
is by name with a positional fallback; dates are optional and ISO-8601 when
present.  Calibration consumes the returns as non-overlapping windows; a
trailing partial window is discarded.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np


class SeriesFormat(enum.Enum):
    CLOSES = "closes"
    RETURNS = "returns"


_CLOSE_NAMES = ("close", "adj close", "adj_close", "price", "value")
_RETURN_NAMES = ("return", "returns", "log_return", "log return")
_DATE_NAMES = ("date", "day", "timestamp")


@dataclass(frozen=True)
class ReturnSeries:
    """An ordered sequence of daily log returns, optionally dated."""

    returns: np.ndarray
    dates: Optional[List[date]] = None
    source: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "returns", np.asarray(self.returns, dtype=float))
        if self.returns.ndim != 1 or self.returns.size == 0:
            raise ValueError("returns must be a nonempty one-dimensional sequence")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("returns must be finite")
        if self.dates is not None:
            if len(self.dates) != self.returns.size:
                raise ValueError(
                    f"{len(self.dates)} dates for {self.returns.size} returns"
                )
            for prev, nxt in zip(self.dates, self.dates[1:]):
                if nxt <= prev:
                    raise ValueError(f"dates must be strictly increasing at {nxt}")


def _sniff_delimiter(sample: str) -> str:
    return "\t" if sample.count("\t") >= sample.count(",") else ","


def _resolve_column(
    header: List[str], column_map: Optional[Dict[str, Union[str, int]]], role: str,
    candidates: Sequence[str],
) -> Optional[int]:
    lowered = [h.strip().lower() for h in header]
    if column_map and role in column_map:
        spec = column_map[role]
        if isinstance(spec, int):
            if not (0 <= spec < len(header)):
                raise ValueError(f"column index {spec} out of range for {role!r}")
            return spec
        if spec.strip().lower() in lowered:
            return lowered.index(spec.strip().lower())
        raise ValueError(f"column {spec!r} for {role!r} not found in header {header}")
    for name in candidates:
        if name in lowered:
            return lowered.index(name)
    return None


def load_series(
    path: Union[str, Path],
    format: SeriesFormat = SeriesFormat.CLOSES,
    delimiter: Optional[str] = None,
    column_map: Optional[Dict[str, Union[str, int]]] = None,
) -> ReturnSeries:
    """Load a price or return series from a delimited file.

    CLOSES mode converts prices to log returns ln(P_{i+1}/P_i); RETURNS mode
    passes values through.  ``column_map`` may pin the value and date
    columns by header name or zero-based index, e.g. ``{"value": "Close",
    "date": 0}``.  Malformed rows are rejected with their line number.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    delim = delimiter or _sniff_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    header = rows[0]

    candidates = _CLOSE_NAMES if format is SeriesFormat.CLOSES else _RETURN_NAMES
    value_col = _resolve_column(header, column_map, "value", candidates)
    date_col = _resolve_column(header, column_map, "date", _DATE_NAMES)
    if value_col is None:
        # Positional fallback: a lone column is the value; with a date-like
        # first column, the second holds the values.
        if len(header) == 1:
            value_col = 0
        elif date_col is not None and len(header) > date_col + 1:
            value_col = date_col + 1
        elif len(header) >= 2 and date_col is None:
            value_col = 1
            date_col = 0
        else:
            raise ValueError(f"{path}: cannot locate a value column in {header}")

    values: List[float] = []
    dates: List[date] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) <= value_col:
            raise ValueError(f"{path}: line {line_no}: missing value column")
        raw = row[value_col].strip()
        try:
            value = float(raw)
        except ValueError:
            raise ValueError(
                f"{path}: line {line_no}: unparseable numeric {raw!r}"
            ) from None
        if not math.isfinite(value):
            raise ValueError(f"{path}: line {line_no}: non-finite value {raw!r}")
        if format is SeriesFormat.CLOSES and value <= 0.0:
            raise ValueError(f"{path}: line {line_no}: nonpositive price {raw!r}")
        values.append(value)
        if date_col is not None and date_col < len(row) and row[date_col].strip():
            try:
                dates.append(date.fromisoformat(row[date_col].strip()))
            except ValueError:
                raise ValueError(
                    f"{path}: line {line_no}: unparseable date {row[date_col]!r}"
                ) from None

    if format is SeriesFormat.CLOSES:
        if len(values) < 2:
            raise ValueError(f"{path}: need at least two prices to form a return")
        arr = np.diff(np.log(np.asarray(values)))
        # Returns are labeled by the later date of each price pair.
        out_dates = dates[1:] if len(dates) == len(values) else None
    else:
        arr = np.asarray(values)
        out_dates = dates if len(dates) == len(values) else None

    return ReturnSeries(returns=arr, dates=out_dates, source=str(path))


def segment(series: ReturnSeries, window_len: int) -> List[np.ndarray]:
    """Consecutive non-overlapping windows; the trailing partial window is
    discarded (floor(n / window_len) windows)."""
    if window_len < 2:
        raise ValueError(f"window length must be at least 2, got {window_len}")
    n = series.returns.size
    count = n // window_len
    return [
        series.returns[i * window_len : (i + 1) * window_len] for i in range(count)
    ]
