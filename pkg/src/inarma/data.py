"""Count series container and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for input files that cannot be parsed into a count series."""


@dataclass(frozen=True)
class CountSeries:
    """Non-empty sequence of non-negative integer counts with optional time labels."""

    values: np.ndarray
    labels: Optional[tuple] = field(default=None)

    def __post_init__(self) -> None:
        raw = np.asarray(self.values)
        if raw.ndim != 1 or raw.size == 0:
            raise DataError("a count series must be a non-empty 1-d sequence")
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise DataError("counts must be integers")
        elif raw.dtype.kind not in "iu":
            raise DataError(f"counts must be integers, got dtype {raw.dtype}")
        values = raw.astype(np.int64)
        if np.any(values < 0):
            raise DataError("counts must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != values.size:
                raise DataError("labels must have the same length as values")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, item):
        if isinstance(item, slice):
            labels = self.labels[item] if self.labels is not None else None
            return CountSeries(self.values[item], labels)
        return int(self.values[item])

    @property
    def max(self) -> int:
        return int(self.values.max())

    def mean(self) -> float:
        return float(self.values.mean())

    def variance(self) -> float:
        """Sample variance with denominator ``n - 1``."""
        return float(self.values.var(ddof=1)) if len(self) > 1 else 0.0

    def sample_acf(self, max_lag: int) -> np.ndarray:
        """Sample autocorrelations at lags ``0..max_lag`` (biased estimator)."""
        return sample_acf(self.values, max_lag)


def as_series(x) -> CountSeries:
    return x if isinstance(x, CountSeries) else CountSeries(np.asarray(x))


def sample_acf(values: Sequence[float], max_lag: int) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0.0:
        return np.full(max_lag + 1, np.nan)
    return np.array([np.dot(x[: x.size - h], x[h:]) / denom for h in range(max_lag + 1)])


def _parse_count(text: str, row: int) -> int:
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {row}: cannot parse {text!r} as a count") from None
    if value != int(value) or value < 0:
        raise DataError(f"row {row}: {text!r} is not a non-negative integer")
    return int(value)


def read_counts(
    path: str | Path,
    column: str | int | None = None,
    header: bool = False,
    rows: tuple[int, int] | None = None,
) -> CountSeries:
    """Read a count series from a CSV or plain text file.

    Either a bare column of counts or a ``label,count`` layout is accepted.
    ``column`` selects the count column by header name or 0-based index; by
    default the last column holds the counts and, when there are two or more
    columns, the first holds labels. ``rows`` is an inclusive 1-based range
    of data rows to keep, e.g. ``(501, 870)``.
    """
    with open(path, newline="") as fh:
        records = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header:
        if not records:
            raise DataError(f"{path}: empty file")
        names = [c.strip() for c in records[0]]
        records = records[1:]
        first_row = 2
    else:
        names = None
        first_row = 1
    if not records:
        raise DataError(f"{path}: no data rows")

    ncol = len(records[0])
    if column is None:
        idx = ncol - 1
    elif isinstance(column, int) or str(column).lstrip("-").isdigit():
        idx = int(column)
    elif names is not None and column in names:
        idx = names.index(column)
    else:
        raise DataError(f"{path}: column {column!r} not found")

    counts, labels = [], []
    for offset, rec in enumerate(records):
        row = first_row + offset
        try:
            counts.append(_parse_count(rec[idx], row))
        except IndexError:
            raise DataError(f"row {row}: missing column {idx}") from None
        labels.append(rec[0].strip() if ncol > 1 and idx != 0 else None)

    if rows is not None:
        lo, hi = rows
        if not 1 <= lo <= hi <= len(counts):
            raise DataError(f"row range {lo}:{hi} outside 1:{len(counts)}")
        counts, labels = counts[lo - 1 : hi], labels[lo - 1 : hi]
    has_labels = all(lbl is not None for lbl in labels)
    return CountSeries(np.array(counts, dtype=np.int64), tuple(labels) if has_labels else None)


def write_counts(path, values, latent=None) -> None:
    """Write one count per line, with an optional second column for a latent state."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if latent is None:
            for v in values:
                writer.writerow([int(v)])
        else:
            for v, s in zip(values, latent):
                writer.writerow([int(v), int(s)])
