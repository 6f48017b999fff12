"""Flat CSV tables: comma separated, header row, UTF-8, LF line endings.

Floats are written with ``repr`` so every value reads back bit-for-bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, center_and_normalize
from .errors import CsvFormatError


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_table(path) -> tuple[list, list]:
    """Header and raw string rows; raises CsvFormatError on ragged input."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {lineno} has {len(row)} fields, header has {len(header)}"
                )
            rows.append(row)
    return [h.strip() for h in header], rows


def read_numeric(path) -> tuple[list, np.ndarray]:
    header, rows = read_table(path)
    out = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            cell = cell.strip()
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if cell == "" or not math.isfinite(v):
                raise CsvFormatError(
                    f"{path}: missing or non-numeric value {cell!r} at line {i + 2}, column {header[j]!r}"
                )
            out[i, j] = v
    return header, out


@dataclass
class CsvDataset:
    header: list
    X: np.ndarray
    y: np.ndarray
    response: str
    normalized: bool = True
    x_mean: np.ndarray = field(default=None, repr=False)
    x_norm: np.ndarray = field(default=None, repr=False)

    @property
    def predictors(self) -> list:
        return [h for h in self.header if h != self.response]

    def to_dataset(self) -> Dataset:
        return Dataset(self.X, self.y, names=self.predictors)

    def normalization_check(self) -> tuple[float, float]:
        """(max |column mean|, max | ||column|| - 1 |)."""
        means = np.abs(self.X.mean(axis=0))
        norms = np.abs(np.linalg.norm(self.X, axis=0) - 1.0)
        return float(means.max(initial=0.0)), float(norms.max(initial=0.0))


def read_csv_dataset(path, response: str = "y", normalize: bool = True) -> CsvDataset:
    """Load a regression table; with ``normalize`` the predictors are centered
    and scaled to unit norm and the response is centered."""
    header, values = read_numeric(path)
    if response not in header:
        raise CsvFormatError(f"{path}: response column {response!r} not in header")
    if len(set(header)) != len(header):
        raise CsvFormatError(f"{path}: duplicate column names")
    if values.shape[0] < 2:
        raise CsvFormatError(f"{path}: need at least two data rows")
    j = header.index(response)
    y = values[:, j].copy()
    X = np.delete(values, j, axis=1)
    mean = norm = None
    if normalize:
        zero = np.flatnonzero(X.std(axis=0) == 0.0)
        if zero.size:
            names = [h for h in header if h != response]
            raise CsvFormatError(f"{path}: constant column {names[zero[0]]!r} cannot be normalized")
        X, mean, norm = center_and_normalize(X)
        y = y - y.mean()
    return CsvDataset(header, X, y, response, normalize, mean, norm)
