"""Dataset ingestion and the correlation matrix used by the Gaussian CI test."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    """Samples x variables matrix with one name per column."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {values.shape}")
        names = tuple(str(s) for s in self.names)
        if len(names) != values.shape[1]:
            raise DataError(f"{len(names)} names for {values.shape[1]} columns")
        if any(not s for s in names):
            raise DataError("variable names must be non-empty")
        if len(set(names)) != len(names):
            dupes = sorted({s for s in names if names.count(s) > 1})
            raise DataError(f"duplicate variable names: {', '.join(dupes)}")
        if values.shape[0] < 2 or values.shape[1] < 2:
            raise DataError(f"need at least 2 samples and 2 variables, got {values.shape}")
        if not np.isfinite(values).all():
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {row + 1}, column {names[col]!r}")
        values.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None

    def permute(self, order: Sequence[int]) -> "Dataset":
        """Return a copy whose column ``k`` is column ``order[k]`` of this one."""
        order = list(order)
        return Dataset(tuple(self.names[i] for i in order), self.values[:, order])

    def standardized(self) -> "Dataset":
        v = self.values
        return Dataset(self.names, (v - v.mean(axis=0)) / v.std(axis=0, ddof=1))


@dataclass(frozen=True)
class CorrelationMatrix:
    r: np.ndarray
    n: int

    def __post_init__(self):
        r = np.array(self.r, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DataError(f"correlation matrix must be square, got {r.shape}")
        r.flags.writeable = False
        object.__setattr__(self, "r", r)

    @property
    def p(self) -> int:
        return self.r.shape[0]


def load_dataset(path, delimiter: str = ",", has_header: bool = True) -> Dataset:
    """Read a delimited text file with rows = samples and columns = variables.

    Column order is preserved exactly as on disk. Without a header the
    columns are named ``V1..Vp``. Missing, non-numeric and non-finite cells
    are rejected with the offending line, data row and column.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter, skipinitialspace=delimiter == " "))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc

    lines = [(i + 1, row) for i, row in enumerate(rows) if row and any(c.strip() for c in row)]
    if not lines:
        raise DataError(f"{path} is empty")
    if has_header:
        _, header = lines[0]
        names = [c.strip() for c in header]
        lines = lines[1:]
    else:
        names = [f"V{j + 1}" for j in range(len(lines[0][1]))]
    p = len(names)
    if len(set(names)) != p:
        dupes = sorted({s for s in names if names.count(s) > 1})
        raise DataError(f"duplicate header names: {', '.join(dupes)}")

    values = np.empty((len(lines), p))
    for r, (lineno, row) in enumerate(lines):
        if len(row) != p:
            raise DataError(f"line {lineno} (row {r + 1}) has {len(row)} fields, expected {p}")
        for c, cell in enumerate(row):
            try:
                x = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric cell {cell.strip()!r} at line {lineno} (row {r + 1}), column {names[c]!r}"
                ) from None
            if not math.isfinite(x):
                raise DataError(
                    f"non-finite cell {cell.strip()!r} at line {lineno} (row {r + 1}), column {names[c]!r}"
                )
            values[r, c] = x
    return Dataset(tuple(names), values)


def write_dataset(d: Dataset, path, delimiter: str = ",") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(d.names)
        for row in d.values:
            w.writerow([repr(float(x)) for x in row])


def correlations(d: Dataset) -> CorrelationMatrix:
    """Pearson correlation of every column pair, in double precision."""
    flat = np.flatnonzero(np.ptp(d.values, axis=0) == 0.0)
    if flat.size:
        raise DataError(f"column {d.names[flat[0]]!r} has zero variance")
    x = d.values - d.values.mean(axis=0)
    ss = np.einsum("ij,ij->j", x, x)
    xs = x / np.sqrt(ss)
    r = xs.T @ xs
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(r, d.n)
