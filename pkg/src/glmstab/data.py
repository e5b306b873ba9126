"""Training datasets: an n x d instance matrix, labels, and a label cap."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError


@dataclass(frozen=True)
class Dataset:
    """A training sample of n instance/label pairs.

    Rows of ``X`` are the instances; ``y[i]`` is the label of row i and must
    lie in ``[-cap_Y, cap_Y]``.
    """

    X: np.ndarray
    y: np.ndarray
    cap_Y: float

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise DataError(f"X must be a 2-d matrix, got shape {X.shape}")
        n, d = X.shape
        if n < 2 or d < 1:
            raise DataError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if y.shape != (n,):
            raise DataError(f"labels must have shape ({n},), got {y.shape}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("dataset contains non-finite entries")
        if self.cap_Y <= 0:
            raise DataError(f"cap_Y must be positive, got {self.cap_Y}")
        if np.max(np.abs(y)) > self.cap_Y * (1 + 1e-12):
            j = int(np.argmax(np.abs(y)))
            raise DataError(
                f"label y[{j}] = {y[j]} outside [-{self.cap_Y}, {self.cap_Y}]"
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def load_dataset_csv(path, cap_Y: float) -> Dataset:
    """Read a dataset from CSV with header ``x1,...,xd,y``, one sample per row."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "y":
            raise DataError(f"{path}: expected header 'x1,...,xd,y', got {header}")
        d = len(header) - 1
        if header[:d] != [f"x{j + 1}" for j in range(d)]:
            raise DataError(f"{path}: expected header 'x1,...,xd,y', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 samples, got {len(rows)}")
    arr = np.array(rows, dtype=float)
    return Dataset(X=arr[:, :d], y=arr[:, d], cap_Y=cap_Y)


def save_dataset_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the CSV format read back by load_dataset_csv."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(dataset.d)] + ["y"])
        for i in range(dataset.n):
            writer.writerow([repr(v) for v in dataset.X[i]] + [repr(float(dataset.y[i]))])
