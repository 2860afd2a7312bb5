"""Dataset container and CSV ingestion.

Features are min-max scaled to [0, 1] per column at load time so that the
exponential similarity kernel and the density bandwidths downstream operate
on commensurate scales. Scaling parameters are computed once per file,
before any partitioning, so all derived client datasets share one scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ValidationError


@dataclass
class Dataset:
    """A dense real-valued dataset with optional integer ground-truth labels.

    Treated as immutable after construction; safe to share across threads.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError(f"values must be 2-d, got shape {self.values.shape}")
        n, d = self.values.shape
        if n < 1 or d < 1:
            raise ValidationError(f"dataset must have n >= 1 and d >= 1, got {n}x{d}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("dataset contains non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise ValidationError(
                    f"labels length {self.labels.shape} does not match n={n}")
            if np.any(self.labels < 0):
                raise ValidationError("labels must be non-negative integers")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass
class AffiliationMatrix:
    """A hard partition: one cluster index in [0, k) per object."""

    assignments: np.ndarray
    k: int

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        if self.assignments.ndim != 1:
            raise ValidationError("assignments must be a 1-d index vector")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.assignments.size and (
            self.assignments.min() < 0 or self.assignments.max() >= self.k
        ):
            raise ValidationError("assignment index out of range [0, k)")

    @property
    def n(self) -> int:
        return self.assignments.size


def minmax_scale(values: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to 0."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min(axis=0)
    span = values.max(axis=0) - lo
    out = np.zeros_like(values)
    nz = span > 0
    out[:, nz] = (values[:, nz] - lo[nz]) / span[nz]
    return out


def load_csv(path, has_labels: bool = False, name: str = "") -> Dataset:
    """Load a comma-separated numeric file into a scaled :class:`Dataset`.

    Every row must have the same number of fields. With ``has_labels`` the
    last column is read as an integer class label and excluded from scaling.

    Raises:
        DataFormatError: empty file, ragged rows, or unparseable fields
            (the message carries the 1-based row number).
        ValidationError: non-finite feature values.
    """
    rows = []
    labels = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
                if has_labels and width < 2:
                    raise DataFormatError(
                        f"row {lineno}: need at least one feature column besides the label")
            elif len(fields) != width:
                raise DataFormatError(
                    f"row {lineno}: expected {width} fields, got {len(fields)}")
            try:
                numbers = [float(f) for f in fields]
            except ValueError as exc:
                raise DataFormatError(f"row {lineno}: {exc}") from None
            if has_labels:
                lab = numbers[-1]
                if lab != int(lab) or lab < 0:
                    raise DataFormatError(
                        f"row {lineno}: label must be a non-negative integer, got {fields[-1]}")
                labels.append(int(lab))
                numbers = numbers[:-1]
            rows.append(numbers)
    if not rows:
        raise DataFormatError(f"{path}: empty input")
    values = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0, 0]) + 1
        raise ValidationError(f"row {bad}: non-finite feature value")
    return Dataset(
        values=minmax_scale(values),
        labels=np.asarray(labels, dtype=np.int64) if has_labels else None,
        name=name or str(path),
    )
