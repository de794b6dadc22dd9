"""
Balanced measurement grid

Y[i, j, k] is the k-th replicate measurement of subject i by observer j.
Index a counts subjects and b counts observers, following the model terms
(A = subject effect, B = observer effect). Some prose descriptions of this
design swap the two words; the model definition is authoritative here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .core.error_handler import (
    DegenerateDesign,
    DuplicateCell,
    IngestionError,
    MalformedRow,
    NonFiniteValue,
    UnbalancedDesign,
)

logger = logging.getLogger(__name__)

LONG_COLUMNS = ["subject", "observer", "replicate", "value"]


@dataclass(frozen=True)
class Design:
    """Numbers of subjects (a), observers (b) and replicates per cell (c)."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise DegenerateDesign(f"{name} must be an integer, got {v!r}")
            if v <= 1:
                raise DegenerateDesign(f"{name} must be > 1, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return self.a * self.b * self.c

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "N": self.n}


@dataclass(frozen=True)
class LongRecord:
    subject: str
    observer: str
    replicate: int
    value: float


@dataclass(frozen=True, eq=False)
class MeasurementGrid:
    """
    Complete a x b x c array of finite measurements with axis labels.

    The value array is copied on construction and made read-only, so a grid
    can be shared freely between threads.
    """

    design: Design
    values: np.ndarray
    subject_labels: tuple[str, ...]
    observer_labels: tuple[str, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != self.design.shape:
            raise UnbalancedDesign(f"value array has shape {arr.shape}, design expects {self.design.shape}")
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteValue(f"non-finite value at cell (subject={bad[0]}, observer={bad[1]}, replicate={bad[2]})")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

        subjects = tuple(str(s) for s in self.subject_labels)
        observers = tuple(str(o) for o in self.observer_labels)
        if len(subjects) != self.design.a or len(observers) != self.design.b:
            raise UnbalancedDesign("label counts do not match the design")
        if len(set(subjects)) != len(subjects):
            raise DuplicateCell("subject labels are not unique")
        if len(set(observers)) != len(observers):
            raise DuplicateCell("observer labels are not unique")
        object.__setattr__(self, "subject_labels", subjects)
        object.__setattr__(self, "observer_labels", observers)

    @classmethod
    def from_array(cls, values, subject_labels: Sequence[str] | None = None, observer_labels: Sequence[str] | None = None) -> "MeasurementGrid":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 3:
            raise UnbalancedDesign(f"expected a 3-index array, got {arr.ndim} dimensions")
        design = Design(*arr.shape)
        subjects = subject_labels if subject_labels is not None else [str(i + 1) for i in range(design.a)]
        observers = observer_labels if observer_labels is not None else [str(j + 1) for j in range(design.b)]
        return cls(design=design, values=arr, subject_labels=tuple(subjects), observer_labels=tuple(observers))

    @property
    def reference(self) -> float:
        """First measurement; every mean is taken after subtracting it."""
        return float(self.values.flat[0])

    def centred(self) -> np.ndarray:
        """Values minus the reference. Exactly zero for a constant grid."""
        if "centred" not in self._cache:
            shifted = self.values - self.reference
            shifted.flags.writeable = False
            self._cache["centred"] = shifted
        return self._cache["centred"]

    def cell_means(self) -> np.ndarray:
        if "cell" not in self._cache:
            means = self.centred().mean(axis=2) + self.reference
            means.flags.writeable = False
            self._cache["cell"] = means
        return self._cache["cell"]

    def subject_means(self) -> np.ndarray:
        return self.centred().mean(axis=(1, 2)) + self.reference

    def observer_means(self) -> np.ndarray:
        return self.centred().mean(axis=(0, 2)) + self.reference

    def grand_mean(self) -> float:
        return float(self.centred().mean()) + self.reference

    def take_subjects(self, indices: Sequence[int], relabel: bool = True) -> "MeasurementGrid":
        """
        Grid built from the given subject rows, in order.

        With relabel=True every drawn row becomes a distinct subject, so
        repeated indices keep the design balanced.
        """
        idx = np.asarray(indices, dtype=np.intp)
        if idx.shape != (self.design.a,):
            raise UnbalancedDesign(f"need exactly {self.design.a} subject indices, got {idx.shape}")
        if relabel:
            labels = tuple(f"{self.subject_labels[i]}@{pos + 1}" for pos, i in enumerate(idx))
        else:
            labels = tuple(self.subject_labels[i] for i in idx)
        return MeasurementGrid(
            design=self.design,
            values=self.values[idx],
            subject_labels=labels,
            observer_labels=self.observer_labels,
        )

    def scaled(self, factor: float, shift: float = 0.0) -> "MeasurementGrid":
        return MeasurementGrid(
            design=self.design,
            values=self.values * factor + shift,
            subject_labels=self.subject_labels,
            observer_labels=self.observer_labels,
        )

    def to_records(self) -> list[LongRecord]:
        a, b, c = self.design.shape
        out: list[LongRecord] = []
        for i in range(a):
            for j in range(b):
                for k in range(c):
                    out.append(LongRecord(self.subject_labels[i], self.observer_labels[j], k + 1, float(self.values[i, j, k])))
        return out

    def to_frame(self) -> pd.DataFrame:
        a, b, c = self.design.shape
        return pd.DataFrame(
            {
                "subject": np.repeat(self.subject_labels, b * c),
                "observer": np.tile(np.repeat(self.observer_labels, c), a),
                "replicate": np.tile(np.arange(1, c + 1), a * b),
                "value": self.values.reshape(-1),
            }
        )


def ingest_long(records: Iterable[LongRecord]) -> MeasurementGrid:
    """
    Assemble a balanced grid from long-format records.

    Subjects and observers are ordered by first appearance; replicates by
    their index, which must run 1..c in every cell.

    Raises:
        IngestionError: no records at all
        NonFiniteValue: NaN / inf measurement
        MalformedRow: replicate index below 1
        DuplicateCell: repeated (subject, observer, replicate)
        DegenerateDesign: a, b or c not above one
        UnbalancedDesign: missing cells or replicate sets that differ
    """
    records = list(records)
    if not records:
        raise IngestionError("no records to ingest")

    subjects: dict[str, int] = {}
    observers: dict[str, int] = {}
    cells: dict[tuple[int, int], dict[int, float]] = {}

    for n, rec in enumerate(records):
        value = float(rec.value)
        if not math.isfinite(value):
            raise NonFiniteValue(f"record {n + 1} ({rec.subject}, {rec.observer}, {rec.replicate}) has value {rec.value!r}")
        rep = int(rec.replicate)
        if rep < 1 or rep != rec.replicate:
            raise MalformedRow(f"replicate index must be a positive integer, got {rec.replicate!r}", line=None)

        i = subjects.setdefault(str(rec.subject), len(subjects))
        j = observers.setdefault(str(rec.observer), len(observers))
        cell = cells.setdefault((i, j), {})
        if rep in cell:
            raise DuplicateCell(f"duplicate measurement for subject={rec.subject}, observer={rec.observer}, replicate={rep}")
        cell[rep] = value

    a, b = len(subjects), len(observers)
    c = max(max(cell) for cell in cells.values())
    if a <= 1 or b <= 1 or c <= 1:
        raise DegenerateDesign(f"design needs a, b, c > 1; got a={a}, b={b}, c={c}")

    subject_names = list(subjects)
    observer_names = list(observers)
    expected = set(range(1, c + 1))
    values = np.empty((a, b, c), dtype=np.float64)
    for i in range(a):
        for j in range(b):
            cell = cells.get((i, j))
            if cell is None:
                raise UnbalancedDesign(f"missing cell subject={subject_names[i]}, observer={observer_names[j]}")
            if set(cell) != expected:
                missing = sorted(expected - set(cell))
                raise UnbalancedDesign(
                    f"cell subject={subject_names[i]}, observer={observer_names[j]} has replicates "
                    f"{sorted(cell)}, expected 1..{c} (missing {missing})"
                )
            for k in range(c):
                values[i, j, k] = cell[k + 1]

    grid = MeasurementGrid(
        design=Design(a, b, c),
        values=values,
        subject_labels=tuple(subject_names),
        observer_labels=tuple(observer_names),
    )
    logger.info(f"Ingested grid a={a}, b={b}, c={c}, N={grid.design.n}")
    return grid


def cell_means(grid: MeasurementGrid) -> np.ndarray:
    """a x b array of subject-observer cell means."""
    return grid.cell_means().copy()
