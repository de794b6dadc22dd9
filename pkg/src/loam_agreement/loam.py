from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from .anova import AnovaDecomposition, VarianceComponents
from .grid import Design, MeasurementGrid

DEFAULT_Z = 1.96


class LoamKind(str, Enum):
    REPRODUCIBILITY = "reproducibility"
    REPEATABILITY = "repeatability"


class DifferenceKind(str, Enum):
    TO_SUBJECT_MEAN = "to_subject_mean"
    TO_CELL_MEAN = "to_cell_mean"


@dataclass(frozen=True)
class LoamEstimate:
    """The limits of agreement with the mean are -limit and +limit."""

    kind: LoamKind
    limit: float
    z: float
    n_total: int

    @property
    def lower(self) -> float:
        return -self.limit

    @property
    def upper(self) -> float:
        return self.limit


def reproducibility_loam(anova: AnovaDecomposition, design: Design, z: float = DEFAULT_Z) -> LoamEstimate:
    """z * sqrt((SSB + SSAB + SSE) / N)."""
    s = max(anova.ss_b + anova.ss_ab + anova.ss_e, 0.0)
    return LoamEstimate(LoamKind.REPRODUCIBILITY, z * math.sqrt(s / design.n), z, design.n)


def repeatability_loam(anova: AnovaDecomposition, design: Design, z: float = DEFAULT_Z) -> LoamEstimate:
    """z * sqrt(SSE / N)."""
    return LoamEstimate(LoamKind.REPEATABILITY, z * math.sqrt(max(anova.ss_e, 0.0) / design.n), z, design.n)


def loam(anova: AnovaDecomposition, design: Design, kind: LoamKind, z: float = DEFAULT_Z) -> LoamEstimate:
    if LoamKind(kind) is LoamKind.REPRODUCIBILITY:
        return reproducibility_loam(anova, design, z)
    return repeatability_loam(anova, design, z)


# Component forms: same quantities written in the variance components.
# Kept as a cross-check; the SS forms above are what the tool reports.


def reproducibility_loam_components(components: VarianceComponents, design: Design, z: float = DEFAULT_Z) -> float:
    _, b, c = design.shape
    radicand = (b - 1) / b * (components.sigma2_b_raw + components.sigma2_ab_raw) + (b * c - 1) / (b * c) * components.sigma2_e
    return z * math.sqrt(max(radicand, 0.0))


def repeatability_loam_components(components: VarianceComponents, design: Design, z: float = DEFAULT_Z) -> float:
    c = design.c
    return z * math.sqrt((c - 1) / c * components.sigma2_e)


@dataclass(frozen=True)
class DifferenceSeries:
    kind: DifferenceKind
    frame: pd.DataFrame

    @property
    def differences(self) -> np.ndarray:
        return self.frame["difference"].to_numpy()

    def as_tuples(self) -> list[tuple[str, str, int, float]]:
        return list(self.frame.itertuples(index=False, name=None))

    def fraction_within(self, limit: float) -> float:
        return float(np.mean(np.abs(self.differences) <= limit))


def difference_values(grid: MeasurementGrid, kind: DifferenceKind) -> np.ndarray:
    """a x b x c array of Y - subject mean, or Y - cell mean."""
    y = grid.centred()
    if DifferenceKind(kind) is DifferenceKind.TO_SUBJECT_MEAN:
        return y - y.mean(axis=(1, 2))[:, None, None]
    return y - y.mean(axis=2)[:, :, None]


def difference_series(grid: MeasurementGrid, kind: DifferenceKind) -> DifferenceSeries:
    kind = DifferenceKind(kind)
    frame = grid.to_frame().drop(columns="value")
    frame["difference"] = difference_values(grid, kind).reshape(-1)
    return DifferenceSeries(kind=kind, frame=frame)
