"""
Two-way random-effects ANOVA with interaction (balanced designs)

Sums of squares are computed two-pass: means first, then squared deviations
from them. The one-pass sum(x^2) - (sum x)^2 / n form is never used; it loses
all precision when the grand mean is large relative to the spread.

All means are taken on the grid minus its first value (MeasurementGrid.centred),
so a constant grid gives exact zeros. SSAB is the sum of squared interaction
residuals c * sum (Y_ij. - Y_i.. - Y_.j. + Y_...)^2, which in a balanced design
equals c * sum (Y_ij. - Y_...)^2 - SSA - SSB and cannot go negative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import Design, MeasurementGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnovaDecomposition:
    """Rows A (subjects), B (observers), AB (interaction), E (residual)."""

    ss_a: float
    ss_b: float
    ss_ab: float
    ss_e: float
    df_a: int
    df_b: int
    df_ab: int
    df_e: int

    @classmethod
    def for_design(cls, design: Design, ss_a: float, ss_b: float, ss_ab: float, ss_e: float) -> "AnovaDecomposition":
        a, b, c = design.shape
        return cls(
            ss_a=float(ss_a),
            ss_b=float(ss_b),
            ss_ab=float(ss_ab),
            ss_e=float(ss_e),
            df_a=a - 1,
            df_b=b - 1,
            df_ab=(a - 1) * (b - 1),
            df_e=a * b * (c - 1),
        )

    @property
    def ms_a(self) -> float:
        return self.ss_a / self.df_a

    @property
    def ms_b(self) -> float:
        return self.ss_b / self.df_b

    @property
    def ms_ab(self) -> float:
        return self.ss_ab / self.df_ab

    @property
    def ms_e(self) -> float:
        return self.ss_e / self.df_e

    @property
    def ss_total(self) -> float:
        return self.ss_a + self.ss_b + self.ss_ab + self.ss_e

    def rows(self) -> list[dict]:
        """Table rows in A, B, AB, E order."""
        return [
            {"source": "A", "df": self.df_a, "ss": self.ss_a, "ms": self.ms_a},
            {"source": "B", "df": self.df_b, "ss": self.ss_b, "ms": self.ms_b},
            {"source": "AB", "df": self.df_ab, "ss": self.ss_ab, "ms": self.ms_ab},
            {"source": "E", "df": self.df_e, "ss": self.ss_e, "ms": self.ms_e},
        ]


@dataclass(frozen=True)
class VarianceComponents:
    """
    Method-of-moments estimates. Raw values may be negative; the truncated
    properties clip them at zero. sigma2_e equals MSE and is never negative.
    """

    sigma2_a_raw: float
    sigma2_b_raw: float
    sigma2_ab_raw: float
    sigma2_e: float

    @property
    def sigma2_a(self) -> float:
        return max(self.sigma2_a_raw, 0.0)

    @property
    def sigma2_b(self) -> float:
        return max(self.sigma2_b_raw, 0.0)

    @property
    def sigma2_ab(self) -> float:
        return max(self.sigma2_ab_raw, 0.0)

    @property
    def truncated(self) -> dict[str, bool]:
        return {
            "A": self.sigma2_a_raw < 0,
            "B": self.sigma2_b_raw < 0,
            "AB": self.sigma2_ab_raw < 0,
            "E": False,
        }

    def raw(self, which: str) -> float:
        return {"A": self.sigma2_a_raw, "B": self.sigma2_b_raw, "AB": self.sigma2_ab_raw, "E": self.sigma2_e}[which]

    def to_dict(self) -> dict:
        return {
            name: {
                "raw": self.raw(name),
                "truncated": max(self.raw(name), 0.0),
                "was_truncated": self.truncated[name],
            }
            for name in ("A", "B", "AB", "E")
        }


def decompose(grid: MeasurementGrid) -> AnovaDecomposition:
    y = grid.centred()
    a, b, c = grid.design.shape

    grand = y.mean()
    subjects = y.mean(axis=(1, 2))
    observers = y.mean(axis=(0, 2))
    cells = y.mean(axis=2)

    ss_a = b * c * float(np.sum((subjects - grand) ** 2))
    ss_b = a * c * float(np.sum((observers - grand) ** 2))
    interaction = cells - subjects[:, None] - observers[None, :] + grand
    ss_ab = c * float(np.sum(interaction**2))
    ss_e = float(np.sum((y - cells[:, :, None]) ** 2))

    return AnovaDecomposition.for_design(grid.design, ss_a, ss_b, ss_ab, ss_e)


def estimate_components(anova: AnovaDecomposition, design: Design) -> VarianceComponents:
    a, b, c = design.shape
    comps = VarianceComponents(
        sigma2_a_raw=(anova.ms_a - anova.ms_ab) / (b * c),
        sigma2_b_raw=(anova.ms_b - anova.ms_ab) / (a * c),
        sigma2_ab_raw=(anova.ms_ab - anova.ms_e) / c,
        sigma2_e=anova.ms_e,
    )
    truncated = [k for k, v in comps.truncated.items() if v]
    if truncated:
        logger.warning(f"Negative variance estimate(s) truncated at 0: {truncated}")
    return comps
