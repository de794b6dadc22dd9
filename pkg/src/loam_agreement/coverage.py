"""
Monte Carlo coverage study for the interval engine

Simulate -> decompose -> intervals, repeated n_sims times from independent
child seeds; counts how often each interval contains the true value.
An unavailable interval counts as a miss.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import pandas as pd
from joblib import Parallel, delayed

from .anova import decompose, estimate_components
from .core.error_handler import DomainError
from .grid import Design
from .intervals import DEFAULT_LEVEL, exact_repeatability_ci, gw_reproducibility_ci, sigma_ci
from .loam import DEFAULT_Z
from .simulation import ModelParams, chunked, default_n_jobs, simulate, spawn_seeds, true_loam

logger = logging.getLogger(__name__)

TARGETS = ["reprod_upper", "reprod_lower", "repeat_upper", "repeat_lower", "sigma_a", "sigma_b", "sigma_ab", "sigma_e"]


@dataclass(frozen=True)
class CoverageReport:
    params: ModelParams
    design: Design
    n_sims: int
    level: float
    z: float
    seed: int
    hits: dict[str, int]
    available: dict[str, int]

    def coverage(self, target: str) -> float:
        return self.hits[target] / self.n_sims

    def standard_error(self, target: str) -> float:
        p = self.coverage(target)
        return math.sqrt(p * (1.0 - p) / self.n_sims)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "target": t,
                    "coverage": self.coverage(t),
                    "se": self.standard_error(t),
                    "available": self.available[t],
                    "n_sims": self.n_sims,
                }
                for t in TARGETS
            ]
        )

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "design": self.design.to_dict(),
            "n_sims": self.n_sims,
            "level": self.level,
            "z": self.z,
            "seed": self.seed,
            "targets": {t: {"coverage": self.coverage(t), "se": self.standard_error(t), "available": self.available[t]} for t in TARGETS},
        }


def _truth(params: ModelParams, design: Design, z: float) -> dict[str, float]:
    limits = true_loam(params, design, z)
    return {
        "reprod_upper": limits.reproducibility_limit,
        "reprod_lower": -limits.reproducibility_limit,
        "repeat_upper": limits.repeatability_limit,
        "repeat_lower": -limits.repeatability_limit,
        "sigma_a": params.sigma_a,
        "sigma_b": params.sigma_b,
        "sigma_ab": params.sigma_ab,
        "sigma_e": params.sigma_e,
    }


def _coverage_chunk(params: ModelParams, design: Design, level: float, z: float, seeds: list) -> list[dict[str, tuple[bool, bool]]]:
    truth = _truth(params, design, z)
    out = []
    for s in seeds:
        grid = simulate(params, design, s)
        anova = decompose(grid)
        comps = estimate_components(anova, design)
        reprod_up, reprod_lo = gw_reproducibility_ci(anova, design, level, z)
        repeat_up, repeat_lo = exact_repeatability_ci(anova, design, level, z)
        intervals = {
            "reprod_upper": reprod_up,
            "reprod_lower": reprod_lo,
            "repeat_upper": repeat_up,
            "repeat_lower": repeat_lo,
            "sigma_a": sigma_ci(comps, anova, design, "A", level),
            "sigma_b": sigma_ci(comps, anova, design, "B", level),
            "sigma_ab": sigma_ci(comps, anova, design, "AB", level),
            "sigma_e": sigma_ci(comps, anova, design, "E", level),
        }
        out.append({t: (iv.covers(truth[t]), iv.available) for t, iv in intervals.items()})
    return out


def run_coverage_study(
    params: ModelParams,
    design: Design,
    n_sims: int = 2000,
    seed: int = 0,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
    n_jobs: int | None = None,
) -> CoverageReport:
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    n_jobs = n_jobs or default_n_jobs()
    seeds = spawn_seeds(int(seed), n_sims)
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_coverage_chunk)(params, design, level, z, chunk) for chunk in chunked(seeds, n_jobs * 4)
    )
    rows = [r for part in parts for r in part]
    hits = {t: sum(1 for r in rows if r[t][0]) for t in TARGETS}
    available = {t: sum(1 for r in rows if r[t][1]) for t in TARGETS}
    report = CoverageReport(params, design, n_sims, level, z, int(seed), hits, available)
    logger.info(
        "Coverage "
        + ", ".join(f"{t}={report.coverage(t):.3f}" for t in ("reprod_upper", "repeat_upper", "sigma_b", "sigma_e"))
    )
    return report
