"""
Subject-level bootstrap comparison of two measurement methods

Both methods were applied to the same subjects by the same observers with the
same number of replicates. A resample draws a subjects with replacement and
copies each drawn subject's whole b x c block from both grids, in lockstep.

Test statistic: limit_X - limit_Y, the difference of the positive LOAM limits.
The p-value comes from the bootstrap distribution shifted to mean zero
(the null), with a +1 correction on counts and both tails; the percentile
interval of the unshifted differences is reported next to it.

RNG: resample r uses its own PCG64 stream, the r-th child of
SeedSequence(seed). Results do not depend on the number of workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .anova import decompose
from .core.error_handler import DegenerateResample, DomainError, MismatchedDesign
from .grid import MeasurementGrid
from .loam import DEFAULT_Z, LoamKind, loam
from .simulation import chunked, default_n_jobs, make_rng, spawn_seeds

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 2000
MIN_RESAMPLES = 100
REDRAW_FACTOR = 10


@dataclass(frozen=True)
class PairedStudy:
    grid_x: MeasurementGrid
    grid_y: MeasurementGrid
    name_x: str = "X"
    name_y: str = "Y"

    def __post_init__(self):
        gx, gy = self.grid_x, self.grid_y
        if gx.design != gy.design:
            raise MismatchedDesign(f"designs differ: {gx.design} vs {gy.design}")
        if gx.subject_labels != gy.subject_labels:
            raise MismatchedDesign("subject labels differ between the two methods")
        if gx.observer_labels != gy.observer_labels:
            raise MismatchedDesign("observer labels differ between the two methods")

    @property
    def design(self):
        return self.grid_x.design

    def take_subjects(self, indices) -> "PairedStudy":
        return PairedStudy(
            self.grid_x.take_subjects(indices),
            self.grid_y.take_subjects(indices),
            self.name_x,
            self.name_y,
        )


@dataclass(frozen=True)
class BootSummary:
    count: int
    mean: float
    sd: float
    p2_5: float
    p50: float
    p97_5: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "sd": self.sd,
            "p2_5": self.p2_5,
            "p50": self.p50,
            "p97_5": self.p97_5,
        }


@dataclass(frozen=True)
class ComparisonResult:
    kind: LoamKind
    limit_x: float
    limit_y: float
    observed_diff: float
    boot_diffs: BootSummary
    p_value: float
    ci_95: tuple[float, float]
    n_resamples: int
    seed: int
    redraws: int = 0

    @property
    def significant(self) -> bool:
        """0 outside the percentile interval."""
        return not (self.ci_95[0] <= 0.0 <= self.ci_95[1])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "limit_x": self.limit_x,
            "limit_y": self.limit_y,
            "observed_diff": self.observed_diff,
            "boot_diffs": self.boot_diffs.to_dict(),
            "p_value": self.p_value,
            "ci_95": list(self.ci_95),
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "redraws": self.redraws,
            "significant": self.significant,
        }


def draw_subjects(a: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, a, size=a)


def resample_subjects(study: PairedStudy, rng_state) -> PairedStudy:
    """One cluster-bootstrap resample; drawn copies become distinct subjects."""
    rng = make_rng(rng_state)
    return study.take_subjects(draw_subjects(study.design.a, rng))


def is_degenerate(grid: MeasurementGrid) -> bool:
    """All measurements equal, so the total sum of squares is exactly zero."""
    return not np.any(grid.centred())


def _limit(grid: MeasurementGrid, kind: LoamKind, z: float) -> float:
    return loam(decompose(grid), grid.design, kind, z).limit


def _run_chunk(study: PairedStudy, kind: LoamKind, z: float, seeds: list, max_attempts: int) -> list[tuple[float, int]]:
    out = []
    for s in seeds:
        rng = make_rng(s)
        for attempt in range(1, max_attempts + 1):
            sample = study.take_subjects(draw_subjects(study.design.a, rng))
            if is_degenerate(sample.grid_x) or is_degenerate(sample.grid_y):
                continue
            out.append((_limit(sample.grid_x, kind, z) - _limit(sample.grid_y, kind, z), attempt - 1))
            break
        else:
            raise DegenerateResample(f"no non-degenerate resample after {max_attempts} draws")
    return out


def two_sided_p_value(boot: np.ndarray, observed: float) -> float:
    """Shifted-null bootstrap p-value with +1 correction on both tails."""
    centred = boot - boot.mean()
    n = len(boot)
    upper = (1 + int(np.sum(centred >= observed))) / (n + 1)
    lower = (1 + int(np.sum(centred <= observed))) / (n + 1)
    return min(1.0, 2.0 * min(upper, lower))


def bootstrap_compare(
    study: PairedStudy,
    kind: LoamKind = LoamKind.REPRODUCIBILITY,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    z: float = DEFAULT_Z,
    n_jobs: int | None = None,
    ci_level: float = 0.95,
    redraw_factor: int = REDRAW_FACTOR,
) -> ComparisonResult:
    """
    Raises:
        DomainError: fewer than 100 resamples or a seed outside [0, 2^64)
        DegenerateResample: redraw budget (redraw_factor x n_resamples) used up
    """
    kind = LoamKind(kind)
    if n_resamples < MIN_RESAMPLES:
        raise DomainError(f"n_resamples must be >= {MIN_RESAMPLES}, got {n_resamples}")
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")

    limit_x = _limit(study.grid_x, kind, z)
    limit_y = _limit(study.grid_y, kind, z)
    observed = limit_x - limit_y

    n_jobs = n_jobs or default_n_jobs()
    budget = int(redraw_factor) * n_resamples
    seeds = spawn_seeds(int(seed), n_resamples)
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_run_chunk)(study, kind, z, chunk, budget) for chunk in chunked(seeds, n_jobs * 4)
    )
    pairs = [p for part in parts for p in part]
    boot = np.array([d for d, _ in pairs])
    redraws = sum(r for _, r in pairs)
    if redraws + n_resamples > budget:
        raise DegenerateResample(f"{redraws} redraws exceed the budget of {budget} draws")
    if redraws:
        logger.warning(f"Redrew {redraws} degenerate resample(s)")

    tail = 50.0 * (1.0 - ci_level)
    lo, mid, hi = np.percentile(boot, [tail, 50.0, 100.0 - tail])
    summary = BootSummary(
        count=len(boot),
        mean=float(boot.mean()),
        sd=float(boot.std(ddof=1)),
        p2_5=float(np.percentile(boot, 2.5)),
        p50=float(mid),
        p97_5=float(np.percentile(boot, 97.5)),
    )
    result = ComparisonResult(
        kind=kind,
        limit_x=limit_x,
        limit_y=limit_y,
        observed_diff=observed,
        boot_diffs=summary,
        p_value=two_sided_p_value(boot, observed),
        ci_95=(float(lo), float(hi)),
        n_resamples=n_resamples,
        seed=int(seed),
        redraws=redraws,
    )
    logger.info(f"Bootstrap {kind.value}: diff={observed:.6g}, p={result.p_value:.4g}, CI=({lo:.6g}, {hi:.6g})")
    return result
