"""
Simulation from the two-way random-effects model with interaction

    Y[i, j, k] = mu + A[i] + B[j] + AB[i, j] + E[i, j, k]

with independent centred normal effects. Draws come from numpy's Generator
on PCG64 seeded through SeedSequence; normals use Generator.standard_normal,
which is bit-reproducible across platforms for a fixed numpy release.
Effects are drawn in the fixed order A, B, AB, E.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .core.error_handler import DomainError
from .grid import Design, MeasurementGrid
from .loam import DEFAULT_Z, DifferenceKind, difference_values

logger = logging.getLogger(__name__)

THREADS_ENV = "LOAM_THREADS"

SeedLike = int | np.random.SeedSequence | np.random.Generator


def default_n_jobs() -> int:
    """Worker count from LOAM_THREADS, else the number of cores."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError as e:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
        if n < 1:
            raise DomainError(f"{THREADS_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if isinstance(seed, (bool,)) or int(seed) < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_seeds(seed: int | np.random.SeedSequence, n: int) -> list[np.random.SeedSequence]:
    """n independent child streams; child i depends only on (seed, i)."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return root.spawn(n)


def new_seed() -> int:
    """Fresh unsigned 64-bit seed from OS entropy."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ModelParams:
    mu: float = 0.0
    sigma_a: float = 1.0
    sigma_b: float = 1.0
    sigma_ab: float = 1.0
    sigma_e: float = 1.0

    def __post_init__(self):
        for name in ("mu", "sigma_a", "sigma_b", "sigma_ab", "sigma_e"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
            if name != "mu" and v < 0:
                raise DomainError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)
        if self.sigma_e <= 0:
            raise DomainError("sigma_e must be > 0")

    @property
    def variances(self) -> tuple[float, float, float, float]:
        return (self.sigma_a**2, self.sigma_b**2, self.sigma_ab**2, self.sigma_e**2)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrueLoam:
    reproducibility_limit: float
    repeatability_limit: float
    z: float

    def to_dict(self) -> dict:
        return asdict(self)


def reproducibility_variance(params: ModelParams, design: Design) -> float:
    """Var(Y - subject mean)."""
    _, b, c = design.shape
    return (b - 1) / b * (params.sigma_b**2 + params.sigma_ab**2) + (b * c - 1) / (b * c) * params.sigma_e**2


def repeatability_variance(params: ModelParams, design: Design) -> float:
    """Var(Y - cell mean)."""
    c = design.c
    return (c - 1) / c * params.sigma_e**2


def true_loam(params: ModelParams, design: Design, z: float = DEFAULT_Z) -> TrueLoam:
    return TrueLoam(
        reproducibility_limit=z * math.sqrt(reproducibility_variance(params, design)),
        repeatability_limit=z * math.sqrt(repeatability_variance(params, design)),
        z=z,
    )


def simulate_values(params: ModelParams, design: Design, rng: np.random.Generator) -> np.ndarray:
    a, b, c = design.shape
    eff_a = params.sigma_a * rng.standard_normal(a)
    eff_b = params.sigma_b * rng.standard_normal(b)
    eff_ab = params.sigma_ab * rng.standard_normal((a, b))
    eff_e = params.sigma_e * rng.standard_normal((a, b, c))
    return params.mu + eff_a[:, None, None] + eff_b[None, :, None] + eff_ab[:, :, None] + eff_e


def simulate(
    params: ModelParams,
    design: Design,
    seed: SeedLike,
    subject_labels: Sequence[str] | None = None,
    observer_labels: Sequence[str] | None = None,
) -> MeasurementGrid:
    values = simulate_values(params, design, make_rng(seed))
    return MeasurementGrid.from_array(values, subject_labels, observer_labels)


def _mean_squares_chunk(params: ModelParams, design: Design, kind: DifferenceKind, seeds: list) -> list[float]:
    out = []
    for s in seeds:
        grid = simulate(params, design, s)
        out.append(float(np.mean(difference_values(grid, kind) ** 2)))
    return out


def chunked(items: list, n_chunks: int) -> list[list]:
    n_chunks = max(1, min(n_chunks, len(items)))
    size = -(-len(items) // n_chunks)
    return [items[i : i + size] for i in range(0, len(items), size)]


def difference_mean_squares(
    params: ModelParams,
    design: Design,
    which: DifferenceKind,
    n_sims: int,
    seed: int = 0,
    n_jobs: int | None = None,
) -> np.ndarray:
    """Per-simulation mean of squared differences (each is an unbiased variance estimate)."""
    kind = DifferenceKind(which)
    n_jobs = n_jobs or default_n_jobs()
    seeds = spawn_seeds(seed, n_sims)
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_mean_squares_chunk)(params, design, kind, chunk) for chunk in chunked(seeds, n_jobs * 4)
    )
    return np.array([v for part in parts for v in part])


def empirical_variance_check(
    params: ModelParams,
    design: Design,
    which: DifferenceKind,
    n_sims: int,
    seed: int = 0,
    n_jobs: int | None = None,
) -> float:
    """
    Pooled empirical variance of Y - subject mean or Y - cell mean across
    n_sims simulated datasets. The differences have mean zero by
    construction, so the pooled mean square is the variance estimate.
    """
    if n_sims < 1000:
        raise DomainError(f"n_sims must be >= 1000, got {n_sims}")
    return float(difference_mean_squares(params, design, which, n_sims, seed, n_jobs).mean())
