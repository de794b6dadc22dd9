"""
Sample-size planning from the reproducibility-interval width

The width of the Graybill-Wang interval for the upper reproducibility limit
is projected from pilot variance components by replacing each sum of squares
with its expectation-based counterpart:

    SSB0  = nu_B  (a c s2_B0 + c s2_AB0 + s2_E0)
    SSAB0 = nu_AB (c s2_AB0 + s2_E0)
    SSE0  = nu_E  s2_E0

and W = z / sqrt(N) * (sqrt(S0 + H0) - sqrt(S0 - L0)).

solve_observers searches integer b for a, c fixed. solve_subjects does the
same over a for b, c fixed; this second mode is an extension and uses the
same width function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

from .core.error_handler import DegenerateDesign, DomainError, MonotonicityViolation, NotAchievable
from .grid import Design
from .intervals import DEFAULT_LEVEL, GwCoefficients
from .loam import DEFAULT_Z

logger = logging.getLogger(__name__)

DEFAULT_B_MAX = 10_000
MONOTONE_RTOL = 1e-9
# Bisection stops once the bracket is this narrow; the rest is scanned.
SCAN_WINDOW = 8


@dataclass(frozen=True)
class PilotEstimates:
    sigma2_b0: float
    sigma2_ab0: float
    sigma2_e0: float

    def __post_init__(self):
        for name in ("sigma2_b0", "sigma2_ab0", "sigma2_e0"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be a finite value >= 0, got {v}")
            object.__setattr__(self, name, v)
        if self.sigma2_e0 <= 0:
            raise DomainError("sigma2_e0 must be > 0")

    def scaled(self, factor: float) -> "PilotEstimates":
        return PilotEstimates(self.sigma2_b0 * factor, self.sigma2_ab0 * factor, self.sigma2_e0 * factor)


@dataclass(frozen=True)
class WidthProjection:
    a: int
    b: int
    c: int
    width: float
    ssb0: float
    ssab0: float
    sse0: float
    h0: float
    l0: float

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "width": self.width,
            "ssb0": self.ssb0,
            "ssab0": self.ssab0,
            "sse0": self.sse0,
            "h0": self.h0,
            "l0": self.l0,
        }


@dataclass(frozen=True)
class PlanResult:
    """Smallest admissible size plus the widths either side of it."""

    solved_for: str
    value: int
    width: float
    width_previous: float | None
    target_width: float
    projection: WidthProjection

    def to_dict(self) -> dict:
        return {
            "solved_for": self.solved_for,
            "value": self.value,
            "width": self.width,
            "width_previous": self.width_previous,
            "target_width": self.target_width,
            "projection": self.projection.to_dict(),
        }


def _design(a: int, b: int, c: int) -> Design:
    try:
        return Design(a, b, c)
    except DegenerateDesign as e:
        raise DomainError(str(e)) from e


def projected_width(
    pilot: PilotEstimates,
    a: int,
    b: int,
    c: int,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
) -> WidthProjection:
    design = _design(a, b, c)
    df_b = b - 1
    df_ab = (a - 1) * (b - 1)
    df_e = a * b * (c - 1)

    ssb0 = df_b * (a * c * pilot.sigma2_b0 + c * pilot.sigma2_ab0 + pilot.sigma2_e0)
    ssab0 = df_ab * (c * pilot.sigma2_ab0 + pilot.sigma2_e0)
    sse0 = df_e * pilot.sigma2_e0

    coeffs = GwCoefficients.for_dofs(df_b, df_ab, df_e, level)
    l0, h0 = coeffs.bounds(ssb0, ssab0, sse0)
    s0 = ssb0 + ssab0 + sse0
    width = z / math.sqrt(design.n) * (math.sqrt(s0 + h0) - math.sqrt(max(s0 - l0, 0.0)))
    return WidthProjection(a=a, b=b, c=c, width=width, ssb0=ssb0, ssab0=ssab0, sse0=sse0, h0=h0, l0=l0)


def check_monotone(width_of: Callable[[int], float], start: int, stop: int) -> None:
    """
    Raise MonotonicityViolation if width_of(n + 1) > width_of(n) * (1 + 1e-9)
    for some n in [start, stop).
    """
    prev = width_of(start)
    for n in range(start + 1, stop + 1):
        cur = width_of(n)
        if cur > prev * (1.0 + MONOTONE_RTOL):
            raise MonotonicityViolation(f"projected width increases from {prev:.6g} at {n - 1} to {cur:.6g} at {n}")
        prev = cur


def _smallest_meeting(width_of: Callable[[int], float], target: float, low: int, cap: int, name: str) -> int:
    """
    Smallest n in [low, cap] with width_of(n) <= target.

    Doubling brackets the crossing, bisection narrows it, and the last
    window is scanned one by one. If the scan sees the width go up, the whole
    bracket is scanned instead of trusting the bisection.
    """
    cache: dict[int, float] = {}

    def w(n: int) -> float:
        if n not in cache:
            cache[n] = width_of(n)
        return cache[n]

    if w(low) <= target:
        return low
    if w(cap) > target:
        raise NotAchievable(
            f"target width {target:.6g} not reached at {name}={cap} (width {w(cap):.6g})",
            width_at_cap=w(cap),
            cap=cap,
        )

    lo, hi = low, low
    while w(hi) > target:
        lo = hi
        hi = min(hi * 2, cap)
    bracket = (lo, hi)

    while hi - lo > SCAN_WINDOW:
        mid = (lo + hi) // 2
        if w(mid) <= target:
            hi = mid
        else:
            lo = mid

    monotone = True
    found = None
    prev = w(lo)
    for n in range(lo + 1, hi + 1):
        cur = w(n)
        if cur > prev * (1.0 + MONOTONE_RTOL):
            monotone = False
        if found is None and cur <= target:
            found = n
        prev = cur

    if monotone and found is not None:
        return found

    logger.warning(f"Width is not monotone in {name} near {lo}..{hi}; scanning {bracket[0]}..{bracket[1]}")
    for n in range(bracket[0], bracket[1] + 1):
        if w(n) <= target:
            return n
    raise NotAchievable(f"no {name} in {bracket} reaches width {target:.6g}", width_at_cap=w(cap), cap=cap)


def _check_target(target_width: float) -> None:
    if not (target_width > 0) or not math.isfinite(target_width):
        raise DomainError(f"target width must be positive and finite, got {target_width}")


def solve_observers(
    pilot: PilotEstimates,
    a: int,
    c: int,
    target_width: float,
    b_max: int = DEFAULT_B_MAX,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
) -> PlanResult:
    """
    Smallest number of observers b in [2, b_max] whose projected width is at
    most target_width.

    Raises:
        NotAchievable: the width at b_max is still above the target
    """
    _check_target(target_width)
    _design(a, 2, c)
    if b_max < 2:
        raise DomainError(f"b_max must be >= 2, got {b_max}")

    def width_of(b: int) -> float:
        return projected_width(pilot, a, b, c, level, z).width

    b = _smallest_meeting(width_of, target_width, 2, b_max, "b")
    logger.info(f"Planner: b={b} reaches width {width_of(b):.6g} <= {target_width:.6g} (a={a}, c={c})")
    return PlanResult(
        solved_for="b",
        value=b,
        width=width_of(b),
        width_previous=width_of(b - 1) if b > 2 else None,
        target_width=target_width,
        projection=projected_width(pilot, a, b, c, level, z),
    )


def solve_subjects(
    pilot: PilotEstimates,
    b: int,
    c: int,
    target_width: float,
    a_max: int = DEFAULT_B_MAX,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
) -> PlanResult:
    """Like solve_observers, but searching the number of subjects a."""
    _check_target(target_width)
    _design(2, b, c)
    if a_max < 2:
        raise DomainError(f"a_max must be >= 2, got {a_max}")

    def width_of(a: int) -> float:
        return projected_width(pilot, a, b, c, level, z).width

    a = _smallest_meeting(width_of, target_width, 2, a_max, "a")
    logger.info(f"Planner: a={a} reaches width {width_of(a):.6g} <= {target_width:.6g} (b={b}, c={c})")
    return PlanResult(
        solved_for="a",
        value=a,
        width=width_of(a),
        width_previous=width_of(a - 1) if a > 2 else None,
        target_width=target_width,
        projection=projected_width(pilot, a, b, c, level, z),
    )
