"""
Confidence intervals for LOAM limits and variance components

- reproducibility limits: Graybill-Wang approximate interval built from the
  SSB, SSAB and SSE rows
- repeatability limits and sigma_E: exact, from nu_E * MSE / sigma_E^2 being
  chi-square with nu_E degrees of freedom
- sigma_A, sigma_B, sigma_AB: normal approximation of the chi-square mean
  squares (delta method on the square root)

`level` sets the interval coverage. The LOAM multiplier z is a separate
argument because it belongs to the definition of the limits, not to the
interval.

Quantiles: chi-square quantiles start from scipy.stats.chi2.ppf and are
polished with at most MAX_NEWTON_STEPS guarded Newton steps on the CDF, so
results are reproducible across platforms for a given scipy build.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from scipy import stats

from .anova import AnovaDecomposition, VarianceComponents
from .core.error_handler import DomainError
from .grid import Design
from .loam import DEFAULT_Z

logger = logging.getLogger(__name__)

DEFAULT_LEVEL = 0.95
MAX_NEWTON_STEPS = 8
NEWTON_RTOL = 1e-15


class IntervalTarget(str, Enum):
    REPROD_UPPER = "reprod_upper"
    REPROD_LOWER = "reprod_lower"
    REPEAT_UPPER = "repeat_upper"
    REPEAT_LOWER = "repeat_lower"
    SIGMA_A = "sigma_a"
    SIGMA_B = "sigma_b"
    SIGMA_AB = "sigma_ab"
    SIGMA_E = "sigma_e"


class IntervalMethod(str, Enum):
    GRAYBILL_WANG = "graybill_wang"
    EXACT_CHISQ = "exact_chisq"
    NORMAL_APPROX = "normal_approx"


@dataclass(frozen=True)
class IntervalResult:
    target: IntervalTarget
    lower: float
    upper: float
    level: float
    method: IntervalMethod
    available: bool = True
    estimate: float | None = None
    clamped: bool = False

    def covers(self, value: float) -> bool:
        return self.available and self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "target": self.target.value,
            "lower": self.lower if self.available else None,
            "upper": self.upper if self.available else None,
            "level": self.level,
            "method": self.method.value,
            "available": self.available,
            "estimate": self.estimate,
            "clamped": self.clamped,
        }


@dataclass(frozen=True)
class GwCoefficients:
    l_b: float
    l_ab: float
    l_e: float
    h_b: float
    h_ab: float
    h_e: float

    @classmethod
    def for_dofs(cls, df_b: float, df_ab: float, df_e: float, level: float = DEFAULT_LEVEL) -> "GwCoefficients":
        l_b, h_b = gw_coefficient_pair(df_b, level)
        l_ab, h_ab = gw_coefficient_pair(df_ab, level)
        l_e, h_e = gw_coefficient_pair(df_e, level)
        return cls(l_b=l_b, l_ab=l_ab, l_e=l_e, h_b=h_b, h_ab=h_ab, h_e=h_e)

    def bounds(self, ss_b: float, ss_ab: float, ss_e: float) -> tuple[float, float]:
        """(L, H) for the given sums of squares."""
        big_l = math.sqrt((self.l_b * ss_b) ** 2 + (self.l_ab * ss_ab) ** 2 + (self.l_e * ss_e) ** 2)
        big_h = math.sqrt((self.h_b * ss_b) ** 2 + (self.h_ab * ss_ab) ** 2 + (self.h_e * ss_e) ** 2)
        return big_l, big_h


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")


def chisq_quantile(p: float, nu: float) -> float:
    """
    p-quantile of the chi-square distribution with nu degrees of freedom.

    Built as nu * f_quantile_inf_denominator(p, nu), so the two functions
    agree bit for bit.

    Raises:
        DomainError: p outside (0, 1) or nu <= 0
    """
    return f_quantile_inf_denominator(p, nu) * nu


def _polished_chisq(p: float, nu: float) -> float:
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if not (nu > 0.0) or not math.isfinite(nu):
        raise DomainError(f"degrees of freedom must be positive and finite, got {nu}")

    x = float(stats.chi2.ppf(p, nu))
    upper_tail = p > 0.5
    q = 1.0 - p

    for _ in range(MAX_NEWTON_STEPS):
        density = float(stats.chi2.pdf(x, nu))
        if not density > 0.0 or not math.isfinite(density):
            break
        # resid = CDF(x) - p; the upper tail form avoids cancellation near 1
        if upper_tail:
            resid = q - float(stats.chi2.sf(x, nu))
        else:
            resid = float(stats.chi2.cdf(x, nu)) - p
        nxt = x - resid / density
        if nxt <= 0.0:
            nxt = 0.5 * x
        if abs(nxt - x) <= NEWTON_RTOL * x:
            x = nxt
            break
        x = nxt

    return x


def f_quantile_inf_denominator(p: float, nu: float) -> float:
    """Limit of the F(nu, n) p-quantile as n -> infinity: chi2_p(nu) / nu."""
    return _polished_chisq(p, nu) / nu


def gw_coefficient_pair(nu: float, level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """(l, h) = (1 - 1/F_hi, 1/F_lo - 1) with F quantiles at the two tails."""
    _check_level(level)
    f_hi = f_quantile_inf_denominator(0.5 * (1.0 + level), nu)
    f_lo = f_quantile_inf_denominator(0.5 * (1.0 - level), nu)
    return 1.0 - 1.0 / f_hi, 1.0 / f_lo - 1.0


def gw_reproducibility_ci(
    anova: AnovaDecomposition,
    design: Design,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
) -> tuple[IntervalResult, IntervalResult]:
    """
    Graybill-Wang intervals for the upper and lower reproducibility limits.

    upper: (z sqrt((S - L)/N), z sqrt((S + H)/N)), S = SSB + SSAB + SSE;
    lower: the negated pair, swapped.
    """
    coeffs = GwCoefficients.for_dofs(anova.df_b, anova.df_ab, anova.df_e, level)
    s = max(anova.ss_b + anova.ss_ab + anova.ss_e, 0.0)
    big_l, big_h = coeffs.bounds(anova.ss_b, anova.ss_ab, anova.ss_e)
    n = design.n

    lo = z * math.sqrt(max(s - big_l, 0.0) / n)
    hi = z * math.sqrt((s + big_h) / n)
    point = z * math.sqrt(s / n)

    upper = IntervalResult(IntervalTarget.REPROD_UPPER, lo, hi, level, IntervalMethod.GRAYBILL_WANG, estimate=point)
    lower = IntervalResult(IntervalTarget.REPROD_LOWER, -hi, -lo, level, IntervalMethod.GRAYBILL_WANG, estimate=-point)
    return upper, lower


def exact_repeatability_ci(
    anova: AnovaDecomposition,
    design: Design,
    level: float = DEFAULT_LEVEL,
    z: float = DEFAULT_Z,
) -> tuple[IntervalResult, IntervalResult]:
    """Exact chi-square intervals for the upper and lower repeatability limits."""
    _check_level(level)
    c = design.c
    chi_hi = chisq_quantile(0.5 * (1.0 + level), anova.df_e)
    chi_lo = chisq_quantile(0.5 * (1.0 - level), anova.df_e)
    scaled = (c - 1) / c * anova.ss_e

    lo = z * math.sqrt(scaled / chi_hi)
    hi = z * math.sqrt(scaled / chi_lo)
    point = z * math.sqrt(anova.ss_e / design.n)

    upper = IntervalResult(IntervalTarget.REPEAT_UPPER, lo, hi, level, IntervalMethod.EXACT_CHISQ, estimate=point)
    lower = IntervalResult(IntervalTarget.REPEAT_LOWER, -hi, -lo, level, IntervalMethod.EXACT_CHISQ, estimate=-point)
    return upper, lower


_SIGMA_TARGETS = {
    "A": IntervalTarget.SIGMA_A,
    "B": IntervalTarget.SIGMA_B,
    "AB": IntervalTarget.SIGMA_AB,
    "E": IntervalTarget.SIGMA_E,
}


def sigma_ci(
    components: VarianceComponents,
    anova: AnovaDecomposition,
    design: Design,
    which: str,
    level: float = DEFAULT_LEVEL,
) -> IntervalResult:
    """
    Interval for a variance-component standard deviation.

    A, B and AB use sigma_hat +/- q / (k sigma_hat) * sqrt(M1^2/(2 nu1) + M2^2/(2 nu2))
    where (k, M1, nu1, M2, nu2) is (bc, MSA, nu_A, MSAB, nu_AB),
    (ac, MSB, nu_B, MSAB, nu_AB) or (c, MSAB, nu_AB, MSE, nu_E). With raw
    plug-in estimates M1 and M2 are exactly the corresponding mean squares.
    The lower end is clamped at 0. The interval is unavailable when the raw
    variance estimate is not positive.

    E uses the exact interval (sqrt(SSE / chi2_hi), sqrt(SSE / chi2_lo)).
    """
    which = str(which).upper()
    if which not in _SIGMA_TARGETS:
        raise DomainError(f"which must be one of A, B, AB, E; got {which!r}")
    _check_level(level)
    target = _SIGMA_TARGETS[which]

    if which == "E":
        chi_hi = chisq_quantile(0.5 * (1.0 + level), anova.df_e)
        chi_lo = chisq_quantile(0.5 * (1.0 - level), anova.df_e)
        ss = anova.df_e * anova.ms_e
        return IntervalResult(
            target,
            math.sqrt(ss / chi_hi),
            math.sqrt(ss / chi_lo),
            level,
            IntervalMethod.EXACT_CHISQ,
            estimate=math.sqrt(components.sigma2_e),
        )

    a, b, c = design.shape
    if which == "A":
        k, m1, nu1, m2, nu2 = b * c, anova.ms_a, anova.df_a, anova.ms_ab, anova.df_ab
    elif which == "B":
        k, m1, nu1, m2, nu2 = a * c, anova.ms_b, anova.df_b, anova.ms_ab, anova.df_ab
    else:
        k, m1, nu1, m2, nu2 = c, anova.ms_ab, anova.df_ab, anova.ms_e, anova.df_e

    raw = components.raw(which)
    if not raw > 0.0:
        logger.warning(f"sigma_{which} interval unavailable: raw variance estimate {raw:.6g} <= 0")
        return IntervalResult(target, math.nan, math.nan, level, IntervalMethod.NORMAL_APPROX, available=False, estimate=0.0)

    q = float(stats.norm.ppf(0.5 * (1.0 + level)))
    sigma = math.sqrt(raw)
    half = q / (k * sigma) * math.sqrt(m1**2 / (2 * nu1) + m2**2 / (2 * nu2))
    lo = sigma - half
    clamped = lo < 0.0
    if clamped:
        logger.warning(f"sigma_{which} interval lower end {lo:.6g} clamped at 0")
        lo = 0.0
    return IntervalResult(target, lo, sigma + half, level, IntervalMethod.NORMAL_APPROX, estimate=sigma, clamped=clamped)


def sigma2_e_interval(anova: AnovaDecomposition, level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """Exact interval for sigma_E^2: (nu_E MSE / chi2_hi, nu_E MSE / chi2_lo)."""
    _check_level(level)
    ss = anova.df_e * anova.ms_e
    return ss / chisq_quantile(0.5 * (1.0 + level), anova.df_e), ss / chisq_quantile(0.5 * (1.0 - level), anova.df_e)
