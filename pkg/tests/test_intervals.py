import math

import numpy as np
import pytest

from loam_agreement.anova import AnovaDecomposition, decompose, estimate_components
from loam_agreement.core.error_handler import DomainError
from loam_agreement.grid import Design, MeasurementGrid
from loam_agreement.intervals import (
    GwCoefficients,
    IntervalMethod,
    IntervalTarget,
    chisq_quantile,
    exact_repeatability_ci,
    f_quantile_inf_denominator,
    gw_coefficient_pair,
    gw_reproducibility_ci,
    sigma2_e_interval,
    sigma_ci,
)
from loam_agreement.loam import reproducibility_loam


class TestQuantiles:
    def test_exponential_median(self):
        assert chisq_quantile(0.5, 2) == pytest.approx(2 * math.log(2), rel=1e-12)

    @pytest.mark.parametrize("p,nu,expected", [(0.975, 4, 11.1433), (0.025, 4, 0.484419)])
    def test_golden(self, p, nu, expected):
        assert chisq_quantile(p, nu) == pytest.approx(expected, rel=1e-5)

    def test_inverts_the_cdf(self):
        from scipy import stats

        for nu in (1, 2, 3.5, 10, 250):
            for p in (1e-6, 0.025, 0.3, 0.5, 0.9, 0.975, 1 - 1e-9):
                assert stats.chi2.cdf(chisq_quantile(p, nu), nu) == pytest.approx(p, rel=1e-8)

    @pytest.mark.parametrize("p,nu", [(0.0, 3), (1.0, 3), (-0.1, 3), (0.5, 0), (0.5, -2), (0.5, float("inf"))])
    def test_domain(self, p, nu):
        with pytest.raises(DomainError):
            chisq_quantile(p, nu)

    def test_f_limit(self):
        assert f_quantile_inf_denominator(0.975, 4) == pytest.approx(2.78582, rel=1e-5)
        assert f_quantile_inf_denominator(0.5, 2) == pytest.approx(math.log(2), rel=1e-12)
        assert abs(f_quantile_inf_denominator(0.975, 1e6) - 1) < 0.01

    def test_f_limit_times_nu_is_the_chisq_quantile(self):
        for nu in list(range(1, 60)) + [0.5, 3.5, 120, 1000]:
            for p in (0.005, 0.025, 0.05, 0.1, 0.5, 0.9, 0.95, 0.975, 0.995):
                assert f_quantile_inf_denominator(p, nu) * nu == chisq_quantile(p, nu), (p, nu)

    def test_coefficient_signs(self):
        for nu in (1, 2, 5, 40):
            low, high = gw_coefficient_pair(nu)
            assert 0 < low < 1
            assert high > 0


class TestGraybillWang:
    def test_example_ct(self, ct_grid):
        anova = decompose(ct_grid)
        upper, lower = gw_reproducibility_ci(anova, ct_grid.design)
        coeffs = GwCoefficients.for_dofs(1, 1, 4)
        big_l, big_h = coeffs.bounds(0.18, 0.845, 0.05)
        assert upper.lower == pytest.approx(1.96 * math.sqrt((1.075 - big_l) / 8), rel=1e-9)
        assert upper.upper == pytest.approx(1.96 * math.sqrt((1.075 + big_h) / 8), rel=1e-9)
        assert upper.lower < reproducibility_loam(anova, ct_grid.design).limit < upper.upper
        assert (lower.lower, lower.upper) == (-upper.upper, -upper.lower)
        assert upper.method is IntervalMethod.GRAYBILL_WANG
        assert upper.target is IntervalTarget.REPROD_UPPER

    def test_scale_equivariance(self, ct_grid):
        base, _ = gw_reproducibility_ci(decompose(ct_grid), ct_grid.design)
        scaled, _ = gw_reproducibility_ci(decompose(ct_grid.scaled(2.5)), ct_grid.design)
        assert scaled.lower == pytest.approx(2.5 * base.lower, rel=1e-9)
        assert scaled.upper == pytest.approx(2.5 * base.upper, rel=1e-9)

    def test_s_minus_l_nonnegative(self):
        rng = np.random.default_rng(99)
        for _ in range(2000):
            df_b, df_ab, df_e = (int(v) for v in rng.integers(1, 60, size=3))
            ss = rng.exponential(size=3) * 10.0 ** rng.uniform(-4, 4, size=3)
            coeffs = GwCoefficients.for_dofs(df_b, df_ab, df_e, level=float(rng.uniform(0.5, 0.999)))
            big_l, _ = coeffs.bounds(*ss)
            assert ss.sum() - big_l >= 0

    def test_level_moves_the_interval(self, ct_grid):
        anova = decompose(ct_grid)
        wide, _ = gw_reproducibility_ci(anova, ct_grid.design, level=0.99)
        narrow, _ = gw_reproducibility_ci(anova, ct_grid.design, level=0.80)
        assert wide.lower < narrow.lower and narrow.upper < wide.upper

    def test_bad_level(self, ct_grid):
        with pytest.raises(DomainError):
            gw_reproducibility_ci(decompose(ct_grid), ct_grid.design, level=1.0)


class TestExactRepeatability:
    def test_example_ct(self, ct_grid):
        upper, lower = exact_repeatability_ci(decompose(ct_grid), ct_grid.design)
        assert upper.lower == pytest.approx(1.96 * math.sqrt(0.5 * 0.05 / chisq_quantile(0.975, 4)), rel=1e-12)
        assert upper.lower == pytest.approx(0.0928, abs=1e-4)
        assert upper.upper == pytest.approx(0.4452, abs=1e-4)
        assert lower.upper == -upper.lower

    def test_zero_sse(self):
        design = Design(2, 2, 2)
        anova = AnovaDecomposition.for_design(design, 1.0, 1.0, 1.0, 0.0)
        upper, _ = exact_repeatability_ci(anova, design)
        assert (upper.lower, upper.upper) == (0.0, 0.0)


class TestSigmaCi:
    def test_sigma_e_example(self, ct_grid):
        anova = decompose(ct_grid)
        comps = estimate_components(anova, ct_grid.design)
        iv = sigma_ci(comps, anova, ct_grid.design, "E")
        assert iv.lower == pytest.approx(0.06699, abs=1e-5)
        assert iv.upper == pytest.approx(0.32127, abs=1e-5)
        assert iv.method is IntervalMethod.EXACT_CHISQ

    def test_sigma2_e_is_squared(self, ct_grid):
        anova = decompose(ct_grid)
        comps = estimate_components(anova, ct_grid.design)
        iv = sigma_ci(comps, anova, ct_grid.design, "E")
        lo, hi = sigma2_e_interval(anova)
        assert lo == pytest.approx(iv.lower**2, rel=1e-12)
        assert hi == pytest.approx(iv.upper**2, rel=1e-12)

    def test_negative_component_unavailable(self, ct_grid):
        anova = decompose(ct_grid)
        comps = estimate_components(anova, ct_grid.design)
        iv = sigma_ci(comps, anova, ct_grid.design, "B")
        assert iv.available is False
        assert iv.to_dict()["lower"] is None
        assert not iv.covers(0.0)

    def test_clamped_at_zero(self, ct_grid):
        anova = decompose(ct_grid)
        comps = estimate_components(anova, ct_grid.design)
        iv = sigma_ci(comps, anova, ct_grid.design, "A")
        assert iv.available
        assert iv.clamped
        assert iv.lower == 0.0
        assert iv.upper > math.sqrt(comps.sigma2_a)

    @pytest.mark.parametrize("which", ["A", "B", "AB"])
    def test_normal_approximation_formula(self, which):
        rng = np.random.default_rng(21)
        a, b, c = 30, 6, 3
        y = (
            rng.normal(size=(a, b, c))
            + 3.0 * rng.normal(size=(a, 1, 1))
            + 3.0 * rng.normal(size=(1, b, 1))
            + 2.0 * rng.normal(size=(a, b, 1))
        )
        grid = MeasurementGrid.from_array(y)
        anova = decompose(grid)
        comps = estimate_components(anova, grid.design)
        k, m1, nu1, m2, nu2 = {
            "A": (b * c, anova.ms_a, anova.df_a, anova.ms_ab, anova.df_ab),
            "B": (a * c, anova.ms_b, anova.df_b, anova.ms_ab, anova.df_ab),
            "AB": (c, anova.ms_ab, anova.df_ab, anova.ms_e, anova.df_e),
        }[which]

        iv = sigma_ci(comps, anova, grid.design, which)
        assert comps.raw(which) > 0
        sigma = math.sqrt(comps.raw(which))
        half = 1.959963984540054 / (k * sigma) * math.sqrt(m1**2 / (2 * nu1) + m2**2 / (2 * nu2))
        assert iv.estimate == pytest.approx(sigma, rel=1e-12)
        assert iv.lower == pytest.approx(max(sigma - half, 0.0), rel=1e-9)
        assert iv.upper == pytest.approx(sigma + half, rel=1e-9)
        assert iv.method is IntervalMethod.NORMAL_APPROX

    def test_unavailable_and_clamped_are_warnings(self, ct_grid, caplog):
        anova = decompose(ct_grid)
        comps = estimate_components(anova, ct_grid.design)
        with caplog.at_level("WARNING", logger="loam_agreement"):
            sigma_ci(comps, anova, ct_grid.design, "B")
            sigma_ci(comps, anova, ct_grid.design, "A")
        messages = [r.getMessage() for r in caplog.records if r.levelname == "WARNING"]
        assert any("sigma_B interval unavailable" in m for m in messages)
        assert any("sigma_A interval lower end" in m for m in messages)

    def test_unknown_component(self, ct_grid):
        anova = decompose(ct_grid)
        with pytest.raises(DomainError):
            sigma_ci(estimate_components(anova, ct_grid.design), anova, ct_grid.design, "C")
