import math

import numpy as np
import pytest

from loam_agreement.anova import decompose, estimate_components
from loam_agreement.core.error_handler import DomainError, MonotonicityViolation, NotAchievable
from loam_agreement.grid import MeasurementGrid
from loam_agreement.intervals import GwCoefficients, gw_reproducibility_ci
from loam_agreement.planning import (
    PilotEstimates,
    check_monotone,
    projected_width,
    solve_observers,
    solve_subjects,
)


@pytest.fixture
def pilot():
    return PilotEstimates(0.5, 0.2, 0.3)


class TestPilotEstimates:
    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            PilotEstimates(-0.1, 0.2, 0.3)

    def test_rejects_zero_error_variance(self):
        with pytest.raises(DomainError):
            PilotEstimates(0.1, 0.2, 0.0)


class TestProjectedWidth:
    def test_expected_sums_of_squares(self):
        """pilot (0, 0, 1), a=10, b=5, c=2"""
        proj = projected_width(PilotEstimates(0.0, 0.0, 1.0), a=10, b=5, c=2)
        assert proj.ssb0 == pytest.approx(4.0)
        assert proj.ssab0 == pytest.approx(36.0)
        assert proj.sse0 == pytest.approx(50.0)

        big_l, big_h = GwCoefficients.for_dofs(4, 36, 50).bounds(4.0, 36.0, 50.0)
        s = 90.0
        expected = 1.96 / math.sqrt(100) * (math.sqrt(s + big_h) - math.sqrt(s - big_l))
        assert proj.width == pytest.approx(expected, rel=1e-12)

    def test_shrinks_with_observers(self, pilot):
        assert projected_width(pilot, 20, 10_000, 3).width < projected_width(pilot, 20, 5, 3).width

    def test_homogeneous_in_scale(self, pilot):
        w = projected_width(pilot, 15, 6, 2).width
        assert projected_width(pilot.scaled(4.0), 15, 6, 2).width == pytest.approx(2.0 * w, rel=1e-12)

    def test_bad_design(self, pilot):
        with pytest.raises(DomainError):
            projected_width(pilot, 1, 5, 2)


class TestSolveObservers:
    def test_target_at_two(self, pilot):
        target = projected_width(pilot, 20, 2, 3).width
        plan = solve_observers(pilot, a=20, c=3, target_width=target)
        assert plan.value == 2
        assert plan.width_previous is None

    def test_loose_target(self, pilot):
        target = projected_width(pilot, 20, 2, 3).width * 10
        assert solve_observers(pilot, a=20, c=3, target_width=target).value == 2

    def test_round_trip_seven(self, pilot):
        target = projected_width(pilot, 20, 7, 3).width
        plan = solve_observers(pilot, a=20, c=3, target_width=target)
        assert plan.value == 7
        assert plan.width <= target
        assert plan.width_previous > target

    def test_round_trip_random_pilots(self):
        rng = np.random.default_rng(31)
        for _ in range(15):
            pilot = PilotEstimates(*rng.uniform(0.01, 3.0, size=3))
            a, c = int(rng.integers(2, 40)), int(rng.integers(2, 5))
            for b_star in (2, 3, 11, 64):
                target = projected_width(pilot, a, b_star, c).width
                assert solve_observers(pilot, a, c, target).value == b_star

    @pytest.mark.slow
    def test_round_trip_fifty_pilots(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            pilot = PilotEstimates(*rng.uniform(0.01, 3.0, size=3))
            a, c = int(rng.integers(2, 40)), int(rng.integers(2, 6))
            for b_star in (2, int(rng.integers(3, 501))):
                target = projected_width(pilot, a, b_star, c).width
                plan = solve_observers(pilot, a, c, target)
                assert plan.value == b_star
                if b_star > 2:
                    assert plan.width_previous > target

    def test_not_achievable(self, pilot):
        tiny = 1e-9 * math.sqrt(pilot.sigma2_e0)
        with pytest.raises(NotAchievable) as info:
            solve_observers(pilot, a=20, c=3, target_width=tiny, b_max=100)
        assert info.value.cap == 100
        assert info.value.width_at_cap == pytest.approx(projected_width(pilot, 20, 100, 3).width)

    @pytest.mark.parametrize("target", [0.0, -1.0, float("nan"), float("inf")])
    def test_bad_target(self, pilot, target):
        with pytest.raises(DomainError):
            solve_observers(pilot, a=20, c=3, target_width=target)


class TestSolveSubjects:
    def test_round_trip(self, pilot):
        target = projected_width(pilot, 25, 4, 2).width
        plan = solve_subjects(pilot, b=4, c=2, target_width=target)
        assert plan.solved_for == "a"
        assert plan.value == 25
        assert plan.width_previous > target


class TestMonotone:
    def test_width_is_monotone_in_b(self, pilot):
        check_monotone(lambda b: projected_width(pilot, 20, b, 3).width, 2, 300)

    def test_violation_detected(self):
        widths = {2: 5.0, 3: 4.0, 4: 4.5, 5: 3.0}
        with pytest.raises(MonotonicityViolation):
            check_monotone(widths.__getitem__, 2, 5)

    @pytest.mark.slow
    def test_monotone_for_random_pilots(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            pilot = PilotEstimates(*rng.uniform(0.0, 3.0, size=2), rng.uniform(0.01, 3.0))
            a, c = (int(v) for v in rng.integers(2, 11, size=2))
            check_monotone(lambda b: projected_width(pilot, a, b, c).width, 2, 200)


class TestMatchesRealizedWidth:
    def test_anova_pilot_reproduces_the_interval_width(self):
        rng = np.random.default_rng(43)
        a, b, c = 12, 5, 3
        y = (
            rng.normal(size=(a, b, c))
            + 2.0 * rng.normal(size=(a, 1, 1))
            + 3.0 * rng.normal(size=(1, b, 1))
            + 1.5 * rng.normal(size=(a, b, 1))
        )
        grid = MeasurementGrid.from_array(y)
        anova = decompose(grid)
        comps = estimate_components(anova, grid.design)
        assert comps.sigma2_b_raw > 0 and comps.sigma2_ab_raw > 0

        pilot = PilotEstimates(comps.sigma2_b_raw, comps.sigma2_ab_raw, comps.sigma2_e)
        for level, z in ((0.95, 1.96), (0.9, 2.576)):
            proj = projected_width(pilot, a, b, c, level=level, z=z)
            assert proj.ssb0 == pytest.approx(anova.ss_b, rel=1e-12)
            assert proj.ssab0 == pytest.approx(anova.ss_ab, rel=1e-12)
            assert proj.sse0 == pytest.approx(anova.ss_e, rel=1e-12)
            upper, _ = gw_reproducibility_ci(anova, grid.design, level, z)
            assert proj.width == pytest.approx(upper.upper - upper.lower, rel=1e-12)
