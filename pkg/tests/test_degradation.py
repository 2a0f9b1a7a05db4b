"""Aging-model tests: PWL calendar curve, secant fitting, cycle rate, and
the incremental per-hour formulation.

Hand-computed values below evaluate the published PWL coefficients directly:
b0 = -6.491e-6, m0 = 7.613e-5, breakpoints 0.2..0.8 with slope changes
(1.362e-4, 1.087e-4, -1.317e-4, -3.668e-5, 3.324e-4, 5.757e-4, -3.912e-4).
"""

import math

import numpy as np
import pytest

from evhome.degradation import (
    CycleRateModel,
    PwlCalendarModel,
    accumulate,
    calendar_weight,
    cycle_rate,
    eval_nonlinear_kcal,
    eval_pwl_kcal,
    fit_pwl,
    incremental_calendar,
    incremental_cycle,
)
from evhome.domain import (
    DegradationParams,
    DegradationState,
    NonlinearCalendarConfig,
)

PWL = PwlCalendarModel.from_params(DegradationParams())
B0, M0 = -6.491e-6, 7.613e-5


class TestPwlEvaluation:
    def test_at_domain_start(self):
        """b0 + 0.1*m0 = -6.491e-6 + 7.613e-6 = 1.122e-6."""
        expected = B0 + 0.1 * M0
        assert eval_pwl_kcal(0.1, PWL) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(1.122e-6, rel=1e-9)

    def test_at_first_breakpoint(self):
        """The breakpoint's own hinge contributes zero at its location."""
        expected = B0 + 0.2 * M0
        assert eval_pwl_kcal(0.2, PWL) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(8.735e-6, rel=1e-9)

    def test_between_breakpoints(self):
        """b0 + 0.25*m0 + 0.05*dm1."""
        expected = B0 + 0.25 * M0 + 0.05 * 1.362e-4
        assert eval_pwl_kcal(0.25, PWL) == pytest.approx(expected, rel=1e-14)

    def test_continuity_at_every_breakpoint(self):
        for tau in PWL.breakpoints:
            for eps in (1e-6, 1e-9, 1e-12):
                left = eval_pwl_kcal(tau - eps, PWL)
                right = eval_pwl_kcal(tau + eps, PWL)
                assert abs(left - right) <= 2e-3 * eps + 1e-18

    def test_nonnegative_over_domain_grid(self):
        grid = np.arange(0.1, 0.9 + 1e-12, 1e-3)
        values = [eval_pwl_kcal(float(s), PWL) for s in grid]
        assert min(values) >= 0.0

    def test_domain_enforced(self):
        with pytest.raises(ValueError):
            eval_pwl_kcal(0.05, PWL)
        with pytest.raises(ValueError):
            eval_pwl_kcal(0.95, PWL)


def _smooth_reference_curve():
    """Plausible anode-potential calendar rate for fit testing: smooth,
    increasing in SoE, same order of magnitude as the published fit."""
    params = DegradationParams(
        nonlinear_calendar=NonlinearCalendarConfig(
            k_cal_ref=8.0e-5,
            activation_energy=50000.0,
            alpha=-0.12,
            anode_ocp_curve=tuple(
                (s, 0.5 * math.exp(-4.5 * s) + 0.16 - 0.05 * s)
                for s in np.linspace(0.0, 1.0, 101)
            ),
            anode_ocp_ref=0.25,
        )
    )
    return params, lambda s: eval_nonlinear_kcal(s, params)


class TestFitPwl:
    def test_linear_function_gives_zero_slope_changes(self):
        model = fit_pwl(lambda s: 2e-5 + 3e-4 * s, [0.1 * k for k in range(1, 10)])
        assert model.first_slope == pytest.approx(3e-4, rel=1e-9)
        for dm in model.slope_changes:
            assert abs(dm) < 1e-12

    def test_interpolates_exactly_at_breakpoints(self):
        _, curve = _smooth_reference_curve()
        bps = [0.1 + 0.1 * k for k in range(9)]
        model = fit_pwl(curve, bps)
        for b in bps:
            assert eval_pwl_kcal(b, model) == pytest.approx(curve(b), rel=1e-12)

    def test_rmse_against_smooth_curve(self):
        """Secant fit on 10% intervals stays close to the smooth curve."""
        _, curve = _smooth_reference_curve()
        model = fit_pwl(curve, [0.1 + 0.1 * k for k in range(9)])
        grid = np.arange(0.1, 0.9 + 1e-12, 1e-3)
        err = np.array([eval_pwl_kcal(float(s), model) - curve(float(s)) for s in grid])
        rmse = float(np.sqrt(np.mean(err**2)))
        assert rmse <= 5e-6

    def test_refit_of_own_graph_is_idempotent(self):
        bps = [PWL.domain_min, *PWL.breakpoints, PWL.domain_max]
        refit = fit_pwl(lambda s: eval_pwl_kcal(s, PWL), bps)
        assert refit.intercept == pytest.approx(PWL.intercept, rel=1e-9, abs=1e-18)
        assert refit.first_slope == pytest.approx(PWL.first_slope, rel=1e-9)
        assert refit.breakpoints == PWL.breakpoints
        for got, want in zip(refit.slope_changes, PWL.slope_changes):
            assert got == pytest.approx(want, rel=1e-9, abs=1e-15)

    def test_too_few_breakpoints_rejected(self):
        with pytest.raises(ValueError):
            fit_pwl(lambda s: s, [0.5])


class TestNonlinearCalendar:
    def test_reference_point_returns_k_ref(self):
        params, _ = _smooth_reference_curve()
        cfg = params.nonlinear_calendar
        # Find the SoE where U_a equals the reference potential.
        soes = np.array([s for s, _ in cfg.anode_ocp_curve])
        pots = np.array([u for _, u in cfg.anode_ocp_curve])
        s_ref = float(np.interp(cfg.anode_ocp_ref, pots[::-1], soes[::-1]))
        assert eval_nonlinear_kcal(s_ref, params) == pytest.approx(
            cfg.k_cal_ref, rel=1e-6
        )

    def test_alpha_zero_removes_soe_dependence(self):
        params, _ = _smooth_reference_curve()
        cfg = params.nonlinear_calendar
        flat = DegradationParams(
            nonlinear_calendar=NonlinearCalendarConfig(
                k_cal_ref=cfg.k_cal_ref,
                activation_energy=cfg.activation_energy,
                alpha=0.0,
                anode_ocp_curve=cfg.anode_ocp_curve,
                anode_ocp_ref=cfg.anode_ocp_ref,
            )
        )
        values = {eval_nonlinear_kcal(s, flat) for s in (0.1, 0.35, 0.6, 0.9)}
        assert all(v == pytest.approx(cfg.k_cal_ref, rel=1e-12) for v in values)

    def test_missing_config_rejected(self):
        with pytest.raises(ValueError):
            eval_nonlinear_kcal(0.5, DegradationParams())


class TestCycleRate:
    MODEL = CycleRateModel.from_params(DegradationParams())

    def test_reference_temperature_drops_quadratic_term(self):
        m = CycleRateModel(
            k_cyc_ref=2e-4, k_a=0.7, k_b=0.3, k_g=5e-3, k_h=1.0,
            temperature_kelvin=298.15, temperature_ref_kelvin=298.15,
        )
        assert cycle_rate(0.5, m) == pytest.approx(2e-4 * (0.7 * 0.5 + 0.3), rel=1e-12)

    def test_zero_dod(self):
        assert cycle_rate(0.0, self.MODEL) == pytest.approx(
            self.MODEL.k_cyc_ref * self.MODEL.k_b * self.MODEL.k_h, rel=1e-12
        )

    def test_affine_in_dod(self):
        r = lambda d: cycle_rate(d, self.MODEL)  # noqa: E731
        assert r(0.8) - r(0.4) == pytest.approx(2 * (r(0.4) - r(0.2)), rel=1e-9)

    def test_dod_range_enforced(self):
        with pytest.raises(ValueError):
            cycle_rate(1.5, self.MODEL)


class TestIncrementalCalendar:
    def test_first_hour_is_half_rate(self):
        k = eval_pwl_kcal(0.5, PWL)
        assert incremental_calendar(0.5, 0, PWL) == pytest.approx(k / 2, rel=1e-12)

    def test_hour_three(self):
        k = eval_pwl_kcal(0.5, PWL)
        assert incremental_calendar(0.5, 3, PWL) == pytest.approx(k / 4, rel=1e-12)

    def test_sqrt_law_over_a_year(self):
        """Sum of 1/(2 sqrt(t+1)) over 8760 hours tracks sqrt(8760) within 1%."""
        hours = 8760
        weights = 1.0 / (2.0 * np.sqrt(np.arange(hours) + 1.0))
        k = eval_pwl_kcal(0.6, PWL)
        total = k * float(weights.sum())
        continuous = k * math.sqrt(hours)
        assert abs(total - continuous) / continuous < 0.01

    def test_negative_hour_rejected(self):
        with pytest.raises(ValueError):
            calendar_weight(-1)


class TestIncrementalCycle:
    MODEL = CycleRateModel.from_params(DegradationParams())

    def test_zero_swing(self):
        assert incremental_cycle(0.0, 0.3, self.MODEL) == (0.0, 0.0)

    def test_closed_loop_efc(self):
        """0.6 -> 0.7 -> 0.6 is half of the total absolute variation = 0.1."""
        efc = 0.0
        for delta in (0.1, -0.1):
            _, inc = incremental_cycle(delta, 0.1, self.MODEL)
            efc += inc
        assert efc == pytest.approx(0.1, rel=1e-12)

    def test_discharge_loss(self):
        rate = cycle_rate(0.4, self.MODEL)
        loss, inc = incremental_cycle(-0.1, 0.4, self.MODEL)
        assert inc == pytest.approx(0.05, rel=1e-12)
        assert loss == pytest.approx(0.05 * rate, rel=1e-12)

    def test_swing_cap(self):
        with pytest.raises(ValueError):
            incremental_cycle(1.5, 0.5, self.MODEL)

    def test_random_closed_loops_efc_is_half_total_variation(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            steps = rng.uniform(-0.2, 0.2, 12)
            steps = np.append(steps, -steps.sum())  # close the loop
            efc = sum(incremental_cycle(float(d), 0.5, self.MODEL)[1] for d in steps)
            assert efc == pytest.approx(np.abs(steps).sum() / 2, rel=1e-9)


class TestAccumulate:
    def test_identity_on_zero(self):
        state = DegradationState(1.0, 2.0, 3.0, 100)
        out = accumulate(state, 0.0, 0.0, 0.0, hours=0)
        assert out == state

    def test_split_equals_merged(self):
        state = DegradationState()
        one = accumulate(state, 0.3, 0.4, 0.05)
        two = accumulate(accumulate(state, 0.1, 0.1, 0.02), 0.2, 0.3, 0.03)
        assert one.q_loss_cal_pct == pytest.approx(two.q_loss_cal_pct, rel=1e-12)
        assert one.q_loss_cyc_pct == pytest.approx(two.q_loss_cyc_pct, rel=1e-12)
        assert one.efc == pytest.approx(two.efc, rel=1e-12)

    def test_total_is_exact_sum(self):
        state = accumulate(DegradationState(), 0.125, 0.375, 0.1)
        assert state.q_loss_pct == state.q_loss_cal_pct + state.q_loss_cyc_pct

    def test_monotone_under_random_increments(self):
        rng = np.random.default_rng(5)
        state = DegradationState()
        prev = state
        for _ in range(200):
            state = accumulate(state, rng.uniform(0, 1e-3), rng.uniform(0, 1e-3), rng.uniform(0, 1e-2))
            assert state.q_loss_cal_pct >= prev.q_loss_cal_pct
            assert state.q_loss_cyc_pct >= prev.q_loss_cyc_pct
            assert state.efc >= prev.efc
            prev = state

    def test_negative_increment_rejected(self):
        with pytest.raises(ValueError):
            accumulate(DegradationState(), -1e-9, 0.0, 0.0)
