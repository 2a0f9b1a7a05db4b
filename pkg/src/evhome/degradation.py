"""Semi-empirical NMC aging model: calendar + cycle capacity loss.

Calendar loss follows a square-root-of-time law whose rate depends on SoE
(and, through an Arrhenius term, on temperature).  The SoE dependence is
handled as a piecewise-linear (PWL) curve so the scheduler can embed it in a
mixed-integer linear program; the same PWL curve doubles as the plant-side
"truth" unless a nonlinear anode-potential configuration is supplied.

Cycle loss is linear in equivalent full cycles (EFC), with a rate that
depends on depth of discharge and temperature.

Unit convention: the rate coefficients produce *fractional* capacity loss
(e.g. 0.02 == 2%).  Callers that account in percent multiply by 100 at their
boundary (see :mod:`evhome.simulator`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from evhome.domain import DegradationParams, DegradationState


@dataclass(frozen=True)
class PwlCalendarModel:
    """Continuous piecewise-linear calendar-rate curve over [domain_min, domain_max].

    value(soe) = intercept + first_slope * soe
                 + sum_i slope_changes[i] * max(0, soe - breakpoints[i])
    """

    intercept: float
    first_slope: float
    breakpoints: tuple[float, ...]
    slope_changes: tuple[float, ...]
    domain_min: float = 0.1
    domain_max: float = 0.9

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.slope_changes):
            raise ValueError("breakpoints and slope_changes lengths must match")
        bps = self.breakpoints
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if bps and (bps[0] <= self.domain_min or bps[-1] >= self.domain_max):
            raise ValueError("interior breakpoints must lie strictly inside the domain")

    @classmethod
    def from_params(cls, params: DegradationParams) -> "PwlCalendarModel":
        return cls(
            intercept=params.pwl_intercept,
            first_slope=params.pwl_first_slope,
            breakpoints=params.pwl_breakpoints,
            slope_changes=params.pwl_slope_changes,
        )

    def segment_slopes(self) -> list[float]:
        """Slope of each linear segment, left to right."""
        slopes = [self.first_slope]
        for dm in self.slope_changes:
            slopes.append(slopes[-1] + dm)
        return slopes

    def knots(self) -> list[float]:
        """All knot SoE values including the domain endpoints."""
        return [self.domain_min, *self.breakpoints, self.domain_max]


def eval_pwl_kcal(soe: float, model: PwlCalendarModel) -> float:
    """Calendar aging rate at ``soe`` from the PWL curve."""
    if soe < model.domain_min - 1e-12 or soe > model.domain_max + 1e-12:
        raise ValueError(
            f"soe {soe} outside PWL domain [{model.domain_min}, {model.domain_max}]"
        )
    value = model.intercept + model.first_slope * soe
    for tau, dm in zip(model.breakpoints, model.slope_changes):
        value += dm * max(0.0, soe - tau)
    return value


@dataclass(frozen=True)
class CycleRateModel:
    """Cycle aging rate per EFC as a function of DoD and temperature."""

    k_cyc_ref: float
    k_a: float
    k_b: float
    k_g: float
    k_h: float
    temperature_kelvin: float
    temperature_ref_kelvin: float

    @classmethod
    def from_params(cls, params: DegradationParams) -> "CycleRateModel":
        return cls(
            k_cyc_ref=params.k_cyc_ref,
            k_a=params.k_a,
            k_b=params.k_b,
            k_g=params.k_g,
            k_h=params.k_h,
            temperature_kelvin=params.temperature_kelvin,
            temperature_ref_kelvin=params.temperature_ref_kelvin,
        )


def cycle_rate(dod: float, model: CycleRateModel) -> float:
    """Cycle aging rate (fractional loss per EFC) at depth of discharge ``dod``."""
    if not (0.0 <= dod <= 1.0):
        raise ValueError("dod must be in [0, 1]")
    dt = model.temperature_kelvin - model.temperature_ref_kelvin
    return model.k_cyc_ref * (model.k_a * dod + model.k_b) * (model.k_g * dt * dt + model.k_h)


def eval_nonlinear_kcal(soe: float, params: DegradationParams) -> float:
    """Arrhenius/anode-potential calendar rate at ``soe``.

    Requires ``params.nonlinear_calendar``; at the reference temperature the
    Arrhenius factor is 1 and the rate depends on SoE only through the anode
    open-circuit potential.
    """
    cfg = params.nonlinear_calendar
    if cfg is None:
        raise ValueError("nonlinear calendar configuration (anode OCP curve) not supplied")
    soes = np.array([s for s, _ in cfg.anode_ocp_curve])
    pots = np.array([u for _, u in cfg.anode_ocp_curve])
    u_a = float(np.interp(soe, soes, pots))
    t = params.temperature_kelvin
    t_ref = params.temperature_ref_kelvin
    r = params.gas_constant
    f = params.faraday_constant
    arrhenius = math.exp(-cfg.activation_energy / r * (1.0 / t - 1.0 / t_ref))
    potential = math.exp(cfg.alpha * f / r * (u_a / t - cfg.anode_ocp_ref / t_ref))
    return cfg.k_cal_ref * arrhenius * potential


def fit_pwl(
    kcal_fn: Callable[[float], float],
    breakpoints: Sequence[float],
) -> PwlCalendarModel:
    """Secant-slope PWL fit that passes exactly through ``kcal_fn`` at every
    breakpoint.  ``breakpoints`` spans the whole domain (first and last entry
    become the domain endpoints)."""
    bps = [float(b) for b in breakpoints]
    if len(bps) < 2:
        raise ValueError("need at least 2 breakpoints")
    if any(b <= a for a, b in zip(bps, bps[1:])):
        raise ValueError("breakpoints must be strictly increasing")
    values = [kcal_fn(b) for b in bps]
    secants = [
        (v1 - v0) / (b1 - b0)
        for (b0, b1), (v0, v1) in zip(zip(bps, bps[1:]), zip(values, values[1:]))
    ]
    first_slope = secants[0]
    intercept = values[0] - first_slope * bps[0]
    slope_changes = tuple(s1 - s0 for s0, s1 in zip(secants, secants[1:]))
    return PwlCalendarModel(
        intercept=intercept,
        first_slope=first_slope,
        breakpoints=tuple(bps[1:-1]),
        slope_changes=slope_changes,
        domain_min=bps[0],
        domain_max=bps[-1],
    )


def calendar_weight(global_hour: int) -> float:
    """Discretized d(sqrt(t))/dt weight for the hour ending at
    ``global_hour + 1``; evaluating at t+1 avoids the singularity at t=0."""
    if global_hour < 0:
        raise ValueError("global_hour must be >= 0")
    return 1.0 / (2.0 * math.sqrt(global_hour + 1.0))


def incremental_calendar(soe: float, global_hour: int, model: PwlCalendarModel) -> float:
    """Calendar loss accrued during one hour at rest at ``soe``."""
    return eval_pwl_kcal(soe, model) * calendar_weight(global_hour)


def incremental_cycle(
    delta_soe: float, dod: float, model: CycleRateModel
) -> tuple[float, float]:
    """Cycle loss and EFC increment for one hour with SoE change ``delta_soe``.

    ``dod`` is the depth-of-discharge window the swing belongs to (running
    max - min of the current parking session or trip).
    """
    if abs(delta_soe) > 1.0 + 1e-12:
        raise ValueError("|delta_soe| must be <= 1")
    efc_inc = abs(delta_soe) / 2.0
    return cycle_rate(dod, model) * efc_inc, efc_inc


def accumulate(
    state: DegradationState,
    cal_inc_pct: float,
    cyc_inc_pct: float,
    efc_inc: float,
    hours: int = 1,
) -> DegradationState:
    """Componentwise state update; returns a new state."""
    if cal_inc_pct < 0 or cyc_inc_pct < 0 or efc_inc < 0:
        raise ValueError("increments must be >= 0")
    return DegradationState(
        q_loss_cal_pct=state.q_loss_cal_pct + cal_inc_pct,
        q_loss_cyc_pct=state.q_loss_cyc_pct + cyc_inc_pct,
        efc=state.efc + efc_inc,
        hours_elapsed=state.hours_elapsed + hours,
    )
