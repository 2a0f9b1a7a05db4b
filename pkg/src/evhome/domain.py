"""Shared configuration and state objects plus the basic tariff/economics math.

Conventions used across the package:

* Energy in kWh, money in euros (double precision; rounding happens only when
  reports are written), SoE as a fraction of usable capacity in [0, 1].
* Time is a zero-based global hour index over the simulated period; calendar
  dates are derived metadata only.
* Capacity-loss figures handed between modules are in percent of nominal
  capacity.  The raw aging-rate coefficients (see :mod:`evhome.degradation`)
  produce fractional loss; conversion happens at the accounting boundary.

All objects here are immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class EvSpec:
    """EV battery and charger limits."""

    usable_capacity_kwh: float = 79.0
    efficiency_km_per_kwh: float = 5.9
    max_hourly_energy_kwh: float = 11.0
    pickup_soe: float = 0.8
    soe_min: float = 0.1
    soe_max: float = 0.9
    safety_soe: float = 0.4

    def __post_init__(self) -> None:
        if self.usable_capacity_kwh <= 0:
            raise ValueError("usable_capacity_kwh must be > 0")
        if self.max_hourly_energy_kwh <= 0:
            raise ValueError("max_hourly_energy_kwh must be > 0")
        if self.efficiency_km_per_kwh <= 0:
            raise ValueError("efficiency_km_per_kwh must be > 0")
        if not (0 <= self.soe_min < self.safety_soe < self.pickup_soe <= self.soe_max <= 1):
            raise ValueError(
                "SoE levels must satisfy 0 <= soe_min < safety_soe < pickup_soe <= soe_max <= 1"
            )


@dataclass(frozen=True)
class PvSpec:
    """Rooftop PV sizing and economics.

    ``installed_capacity_kwh`` is the total installed capacity scaling the
    normalized irradiance profile; ``max_hourly_output_kwh`` is the inverter
    limit on hourly dispatch.
    """

    installed_capacity_kwh: float = 10.0
    max_hourly_output_kwh: float = 11.0
    annualized_cost_eur_per_kwh_year: float = 85.0

    def __post_init__(self) -> None:
        if self.installed_capacity_kwh < 0:
            raise ValueError("installed_capacity_kwh must be >= 0")
        if self.max_hourly_output_kwh < 0:
            raise ValueError("max_hourly_output_kwh must be >= 0")
        if self.annualized_cost_eur_per_kwh_year < 0:
            raise ValueError("annualized_cost_eur_per_kwh_year must be >= 0")

    @property
    def annualized_cost_eur(self) -> float:
        return self.installed_capacity_kwh * self.annualized_cost_eur_per_kwh_year


@dataclass(frozen=True)
class Tariff:
    """Retail price components and the V2G remuneration ratio."""

    vat_rate: float = 0.25
    variable_fee: float = 0.00363
    delivery_fee: float = 0.00627
    network_fee: float = 0.0399
    monthly_tax: float = 4.09
    v2g_price_ratio: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.v2g_price_ratio <= 1.0):
            raise ValueError("v2g_price_ratio must be in [0, 1]")
        for name in ("variable_fee", "delivery_fee", "network_fee", "monthly_tax"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class BatteryEconomics:
    """Replacement-cost economics used to price degradation."""

    nominal_life_years: int = 10
    replacement_cost_eur_per_kwh: float = 52.46
    residual_fraction: float = 0.2
    discount_rate: float = 0.04
    eol_capacity_pct: float = 80.0

    def __post_init__(self) -> None:
        if not (0 < self.eol_capacity_pct < 100):
            raise ValueError("eol_capacity_pct must be in (0, 100)")
        if not (0 <= self.residual_fraction < 1):
            raise ValueError("residual_fraction must be in [0, 1)")
        if self.discount_rate <= -1:
            raise ValueError("discount_rate must be > -1")
        if self.nominal_life_years <= 0:
            raise ValueError("nominal_life_years must be >= 1")


@dataclass(frozen=True)
class NonlinearCalendarConfig:
    """Arrhenius/anode-potential calendar-rate configuration.

    ``anode_ocp_curve`` is a sampled (soe, potential) curve; missing SoE
    values are linearly interpolated.  Only needed when the nonlinear
    calendar path is wanted; the piecewise-linear coefficients are used
    otherwise.
    """

    k_cal_ref: float
    activation_energy: float
    alpha: float
    anode_ocp_curve: tuple[tuple[float, float], ...]
    anode_ocp_ref: float

    def __post_init__(self) -> None:
        if len(self.anode_ocp_curve) < 2:
            raise ValueError("anode_ocp_curve needs at least 2 samples")
        soes = [s for s, _ in self.anode_ocp_curve]
        if any(b <= a for a, b in zip(soes, soes[1:])):
            raise ValueError("anode_ocp_curve SoE samples must be strictly increasing")


# Universal gas constant (J/(mol*K)) and Faraday constant (C/mol).
GAS_CONSTANT = 8.314462618
FARADAY_CONSTANT = 96485.33212


@dataclass(frozen=True)
class DegradationParams:
    """Aging-model coefficients.

    The piecewise-linear calendar coefficients default to the published fit
    for an NMC cell over SoE in [0.1, 0.9].  The cycle-aging fitting
    parameters are *placeholders* normalized so that
    ``cycle_rate(DoD=1, T=T_ref) == k_cyc_ref``; real cell parameters should
    be supplied via the scenario file when available.
    """

    pwl_intercept: float = -6.491e-6
    pwl_first_slope: float = 7.613e-5
    pwl_breakpoints: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    pwl_slope_changes: tuple[float, ...] = (
        1.362e-4,
        1.087e-4,
        -1.317e-4,
        -3.668e-5,
        3.324e-4,
        5.757e-4,
        -3.912e-4,
    )
    k_cyc_ref: float = 1.0e-4
    k_a: float = 0.75
    k_b: float = 0.25
    k_g: float = 0.0
    k_h: float = 1.0
    temperature_kelvin: float = 298.15
    temperature_ref_kelvin: float = 298.15
    nonlinear_calendar: Optional[NonlinearCalendarConfig] = None
    gas_constant: float = GAS_CONSTANT
    faraday_constant: float = FARADAY_CONSTANT

    def __post_init__(self) -> None:
        if len(self.pwl_breakpoints) != len(self.pwl_slope_changes):
            raise ValueError("pwl_breakpoints and pwl_slope_changes lengths must match")
        bps = self.pwl_breakpoints
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("pwl_breakpoints must be strictly increasing")
        if self.temperature_kelvin <= 0 or self.temperature_ref_kelvin <= 0:
            raise ValueError("temperatures must be positive kelvin")
        # Normalize list inputs so instances hash/compare by value.
        object.__setattr__(self, "pwl_breakpoints", tuple(self.pwl_breakpoints))
        object.__setattr__(self, "pwl_slope_changes", tuple(self.pwl_slope_changes))


@dataclass(frozen=True)
class HourlyFlows:
    """The seven directed energy flows plus PV curtailment for one hour (kWh)."""

    v2g: float = 0.0
    v2h: float = 0.0
    g2v: float = 0.0
    g2h: float = 0.0
    pv2v: float = 0.0
    pv2g: float = 0.0
    pv2h: float = 0.0
    pv2curt: float = 0.0

    def __post_init__(self) -> None:
        for name in ("v2g", "v2h", "g2v", "g2h", "pv2v", "pv2g", "pv2h", "pv2curt"):
            if getattr(self, name) < 0:
                raise ValueError(f"flow {name} must be >= 0")

    @property
    def ev_charge_kwh(self) -> float:
        return self.g2v + self.pv2v

    @property
    def ev_discharge_kwh(self) -> float:
        return self.v2g + self.v2h

    @property
    def ev_throughput_kwh(self) -> float:
        return self.ev_charge_kwh + self.ev_discharge_kwh

    @property
    def pv_dispatch_kwh(self) -> float:
        return self.pv2v + self.pv2g + self.pv2h


def validate_flows(
    flows: HourlyFlows,
    ev: EvSpec,
    pv: PvSpec,
    pv_production_kwh: float,
    household_load_kwh: float,
    grid_cap_kwh: float = 1.0e6,
    tol: float = 1e-6,
) -> list[str]:
    """Check one hour of flows against the charger, inverter, balance, and grid
    limits.  Returns a list of violation messages (empty when feasible)."""
    problems: list[str] = []
    if flows.ev_charge_kwh > ev.max_hourly_energy_kwh + tol:
        problems.append("ev charge above charger limit")
    if flows.ev_discharge_kwh > ev.max_hourly_energy_kwh + tol:
        problems.append("ev discharge above charger limit")
    if flows.pv_dispatch_kwh > pv.max_hourly_output_kwh + tol:
        problems.append("pv dispatch above inverter limit")
    if abs(flows.pv_dispatch_kwh + flows.pv2curt - pv_production_kwh) > tol:
        problems.append("pv balance violated")
    if abs(flows.g2h + flows.v2h + flows.pv2h - household_load_kwh) > tol:
        problems.append("household balance violated")
    if flows.g2v + flows.g2h > grid_cap_kwh + tol:
        problems.append("grid cap exceeded")
    return problems


@dataclass(frozen=True)
class ParkingSession:
    """One home-parking interval, hours inclusive on both ends.

    ``declared_pickup_hour`` is what the user announces on arrival (the
    optimization horizon end); ``actual_pickup_hour`` is when the EV really
    leaves and differs only under pickup-time uncertainty.
    """

    arrival_hour: int
    declared_pickup_hour: int
    actual_pickup_hour: int

    def __post_init__(self) -> None:
        if self.declared_pickup_hour < self.arrival_hour:
            raise ValueError("declared pickup before arrival")
        if self.actual_pickup_hour < self.arrival_hour:
            raise ValueError("actual pickup before arrival")

    @property
    def duration(self) -> int:
        """Declared parking duration in hours (both endpoints counted)."""
        return self.declared_pickup_hour - self.arrival_hour + 1

    def safety_floor_hours(self) -> range:
        """Hours in the second half of the declared session where the
        safety SoE floor applies: offsets floor(T_p/2) .. T_p-1."""
        return range(
            self.arrival_hour + self.duration // 2,
            self.declared_pickup_hour + 1,
        )


@dataclass(frozen=True)
class DegradationState:
    """Cumulative capacity loss split by mechanism, in percent, plus the
    equivalent-full-cycle counter."""

    q_loss_cal_pct: float = 0.0
    q_loss_cyc_pct: float = 0.0
    efc: float = 0.0
    hours_elapsed: int = 0

    def __post_init__(self) -> None:
        if self.q_loss_cal_pct < 0 or self.q_loss_cyc_pct < 0 or self.efc < 0:
            raise ValueError("degradation state components must be >= 0")
        if self.hours_elapsed < 0:
            raise ValueError("hours_elapsed must be >= 0")

    @property
    def q_loss_pct(self) -> float:
        return self.q_loss_cal_pct + self.q_loss_cyc_pct


@dataclass(frozen=True)
class LedgerEntry:
    """Per-hour cost accounting (all in euros)."""

    hour: int
    ec_eur: float
    er_eur: float
    bc_eur: float
    mode: str  # "parked" or "driving"

    def __post_init__(self) -> None:
        if self.mode not in ("parked", "driving"):
            raise ValueError("mode must be 'parked' or 'driving'")
        if self.bc_eur < -1e-12 or self.ec_eur < -1e-12 or self.er_eur < -1e-12:
            raise ValueError("ledger components must be >= 0")


def compute_net_present_value(econ: BatteryEconomics, capacity_kwh: float) -> float:
    """Discounted replacement-minus-residual value of ``capacity_kwh`` of
    battery, in euros."""
    if capacity_kwh <= 0:
        raise ValueError("capacity must be > 0")
    c_rep = econ.replacement_cost_eur_per_kwh
    c_rv = econ.residual_fraction * c_rep
    return capacity_kwh * (c_rep - c_rv) / (1.0 + econ.discount_rate) ** econ.nominal_life_years


def retail_price(spot_eur_per_kwh: float, tariff: Tariff) -> float:
    """Retail purchase price: VAT on top of spot plus the per-kWh fees.

    The fixed monthly tax is billed separately and is not part of the
    per-kWh price.  Negative spot prices are passed through unchanged.
    """
    if not math.isfinite(spot_eur_per_kwh):
        raise ValueError("spot price must be finite")
    return (1.0 + tariff.vat_rate) * (
        spot_eur_per_kwh + tariff.variable_fee + tariff.delivery_fee + tariff.network_fee
    )


def battery_cost(delta_q_loss_pct: float, nv_eur: float, eol_pct: float) -> float:
    """Euro cost of ``delta_q_loss_pct`` percentage points of capacity loss,
    prorated against the remaining end-of-life budget."""
    if eol_pct >= 100:
        raise ValueError("eol_pct must be < 100")
    if delta_q_loss_pct < 0:
        raise ValueError("delta_q_loss_pct must be >= 0")
    return nv_eur * delta_q_loss_pct / (100.0 - eol_pct)
