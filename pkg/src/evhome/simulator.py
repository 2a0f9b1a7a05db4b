"""Year-long closed-loop simulation.

Each day the EV leaves home in the morning and returns in the evening
(truncated-Gaussian pickup time, parking start time, and daily distance).
While parked, the shrinking-horizon problem is re-solved every hour and only
the first hour of the plan is applied; while driving, the SoE falls linearly
with the trip distance and the household runs a PV-first rule.  Battery aging
is accounted plant-side every hour: calendar from the end-of-hour SoE,
cycle from the hourly SoE swing at the running session/trip depth of
discharge.

Pickup-time uncertainty shifts the actual pickup around the declared one:
early pickups truncate the plan mid-session (the EV leaves with whatever SoE
it has), late pickups leave the EV idle at home holding its SoE until the
real departure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from evhome import degradation as deg
from evhome.degradation import CycleRateModel, PwlCalendarModel
from evhome.domain import (
    BatteryEconomics,
    DegradationParams,
    DegradationState,
    EvSpec,
    HourlyFlows,
    ParkingSession,
    PvSpec,
    Tariff,
    battery_cost,
    compute_net_present_value,
    retail_price,
    validate_flows,
)
from evhome.forecast import (
    HISTORY_HOURS,
    HOUSEHOLD_LOAD,
    SOLAR_IRRADIANCE,
    ForecastProvider,
    ForecastRequest,
    ProviderError,
    SeasonalNaiveProvider,
    build_provider,
)
from evhome.scheduler import (
    HorizonProblem,
    Strategy,
    build_problem,
    fallback_first_hour,
    flag_simultaneous_flow,
    solve_horizon,
)

HOURS_PER_MONTH = 730  # 8760 / 12


@dataclass(frozen=True)
class TruncatedGaussian:
    mean: float
    std: float
    minimum: float
    maximum: float

    def __post_init__(self) -> None:
        if not (self.minimum <= self.mean <= self.maximum):
            raise ValueError("need minimum <= mean <= maximum")
        if self.std < 0:
            raise ValueError("std must be >= 0")


@dataclass(frozen=True)
class DrivingPatternModel:
    """Daily EV usage distributions (hours of day, km)."""

    pickup_time: TruncatedGaussian = TruncatedGaussian(6.7, 0.8, 4, 10)
    parking_start_time: TruncatedGaussian = TruncatedGaussian(17.0, 1.2, 14, 21)
    daily_distance_km: TruncatedGaussian = TruncatedGaussian(31.2, 10.0, 5, 60)


@dataclass(frozen=True)
class PickupUncertainty:
    """Pickup-time perturbation: with probability ``p_change`` the actual
    pickup shifts by up to ``e_pct`` percent of the parking duration."""

    e_pct: float = 0.0
    p_change: float = 0.8

    def __post_init__(self) -> None:
        if not (0 <= self.e_pct < 100):
            raise ValueError("e_pct must be in [0, 100)")
        if not (0 <= self.p_change <= 1):
            raise ValueError("p_change must be in [0, 1]")

    @property
    def enabled(self) -> bool:
        return self.e_pct > 0 and self.p_change > 0


def sample_truncated(tg: TruncatedGaussian, rng: np.random.Generator) -> float:
    """Rejection sampling; falls back to the clamped mean after 1000 misses."""
    if tg.std == 0:
        return tg.mean
    for _ in range(1000):
        value = rng.normal(tg.mean, tg.std)
        if tg.minimum <= value <= tg.maximum:
            return value
    return min(max(tg.mean, tg.minimum), tg.maximum)


def sample_day(
    pattern: DrivingPatternModel, rng: np.random.Generator
) -> tuple[int, int, float]:
    """One day's (pickup hour, parking start hour, distance km).  Times are
    rounded to whole hours; the pair is redrawn until there is at least one
    driving hour between pickup and parking start."""
    for _ in range(1000):
        pickup = int(round(sample_truncated(pattern.pickup_time, rng)))
        park = int(round(sample_truncated(pattern.parking_start_time, rng)))
        if pickup + 2 <= park and park <= 23:
            break
    else:
        pickup = int(round(min(max(pattern.pickup_time.mean, pattern.pickup_time.minimum),
                               pattern.pickup_time.maximum)))
        park = min(23, pickup + 2)
    distance = sample_truncated(pattern.daily_distance_km, rng)
    return pickup, park, distance


def driving_step(soe: float, distance_km: float, ev: EvSpec) -> float:
    """SoE after driving ``distance_km``; floored at zero (the caller records
    a violation when the trip exceeds the energy budget)."""
    if distance_km < 0:
        raise ValueError("distance must be >= 0")
    return max(0.0, soe - distance_km / (ev.efficiency_km_per_kwh * ev.usable_capacity_kwh))


def rule_based_home_dispatch(
    hl_kwh: float, pv_kwh: float, pv_max_kwh: float = 11.0
) -> HourlyFlows:
    """PV-first household supply while the EV is away: PV covers the load,
    surplus exports up to the inverter limit, the rest curtails, and any
    deficit comes from the grid."""
    pv2h = min(pv_kwh, hl_kwh, pv_max_kwh)
    pv2g = min(pv_kwh - pv2h, pv_max_kwh - pv2h)
    return HourlyFlows(
        g2h=hl_kwh - pv2h,
        pv2h=pv2h,
        pv2g=pv2g,
        pv2curt=pv_kwh - pv2h - pv2g,
    )


def perturb_pickup(
    session: ParkingSession,
    e_pct: float,
    p_change: float,
    rng: np.random.Generator,
    next_arrival_hour: int,
) -> ParkingSession:
    """Perturbed copy of ``session``: with probability ``p_change`` the
    actual pickup shifts by a uniform 1..floor(e*T_p/100) hours, sign
    uniform, clamped so the session keeps at least one hour and the following
    trip keeps at least one driving hour.

    Three RNG draws are always consumed so that runs with different ``e_pct``
    but the same seed stay paired draw-for-draw.
    """
    u_apply = rng.random()
    sign = 1 if rng.random() < 0.5 else -1
    u_mag = rng.random()
    max_shift = int(e_pct * session.duration / 100.0)
    if u_apply >= p_change or max_shift < 1:
        return session
    magnitude = int(math.ceil(u_mag * max_shift))
    magnitude = min(max(magnitude, 1), max_shift)
    actual = session.declared_pickup_hour + sign * magnitude
    actual = max(session.arrival_hour + 1, min(actual, next_arrival_hour - 2))
    return replace(session, actual_pickup_hour=actual)


@dataclass(frozen=True)
class Scenario:
    """Full experiment configuration (series data is supplied separately)."""

    name: str = "scenario"
    hours: int = 8760
    seed: int = 7
    strategy: Strategy = Strategy.PROPOSED
    initial_soe: float = 0.6
    forecast_provider: str = "seasonal-naive"
    ev: EvSpec = field(default_factory=EvSpec)
    pv: PvSpec = field(default_factory=PvSpec)
    tariff: Tariff = field(default_factory=Tariff)
    economics: BatteryEconomics = field(default_factory=BatteryEconomics)
    degradation: DegradationParams = field(default_factory=DegradationParams)
    driving: DrivingPatternModel = field(default_factory=DrivingPatternModel)
    uncertainty: PickupUncertainty = field(default_factory=PickupUncertainty)
    grid_cap_kwh: float = 1.0e6
    convexify: bool = False
    mip_rel_gap: float = 1e-6
    solver_gap_abs_eur: float = 0.0

    def __post_init__(self) -> None:
        if self.hours < 24:
            raise ValueError("simulation needs at least 24 hours")
        if self.hours > 8760:
            raise ValueError("simulation horizon is capped at one year (8760 h)")
        if not (self.ev.soe_min <= self.initial_soe <= self.ev.soe_max):
            raise ValueError("initial_soe outside admissible SoE bounds")

    @property
    def gamma(self) -> float:
        return self.tariff.v2g_price_ratio


@dataclass(frozen=True)
class SeriesBundle:
    """Hourly input series: spot price (EUR/kWh), household load (kWh), and
    normalized irradiance in [0, 1]."""

    spot: np.ndarray
    load: np.ndarray
    irradiance: np.ndarray

    def __post_init__(self) -> None:
        for name in ("spot", "load", "irradiance"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.spot)
        if len(self.load) != n or len(self.irradiance) != n:
            raise ValueError("series lengths differ")
        if np.any(~np.isfinite(self.spot)):
            raise ValueError("spot series has non-finite values")
        if np.any(self.load < 0):
            raise ValueError("load series has negative values")
        if np.any((self.irradiance < 0) | (self.irradiance > 1)):
            raise ValueError("irradiance outside [0, 1]")

    def __len__(self) -> int:
        return len(self.spot)

    def scaled_load(self, factor: float) -> "SeriesBundle":
        return SeriesBundle(self.spot, self.load * factor, self.irradiance)


@dataclass
class ViolationRecord:
    hour: int
    kind: str
    detail: str = ""


@dataclass
class LedgerRow:
    """One hour of applied flows and accounting (the per-hour ledger CSV)."""

    hour: int
    mode: str  # "parked" or "driving"
    session_id: int  # -1 while driving
    spot_eur_per_kwh: float
    retail_eur_per_kwh: float
    hl_kwh: float
    pv_kwh: float
    flows: HourlyFlows
    soe_start: float
    soe_end: float
    ec_eur: float
    er_eur: float
    bc_eur: float
    dq_cal_pct: float
    dq_cyc_pct: float
    efc_inc: float


@dataclass
class SimulationResult:
    fc_eur: float
    ec_eur: float
    er_eur: float
    bc_eur: float
    fixed_eur: float
    q_loss_pct: float
    q_cal_pct: float
    q_cyc_pct: float
    efc: float
    v2g_kwh: float
    v2h_kwh: float
    final_soe: float
    ledger: list[LedgerRow]
    violations: list[ViolationRecord]
    provider_failures: int = 0

    @property
    def ec_minus_er_eur(self) -> float:
        return self.ec_eur - self.er_eur

    def table_row(self) -> dict[str, float]:
        """Result-table column layout (annual cost breakdown)."""
        return {
            "fc_eur": self.fc_eur,
            "ec_minus_er_eur": self.ec_minus_er_eur,
            "bc_eur": self.bc_eur,
            "q_loss_pct": self.q_loss_pct,
            "q_cal_pct": self.q_cal_pct,
            "q_cyc_pct": self.q_cyc_pct,
            "efc": self.efc,
        }


@dataclass(frozen=True)
class _Trip:
    start_hour: int  # first driving hour
    end_hour: int  # last driving hour (inclusive)
    distance_km: float


def build_timeline(
    scenario: Scenario, rng: np.random.Generator, perturb_rng: Optional[np.random.Generator]
) -> tuple[list[ParkingSession], list[_Trip]]:
    """Sample the daily pattern and lay out parking sessions and trips over
    the simulated horizon.  The EV starts the run parked (midnight), so day
    0 opens with a partial session from hour 0 to its first pickup."""
    hours = scenario.hours
    days = hours // 24 + 2
    samples = [sample_day(scenario.driving, rng) for _ in range(days)]

    sessions: list[ParkingSession] = []
    arrivals: list[int] = []
    declared: list[int] = []
    first_pickup = min(samples[0][0], hours - 1)
    arrivals.append(0)
    declared.append(first_pickup)
    for d in range(days - 1):
        t_a = 24 * d + samples[d][1]
        if t_a >= hours:
            break
        t_p = min(24 * (d + 1) + samples[d + 1][0], hours - 1)
        arrivals.append(t_a)
        declared.append(t_p)

    for i, (t_a, t_p) in enumerate(zip(arrivals, declared)):
        session = ParkingSession(
            arrival_hour=t_a, declared_pickup_hour=t_p, actual_pickup_hour=t_p
        )
        if scenario.uncertainty.enabled and perturb_rng is not None:
            next_arrival = arrivals[i + 1] if i + 1 < len(arrivals) else hours
            session = perturb_pickup(
                session,
                scenario.uncertainty.e_pct,
                scenario.uncertainty.p_change,
                perturb_rng,
                next_arrival,
            )
        elif perturb_rng is not None:
            # Consume the draws anyway so seeds stay paired across e levels.
            perturb_rng.random()
            perturb_rng.random()
            perturb_rng.random()
        sessions.append(session)

    trips: list[_Trip] = []
    for i, session in enumerate(sessions):
        depart = session.actual_pickup_hour
        next_arrival = sessions[i + 1].arrival_hour if i + 1 < len(sessions) else hours
        if depart + 1 >= min(next_arrival, hours):
            continue
        trips.append(
            _Trip(
                start_hour=depart + 1,
                end_hour=min(next_arrival, hours) - 1,
                distance_km=samples[i][2],
            )
        )
    return sessions, trips


class _Window:
    """Causal running SoE window (max - min) for the DoD of the current
    parking session or trip."""

    def __init__(self, soe: float):
        self.lo = soe
        self.hi = soe

    def update(self, soe: float) -> None:
        self.lo = min(self.lo, soe)
        self.hi = max(self.hi, soe)

    @property
    def dod(self) -> float:
        return min(1.0, self.hi - self.lo)


def run_year(
    scenario: Scenario,
    series: SeriesBundle,
    provider: Optional[ForecastProvider] = None,
    k_cyc_refresh: bool = True,
    horizon_callback: Optional[Callable[[HorizonProblem, object], None]] = None,
) -> SimulationResult:
    """Run the closed loop over ``scenario.hours`` hours.

    ``provider`` overrides the scenario's forecast provider (the perfect
    provider is built from the supplied series).  ``k_cyc_refresh=False``
    freezes each session's cycle-rate coefficient at its first value, which
    makes perfect-foresight replans reproduce the arrival-hour plan exactly.
    ``horizon_callback`` receives every solved (problem, solution) pair.
    """
    hours = scenario.hours
    if len(series) < hours:
        raise ValueError(f"series cover {len(series)} hours, scenario needs {hours}")

    ev = scenario.ev
    pv = scenario.pv
    tariff = scenario.tariff
    params = scenario.degradation

    retail = np.array([retail_price(s, tariff) for s in series.spot])
    pv_truth = series.irradiance * pv.installed_capacity_kwh
    nv_eur = compute_net_present_value(scenario.economics, ev.usable_capacity_kwh)
    eol_pct = scenario.economics.eol_capacity_pct

    pwl = PwlCalendarModel.from_params(params)
    cyc_model = CycleRateModel.from_params(params)
    if params.nonlinear_calendar is not None:
        plant_kcal = lambda soe: deg.eval_nonlinear_kcal(soe, params)  # noqa: E731
        opt_pwl = deg.fit_pwl(
            plant_kcal, [pwl.domain_min, *params.pwl_breakpoints, pwl.domain_max]
        )
    else:
        plant_kcal = lambda soe: deg.eval_pwl_kcal(soe, pwl)  # noqa: E731
        opt_pwl = pwl

    if provider is None:
        truth = {HOUSEHOLD_LOAD: series.load, SOLAR_IRRADIANCE: series.irradiance}
        provider = build_provider(scenario.forecast_provider, truth=truth)
    fallback = SeasonalNaiveProvider()
    provider_failures = 0

    pattern_rng = np.random.default_rng([scenario.seed, 0x5EED])
    perturb_rng = np.random.default_rng([scenario.seed, 0x7FF])
    sessions, trips = build_timeline(scenario, pattern_rng, perturb_rng)

    # Hour -> session/trip map.  A session's parked span runs from arrival to
    # the actual pickup: shorter than declared on early pickups, and covering
    # the idle hold when the actual pickup is late.
    mode = np.full(hours, -1, dtype=int)  # session id, or -1 while driving
    trip_of_hour = np.full(hours, -1, dtype=int)
    for i, s in enumerate(sessions):
        mode[s.arrival_hour : min(s.actual_pickup_hour, hours - 1) + 1] = i
    for t, trip in enumerate(trips):
        trip_of_hour[trip.start_hour : trip.end_hour + 1] = t
        mode[trip.start_hour : trip.end_hour + 1] = -1

    def forecast_series(series_id: str, values: np.ndarray, h: int, horizon: int) -> np.ndarray:
        """Measurement at h plus a provider forecast for the next hours."""
        nonlocal provider_failures
        out = np.empty(horizon)
        out[0] = values[h]
        if horizon == 1:
            return out
        lo = max(0, h - HISTORY_HOURS + 1)
        history = values[lo : h + 1]
        if len(history) < HISTORY_HOURS:
            history = np.concatenate([np.full(HISTORY_HOURS - len(history), values[0]), history])
        request = ForecastRequest(
            series=series_id,
            history=tuple(history),
            day_of_year=(h // 24) % 365 + 1,
            hour_of_day=h % 24,
            horizon=horizon - 1,
        )
        try:
            response = provider.forecast(request)
        except ProviderError:
            provider_failures += 1
            response = fallback.forecast(request)
        out[1:] = response.values
        return out

    state = DegradationState()
    soe = scenario.initial_soe
    ledger: list[LedgerRow] = []
    violations: list[ViolationRecord] = []

    session_k_cyc = 0.0
    session_window: Optional[_Window] = None
    trip_window: Optional[_Window] = None
    trip_delta: float = 0.0
    current_session = -1
    current_trip = -1

    for h in range(hours):
        soe_start = soe
        sid = int(mode[h])
        tid = int(trip_of_hour[h])
        if sid < 0 and tid < 0:
            raise RuntimeError(f"hour {h} belongs to neither a session nor a trip")

        if sid >= 0:
            session = sessions[sid]
            if sid != current_session:
                current_session = sid
                session_window = _Window(soe)
                session_k_cyc = deg.cycle_rate(
                    min(1.0, abs(ev.pickup_soe - soe)), cyc_model
                )
            if h <= session.declared_pickup_hour:
                horizon = session.declared_pickup_hour - h + 1
                load_vec = forecast_series(HOUSEHOLD_LOAD, series.load, h, horizon)
                irr_vec = forecast_series(SOLAR_IRRADIANCE, series.irradiance, h, horizon)
                problem = build_problem(
                    current_hour=h,
                    session=session,
                    initial_soe=soe,
                    retail_prices=retail[h : h + horizon],
                    spot_prices=series.spot[h : h + horizon],
                    household_load=load_vec,
                    pv_production=irr_vec * pv.installed_capacity_kwh,
                    strategy=scenario.strategy,
                    gamma=tariff.v2g_price_ratio,
                    k_cyc=session_k_cyc,
                    pwl=opt_pwl,
                    nv_eur=nv_eur,
                    eol_pct=eol_pct,
                    ev=ev,
                    pv_max_hourly=pv.max_hourly_output_kwh,
                    grid_cap=scenario.grid_cap_kwh,
                    convexify=scenario.convexify,
                )
                solution = solve_horizon(
                    problem,
                    mip_rel_gap=scenario.mip_rel_gap,
                    gap_abs_eur=scenario.solver_gap_abs_eur,
                )
                if solution.ok:
                    if horizon_callback is not None:
                        horizon_callback(problem, solution)
                    flows = solution.hour_flows(0)
                    if flag_simultaneous_flow(solution)[:1] == [0]:
                        violations.append(
                            ViolationRecord(h, "simultaneous_flow", "charge and discharge in one hour")
                        )
                    if k_cyc_refresh:
                        traj = np.concatenate([[soe], solution.soe])
                        session_k_cyc = deg.cycle_rate(
                            min(1.0, float(traj.max() - traj.min())), cyc_model
                        )
                else:
                    flows = fallback_first_hour(problem)
                    violations.append(
                        ViolationRecord(
                            h,
                            "infeasible_fallback",
                            solution.infeasibility or solution.status.value,
                        )
                    )
            else:
                # Idle hold after the declared pickup (late actual pickup):
                # the EV keeps its SoE, the house runs the PV-first rule.
                flows = rule_based_home_dispatch(
                    series.load[h], pv_truth[h], pv.max_hourly_output_kwh
                )
            soe = soe_start + (flows.ev_charge_kwh - flows.ev_discharge_kwh) / ev.usable_capacity_kwh
            if soe < ev.soe_min - 1e-6 or soe > ev.soe_max + 1e-6:
                raise RuntimeError(f"hour {h}: applied SoE {soe:.6f} escaped bounds")
            soe = min(max(soe, ev.soe_min), ev.soe_max)
            session_window.update(soe)
            dod = session_window.dod
            mode_label = "parked"
            if h == session.actual_pickup_hour and soe < ev.pickup_soe - 1e-6:
                violations.append(
                    ViolationRecord(
                        h,
                        "pickup_soe_shortfall",
                        f"soe {soe:.4f} below target {ev.pickup_soe}",
                    )
                )
        else:
            trip = trips[tid]
            if tid != current_trip:
                current_trip = tid
                trip_window = _Window(soe)
                n_hours = trip.end_hour - trip.start_hour + 1
                trip_delta = (
                    trip.distance_km
                    / (ev.efficiency_km_per_kwh * ev.usable_capacity_kwh)
                    / n_hours
                )
            raw = soe - trip_delta
            soe = max(0.0, raw)
            if raw < ev.soe_min - 1e-9:
                kind = "trip_depleted" if raw < 0 else "trip_soe_below_min"
                violations.append(ViolationRecord(h, kind, f"soe {raw:.4f}"))
            flows = rule_based_home_dispatch(
                series.load[h], pv_truth[h], pv.max_hourly_output_kwh
            )
            trip_window.update(soe)
            dod = trip_window.dod
            mode_label = "driving"

        flow_problems = validate_flows(
            flows, ev, pv, pv_truth[h], series.load[h], scenario.grid_cap_kwh
        )
        if flow_problems:
            raise RuntimeError(f"hour {h}: applied flows violate limits: {flow_problems}")

        ec = (flows.g2v + flows.g2h) * retail[h]
        er = (tariff.v2g_price_ratio * flows.v2g + flows.pv2g) * series.spot[h]
        cal_frac = plant_kcal(min(max(soe, pwl.domain_min), pwl.domain_max)) * deg.calendar_weight(h)
        cyc_frac, efc_inc = deg.incremental_cycle(soe - soe_start, dod, cyc_model)
        bc = battery_cost(100.0 * (cal_frac + cyc_frac), nv_eur, eol_pct)
        state = deg.accumulate(state, 100.0 * cal_frac, 100.0 * cyc_frac, efc_inc)

        ledger.append(
            LedgerRow(
                hour=h,
                mode=mode_label,
                session_id=sid,
                spot_eur_per_kwh=float(series.spot[h]),
                retail_eur_per_kwh=float(retail[h]),
                hl_kwh=float(series.load[h]),
                pv_kwh=float(pv_truth[h]),
                flows=flows,
                soe_start=soe_start,
                soe_end=soe,
                ec_eur=float(ec),
                er_eur=float(er),
                bc_eur=float(bc),
                dq_cal_pct=100.0 * cal_frac,
                dq_cyc_pct=100.0 * cyc_frac,
                efc_inc=float(efc_inc),
            )
        )

    ec_total = sum(row.ec_eur for row in ledger)
    er_total = sum(row.er_eur for row in ledger)
    bc_total = sum(row.bc_eur for row in ledger)
    months = math.ceil(hours / HOURS_PER_MONTH)
    fixed = tariff.monthly_tax * months + pv.annualized_cost_eur * hours / 8760.0
    fc = ec_total - er_total + bc_total + fixed

    return SimulationResult(
        fc_eur=fc,
        ec_eur=ec_total,
        er_eur=er_total,
        bc_eur=bc_total,
        fixed_eur=fixed,
        q_loss_pct=state.q_loss_pct,
        q_cal_pct=state.q_loss_cal_pct,
        q_cyc_pct=state.q_loss_cyc_pct,
        efc=state.efc,
        v2g_kwh=sum(row.flows.v2g for row in ledger),
        v2h_kwh=sum(row.flows.v2h for row in ledger),
        final_soe=soe,
        ledger=ledger,
        violations=violations,
        provider_failures=provider_failures,
    )


SWEEP_AXES = ("gamma", "battery", "load-scale", "pickup-uncertainty", "pv-size")


@dataclass
class SweepRow:
    axis: str
    value: float
    fc_eur: float
    ec_minus_er_eur: float
    bc_eur: float
    q_loss_pct: float
    q_cal_pct: float
    q_cyc_pct: float
    efc: float
    v2g_kwh: float
    fc_unidirectional_eur: float
    economic_gain_eur: float
    extra_q_loss_pct: float
    delta_fc_eur: Optional[float] = None  # pickup axis only: mean FC - baseline FC


def scenario_at(scenario: Scenario, axis: str, value: float) -> Scenario:
    """Scenario for one sweep grid point (series scaling handled separately)."""
    if axis == "gamma":
        return replace(scenario, tariff=replace(scenario.tariff, v2g_price_ratio=value))
    if axis == "battery":
        return replace(scenario, ev=replace(scenario.ev, usable_capacity_kwh=value))
    if axis == "pv-size":
        return replace(scenario, pv=replace(scenario.pv, installed_capacity_kwh=value))
    if axis == "pickup-uncertainty":
        return replace(
            scenario, uncertainty=replace(scenario.uncertainty, e_pct=value)
        )
    if axis == "load-scale":
        return scenario  # handled through the series bundle
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _run_point(task: tuple[Scenario, SeriesBundle, Strategy]) -> SimulationResult:
    scenario, series, strategy = task
    return run_year(replace(scenario, strategy=strategy), series)


def run_sweep(
    scenario: Scenario,
    series: SeriesBundle,
    axis: str,
    grid: Sequence[float],
    n_seeds: int = 10,
    jobs: int = 1,
) -> list[SweepRow]:
    """One paired run per grid point: the scenario's own strategy plus smart
    unidirectional charging with identical seeds, yielding the economic gain
    and the extra degradation columns.

    The pickup-uncertainty axis instead averages ``n_seeds`` paired runs per
    perturbation level against their unperturbed baselines.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")

    tasks: list[tuple[float, Scenario, SeriesBundle, Strategy]] = []
    if axis == "pickup-uncertainty":
        for value in grid:
            for k in range(n_seeds):
                seeded = replace(scenario_at(scenario, axis, value), seed=scenario.seed + k)
                baseline = replace(
                    seeded, uncertainty=replace(seeded.uncertainty, e_pct=0.0)
                )
                tasks.append((value, seeded, series, seeded.strategy))
                tasks.append((value, baseline, series, baseline.strategy))
    else:
        for value in grid:
            point_series = series.scaled_load(value) if axis == "load-scale" else series
            point = scenario_at(scenario, axis, value)
            tasks.append((value, point, point_series, point.strategy))
            tasks.append((value, point, point_series, Strategy.UNIDIRECTIONAL))

    work = [(s, d, st) for _, s, d, st in tasks]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, work))
    else:
        results = [_run_point(t) for t in work]

    rows: list[SweepRow] = []
    if axis == "pickup-uncertainty":
        for gi, value in enumerate(grid):
            chunk = results[gi * 2 * n_seeds : (gi + 1) * 2 * n_seeds]
            perturbed = chunk[0::2]
            baselines = chunk[1::2]
            mean = lambda key: float(np.mean([getattr(r, key) for r in perturbed]))  # noqa: E731
            delta = float(
                np.mean([p.fc_eur - b.fc_eur for p, b in zip(perturbed, baselines)])
            )
            rows.append(
                SweepRow(
                    axis=axis,
                    value=value,
                    fc_eur=mean("fc_eur"),
                    ec_minus_er_eur=mean("ec_eur") - mean("er_eur"),
                    bc_eur=mean("bc_eur"),
                    q_loss_pct=mean("q_loss_pct"),
                    q_cal_pct=mean("q_cal_pct"),
                    q_cyc_pct=mean("q_cyc_pct"),
                    efc=mean("efc"),
                    v2g_kwh=mean("v2g_kwh"),
                    fc_unidirectional_eur=float("nan"),
                    economic_gain_eur=float("nan"),
                    extra_q_loss_pct=float("nan"),
                    delta_fc_eur=delta,
                )
            )
    else:
        for gi, value in enumerate(grid):
            main, uni = results[2 * gi], results[2 * gi + 1]
            rows.append(
                SweepRow(
                    axis=axis,
                    value=value,
                    fc_eur=main.fc_eur,
                    ec_minus_er_eur=main.ec_minus_er_eur,
                    bc_eur=main.bc_eur,
                    q_loss_pct=main.q_loss_pct,
                    q_cal_pct=main.q_cal_pct,
                    q_cyc_pct=main.q_cyc_pct,
                    efc=main.efc,
                    v2g_kwh=main.v2g_kwh,
                    fc_unidirectional_eur=uni.fc_eur,
                    economic_gain_eur=uni.fc_eur - main.fc_eur,
                    extra_q_loss_pct=main.q_loss_pct - uni.q_loss_pct,
                )
            )
    return rows
