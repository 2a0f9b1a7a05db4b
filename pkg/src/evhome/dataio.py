"""Scenario files, dataset ingestion, synthetic data, and result/ledger CSVs.

CSV is the only bulk format; floats are written with ``repr`` so files are
byte-stable across runs and parse back to the exact same doubles.  The
scenario file is one YAML document with unit-suffixed keys mirroring the
configuration dataclasses.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from evhome.domain import (
    BatteryEconomics,
    DegradationParams,
    EvSpec,
    HourlyFlows,
    NonlinearCalendarConfig,
    PvSpec,
    Tariff,
    battery_cost,
    compute_net_present_value,
    retail_price,
)
from evhome import degradation as deg
from evhome.degradation import CycleRateModel, PwlCalendarModel
from evhome.scheduler import Strategy
from evhome.simulator import (
    DrivingPatternModel,
    LedgerRow,
    PickupUncertainty,
    Scenario,
    SeriesBundle,
    SimulationResult,
    SweepRow,
    TruncatedGaussian,
    ViolationRecord,
)

SERIES_KINDS = ("spot", "load", "irradiance")


class SeriesError(ValueError):
    """Series file failed validation; message names the offending row."""


class ScenarioError(ValueError):
    """Scenario file failed schema validation."""


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# Synthetic data generation


def generate_synthetic(kind: str, seed: int, hours: int = 8760) -> np.ndarray:
    """Deterministic synthetic hourly series.

    * ``spot``: seasonal base (winter-high) times a day shape with a night
      trough and morning/evening peaks, slow AR(1) level noise, and sparse
      price spikes; clipped at -0.05 EUR/kWh (spot markets go negative).
    * ``load``: household profile with morning/evening peaks, winter-heavy
      season factor, lognormal noise; calibrated to 21.6 kWh/day on average.
    * ``irradiance``: clear-sky bell over a latitude-dependent day length
      scaled by season, dimmed by an AR(1) cloud process; in [0, 1] and zero
      at night.
    """
    if kind not in SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    streams = {"spot": 11, "load": 22, "irradiance": 33}
    rng = np.random.default_rng([seed, streams[kind]])
    days = math.ceil(hours / 24)
    t = np.arange(days * 24)
    day = t // 24
    hod = t % 24
    doy = day % 365

    if kind == "spot":
        base = 0.105 + 0.030 * np.cos(2 * np.pi * (doy - 15) / 365.0)
        day_shape = np.array(
            [
                -0.34, -0.42, -0.48, -0.50, -0.47, -0.38, -0.16, 0.12,
                0.30, 0.26, 0.16, 0.08, 0.02, 0.00, 0.02, 0.08,
                0.18, 0.32, 0.48, 0.55, 0.42, 0.20, -0.02, -0.20,
            ]
        )
        level = np.empty(len(t))
        prev = 0.0
        shocks = rng.normal(0.0, 0.004, len(t))
        for i in range(len(t)):
            prev = 0.95 * prev + shocks[i]
            level[i] = prev
        jitter = rng.normal(0.0, 0.0035, len(t))
        spike_mask = rng.random(len(t)) < 0.012
        spikes = np.where(spike_mask, rng.uniform(0.08, 0.45, len(t)), 0.0)
        series = base * (1.0 + day_shape[hod]) + level + jitter + spikes
        series = np.maximum(series, -0.05)

    elif kind == "load":
        profile = np.array(
            [
                0.55, 0.50, 0.48, 0.47, 0.48, 0.55, 0.80, 1.05,
                1.10, 0.95, 0.85, 0.80, 0.82, 0.80, 0.78, 0.85,
                1.00, 1.20, 1.45, 1.50, 1.35, 1.10, 0.85, 0.67,
            ]
        )
        profile = profile / profile.mean()
        season = 1.0 + 0.30 * np.cos(2 * np.pi * (doy - 20) / 365.0)
        sigma = 0.25
        noise = np.exp(rng.normal(0.0, sigma, len(t))) / math.exp(sigma**2 / 2.0)
        series = (21.6 / 24.0) * profile[hod] * season * noise
        series = np.maximum(series, 0.0)

    else:  # irradiance
        season_angle = 2 * np.pi * (doy - 81) / 365.0
        day_len = 12.0 + 5.5 * np.sin(season_angle)
        amplitude = np.clip(0.42 + 0.38 * np.sin(season_angle), 0.03, 1.0)
        x = (hod - 12.0) / (day_len / 2.0)
        clear = np.maximum(np.cos(np.pi * np.clip(x, -1.0, 1.0) / 2.0), 0.0) ** 1.5
        clear[np.abs(x) >= 1.0] = 0.0
        cloud_level = np.empty(len(t))
        prev = 0.0
        shocks = rng.normal(0.0, 0.10, len(t))
        for i in range(len(t)):
            prev = 0.85 * prev + shocks[i]
            cloud_level[i] = prev
        cloud_base = 0.40 - 0.20 * np.sin(season_angle)
        factor = np.clip(1.0 - (cloud_base + cloud_level), 0.05, 1.0)
        series = np.clip(clear * amplitude * factor, 0.0, 1.0)

    return series[:hours]


def generate_bundle(seed: int, hours: int = 8760) -> SeriesBundle:
    return SeriesBundle(
        spot=generate_synthetic("spot", seed, hours),
        load=generate_synthetic("load", seed, hours),
        irradiance=generate_synthetic("irradiance", seed, hours),
    )


# ---------------------------------------------------------------------------
# Series CSV


def write_series_csv(path: str, values: Sequence[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hour", "value"])
        for h, v in enumerate(values):
            writer.writerow([h, _fmt(v)])


def load_series(path: str, kind: str, expected_hours: Optional[int] = None) -> np.ndarray:
    """Load and validate one hourly series.  Hour indices must run 0..n-1
    with no gaps or duplicates; units are checked per kind."""
    if kind not in SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[-1].strip().lower() != "value":
            raise SeriesError(f"{path}: expected header ending in 'value'")
        hour_col = len(header) - 2  # allow an optional leading timestamp column
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                hour = int(row[hour_col])
                value = float(row[-1])
            except (ValueError, IndexError) as exc:
                raise SeriesError(f"{path}: row {lineno}: cannot parse {row!r}") from exc
            if hour != len(values):
                kind_of_gap = "duplicate" if hour < len(values) else "gap"
                raise SeriesError(
                    f"{path}: row {lineno}: {kind_of_gap} at hour index {hour}"
                )
            if not math.isfinite(value):
                raise SeriesError(f"{path}: row {lineno}: non-finite value")
            if kind == "load" and value < 0:
                raise SeriesError(f"{path}: row {lineno}: negative load")
            if kind == "irradiance" and not (0.0 <= value <= 1.0):
                raise SeriesError(f"{path}: row {lineno}: irradiance outside [0, 1]")
            values.append(value)
    if expected_hours is not None and len(values) < expected_hours:
        raise SeriesError(
            f"{path}: {len(values)} rows, scenario needs {expected_hours}"
        )
    return np.asarray(values, dtype=float)


# ---------------------------------------------------------------------------
# Scenario YAML


@dataclass(frozen=True)
class ScenarioPaths:
    spot_price_csv: str = "spot.csv"
    household_load_csv: str = "load.csv"
    irradiance_csv: str = "irradiance.csv"


def _check_keys(section: dict, allowed: Iterable[str], where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")


def _tg(section: dict, where: str) -> TruncatedGaussian:
    _check_keys(section, ("mean", "std", "min", "max"), where)
    try:
        return TruncatedGaussian(
            mean=float(section["mean"]),
            std=float(section["std"]),
            minimum=float(section["min"]),
            maximum=float(section["max"]),
        )
    except KeyError as exc:
        raise ScenarioError(f"{where}: missing key {exc}") from exc


def scenario_from_dict(doc: dict, base_dir: str = ".") -> tuple[Scenario, ScenarioPaths]:
    """Build a Scenario from a parsed YAML document.  Unknown keys are
    rejected so typos cannot silently fall back to defaults."""
    top_keys = (
        "name", "hours", "seed", "strategy", "gamma", "initial_soe",
        "forecast_provider", "grid_cap_kwh", "data", "ev", "pv", "tariff",
        "battery_economics", "degradation", "driving", "pickup_uncertainty",
        "solver",
    )
    _check_keys(doc, top_keys, "scenario")

    ev_sec = dict(doc.get("ev", {}))
    _check_keys(
        ev_sec,
        ("usable_capacity_kwh", "efficiency_km_per_kwh", "max_hourly_energy_kwh",
         "pickup_soe", "soe_min", "soe_max", "safety_soe"),
        "ev",
    )
    ev = EvSpec(**{k: float(v) for k, v in ev_sec.items()})

    pv_sec = dict(doc.get("pv", {}))
    _check_keys(
        pv_sec,
        ("installed_capacity_kwh", "max_hourly_output_kwh",
         "annualized_cost_eur_per_kwh_year"),
        "pv",
    )
    pv = PvSpec(**{k: float(v) for k, v in pv_sec.items()})

    tariff_sec = dict(doc.get("tariff", {}))
    _check_keys(
        tariff_sec,
        ("vat_rate", "variable_fee_eur_per_kwh", "delivery_fee_eur_per_kwh",
         "network_fee_eur_per_kwh", "monthly_tax_eur_per_month", "v2g_price_ratio"),
        "tariff",
    )
    rename = {
        "variable_fee_eur_per_kwh": "variable_fee",
        "delivery_fee_eur_per_kwh": "delivery_fee",
        "network_fee_eur_per_kwh": "network_fee",
        "monthly_tax_eur_per_month": "monthly_tax",
    }
    tariff_kwargs = {rename.get(k, k): float(v) for k, v in tariff_sec.items()}
    if "gamma" in doc:
        tariff_kwargs["v2g_price_ratio"] = float(doc["gamma"])
    tariff = Tariff(**tariff_kwargs)

    econ_sec = dict(doc.get("battery_economics", {}))
    _check_keys(
        econ_sec,
        ("nominal_life_years", "replacement_cost_eur_per_kwh", "residual_fraction",
         "discount_rate", "eol_capacity_pct"),
        "battery_economics",
    )
    if "nominal_life_years" in econ_sec:
        econ_sec["nominal_life_years"] = int(econ_sec["nominal_life_years"])
    econ = BatteryEconomics(**econ_sec)

    deg_sec = dict(doc.get("degradation", {}))
    _check_keys(
        deg_sec,
        ("pwl_intercept", "pwl_first_slope", "pwl_breakpoints", "pwl_slope_changes",
         "k_cyc_ref", "k_a", "k_b", "k_g", "k_h", "temperature_kelvin",
         "temperature_ref_kelvin", "nonlinear_calendar"),
        "degradation",
    )
    nl_cfg = None
    nl_sec = deg_sec.pop("nonlinear_calendar", None)
    if nl_sec is not None:
        _check_keys(
            nl_sec,
            ("k_cal_ref", "activation_energy_j_per_mol", "alpha",
             "anode_ocp_ref_v", "anode_ocp_csv"),
            "degradation.nonlinear_calendar",
        )
        curve_path = os.path.join(base_dir, nl_sec["anode_ocp_csv"])
        curve = load_curve_csv(curve_path)
        nl_cfg = NonlinearCalendarConfig(
            k_cal_ref=float(nl_sec["k_cal_ref"]),
            activation_energy=float(nl_sec["activation_energy_j_per_mol"]),
            alpha=float(nl_sec["alpha"]),
            anode_ocp_curve=curve,
            anode_ocp_ref=float(nl_sec["anode_ocp_ref_v"]),
        )
    for key in ("pwl_breakpoints", "pwl_slope_changes"):
        if key in deg_sec:
            deg_sec[key] = tuple(float(v) for v in deg_sec[key])
    params = DegradationParams(**deg_sec, nonlinear_calendar=nl_cfg)

    driving_sec = dict(doc.get("driving", {}))
    _check_keys(
        driving_sec,
        ("pickup_time_h", "parking_start_time_h", "daily_distance_km"),
        "driving",
    )
    driving = DrivingPatternModel(
        pickup_time=_tg(driving_sec.get("pickup_time_h", {"mean": 6.7, "std": 0.8, "min": 4, "max": 10}), "driving.pickup_time_h"),
        parking_start_time=_tg(driving_sec.get("parking_start_time_h", {"mean": 17.0, "std": 1.2, "min": 14, "max": 21}), "driving.parking_start_time_h"),
        daily_distance_km=_tg(driving_sec.get("daily_distance_km", {"mean": 31.2, "std": 10.0, "min": 5, "max": 60}), "driving.daily_distance_km"),
    )

    unc_sec = dict(doc.get("pickup_uncertainty", {}))
    _check_keys(unc_sec, ("e_pct", "p_change"), "pickup_uncertainty")
    uncertainty = PickupUncertainty(**{k: float(v) for k, v in unc_sec.items()})

    solver_sec = dict(doc.get("solver", {}))
    _check_keys(solver_sec, ("mip_rel_gap", "gap_abs_eur", "convexify"), "solver")

    data_sec = dict(doc.get("data", {}))
    _check_keys(
        data_sec,
        ("spot_price_csv", "household_load_csv", "irradiance_csv"),
        "data",
    )
    paths = ScenarioPaths(
        spot_price_csv=os.path.join(base_dir, data_sec.get("spot_price_csv", "spot.csv")),
        household_load_csv=os.path.join(base_dir, data_sec.get("household_load_csv", "load.csv")),
        irradiance_csv=os.path.join(base_dir, data_sec.get("irradiance_csv", "irradiance.csv")),
    )

    try:
        strategy = Strategy(doc.get("strategy", "proposed"))
    except ValueError as exc:
        raise ScenarioError(f"unknown strategy {doc.get('strategy')!r}") from exc

    scenario = Scenario(
        name=str(doc.get("name", "scenario")),
        hours=int(doc.get("hours", 8760)),
        seed=int(doc.get("seed", 7)),
        strategy=strategy,
        initial_soe=float(doc.get("initial_soe", 0.6)),
        forecast_provider=str(doc.get("forecast_provider", "seasonal-naive")),
        ev=ev,
        pv=pv,
        tariff=tariff,
        economics=econ,
        degradation=params,
        driving=driving,
        uncertainty=uncertainty,
        grid_cap_kwh=float(doc.get("grid_cap_kwh", 1.0e6)),
        convexify=bool(solver_sec.get("convexify", False)),
        mip_rel_gap=float(solver_sec.get("mip_rel_gap", 1e-6)),
        solver_gap_abs_eur=float(solver_sec.get("gap_abs_eur", 0.0)),
    )
    return scenario, paths


def load_scenario(path: str) -> tuple[Scenario, ScenarioPaths]:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: not a mapping")
    scenario, paths = scenario_from_dict(doc, base_dir=os.path.dirname(path) or ".")
    for p in (paths.spot_price_csv, paths.household_load_csv, paths.irradiance_csv):
        if not os.path.exists(p):
            raise ScenarioError(f"{path}: referenced data file missing: {p}")
    return scenario, paths


def load_scenario_series(scenario: Scenario, paths: ScenarioPaths) -> SeriesBundle:
    return SeriesBundle(
        spot=load_series(paths.spot_price_csv, "spot", scenario.hours),
        load=load_series(paths.household_load_csv, "load", scenario.hours),
        irradiance=load_series(paths.irradiance_csv, "irradiance", scenario.hours),
    )


def default_scenario_yaml(
    hours: int = 8760, seed: int = 7, gamma: float = 1.0, pv_kwh: float = 10.0
) -> str:
    """A complete, runnable scenario document (the documented schema)."""
    return f"""\
name: baseline-vhgpv
hours: {hours}
seed: {seed}
strategy: proposed
gamma: {gamma}
initial_soe: 0.6
forecast_provider: seasonal-naive
grid_cap_kwh: 1.0e6
data:
  spot_price_csv: spot.csv
  household_load_csv: load.csv
  irradiance_csv: irradiance.csv
ev:
  usable_capacity_kwh: 79.0
  efficiency_km_per_kwh: 5.9
  max_hourly_energy_kwh: 11.0
  pickup_soe: 0.8
  soe_min: 0.1
  soe_max: 0.9
  safety_soe: 0.4
pv:
  installed_capacity_kwh: {pv_kwh}
  max_hourly_output_kwh: 11.0
  annualized_cost_eur_per_kwh_year: 85.0
tariff:
  vat_rate: 0.25
  variable_fee_eur_per_kwh: 0.00363
  delivery_fee_eur_per_kwh: 0.00627
  network_fee_eur_per_kwh: 0.0399
  monthly_tax_eur_per_month: 4.09
  v2g_price_ratio: {gamma}
battery_economics:
  nominal_life_years: 10
  replacement_cost_eur_per_kwh: 52.46
  residual_fraction: 0.2
  discount_rate: 0.04
  eol_capacity_pct: 80.0
degradation:
  pwl_intercept: -6.491e-6
  pwl_first_slope: 7.613e-5
  pwl_breakpoints: [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
  pwl_slope_changes: [1.362e-4, 1.087e-4, -1.317e-4, -3.668e-5, 3.324e-4, 5.757e-4, -3.912e-4]
  k_cyc_ref: 1.0e-4
  k_a: 0.75
  k_b: 0.25
  k_g: 0.0
  k_h: 1.0
  temperature_kelvin: 298.15
  temperature_ref_kelvin: 298.15
driving:
  pickup_time_h: {{mean: 6.7, std: 0.8, min: 4, max: 10}}
  parking_start_time_h: {{mean: 17.0, std: 1.2, min: 14, max: 21}}
  daily_distance_km: {{mean: 31.2, std: 10.0, min: 5, max: 60}}
pickup_uncertainty:
  e_pct: 0.0
  p_change: 0.8
solver:
  mip_rel_gap: 1.0e-6
  gap_abs_eur: 0.0
  convexify: false
"""


# ---------------------------------------------------------------------------
# Curve CSV (soe,value) for PWL fitting and anode OCP input


def load_curve_csv(path: str) -> tuple[tuple[float, float], ...]:
    points: list[tuple[float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise SeriesError(f"{path}: expected two-column header (soe,value)")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise SeriesError(f"{path}: row {lineno}: cannot parse {row!r}") from exc
    if len(points) < 2:
        raise SeriesError(f"{path}: need at least 2 curve points")
    soes = [s for s, _ in points]
    if any(b <= a for a, b in zip(soes, soes[1:])):
        raise SeriesError(f"{path}: soe column must be strictly increasing")
    return tuple(points)


def write_pwl_csv(path: str, model: PwlCalendarModel) -> None:
    """PWL coefficients: intercept/first slope, then breakpoint rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "value"])
        writer.writerow(["b0", _fmt(model.intercept)])
        writer.writerow(["m0", _fmt(model.first_slope)])
        for i, (tau, dm) in enumerate(zip(model.breakpoints, model.slope_changes), start=1):
            writer.writerow([f"tau_{i}", _fmt(tau)])
            writer.writerow([f"delta_m_{i}", _fmt(dm)])


# ---------------------------------------------------------------------------
# Result, ledger, violations, sweep CSVs

RESULT_COLUMNS = (
    "fc_eur", "ec_minus_er_eur", "bc_eur", "q_loss_pct", "q_cal_pct",
    "q_cyc_pct", "efc",
)

LEDGER_COLUMNS = (
    "hour", "mode", "session_id", "spot_eur_per_kwh", "retail_eur_per_kwh",
    "hl_kwh", "pv_kwh", "v2g_kwh", "v2h_kwh", "g2v_kwh", "g2h_kwh",
    "pv2v_kwh", "pv2g_kwh", "pv2h_kwh", "pv2curt_kwh", "soe_start",
    "soe_end", "ec_eur", "er_eur", "bc_eur", "dq_cal_pct", "dq_cyc_pct",
    "efc_inc",
)


def write_result_csv(path: str, result: SimulationResult) -> None:
    row = result.table_row()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def read_result_csv(path: str) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if len(rows) != 1:
        raise SeriesError(f"{path}: expected exactly one result row")
    return {c: float(rows[0][c]) for c in RESULT_COLUMNS}


def write_ledger_csv(path: str, ledger: Sequence[LedgerRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_COLUMNS)
        for row in ledger:
            f = row.flows
            writer.writerow(
                [
                    row.hour, row.mode, row.session_id,
                    _fmt(row.spot_eur_per_kwh), _fmt(row.retail_eur_per_kwh),
                    _fmt(row.hl_kwh), _fmt(row.pv_kwh),
                    _fmt(f.v2g), _fmt(f.v2h), _fmt(f.g2v), _fmt(f.g2h),
                    _fmt(f.pv2v), _fmt(f.pv2g), _fmt(f.pv2h), _fmt(f.pv2curt),
                    _fmt(row.soe_start), _fmt(row.soe_end),
                    _fmt(row.ec_eur), _fmt(row.er_eur), _fmt(row.bc_eur),
                    _fmt(row.dq_cal_pct), _fmt(row.dq_cyc_pct), _fmt(row.efc_inc),
                ]
            )


def read_ledger_csv(path: str) -> list[LedgerRow]:
    rows: list[LedgerRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != LEDGER_COLUMNS:
            raise SeriesError(f"{path}: unexpected ledger header")
        for rec in reader:
            rows.append(
                LedgerRow(
                    hour=int(rec["hour"]),
                    mode=rec["mode"],
                    session_id=int(rec["session_id"]),
                    spot_eur_per_kwh=float(rec["spot_eur_per_kwh"]),
                    retail_eur_per_kwh=float(rec["retail_eur_per_kwh"]),
                    hl_kwh=float(rec["hl_kwh"]),
                    pv_kwh=float(rec["pv_kwh"]),
                    flows=HourlyFlows(
                        v2g=float(rec["v2g_kwh"]),
                        v2h=float(rec["v2h_kwh"]),
                        g2v=float(rec["g2v_kwh"]),
                        g2h=float(rec["g2h_kwh"]),
                        pv2v=float(rec["pv2v_kwh"]),
                        pv2g=float(rec["pv2g_kwh"]),
                        pv2h=float(rec["pv2h_kwh"]),
                        pv2curt=float(rec["pv2curt_kwh"]),
                    ),
                    soe_start=float(rec["soe_start"]),
                    soe_end=float(rec["soe_end"]),
                    ec_eur=float(rec["ec_eur"]),
                    er_eur=float(rec["er_eur"]),
                    bc_eur=float(rec["bc_eur"]),
                    dq_cal_pct=float(rec["dq_cal_pct"]),
                    dq_cyc_pct=float(rec["dq_cyc_pct"]),
                    efc_inc=float(rec["efc_inc"]),
                )
            )
    return rows


def write_violations_csv(path: str, violations: Sequence[ViolationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hour", "kind", "detail"])
        for v in violations:
            writer.writerow([v.hour, v.kind, v.detail])


SWEEP_COLUMNS = (
    "axis", "value", "fc_eur", "ec_minus_er_eur", "bc_eur", "q_loss_pct",
    "q_cal_pct", "q_cyc_pct", "efc", "v2g_kwh", "fc_unidirectional_eur",
    "economic_gain_eur", "extra_q_loss_pct", "delta_fc_eur",
)


def write_sweep_csv(path: str, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.axis, _fmt(r.value), _fmt(r.fc_eur), _fmt(r.ec_minus_er_eur),
                    _fmt(r.bc_eur), _fmt(r.q_loss_pct), _fmt(r.q_cal_pct),
                    _fmt(r.q_cyc_pct), _fmt(r.efc), _fmt(r.v2g_kwh),
                    _fmt(r.fc_unidirectional_eur), _fmt(r.economic_gain_eur),
                    _fmt(r.extra_q_loss_pct),
                    "" if r.delta_fc_eur is None else _fmt(r.delta_fc_eur),
                ]
            )


def read_sweep_csv(path: str) -> list[dict]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            row = {"axis": rec["axis"]}
            for key in SWEEP_COLUMNS[1:]:
                row[key] = float(rec[key]) if rec[key] not in ("", None) else None
            out.append(row)
    return out


# ---------------------------------------------------------------------------
# Ledger replay validation


def validate_run(
    scenario: Scenario,
    ledger: Sequence[LedgerRow],
    result: dict[str, float],
    series: Optional[SeriesBundle] = None,
    tol: float = 1e-6,
) -> list[str]:
    """Replay a ledger and re-assert every invariant expressible from it.

    Returns a list of problem descriptions; empty means the ledger and the
    result row are mutually consistent and physically valid.
    """
    problems: list[str] = []
    ev = scenario.ev
    pv = scenario.pv
    params = scenario.degradation
    pwl = PwlCalendarModel.from_params(params)
    cyc_model = CycleRateModel.from_params(params)
    if params.nonlinear_calendar is not None:
        plant_kcal = lambda s: deg.eval_nonlinear_kcal(s, params)  # noqa: E731
    else:
        plant_kcal = lambda s: deg.eval_pwl_kcal(s, pwl)  # noqa: E731
    nv_eur = compute_net_present_value(scenario.economics, ev.usable_capacity_kwh)
    eol = scenario.economics.eol_capacity_pct

    window_lo = window_hi = None
    prev_key: tuple[str, int] | None = None
    prev_row: Optional[LedgerRow] = None

    for i, row in enumerate(ledger):
        where = f"hour {row.hour}"
        if row.hour != i:
            problems.append(f"{where}: hour index mismatch (expected {i})")
            break
        f = row.flows
        if abs(row.retail_eur_per_kwh - retail_price(row.spot_eur_per_kwh, scenario.tariff)) > tol:
            problems.append(f"{where}: retail price inconsistent with spot price")
        if series is not None:
            if abs(row.spot_eur_per_kwh - series.spot[i]) > tol:
                problems.append(f"{where}: spot differs from series file")
            if abs(row.hl_kwh - series.load[i]) > tol:
                problems.append(f"{where}: household load differs from series file")
            if abs(row.pv_kwh - series.irradiance[i] * pv.installed_capacity_kwh) > tol:
                problems.append(f"{where}: pv production differs from series file")
        for name in ("v2g", "v2h", "g2v", "g2h", "pv2v", "pv2g", "pv2h", "pv2curt"):
            if getattr(f, name) < -tol:
                problems.append(f"{where}: negative flow {name}")
        if f.ev_charge_kwh > ev.max_hourly_energy_kwh + tol:
            problems.append(f"{where}: charger input limit exceeded")
        if f.ev_discharge_kwh > ev.max_hourly_energy_kwh + tol:
            problems.append(f"{where}: charger output limit exceeded")
        if f.pv_dispatch_kwh > pv.max_hourly_output_kwh + tol:
            problems.append(f"{where}: inverter limit exceeded")
        if abs(f.pv_dispatch_kwh + f.pv2curt - row.pv_kwh) > tol:
            problems.append(f"{where}: pv balance violated")
        if abs(f.g2h + f.v2h + f.pv2h - row.hl_kwh) > tol:
            problems.append(f"{where}: household balance violated")
        if f.g2v + f.g2h > scenario.grid_cap_kwh + tol:
            problems.append(f"{where}: grid cap exceeded")

        if prev_row is not None and abs(row.soe_start - prev_row.soe_end) > tol:
            problems.append(f"{where}: SoE not continuous across hours")
        if row.mode == "parked":
            step = (f.ev_charge_kwh - f.ev_discharge_kwh) / ev.usable_capacity_kwh
            if abs(row.soe_end - row.soe_start - step) > tol:
                problems.append(f"{where}: SoE dynamics violated")
            if not (ev.soe_min - tol <= row.soe_end <= ev.soe_max + tol):
                problems.append(f"{where}: SoE outside admissible bounds")
        else:
            if f.ev_charge_kwh > tol or f.ev_discharge_kwh > tol:
                problems.append(f"{where}: EV flows while driving")
            if row.soe_end > row.soe_start + tol:
                problems.append(f"{where}: SoE increased while driving")

        if abs(row.ec_eur - (f.g2v + f.g2h) * row.retail_eur_per_kwh) > tol:
            problems.append(f"{where}: energy cost mismatch")
        er = (scenario.tariff.v2g_price_ratio * f.v2g + f.pv2g) * row.spot_eur_per_kwh
        if abs(row.er_eur - er) > tol:
            problems.append(f"{where}: energy revenue mismatch")

        key = (row.mode, row.session_id if row.mode == "parked" else -1)
        if row.mode == "parked":
            new_window = prev_key is None or prev_key[0] != "parked" or prev_key[1] != row.session_id
        else:
            new_window = prev_key is None or prev_key[0] != "driving"
        if new_window:
            window_lo = window_hi = row.soe_start
        window_lo = min(window_lo, row.soe_end)
        window_hi = max(window_hi, row.soe_end)
        dod = min(1.0, window_hi - window_lo)
        prev_key = key

        eval_soe = min(max(row.soe_end, pwl.domain_min), pwl.domain_max)
        cal_pct = 100.0 * plant_kcal(eval_soe) * deg.calendar_weight(row.hour)
        if abs(row.dq_cal_pct - cal_pct) > tol:
            problems.append(f"{where}: calendar increment mismatch")
        efc_inc = abs(row.soe_end - row.soe_start) / 2.0
        if abs(row.efc_inc - efc_inc) > tol:
            problems.append(f"{where}: EFC increment mismatch")
        cyc_pct = 100.0 * deg.cycle_rate(dod, cyc_model) * efc_inc
        if abs(row.dq_cyc_pct - cyc_pct) > tol:
            problems.append(f"{where}: cycle increment mismatch")
        bc = battery_cost(row.dq_cal_pct + row.dq_cyc_pct, nv_eur, eol)
        if abs(row.bc_eur - bc) > tol:
            problems.append(f"{where}: battery cost mismatch")
        prev_row = row
        if len(problems) > 50:
            problems.append("... further problems suppressed")
            return problems

    hours = len(ledger)
    months = math.ceil(hours / 730)
    fixed = scenario.tariff.monthly_tax * months + pv.annualized_cost_eur * hours / 8760.0
    sums = {
        "ec": sum(r.ec_eur for r in ledger),
        "er": sum(r.er_eur for r in ledger),
        "bc": sum(r.bc_eur for r in ledger),
        "cal": sum(r.dq_cal_pct for r in ledger),
        "cyc": sum(r.dq_cyc_pct for r in ledger),
        "efc": sum(r.efc_inc for r in ledger),
    }
    checks = {
        "fc_eur": sums["ec"] - sums["er"] + sums["bc"] + fixed,
        "ec_minus_er_eur": sums["ec"] - sums["er"],
        "bc_eur": sums["bc"],
        "q_loss_pct": sums["cal"] + sums["cyc"],
        "q_cal_pct": sums["cal"],
        "q_cyc_pct": sums["cyc"],
        "efc": sums["efc"],
    }
    for column, expected in checks.items():
        if abs(result[column] - expected) > 1e-6:
            problems.append(
                f"result column {column} = {result[column]!r} does not match "
                f"ledger replay {expected!r}"
            )
    return problems
