"""Aging-aware energy management for an EV, a household, the grid, and rooftop PV.

The package couples a shrinking-horizon MILP scheduler for bidirectional EV
charging with a calendar/cycle battery degradation model, deterministic
forecast providers, and a year-long closed-loop simulator with sensitivity
sweeps.
"""

from evhome.domain import (
    BatteryEconomics,
    DegradationParams,
    DegradationState,
    EvSpec,
    HourlyFlows,
    LedgerEntry,
    ParkingSession,
    PvSpec,
    Tariff,
    battery_cost,
    compute_net_present_value,
    retail_price,
)

__version__ = "0.1.0"

__all__ = [
    "BatteryEconomics",
    "DegradationParams",
    "DegradationState",
    "EvSpec",
    "HourlyFlows",
    "LedgerEntry",
    "ParkingSession",
    "PvSpec",
    "Tariff",
    "battery_cost",
    "compute_net_present_value",
    "retail_price",
]
