"""Transformer-based one-hour-ahead forecaster for household load and solar
irradiance, trained on 24-hour sliding windows and served to the energy
management engine over a newline-delimited JSON protocol."""

__version__ = "0.1.0"

SERIES_IDS = ("household_load", "solar_irradiance")
WINDOW_HOURS = 24
