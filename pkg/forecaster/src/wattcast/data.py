"""Windowing, scaling, and splits for the forecaster.

Each training sample is a 24-hour window of (scaled value, day-of-year,
hour-of-day) feature rows; the label is the next hour's scaled value.
Min-max statistics come from the training split only.  Day-of-year maps
1..365 onto [0, 1] and hour-of-day 0..23 likewise, so all features share the
unit scale.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from wattcast import WINDOW_HOURS


@dataclass(frozen=True)
class ScalingStats:
    vmin: float
    vmax: float

    @property
    def constant(self) -> bool:
        return self.vmax == self.vmin

    def normalize(self, values):
        values = np.asarray(values, dtype=np.float32)
        if self.constant:
            return np.zeros_like(values)
        return (values - self.vmin) / (self.vmax - self.vmin)

    def denormalize(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.constant:
            return np.full_like(values, self.vmin)
        return values * (self.vmax - self.vmin) + self.vmin


def load_series_csv(path: str) -> np.ndarray:
    """Hourly (hour,value) CSV as written by the engine's gen-data command."""
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for row in reader:
            if row:
                values.append(float(row[-1]))
    return np.asarray(values, dtype=np.float64)


def temporal_features(start_hour: int, n_hours: int) -> np.ndarray:
    """(day-of-year, hour-of-day) scaled to [0, 1] for each hour."""
    t = np.arange(start_hour, start_hour + n_hours)
    day = (t // 24) % 365  # 0-based
    hour = t % 24
    return np.stack([day / 364.0, hour / 23.0], axis=1).astype(np.float32)


def feature_row(value_scaled: float, day_of_year: int, hour_of_day: int) -> np.ndarray:
    return np.array(
        [value_scaled, (day_of_year - 1) / 364.0, hour_of_day / 23.0],
        dtype=np.float32,
    )


def make_windows(
    values: np.ndarray, stats: ScalingStats, start_hour: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """All (window, next-value) samples from an hourly series."""
    n = len(values)
    if n < WINDOW_HOURS + 1:
        raise ValueError(f"need at least {WINDOW_HOURS + 1} hours of data")
    scaled = stats.normalize(values)
    temporal = temporal_features(start_hour, n)
    features = np.concatenate([scaled[:, None], temporal], axis=1)
    n_samples = n - WINDOW_HOURS
    x = np.lib.stride_tricks.sliding_window_view(
        features, (WINDOW_HOURS, features.shape[1]),
    )[:n_samples, 0]
    y = scaled[WINDOW_HOURS:]
    return np.ascontiguousarray(x, dtype=np.float32), y.astype(np.float32)


@dataclass(frozen=True)
class Splits:
    train_values: np.ndarray
    test_values: np.ndarray
    test_start_hour: int
    stats: ScalingStats


def split_series(values: np.ndarray, train_fraction: float = 0.8) -> Splits:
    """Chronological train/test split; scaling statistics fitted on the
    training part only."""
    cut = int(len(values) * train_fraction)
    train = values[:cut]
    stats = ScalingStats(vmin=float(train.min()), vmax=float(train.max()))
    return Splits(
        train_values=train,
        test_values=values[cut:],
        test_start_hour=cut,
        stats=stats,
    )


def seasonal_naive_mae(values: np.ndarray) -> float:
    """One-step MAE of predicting the value 24 hours earlier."""
    if len(values) <= 24:
        raise ValueError("need more than 24 hours")
    return float(np.mean(np.abs(values[24:] - values[:-24])))


def save_stats(path: str, stats: ScalingStats, series: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"series": series, "window": WINDOW_HOURS, **asdict(stats)}, fh)


def load_stats(path: str) -> tuple[ScalingStats, str]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return ScalingStats(vmin=doc["vmin"], vmax=doc["vmax"]), doc["series"]
