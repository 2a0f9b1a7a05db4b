"""Newline-delimited JSON serving loop.

Request per line:
    {"series", "history" (24 values), "day_of_year", "hour_of_day", "horizon"}
Response per line, in order:
    {"values": [..horizon..]}   or   {"error": "..."}

Malformed requests produce an error response and the stream stays alive.
Multi-hour horizons are answered by recursing the one-step model: each
prediction is fed back as the newest window value and the (day, hour)
features advance deterministically, exactly like the engine's own recursion.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np

from wattcast import SERIES_IDS, WINDOW_HOURS
from wattcast.data import ScalingStats, feature_row, load_stats
from wattcast.model import set_determinism


@dataclass
class LoadedModel:
    model: object
    stats: ScalingStats


def advance_features(day_of_year: int, hour_of_day: int) -> tuple[int, int]:
    hour = hour_of_day + 1
    if hour == 24:
        return (day_of_year % 365) + 1, 0
    return day_of_year, hour


def load_artifacts(artifacts_dir: str) -> dict[str, LoadedModel]:
    import os

    import tensorflow as tf

    models: dict[str, LoadedModel] = {}
    for series in SERIES_IDS:
        base = os.path.join(artifacts_dir, series)
        model_path = os.path.join(base, "model.keras")
        stats_path = os.path.join(base, "stats.json")
        if not (os.path.exists(model_path) and os.path.exists(stats_path)):
            continue
        stats, stored_series = load_stats(stats_path)
        if stored_series != series:
            raise ValueError(f"{stats_path}: stats belong to {stored_series!r}")
        models[series] = LoadedModel(
            model=tf.keras.models.load_model(model_path), stats=stats
        )
    if not models:
        raise FileNotFoundError(f"no model artifacts under {artifacts_dir}")
    return models


def predict_recursive(
    loaded: LoadedModel,
    history: list[float],
    day_of_year: int,
    hour_of_day: int,
    horizon: int,
) -> list[float]:
    stats = loaded.stats
    window = [float(v) for v in history]
    day, hour = day_of_year, hour_of_day
    out: list[float] = []
    for _ in range(horizon):
        rows = []
        d, h = day, hour
        # The window rows end at the current (day, hour); walk back 23 hours.
        times = []
        for _ in range(WINDOW_HOURS):
            times.append((d, h))
            h -= 1
            if h < 0:
                h = 23
                d = d - 1 if d > 1 else 365
        times.reverse()
        for value, (dd, hh) in zip(window, times):
            rows.append(feature_row(float(stats.normalize(value)), dd, hh))
        x = np.asarray(rows, dtype=np.float32)[None, :, :]
        pred_scaled = float(loaded.model(x, training=False).numpy().reshape(-1)[0])
        pred = float(stats.denormalize(pred_scaled))
        out.append(pred)
        window = window[1:] + [pred]
        day, hour = advance_features(day, hour)
    return out


def handle_request(models: dict[str, LoadedModel], line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"error": f"bad json: {exc}"}
    try:
        series = request["series"]
        history = request["history"]
        day = int(request["day_of_year"])
        hour = int(request["hour_of_day"])
        horizon = int(request["horizon"])
    except (KeyError, TypeError, ValueError) as exc:
        return {"error": f"malformed request: {exc}"}
    if series not in models:
        return {"error": f"unknown or unloaded series {series!r}"}
    if not isinstance(history, list) or len(history) != WINDOW_HOURS:
        return {"error": f"history must hold {WINDOW_HOURS} values"}
    if horizon < 1:
        return {"error": "horizon must be >= 1"}
    if not (1 <= day <= 365 and 0 <= hour <= 23):
        return {"error": "day_of_year/hour_of_day out of range"}
    try:
        values = predict_recursive(models[series], history, day, hour, horizon)
    except Exception as exc:  # keep the stream alive on any model hiccup
        return {"error": f"prediction failed: {exc}"}
    return {"values": values}


def serve(artifacts_dir: str, stdin=None, stdout=None) -> None:
    set_determinism(0)
    models = load_artifacts(artifacts_dir)
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        reply = handle_request(models, line)
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
