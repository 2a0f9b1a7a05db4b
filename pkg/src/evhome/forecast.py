"""Forecast-provider contract for household load and solar irradiance.

The simulator asks a provider for multi-step forecasts over the remaining
parking horizon from a 24-hour history window plus (day-of-year,
hour-of-day) features.  Three deterministic providers ship here:
perfect-foresight (testing oracle), persistence, and seasonal-naive.  A
learned model can be plugged in through :class:`ExternalProcessProvider`,
which speaks newline-delimited JSON over a child process's stdin/stdout:

    request:  {"series", "history" (24 values), "day_of_year",
               "hour_of_day", "horizon"}
    response: {"values": [..horizon..]}  or  {"error": "..."}

One request per line, responses in order.
"""

from __future__ import annotations

import json
import select
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

HOUSEHOLD_LOAD = "household_load"
SOLAR_IRRADIANCE = "solar_irradiance"
SERIES_IDS = (HOUSEHOLD_LOAD, SOLAR_IRRADIANCE)

HISTORY_HOURS = 24


class ProviderError(RuntimeError):
    """Provider failed; carries the provider id so the caller can report it
    and fall back."""

    def __init__(self, provider_id: str, message: str):
        super().__init__(f"forecast provider '{provider_id}': {message}")
        self.provider_id = provider_id


@dataclass(frozen=True)
class ForecastRequest:
    series: str
    history: tuple[float, ...]  # last 24 hourly values, ending at the current hour
    day_of_year: int  # 1..365, at the current hour
    hour_of_day: int  # 0..23, at the current hour
    horizon: int

    def __post_init__(self) -> None:
        if self.series not in SERIES_IDS:
            raise ValueError(f"unknown series id {self.series!r}")
        if len(self.history) != HISTORY_HOURS:
            raise ValueError(f"history must hold exactly {HISTORY_HOURS} values")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not (1 <= self.day_of_year <= 365):
            raise ValueError("day_of_year must be in 1..365")
        if not (0 <= self.hour_of_day <= 23):
            raise ValueError("hour_of_day must be in 0..23")
        object.__setattr__(self, "history", tuple(float(v) for v in self.history))


@dataclass(frozen=True)
class ForecastResponse:
    values: tuple[float, ...]
    provider_id: str
    generated_at: float


def clamp_series_values(series: str, values: Sequence[float]) -> tuple[float, ...]:
    """Physical clamping applied once, at the response boundary: irradiance
    to [0, 1], load to >= 0."""
    if series == SOLAR_IRRADIANCE:
        return tuple(min(1.0, max(0.0, float(v))) for v in values)
    return tuple(max(0.0, float(v)) for v in values)


def make_response(
    request: ForecastRequest, raw_values: Sequence[float], provider_id: str
) -> ForecastResponse:
    if len(raw_values) != request.horizon:
        raise ProviderError(
            provider_id,
            f"expected {request.horizon} values, got {len(raw_values)}",
        )
    values = clamp_series_values(request.series, raw_values)
    return ForecastResponse(values=values, provider_id=provider_id, generated_at=time.time())


def advance_features(day_of_year: int, hour_of_day: int) -> tuple[int, int]:
    """Deterministic (day, hour) step used when feeding predictions back."""
    hour = hour_of_day + 1
    if hour == 24:
        return (day_of_year % 365) + 1, 0
    return day_of_year, hour


class ForecastProvider:
    """Multi-step forecast interface.  Implementations must be safe for
    concurrent read-only use."""

    provider_id: str = "base"

    def forecast(self, request: ForecastRequest) -> ForecastResponse:
        raise NotImplementedError


class OneStepProvider(ForecastProvider):
    """Provider defined by a one-step-ahead prediction; multi-step forecasts
    come from :func:`forecast_recursive`."""

    def predict_next(
        self, history: Sequence[float], day_of_year: int, hour_of_day: int
    ) -> float:
        raise NotImplementedError

    def forecast(self, request: ForecastRequest) -> ForecastResponse:
        return forecast_recursive(self, request)


def forecast_recursive(
    provider: OneStepProvider, request: ForecastRequest
) -> ForecastResponse:
    """Roll a one-step provider forward, feeding each prediction back as the
    newest history value and advancing the (day, hour) features."""
    window = list(request.history)
    day, hour = request.day_of_year, request.hour_of_day
    values = []
    for _ in range(request.horizon):
        nxt = float(provider.predict_next(window, day, hour))
        values.append(nxt)
        window = window[1:] + [nxt]
        day, hour = advance_features(day, hour)
    return make_response(request, values, provider.provider_id)


class PersistenceProvider(OneStepProvider):
    """Repeats the last observed value."""

    provider_id = "persistence"

    def predict_next(self, history, day_of_year, hour_of_day) -> float:
        return history[-1]


class SeasonalNaiveProvider(OneStepProvider):
    """Predicts the value observed 24 hours before the predicted hour, which
    is the oldest entry of the sliding window."""

    provider_id = "seasonal-naive"

    def predict_next(self, history, day_of_year, hour_of_day) -> float:
        return history[0]


class PerfectForesightProvider(ForecastProvider):
    """Test oracle: returns the ground-truth series.  The request position is
    recovered from the (day-of-year, hour-of-day) features."""

    provider_id = "perfect"

    def __init__(self, truth: dict[str, Sequence[float]]):
        self._truth = {k: np.asarray(v, dtype=float) for k, v in truth.items()}

    def forecast(self, request: ForecastRequest) -> ForecastResponse:
        series = self._truth.get(request.series)
        if series is None:
            raise ProviderError(self.provider_id, f"no truth for {request.series!r}")
        now = (request.day_of_year - 1) * 24 + request.hour_of_day
        lo, hi = now + 1, now + 1 + request.horizon
        if hi > len(series):
            raise ProviderError(self.provider_id, "truth series too short")
        return make_response(request, series[lo:hi].tolist(), self.provider_id)


@dataclass(frozen=True)
class MinMaxStats:
    """Min-max scaling statistics, computed on the training split only."""

    vmin: float
    vmax: float

    @property
    def constant(self) -> bool:
        return self.vmax == self.vmin

    @classmethod
    def fit(cls, values: Sequence[float]) -> "MinMaxStats":
        arr = np.asarray(values, dtype=float)
        return cls(vmin=float(arr.min()), vmax=float(arr.max()))


def normalize(value: float, stats: MinMaxStats) -> float:
    """Map to [0, 1] over the training range; out-of-range inputs map outside
    [0, 1] without clamping.  Degenerate stats map everything to 0."""
    if stats.constant:
        return 0.0
    return (value - stats.vmin) / (stats.vmax - stats.vmin)


def denormalize(value: float, stats: MinMaxStats) -> float:
    if stats.constant:
        return stats.vmin
    return value * (stats.vmax - stats.vmin) + stats.vmin


class ExternalProcessProvider(ForecastProvider):
    """Forecasts served by a child process over the JSONL protocol.

    Requests are serialized per connection; use one provider instance per
    simulation run.
    """

    def __init__(
        self,
        command: Sequence[str],
        provider_id: Optional[str] = None,
        timeout_s: float = 60.0,
    ):
        self.provider_id = provider_id or "external"
        self._timeout_s = timeout_s
        self._lock = threading.Lock()
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def forecast(self, request: ForecastRequest) -> ForecastResponse:
        payload = {
            "series": request.series,
            "history": list(request.history),
            "day_of_year": request.day_of_year,
            "hour_of_day": request.hour_of_day,
            "horizon": request.horizon,
        }
        with self._lock:
            if self._proc.poll() is not None:
                raise ProviderError(self.provider_id, "provider process exited")
            try:
                self._proc.stdin.write(json.dumps(payload) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProviderError(self.provider_id, f"write failed: {exc}") from exc
            line = self._read_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(self.provider_id, f"bad response: {line!r}") from exc
        if "error" in reply:
            raise ProviderError(self.provider_id, str(reply["error"]))
        if "values" not in reply:
            raise ProviderError(self.provider_id, f"malformed response: {reply!r}")
        return make_response(request, reply["values"], self.provider_id)

    def _read_line(self) -> str:
        ready, _, _ = select.select([self._proc.stdout], [], [], self._timeout_s)
        if not ready:
            raise ProviderError(self.provider_id, f"no response in {self._timeout_s}s")
        line = self._proc.stdout.readline()
        if not line:
            raise ProviderError(self.provider_id, "provider closed its output")
        return line

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalProcessProvider":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def build_provider(
    name: str, truth: Optional[dict[str, Sequence[float]]] = None
) -> ForecastProvider:
    """Provider factory for scenario files: 'perfect', 'persistence',
    'seasonal-naive', or 'external:<command line>'."""
    if name == "perfect":
        if truth is None:
            raise ValueError("perfect-foresight provider needs the truth series")
        return PerfectForesightProvider(truth)
    if name == "persistence":
        return PersistenceProvider()
    if name == "seasonal-naive":
        return SeasonalNaiveProvider()
    if name.startswith("external:"):
        command = name.split(":", 1)[1].split()
        if not command:
            raise ValueError("external provider needs a command line")
        return ExternalProcessProvider(command)
    raise ValueError(f"unknown forecast provider {name!r}")
