"""wattcast command line: train per-series models, evaluate them against the
seasonal-naive baseline, and serve the JSONL protocol."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from wattcast import SERIES_IDS
from wattcast.data import (
    load_series_csv,
    make_windows,
    save_stats,
    seasonal_naive_mae,
    split_series,
)
from wattcast.model import TrainingConfig, one_step_mae, train_model

SERIES_FILES = {
    "household_load": "load.csv",
    "solar_irradiance": "irradiance.csv",
}


def train_series(
    values: np.ndarray,
    series: str,
    out_dir: str,
    config: TrainingConfig,
    verbose: int = 0,
) -> dict[str, float]:
    """Train one series, save artifacts, and report held-out one-step MAE
    next to the seasonal-naive baseline."""
    splits = split_series(values, config.train_fraction)
    x_train, y_train = make_windows(splits.train_values, splits.stats, start_hour=0)
    model = train_model(x_train, y_train, config, verbose=verbose)

    x_test, _ = make_windows(
        splits.test_values, splits.stats, start_hour=splits.test_start_hour
    )
    y_test_raw = splits.test_values[24:]
    mae = one_step_mae(model, x_test, y_test_raw, splits.stats)
    baseline = seasonal_naive_mae(splits.test_values)

    base = os.path.join(out_dir, series)
    os.makedirs(base, exist_ok=True)
    model.save(os.path.join(base, "model.keras"))
    save_stats(os.path.join(base, "stats.json"), splits.stats, series)
    return {"mae": mae, "seasonal_naive_mae": baseline}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wattcast",
        description="Transformer forecaster for household load and irradiance",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train models from hourly CSVs")
    p_train.add_argument("--data", required=True,
                         help="directory holding load.csv and irradiance.csv")
    p_train.add_argument("--out", required=True, help="artifacts directory")
    p_train.add_argument("--series", choices=SERIES_IDS, action="append",
                         help="train only the given series (repeatable)")
    p_train.add_argument("--epochs", type=int, default=100)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--verbose", type=int, default=0)

    p_serve = sub.add_parser("serve", help="answer protocol requests on stdin")
    p_serve.add_argument("--artifacts", required=True)
    return parser


def _cmd_train(args) -> int:
    config = TrainingConfig(
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed
    )
    series_ids = args.series or list(SERIES_IDS)
    for series in series_ids:
        path = os.path.join(args.data, SERIES_FILES[series])
        if not os.path.exists(path):
            print(f"error: missing {path}", file=sys.stderr)
            return 1
        values = load_series_csv(path)
        report = train_series(values, series, args.out, config, verbose=args.verbose)
        print(
            f"{series}: held-out one-step MAE {report['mae']:.5f} "
            f"(seasonal-naive {report['seasonal_naive_mae']:.5f})"
        )
    return 0


def _cmd_serve(args) -> int:
    from wattcast.serve import serve

    serve(args.artifacts)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        return _cmd_train(args)
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
