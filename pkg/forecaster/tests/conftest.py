import os
import shutil
import subprocess
import sys

import pytest

# Two years of synthetic hourly data, produced through the engine's public
# CLI (the only interface this package consumes).
DATASET_HOURS = 24 * 730


def _engine_cli() -> list[str]:
    exe = shutil.which("evhome")
    if exe:
        return [exe]
    return [sys.executable, "-m", "evhome.cli"]


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("dataset")
    subprocess.run(
        _engine_cli() + ["gen-data", "--out", str(out), "--seed", "7",
                         "--hours", str(DATASET_HOURS)],
        check=True,
        capture_output=True,
    )
    return out


@pytest.fixture(scope="session")
def tiny_artifacts(tmp_path_factory, dataset_dir):
    """Small models (quick to train) for the protocol tests."""
    from wattcast.cli import train_series
    from wattcast.data import load_series_csv
    from wattcast.model import TrainingConfig

    out = tmp_path_factory.mktemp("artifacts_tiny")
    config = TrainingConfig(epochs=2, d_model=8, num_blocks=1, ff_dim=16, seed=3)
    for series, fname in (("household_load", "load.csv"),
                          ("solar_irradiance", "irradiance.csv")):
        values = load_series_csv(os.path.join(dataset_dir, fname))[: 24 * 60]
        train_series(values, series, str(out), config)
    return out
