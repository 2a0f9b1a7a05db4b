"""Command-line surface tests, driven through cli.main with small scenarios."""

import os

import numpy as np
import pytest

from evhome import dataio
from evhome.cli import main
from evhome.degradation import PwlCalendarModel, eval_pwl_kcal
from evhome.domain import DegradationParams


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def make_dataset(tmp_path, hours=72, seed=7):
    assert main(["gen-data", "--out", str(tmp_path), "--seed", str(seed),
                 "--hours", str(hours)]) == 0
    return tmp_path / "scenario.yaml"


class TestGenData:
    def test_files_written_and_deterministic(self, workdir):
        make_dataset(workdir / "a", hours=48)
        make_dataset(workdir / "b", hours=48)
        for name in ("spot.csv", "load.csv", "irradiance.csv", "scenario.yaml"):
            assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()


class TestRun:
    def test_run_validate_and_repeat(self, workdir, capsys):
        scenario = make_dataset(workdir, hours=72)
        assert main(["run", "--scenario", str(scenario), "--out", "out1"]) == 0
        assert main(["run", "--scenario", str(scenario), "--out", "out2"]) == 0
        for name in ("result.csv", "ledger.csv", "violations.csv"):
            assert (workdir / "out1" / name).read_bytes() == (workdir / "out2" / name).read_bytes()
        code = main([
            "validate", "--scenario", str(scenario),
            "--ledger", "out1/ledger.csv", "--result", "out1/result.csv",
        ])
        assert code == 0

    def test_validate_rejects_tampered_ledger(self, workdir, capsys):
        scenario = make_dataset(workdir, hours=48)
        assert main(["run", "--scenario", str(scenario), "--out", "out"]) == 0
        ledger_path = workdir / "out" / "ledger.csv"
        lines = ledger_path.read_text().splitlines()
        cells = lines[20].split(",")
        cells[17] = repr(float(cells[17]) + 0.25)  # ec_eur column
        lines[20] = ",".join(cells)
        ledger_path.write_text("\n".join(lines) + "\n")
        code = main([
            "validate", "--scenario", str(scenario),
            "--ledger", str(ledger_path), "--result", "out/result.csv",
        ])
        assert code == 1

    def test_seed_override_changes_outputs(self, workdir):
        scenario = make_dataset(workdir, hours=48)
        assert main(["run", "--scenario", str(scenario), "--out", "o1", "--seed", "1"]) == 0
        assert main(["run", "--scenario", str(scenario), "--out", "o2", "--seed", "2"]) == 0
        assert (workdir / "o1" / "ledger.csv").read_bytes() != (workdir / "o2" / "ledger.csv").read_bytes()

    def test_dump_horizons(self, workdir):
        scenario = make_dataset(workdir, hours=30)
        assert main(["run", "--scenario", str(scenario), "--out", "out",
                     "--dump-horizons", "dumps"]) == 0
        dumps = os.listdir(workdir / "dumps")
        assert dumps and all(name.endswith(".json") for name in dumps)


class TestSweep:
    def test_gamma_steps_grid(self, workdir, capsys):
        """--steps 11 produces an 11-row table with gamma 0.0 .. 1.0."""
        scenario = make_dataset(workdir, hours=48)
        assert main(["sweep", "--scenario", str(scenario), "--axis", "gamma",
                     "--steps", "11", "--out", "sw"]) == 0
        rows = dataio.read_sweep_csv(str(workdir / "sw" / "sweep_gamma.csv"))
        assert len(rows) == 11
        assert [r["value"] for r in rows] == [round(0.1 * k, 1) for k in range(11)]

    def test_explicit_grid_and_report(self, workdir):
        scenario = make_dataset(workdir, hours=48)
        assert main(["sweep", "--scenario", str(scenario), "--axis", "pv-size",
                     "--grid", "0,10", "--out", "sw"]) == 0
        assert main(["report", "--sweep", "sw/sweep_pv-size.csv", "--out", "rep"]) == 0
        assert (workdir / "rep" / "fc_vs_pv_capacity.csv").exists()

    def test_unknown_axis_exits_with_usage_error(self, workdir):
        scenario = make_dataset(workdir, hours=48)
        with pytest.raises(SystemExit):
            main(["sweep", "--scenario", str(scenario), "--axis", "weather"])


class TestFitPwl:
    def test_reconstructs_published_coefficients(self, workdir):
        """Sampling the published PWL curve and refitting at its own
        breakpoints must reproduce the coefficients."""
        pwl = PwlCalendarModel.from_params(DegradationParams())
        curve = workdir / "curve.csv"
        with open(curve, "w") as fh:
            fh.write("soe,value\n")
            for s in np.round(np.arange(0.1, 0.9001, 0.005), 10):
                fh.write(f"{s},{eval_pwl_kcal(float(s), pwl)!r}\n")
        assert main(["fit-pwl", "--curve", str(curve),
                     "--breakpoints", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                     "--out", "pwl.csv"]) == 0
        text = (workdir / "pwl.csv").read_text().splitlines()
        got = dict(line.split(",") for line in text[1:])
        assert float(got["b0"]) == pytest.approx(pwl.intercept, rel=1e-9)
        assert float(got["m0"]) == pytest.approx(pwl.first_slope, rel=1e-9)
        for i, (tau, dm) in enumerate(zip(pwl.breakpoints, pwl.slope_changes), start=1):
            assert float(got[f"tau_{i}"]) == pytest.approx(tau, abs=1e-12)
            assert float(got[f"delta_m_{i}"]) == pytest.approx(dm, rel=1e-9)

    def test_bad_curve_reports_error(self, workdir, capsys):
        (workdir / "bad.csv").write_text("soe,value\n0.9,1\n0.1,2\n")
        assert main(["fit-pwl", "--curve", "bad.csv", "--out", "x.csv"]) == 1
