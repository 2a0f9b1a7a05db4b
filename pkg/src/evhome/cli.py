"""Command-line surface: run scenarios, sweep sensitivity axes, fit PWL
coefficients, generate synthetic datasets, validate outputs, and reshape
sweep tables into plot-ready CSVs."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from evhome import dataio
from evhome.degradation import fit_pwl
from evhome.scheduler import dump_solution
from evhome.simulator import SWEEP_AXES, run_sweep, run_year

DEFAULT_GRIDS: dict[str, list[float]] = {
    "gamma": [round(0.1 * k, 1) for k in range(11)],
    "battery": [50.8, 63.0, 79.0, 95.0, 109.1],
    "load-scale": [1.0, 4.0],
    "pickup-uncertainty": [10.0, 30.0, 50.0],
    "pv-size": [5.0 * k for k in range(11)],
}


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evhome",
        description="Aging-aware EV-home-grid-PV energy management engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--provider", default=None, help="override forecast provider")
    p_run.add_argument(
        "--dump-horizons", default=None, metavar="DIR",
        help="write every solved horizon as JSON into DIR",
    )

    p_sweep = sub.add_parser("sweep", help="run a sensitivity sweep")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--grid", type=_parse_grid, default=None,
                         help="comma-separated grid values")
    p_sweep.add_argument("--steps", type=int, default=None,
                         help="gamma axis: number of evenly spaced steps in [0, 1]")
    p_sweep.add_argument("--seeds", type=int, default=10,
                         help="seeds per point (pickup-uncertainty axis)")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default=".")

    p_fit = sub.add_parser("fit-pwl", help="fit PWL coefficients to a rate curve")
    p_fit.add_argument("--curve", required=True, help="CSV (soe,value) of the calendar rate")
    p_fit.add_argument("--breakpoints", type=_parse_grid, default=None)
    p_fit.add_argument("--out", required=True, help="output coefficients CSV")

    p_gen = sub.add_parser("gen-data", help="generate a synthetic dataset + scenario")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=7)
    p_gen.add_argument("--hours", type=int, default=8760)

    p_val = sub.add_parser("validate", help="replay a ledger and re-assert invariants")
    p_val.add_argument("--scenario", required=True)
    p_val.add_argument("--ledger", required=True)
    p_val.add_argument("--result", required=True)

    p_rep = sub.add_parser("report", help="reshape a sweep table into plot-ready CSVs")
    p_rep.add_argument("--sweep", required=True, help="sweep CSV from the sweep command")
    p_rep.add_argument("--out", default=".")
    return parser


def _cmd_run(args) -> int:
    scenario, paths = dataio.load_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=args.seed)
    if args.provider is not None:
        from dataclasses import replace

        scenario = replace(scenario, forecast_provider=args.provider)
    series = dataio.load_scenario_series(scenario, paths)

    callback = None
    if args.dump_horizons:
        os.makedirs(args.dump_horizons, exist_ok=True)

        def callback(problem, solution):
            name = f"horizon_{problem.current_hour:05d}.json"
            dump_solution(os.path.join(args.dump_horizons, name), problem, solution)

    result = run_year(scenario, series, horizon_callback=callback)

    os.makedirs(args.out, exist_ok=True)
    dataio.write_result_csv(os.path.join(args.out, "result.csv"), result)
    dataio.write_ledger_csv(os.path.join(args.out, "ledger.csv"), result.ledger)
    dataio.write_violations_csv(
        os.path.join(args.out, "violations.csv"), result.violations
    )
    print(
        f"{scenario.name}: FC {result.fc_eur:.2f} EUR | EC-ER {result.ec_minus_er_eur:.2f}"
        f" | BC {result.bc_eur:.2f} | Q_loss {result.q_loss_pct:.3f}%"
        f" (cal {result.q_cal_pct:.3f} / cyc {result.q_cyc_pct:.3f})"
        f" | EFC {result.efc:.1f} | violations {len(result.violations)}"
    )
    return 0


def _cmd_sweep(args) -> int:
    scenario, paths = dataio.load_scenario(args.scenario)
    series = dataio.load_scenario_series(scenario, paths)
    grid = args.grid
    if grid is None and args.steps is not None:
        if args.axis != "gamma":
            print("--steps is only meaningful for the gamma axis", file=sys.stderr)
            return 2
        grid = [round(x, 10) for x in np.linspace(0.0, 1.0, args.steps)]
    if grid is None:
        grid = DEFAULT_GRIDS[args.axis]
    rows = run_sweep(
        scenario, series, args.axis, grid, n_seeds=args.seeds, jobs=args.jobs
    )
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"sweep_{args.axis}.csv")
    dataio.write_sweep_csv(out_path, rows)
    for r in rows:
        extra = "" if r.delta_fc_eur is None else f" | dFC {r.delta_fc_eur:+.2f}"
        print(
            f"{args.axis}={r.value:g}: FC {r.fc_eur:.2f} | uni {r.fc_unidirectional_eur:.2f}"
            f" | gain {r.economic_gain_eur:.2f} | extra Q {r.extra_q_loss_pct:.3f}%{extra}"
        )
    print(f"wrote {out_path}")
    return 0


def _cmd_fit_pwl(args) -> int:
    curve = dataio.load_curve_csv(args.curve)
    soes = np.array([s for s, _ in curve])
    vals = np.array([v for _, v in curve])
    breakpoints = args.breakpoints
    if breakpoints is None:
        lo, hi = float(soes[0]), float(soes[-1])
        breakpoints = [round(lo + (hi - lo) * k / 8.0, 10) for k in range(9)]
    model = fit_pwl(lambda s: float(np.interp(s, soes, vals)), breakpoints)
    dataio.write_pwl_csv(args.out, model)
    print(f"wrote {args.out} ({len(model.breakpoints)} interior breakpoints)")
    return 0


def _cmd_gen_data(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for kind, fname in (
        ("spot", "spot.csv"),
        ("load", "load.csv"),
        ("irradiance", "irradiance.csv"),
    ):
        series = dataio.generate_synthetic(kind, args.seed, args.hours)
        dataio.write_series_csv(os.path.join(args.out, fname), series)
    with open(os.path.join(args.out, "scenario.yaml"), "w", encoding="utf-8") as fh:
        fh.write(dataio.default_scenario_yaml(hours=args.hours, seed=args.seed))
    print(f"wrote spot.csv, load.csv, irradiance.csv, scenario.yaml to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    scenario, paths = dataio.load_scenario(args.scenario)
    series = dataio.load_scenario_series(scenario, paths)
    ledger = dataio.read_ledger_csv(args.ledger)
    result = dataio.read_result_csv(args.result)
    problems = dataio.validate_run(scenario, ledger, result, series=series)
    if problems:
        for p in problems:
            print(f"INVALID: {p}", file=sys.stderr)
        return 1
    print(f"valid: {len(ledger)} ledger hours replayed clean")
    return 0


REPORT_COLUMNS: dict[str, tuple[str, tuple[str, ...]]] = {
    "gamma": ("fc_vs_gamma.csv", ("value", "fc_eur", "fc_unidirectional_eur",
                                  "q_cal_pct", "q_cyc_pct", "economic_gain_eur",
                                  "extra_q_loss_pct")),
    "battery": ("gain_vs_capacity.csv", ("value", "economic_gain_eur",
                                         "extra_q_loss_pct", "fc_eur",
                                         "fc_unidirectional_eur")),
    "load-scale": ("gain_vs_load_scale.csv", ("value", "economic_gain_eur",
                                              "fc_eur", "fc_unidirectional_eur")),
    "pickup-uncertainty": ("delta_fc_vs_uncertainty.csv", ("value", "delta_fc_eur",
                                                           "fc_eur")),
    "pv-size": ("fc_vs_pv_capacity.csv", ("value", "fc_eur",
                                          "fc_unidirectional_eur")),
}


def _cmd_report(args) -> int:
    import csv

    rows = dataio.read_sweep_csv(args.sweep)
    if not rows:
        print("empty sweep table", file=sys.stderr)
        return 1
    axis = rows[0]["axis"]
    if axis not in REPORT_COLUMNS:
        print(f"unknown axis {axis!r} in sweep table", file=sys.stderr)
        return 1
    fname, columns = REPORT_COLUMNS[axis]
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, fname)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for r in rows:
            writer.writerow([
                "" if r.get(c) is None else repr(float(r[c])) for c in columns
            ])
    print(f"wrote {out_path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "fit-pwl": _cmd_fit_pwl,
        "gen-data": _cmd_gen_data,
        "validate": _cmd_validate,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (dataio.ScenarioError, dataio.SeriesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
