"""Parking-mode shrinking-horizon optimization.

At every parked hour a constrained problem over the remaining hours of the
session is built and solved: decision variables are the seven energy flows
plus PV curtailment and the battery SoE trajectory; the objective is energy
cost minus export revenue plus aging cost (strategy variants drop terms).

The calendar aging rate is a nonconvex piecewise-linear function of SoE
(mixed-sign slope changes).  Exact handling uses binaries: the hinge terms
``max(0, SoE - tau)`` with a negative slope change get one indicator each,
while positive slope changes are plain epigraph variables that cost pressure
keeps tight.  Because branch-and-bound on those indicators is the dominant
cost of a year-long simulation, the default solve first tries a convex
relaxation that replaces the curve with its lower convex envelope restricted
to each hour's admissible SoE range; when the relaxed optimum's true
objective matches the relaxation bound within the MIP gap the plan is
optimal and the binaries are never needed (the SoE floors at 40% and the
pickup target at 80% are envelope knots of their restricted ranges, so this
happens for most hours).  Otherwise the full MILP runs.

Cycle aging enters linearly: the per-hour EFC increment is total EV
throughput / (2 * capacity), priced at a cycle rate frozen per solve from the
previous solution's predicted depth of discharge.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from evhome.degradation import PwlCalendarModel, calendar_weight, eval_pwl_kcal
from evhome.domain import EvSpec, HourlyFlows, ParkingSession
from evhome.lp import INF, LinearProgram, SolveStatus

FLOW_NAMES = ("v2g", "v2h", "g2v", "g2h", "pv2v", "pv2g", "pv2h", "pv2curt")

# Tie-break on EV throughput for strategies without an aging term, to keep
# simultaneous charge/discharge out of degenerate optima.
TIE_BREAK_EUR_PER_KWH = 1e-9


class Strategy(str, enum.Enum):
    PROPOSED = "proposed"
    UNIDIRECTIONAL = "unidirectional"
    ENERGY_ONLY = "energy-only"
    DEGRADATION_ONLY = "degradation-only"


def strategy_objective(strategy: Strategy) -> tuple[bool, bool]:
    """(include energy terms, include aging terms) for ``strategy``."""
    if strategy in (Strategy.PROPOSED, Strategy.UNIDIRECTIONAL):
        return True, True
    if strategy is Strategy.ENERGY_ONLY:
        return True, False
    if strategy is Strategy.DEGRADATION_ONLY:
        return False, True
    raise ValueError(f"unknown strategy: {strategy!r}")


@dataclass(frozen=True)
class HorizonProblem:
    """One shrinking-horizon instance over hours current_hour..pickup_hour."""

    current_hour: int
    pickup_hour: int
    arrival_hour: int
    initial_soe: float
    retail_prices: np.ndarray
    spot_prices: np.ndarray
    household_load: np.ndarray
    pv_production: np.ndarray
    grid_cap: np.ndarray
    strategy: Strategy
    gamma: float
    k_cyc: float
    pwl: PwlCalendarModel
    nv_eur: float
    eol_pct: float
    ev: EvSpec
    pv_max_hourly: float
    convexify: bool = False

    @property
    def horizon(self) -> int:
        return self.pickup_hour - self.current_hour + 1

    @property
    def euro_per_loss_fraction(self) -> float:
        """Euros per unit of fractional capacity loss (loss is accounted in
        percent against the 100 - EoL budget)."""
        return 100.0 * self.nv_eur / (100.0 - self.eol_pct)

    def soe_lower_bounds(self) -> np.ndarray:
        """Per-hour SoE lower bound: admissible floor, the 40% safety floor
        over the second half of the declared session, and the pickup target
        at the final hour."""
        lb = np.full(self.horizon, self.ev.soe_min)
        duration = self.pickup_hour - self.arrival_hour + 1
        floor_start = self.arrival_hour + duration // 2
        for j in range(self.horizon):
            if self.current_hour + j >= floor_start:
                lb[j] = max(lb[j], self.ev.safety_soe)
        lb[self.horizon - 1] = max(lb[self.horizon - 1], self.ev.pickup_soe)
        return lb


def build_problem(
    current_hour: int,
    session: ParkingSession,
    initial_soe: float,
    retail_prices: Sequence[float],
    spot_prices: Sequence[float],
    household_load: Sequence[float],
    pv_production: Sequence[float],
    strategy: Strategy,
    gamma: float,
    k_cyc: float,
    pwl: PwlCalendarModel,
    nv_eur: float,
    eol_pct: float,
    ev: EvSpec,
    pv_max_hourly: float,
    grid_cap=1.0e6,
    convexify: bool = False,
) -> HorizonProblem:
    """Assemble and validate one horizon instance.

    All series run over current_hour..pickup_hour; index 0 holds the current
    measurement, later entries are forecasts.
    """
    if not (session.arrival_hour <= current_hour <= session.declared_pickup_hour):
        raise ValueError("current_hour outside the parking session")
    h = session.declared_pickup_hour - current_hour + 1
    arrays = {}
    for name, seq in (
        ("retail_prices", retail_prices),
        ("spot_prices", spot_prices),
        ("household_load", household_load),
        ("pv_production", pv_production),
    ):
        arr = np.asarray(seq, dtype=float)
        if arr.shape != (h,):
            raise ValueError(f"{name} must have length {h}, got {arr.shape}")
        arrays[name] = arr
    grid = np.broadcast_to(np.asarray(grid_cap, dtype=float), (h,)).copy()
    if ev.soe_min < pwl.domain_min - 1e-12 or ev.soe_max > pwl.domain_max + 1e-12:
        raise ValueError("SoE bounds outside the PWL calendar-curve domain")
    if k_cyc < 0:
        raise ValueError("k_cyc must be >= 0")
    return HorizonProblem(
        current_hour=current_hour,
        pickup_hour=session.declared_pickup_hour,
        arrival_hour=session.arrival_hour,
        initial_soe=initial_soe,
        retail_prices=arrays["retail_prices"],
        spot_prices=arrays["spot_prices"],
        household_load=arrays["household_load"],
        pv_production=arrays["pv_production"],
        grid_cap=grid,
        strategy=strategy,
        gamma=gamma,
        k_cyc=k_cyc,
        pwl=pwl,
        nv_eur=nv_eur,
        eol_pct=eol_pct,
        ev=ev,
        pv_max_hourly=pv_max_hourly,
        convexify=convexify,
    )


@dataclass
class HorizonSolution:
    """Optimal plan for one horizon (arrays indexed 0..H-1)."""

    status: SolveStatus
    flows: dict[str, np.ndarray] | None
    soe: np.ndarray | None
    objective: Optional[float]
    ec_eur: np.ndarray | None = None
    er_eur: np.ndarray | None = None
    bc_eur: np.ndarray | None = None
    dq_cal_pct: np.ndarray | None = None
    dq_cyc_pct: np.ndarray | None = None
    efc_inc: np.ndarray | None = None
    exact_hours: np.ndarray | None = None
    infeasibility: str = ""
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def hour_flows(self, j: int) -> HourlyFlows:
        assert self.flows is not None
        return HourlyFlows(**{name: float(self.flows[name][j]) for name in FLOW_NAMES})

    def to_dict(self) -> dict:
        out: dict = {"status": self.status.value, "objective": self.objective}
        if self.flows is not None:
            out["flows"] = {k: v.tolist() for k, v in self.flows.items()}
            out["soe"] = self.soe.tolist()
            out["ec_eur"] = self.ec_eur.tolist()
            out["er_eur"] = self.er_eur.tolist()
            out["bc_eur"] = self.bc_eur.tolist()
        return out


def _calendar_weights(problem: HorizonProblem) -> np.ndarray:
    return np.array(
        [calendar_weight(problem.current_hour + j) for j in range(problem.horizon)]
    )


def _add_cycle_terms(
    lp: LinearProgram, problem: HorizonProblem, flow_idx: dict[str, np.ndarray]
) -> None:
    """Cycle aging cost: throughput / (2 E_b) EFCs priced at the frozen rate."""
    coef = (
        problem.euro_per_loss_fraction
        * problem.k_cyc
        / (2.0 * problem.ev.usable_capacity_kwh)
    )
    for name in ("v2g", "v2h", "g2v", "pv2v"):
        lp.add_objective_terms(flow_idx[name], np.full(problem.horizon, coef))


def _add_exact_calendar(
    lp: LinearProgram,
    problem: HorizonProblem,
    soe_idx: np.ndarray,
    hours: np.ndarray,
) -> float:
    """Exact calendar cost for the given hour offsets.

    Ties each hour's calendar rate to SoE through the PWL graph: one hinge
    variable per interior breakpoint, plus one binary indicator per
    breakpoint whose slope change is negative (there the solver would
    otherwise inflate the hinge).  Returns the constant objective offset
    (the PWL intercept part).
    """
    if len(hours) == 0:
        return 0.0
    pwl = problem.pwl
    euros = problem.euro_per_loss_fraction
    all_weights = _calendar_weights(problem)
    all_lbs = problem.soe_lower_bounds()
    offset = 0.0

    # Group hours by their SoE lower bound: breakpoints at or below the bound
    # are always active, so their hinge is soe - tau and folds into the
    # linear term; the rest keep hinge variables (binaries only where the
    # slope change is negative) with the bound tightening the off-state M.
    for lb in np.unique(all_lbs[hours]):
        grp = hours[all_lbs[hours] == lb]
        n = len(grp)
        weights = all_weights[grp]
        soe_sub = soe_idx[grp]

        soe_coef = pwl.first_slope
        const = pwl.intercept
        for tau, dm in zip(pwl.breakpoints, pwl.slope_changes):
            if tau <= lb + 1e-12:
                soe_coef += dm
                const -= dm * tau
        lp.add_objective_terms(soe_sub, euros * weights * soe_coef)
        offset += float(np.sum(euros * weights * const))

        for tau, dm in zip(pwl.breakpoints, pwl.slope_changes):
            if tau <= lb + 1e-12:
                continue
            hinge = lp.add_vars(n, lb=0.0, ub=pwl.domain_max - tau)
            lp.add_objective_terms(hinge, euros * weights * dm)
            # hinge >= soe - tau  <=>  soe - hinge <= tau
            rows = np.repeat(np.arange(n), 2)
            cols = np.column_stack([soe_sub, hinge]).ravel()
            vals = np.tile([1.0, -1.0], n)
            lp.add_constraints(rows, cols, vals, np.full(n, -INF), np.full(n, tau))
            if dm < 0:
                # Indicator z = [soe >= tau] pins hinge to exactly max(0, soe-tau).
                z = lp.add_vars(n, lb=0.0, ub=1.0, integer=True)
                m_on = pwl.domain_max - tau
                m_off = tau - lb
                # hinge <= m_on * z
                rows = np.repeat(np.arange(n), 2)
                cols = np.column_stack([hinge, z]).ravel()
                vals = np.tile([1.0, -m_on], n)
                lp.add_constraints(rows, cols, vals, np.full(n, -INF), np.zeros(n))
                # hinge <= soe - tau + m_off * (1 - z)
                rows = np.repeat(np.arange(n), 3)
                cols = np.column_stack([hinge, soe_sub, z]).ravel()
                vals = np.tile([1.0, -1.0, m_off], n)
                lp.add_constraints(
                    rows, cols, vals, np.full(n, -INF), np.full(n, m_off - tau)
                )

    return offset


def linearize_degradation_terms(
    lp: LinearProgram,
    problem: HorizonProblem,
    soe_idx: np.ndarray,
    flow_idx: dict[str, np.ndarray],
) -> float:
    """Exact linearization of the full aging cost (cycle term plus the PWL
    calendar graph for every hour).  Returns the constant objective offset."""
    _add_cycle_terms(lp, problem, flow_idx)
    return _add_exact_calendar(lp, problem, soe_idx, np.arange(problem.horizon))


def lower_convex_envelope(
    pwl: PwlCalendarModel, lo: float, hi: float
) -> list[tuple[float, float]]:
    """Edges (slope, intercept) of the lower convex envelope of the calendar
    curve restricted to SoE in [lo, hi]."""
    if hi <= lo:
        value = eval_pwl_kcal(lo, pwl)
        return [(0.0, value)]
    xs = [lo] + [t for t in pwl.breakpoints if lo < t < hi] + [hi]
    pts = [(x, eval_pwl_kcal(x, pwl)) for x in xs]
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    edges = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        slope = (y1 - y0) / (x1 - x0)
        edges.append((slope, y0 - slope * x0))
    return edges or [(0.0, pts[0][1])]


def _add_envelope_calendar(
    lp: LinearProgram, problem: HorizonProblem, soe_idx: np.ndarray, hours: np.ndarray
) -> np.ndarray:
    """Relaxed calendar cost for the given hour offsets: one epigraph
    variable per hour over the convex envelope of the PWL curve restricted to
    that hour's SoE bounds.  Returns the epigraph variable indices."""
    n = len(hours)
    euros = problem.euro_per_loss_fraction
    weights = _calendar_weights(problem)[hours]
    lbs = problem.soe_lower_bounds()[hours]
    kcal_idx = lp.add_vars(n, lb=-INF, ub=INF)
    lp.add_objective_terms(kcal_idx, euros * weights)
    env_cache: dict[float, list[tuple[float, float]]] = {}
    for pos in range(n):
        edges = env_cache.get(lbs[pos])
        if edges is None:
            edges = lower_convex_envelope(problem.pwl, lbs[pos], problem.ev.soe_max)
            env_cache[lbs[pos]] = edges
        for slope, intercept in edges:
            # kcal_j >= slope * soe_j + intercept
            lp.add_constraint(
                [kcal_idx[pos], soe_idx[hours[pos]]], [1.0, -slope], lb=intercept, ub=INF
            )
    return kcal_idx


def _build_base(problem: HorizonProblem) -> tuple[LinearProgram, dict[str, np.ndarray], np.ndarray]:
    """Flows, SoE dynamics, balances, caps, and the energy objective."""
    h = problem.horizon
    ev = problem.ev
    lp = LinearProgram()

    energy_terms, aging_terms = strategy_objective(problem.strategy)
    unidirectional = problem.strategy is Strategy.UNIDIRECTIONAL

    load = problem.household_load
    prod = problem.pv_production
    ev_cap = ev.max_hourly_energy_kwh
    pv_cap = problem.pv_max_hourly

    flow_idx: dict[str, np.ndarray] = {}
    flow_idx["v2g"] = lp.add_vars(h, ub=0.0 if unidirectional else ev_cap)
    flow_idx["v2h"] = lp.add_vars(
        h, ub=0.0 if unidirectional else np.minimum(ev_cap, load)
    )
    flow_idx["g2v"] = lp.add_vars(h, ub=ev_cap)
    flow_idx["g2h"] = lp.add_vars(h, ub=load)
    flow_idx["pv2v"] = lp.add_vars(h, ub=np.minimum(ev_cap, np.minimum(pv_cap, prod)))
    flow_idx["pv2g"] = lp.add_vars(h, ub=np.minimum(pv_cap, prod))
    flow_idx["pv2h"] = lp.add_vars(h, ub=np.minimum(pv_cap, np.minimum(prod, load)))
    flow_idx["pv2curt"] = lp.add_vars(h, ub=prod)
    soe_idx = lp.add_vars(h, lb=problem.soe_lower_bounds(), ub=ev.soe_max)

    if energy_terms:
        lp.add_objective_terms(flow_idx["g2v"], problem.retail_prices)
        lp.add_objective_terms(flow_idx["g2h"], problem.retail_prices)
        lp.add_objective_terms(flow_idx["v2g"], -problem.gamma * problem.spot_prices)
        lp.add_objective_terms(flow_idx["pv2g"], -problem.spot_prices)

    if not aging_terms:
        for name in ("v2g", "v2h", "g2v", "pv2v"):
            lp.add_objective_terms(flow_idx[name], np.full(h, TIE_BREAK_EUR_PER_KWH))

    def pair_rows(names: Sequence[str], coefs: Sequence[float], lb, ub) -> None:
        k = len(names)
        rows = np.repeat(np.arange(h), k)
        cols = np.column_stack([flow_idx[n] for n in names]).ravel()
        vals = np.tile(np.asarray(coefs, dtype=float), h)
        lp.add_constraints(
            rows,
            cols,
            vals,
            np.broadcast_to(np.asarray(lb, dtype=float), (h,)),
            np.broadcast_to(np.asarray(ub, dtype=float), (h,)),
        )

    pair_rows(("g2v", "pv2v"), (1, 1), -INF, ev_cap)  # charger input limit
    pair_rows(("v2g", "v2h"), (1, 1), -INF, ev_cap)  # charger output limit
    pair_rows(("pv2v", "pv2g", "pv2h"), (1, 1, 1), -INF, pv_cap)  # inverter limit
    pair_rows(("pv2v", "pv2g", "pv2h", "pv2curt"), (1, 1, 1, 1), prod, prod)  # PV balance
    pair_rows(("g2h", "v2h", "pv2h"), (1, 1, 1), load, load)  # household balance
    pair_rows(("g2v", "g2h"), (1, 1), -INF, problem.grid_cap)  # contracted grid energy

    # SoE dynamics: soe_j - soe_{j-1} = (charge - discharge) / E_b.
    cap = ev.usable_capacity_kwh
    rows = [np.arange(h)] * 5
    cols = [soe_idx, flow_idx["g2v"], flow_idx["pv2v"], flow_idx["v2g"], flow_idx["v2h"]]
    vals = [
        np.ones(h),
        np.full(h, -1.0 / cap),
        np.full(h, -1.0 / cap),
        np.full(h, 1.0 / cap),
        np.full(h, 1.0 / cap),
    ]
    if h > 1:
        rows.append(np.arange(1, h))
        cols.append(soe_idx[:-1])
        vals.append(np.full(h - 1, -1.0))
    rhs = np.zeros(h)
    rhs[0] = problem.initial_soe
    lp.add_constraints(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), rhs, rhs
    )
    return lp, flow_idx, soe_idx


def _extract(
    problem: HorizonProblem,
    res,
    flow_idx: dict[str, np.ndarray],
    soe_idx: np.ndarray,
    objective: float,
) -> HorizonSolution:
    flows = {}
    for name in FLOW_NAMES:
        values = np.atleast_1d(res.value(flow_idx[name]))
        if np.any(values < -1e-6):
            raise RuntimeError(f"solver returned negative {name} flow")
        flows[name] = np.maximum(values, 0.0)
    soe = np.atleast_1d(np.asarray(res.value(soe_idx), dtype=float))
    solution = HorizonSolution(
        status=res.status,
        flows=flows,
        soe=soe,
        objective=objective,
        message=res.message,
    )
    _attach_stage_costs(problem, solution)
    return solution


def _infeasible_solution(problem: HorizonProblem, res) -> HorizonSolution:
    report = diagnose_infeasibility(problem) if res.status is SolveStatus.INFEASIBLE else ""
    return HorizonSolution(
        status=res.status,
        flows=None,
        soe=None,
        objective=None,
        infeasibility=report,
        message=res.message,
    )


def solve_horizon(
    problem: HorizonProblem,
    mip_rel_gap: float = 1e-6,
    gap_abs_eur: float = 0.0,
) -> HorizonSolution:
    """Solve one horizon instance to optimality (within ``mip_rel_gap``
    relative, or ``gap_abs_eur`` absolute if that is looser).

    Strategies without an aging term are plain LPs.  With an aging term the
    calendar curve starts out as its per-hour convex-envelope relaxation; the
    relaxed plan is accepted when its true calendar cost matches the bound
    within the gap (which certifies optimality).  Otherwise the hours
    responsible are promoted to the exact binary formulation and the problem
    is re-solved; after at most ``horizon`` promotions the model is the full
    MILP.  ``problem.convexify`` accepts the first relaxed plan as is.
    """
    _, aging_terms = strategy_objective(problem.strategy)

    if not aging_terms:
        lp, flow_idx, soe_idx = _build_base(problem)
        res = lp.solve(mip_rel_gap=mip_rel_gap)
        if not res.ok:
            return _infeasible_solution(problem, res)
        return _extract(problem, res, flow_idx, soe_idx, res.objective)

    h = problem.horizon
    euros = problem.euro_per_loss_fraction
    weights = _calendar_weights(problem)
    exact = np.zeros(h, dtype=bool)

    while True:
        relaxed_hours = np.nonzero(~exact)[0]
        exact_hours = np.nonzero(exact)[0]
        lp, flow_idx, soe_idx = _build_base(problem)
        _add_cycle_terms(lp, problem, flow_idx)
        offset = _add_exact_calendar(lp, problem, soe_idx, exact_hours)
        kcal_idx = _add_envelope_calendar(lp, problem, soe_idx, relaxed_hours)
        res = lp.solve(mip_rel_gap=mip_rel_gap)
        if not res.ok:
            return _infeasible_solution(problem, res)
        if len(relaxed_hours) == 0:
            solution = _extract(problem, res, flow_idx, soe_idx, res.objective + offset)
            solution.exact_hours = exact_hours
            return solution

        soe = np.atleast_1d(np.asarray(res.value(soe_idx), dtype=float))
        soe_eval = np.clip(soe, problem.pwl.domain_min, problem.pwl.domain_max)
        true_cal = np.array([eval_pwl_kcal(soe_eval[j], problem.pwl) for j in relaxed_hours])
        env_cal = np.atleast_1d(res.value(kcal_idx))
        hour_gaps = euros * weights[relaxed_hours] * (true_cal - env_cal)
        gap = float(np.sum(hour_gaps))
        tolerance = max(mip_rel_gap * max(1.0, abs(res.objective)), gap_abs_eur)
        if problem.convexify or gap <= tolerance:
            solution = _extract(
                problem, res, flow_idx, soe_idx, res.objective + offset + gap
            )
            solution.exact_hours = exact_hours
            return solution

        # Promote the smallest set of hours that (optimistically) brings the
        # remaining relaxation gap under half the tolerance, worst first.
        order = np.argsort(hour_gaps)[::-1]
        remaining = gap
        promote = np.zeros(len(relaxed_hours), dtype=bool)
        for pos in order:
            if remaining <= tolerance / 2.0 and promote.any():
                break
            promote[pos] = True
            remaining -= hour_gaps[pos]
        promote[int(np.argmax(hour_gaps))] = True
        exact[relaxed_hours[promote]] = True


def _attach_stage_costs(problem: HorizonProblem, solution: HorizonSolution) -> None:
    """Recompute per-hour costs and aging increments exactly from the plan."""
    flows = solution.flows
    soe = solution.soe
    h = problem.horizon
    ec = (flows["g2v"] + flows["g2h"]) * problem.retail_prices
    er = (problem.gamma * flows["v2g"] + flows["pv2g"]) * problem.spot_prices
    throughput = flows["v2g"] + flows["v2h"] + flows["g2v"] + flows["pv2v"]
    efc_inc = throughput / (2.0 * problem.ev.usable_capacity_kwh)
    weights = np.array([calendar_weight(problem.current_hour + j) for j in range(h)])
    soe_eval = np.clip(soe, problem.pwl.domain_min, problem.pwl.domain_max)
    kcal = np.array([eval_pwl_kcal(s, problem.pwl) for s in soe_eval])
    dq_cal = kcal * weights
    dq_cyc = problem.k_cyc * efc_inc
    euros = problem.euro_per_loss_fraction
    solution.ec_eur = ec
    solution.er_eur = er
    solution.bc_eur = euros * (dq_cal + dq_cyc)
    solution.dq_cal_pct = 100.0 * dq_cal
    solution.dq_cyc_pct = 100.0 * dq_cyc
    solution.efc_inc = efc_inc


def recompute_objective(problem: HorizonProblem, solution: HorizonSolution) -> float:
    """Strategy objective re-evaluated from the returned plan, independent of
    the solver's reported value."""
    energy_terms, aging_terms = strategy_objective(problem.strategy)
    total = 0.0
    if energy_terms:
        total += float(np.sum(solution.ec_eur - solution.er_eur))
    if aging_terms:
        total += float(np.sum(solution.bc_eur))
    return total


def check_solution(
    problem: HorizonProblem, solution: HorizonSolution, tol: float = 1e-6
) -> list[str]:
    """Independent feasibility recheck of every constraint family."""
    if not solution.ok:
        return ["no solution"]
    f = solution.flows
    soe = solution.soe
    ev = problem.ev
    problems: list[str] = []

    def check(mask: np.ndarray, label: str) -> None:
        if np.any(mask):
            problems.append(f"{label} at offsets {np.nonzero(mask)[0].tolist()}")

    for name in FLOW_NAMES:
        check(f[name] < -tol, f"negative flow {name}")
    check(f["g2v"] + f["pv2v"] > ev.max_hourly_energy_kwh + tol, "charger input limit")
    check(f["v2g"] + f["v2h"] > ev.max_hourly_energy_kwh + tol, "charger output limit")
    check(
        f["pv2v"] + f["pv2g"] + f["pv2h"] > problem.pv_max_hourly + tol,
        "inverter limit",
    )
    check(
        np.abs(f["pv2v"] + f["pv2g"] + f["pv2h"] + f["pv2curt"] - problem.pv_production)
        > tol,
        "pv balance",
    )
    check(
        np.abs(f["g2h"] + f["v2h"] + f["pv2h"] - problem.household_load) > tol,
        "household balance",
    )
    check(f["g2v"] + f["g2h"] > problem.grid_cap + tol, "grid cap")
    prev = np.concatenate([[problem.initial_soe], soe[:-1]])
    step = (f["g2v"] + f["pv2v"] - f["v2g"] - f["v2h"]) / ev.usable_capacity_kwh
    check(np.abs(soe - prev - step) > tol, "soe dynamics")
    check(soe > ev.soe_max + tol, "soe upper bound")
    check(soe < problem.soe_lower_bounds() - tol, "soe lower bound")
    if problem.strategy is Strategy.UNIDIRECTIONAL:
        check(f["v2g"] + f["v2h"] > tol, "unidirectional discharge")
    return problems


def flag_simultaneous_flow(solution: HorizonSolution, tol: float = 1e-6) -> list[int]:
    """Offsets where the plan both charges and discharges in the same hour."""
    f = solution.flows
    charge = f["g2v"] + f["pv2v"]
    discharge = f["v2g"] + f["v2h"]
    return np.nonzero(np.minimum(charge, discharge) > tol)[0].tolist()


def diagnose_infeasibility(problem: HorizonProblem) -> str:
    """Name the constraint family that makes the instance infeasible."""
    ev = problem.ev
    ccap = ev.max_hourly_energy_kwh / ev.usable_capacity_kwh
    lb = problem.soe_lower_bounds()
    reachable = problem.initial_soe + ccap * np.arange(1, problem.horizon + 1)
    reachable = np.minimum(reachable, ev.soe_max)
    if reachable[-1] < lb[-1] - 1e-12 and lb[-1] >= ev.pickup_soe:
        return "pickup_target"
    short = reachable < lb - 1e-12
    if np.any(short):
        return "safety_floor"
    supply = (
        problem.grid_cap
        + np.minimum(problem.pv_production, problem.pv_max_hourly)
        + (0.0 if problem.strategy is Strategy.UNIDIRECTIONAL else ev.max_hourly_energy_kwh)
    )
    if np.any(problem.household_load > supply + 1e-12):
        return "household_balance"
    if problem.initial_soe > ev.soe_max + ccap or problem.initial_soe < ev.soe_min - ccap:
        return "soe_bounds"
    return "unknown"


def fallback_first_hour(problem: HorizonProblem) -> HourlyFlows:
    """Rule-based plan for the current hour when the horizon is infeasible:
    serve the household (PV first), then charge the EV at the maximum
    feasible rate (PV surplus first, then grid)."""
    ev = problem.ev
    load = float(problem.household_load[0])
    prod = float(problem.pv_production[0])
    grid = float(problem.grid_cap[0])
    pv_cap = problem.pv_max_hourly
    headroom_kwh = max(0.0, (ev.soe_max - problem.initial_soe) * ev.usable_capacity_kwh)

    pv2h = min(prod, load, pv_cap)
    pv_left = prod - pv2h
    pv2v = min(pv_left, pv_cap - pv2h, ev.max_hourly_energy_kwh, headroom_kwh)
    g2v = min(ev.max_hourly_energy_kwh - pv2v, headroom_kwh - pv2v, grid)
    g2h = min(load - pv2h, max(0.0, grid - g2v))
    pv2g = min(pv_left - pv2v, pv_cap - pv2h - pv2v)
    pv2curt = prod - pv2h - pv2v - pv2g
    return HourlyFlows(
        g2v=max(0.0, g2v),
        g2h=max(0.0, g2h),
        pv2v=max(0.0, pv2v),
        pv2g=max(0.0, pv2g),
        pv2h=max(0.0, pv2h),
        pv2curt=max(0.0, pv2curt),
    )


def dump_solution(path, problem: HorizonProblem, solution: HorizonSolution) -> None:
    """Debug dump of one solved horizon as JSON (regression aid)."""
    payload = {
        "current_hour": problem.current_hour,
        "pickup_hour": problem.pickup_hour,
        "strategy": problem.strategy.value,
        "gamma": problem.gamma,
        "k_cyc": problem.k_cyc,
        "initial_soe": problem.initial_soe,
        "solution": solution.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
