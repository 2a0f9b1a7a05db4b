"""Sanity tests for the MILP layer against tiny problems with known optima."""

import numpy as np
import pytest

from evhome.lp import INF, LinearProgram, SolveStatus


def test_simple_lp():
    """min -x - 2y s.t. x + y <= 4, x <= 3, y <= 2: y saturates first
    (better coefficient), x takes the remaining slack -> (2, 2), value -6."""
    lp = LinearProgram()
    x = lp.add_var(ub=3.0, obj=-1.0)
    y = lp.add_var(ub=2.0, obj=-2.0)
    lp.add_constraint([x, y], [1.0, 1.0], ub=4.0)
    res = lp.solve()
    assert res.status is SolveStatus.OPTIMAL
    assert res.value(x) == pytest.approx(2.0, abs=1e-9)
    assert res.value(y) == pytest.approx(2.0, abs=1e-9)
    assert res.objective == pytest.approx(-6.0, abs=1e-9)


def test_integer_variable_rounds_to_integer_solution():
    """min -x with x <= 2.5 and x integer -> x = 2."""
    lp = LinearProgram()
    x = lp.add_var(ub=2.5, obj=-1.0, integer=True)
    res = lp.solve()
    assert res.ok and res.value(x) == pytest.approx(2.0, abs=1e-9)


def test_two_sided_constraint_block():
    lp = LinearProgram()
    xs = lp.add_vars(3, lb=0.0, ub=10.0, obj=[1.0, 2.0, 3.0])
    rows = np.repeat(np.arange(2), 2)
    cols = np.array([xs[0], xs[1], xs[1], xs[2]])
    vals = np.ones(4)
    lp.add_constraints(rows, cols, vals, lb=[2.0, 3.0], ub=[INF, INF])
    res = lp.solve()
    assert res.ok
    # x1 = 3 covers both rows (x0 + x1 >= 2 and x1 + x2 >= 3) at cost 6,
    # cheaper than any split using x0 or x2.
    assert res.objective == pytest.approx(6.0, abs=1e-9)
    assert res.value(xs[1]) == pytest.approx(3.0, abs=1e-9)


def test_objective_accumulation():
    lp = LinearProgram()
    x = lp.add_var(ub=1.0, obj=1.0)
    lp.add_objective_terms([x], [-3.0])  # net -2 => maximize x
    res = lp.solve()
    assert res.ok and res.value(x) == pytest.approx(1.0)
    assert res.objective == pytest.approx(-2.0)


def test_infeasible_status():
    lp = LinearProgram()
    x = lp.add_var(ub=1.0)
    lp.add_constraint([x], [1.0], lb=2.0)
    assert lp.solve().status is SolveStatus.INFEASIBLE


def test_unbounded_status():
    lp = LinearProgram()
    lp.add_var(lb=0.0, ub=INF, obj=-1.0)
    res = lp.solve()
    assert res.status in (SolveStatus.UNBOUNDED, SolveStatus.ERROR)
    assert not res.ok
