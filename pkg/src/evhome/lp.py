"""Small mixed-integer linear programming layer.

Collects variables (bounds, integrality, objective coefficients) and two-sided
linear constraints, then hands the problem to the HiGHS solver through
:func:`scipy.optimize.milp`.  The interface is deliberately minimal (just
enough to build and query the scheduling problems) so the backend can be
swapped without touching the model code.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

INF = math.inf


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"
    ERROR = "error"


@dataclass
class LpSolution:
    status: SolveStatus
    x: Optional[np.ndarray]
    objective: Optional[float]
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def value(self, index) -> np.ndarray | float:
        """Solution value(s) for a variable index or an index array."""
        if self.x is None:
            raise RuntimeError("no solution available")
        out = self.x[index]
        return float(out) if np.isscalar(index) else out


class LinearProgram:
    """Minimization problem: min c'x  s.t.  cl <= Ax <= cu, lb <= x <= ub."""

    def __init__(self) -> None:
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._obj: list[np.ndarray] = []
        self._integer: list[np.ndarray] = []
        self._n_vars = 0
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._cl: list[np.ndarray] = []
        self._cu: list[np.ndarray] = []
        self._n_rows = 0

    @property
    def num_vars(self) -> int:
        return self._n_vars

    @property
    def num_constraints(self) -> int:
        return self._n_rows

    def add_var(
        self, lb: float = 0.0, ub: float = INF, obj: float = 0.0, integer: bool = False
    ) -> int:
        return int(self.add_vars(1, lb, ub, obj, integer)[0])

    def add_vars(
        self,
        n: int,
        lb=0.0,
        ub=INF,
        obj=0.0,
        integer: bool = False,
    ) -> np.ndarray:
        """Add ``n`` variables; scalar or array-like bounds/objective.
        Returns the new variable indices."""
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy())
        self._obj.append(np.broadcast_to(np.asarray(obj, dtype=float), (n,)).copy())
        self._integer.append(np.full(n, 1 if integer else 0, dtype=np.uint8))
        idx = np.arange(self._n_vars, self._n_vars + n)
        self._n_vars += n
        return idx

    def add_objective_terms(self, indices, coefs) -> None:
        """Accumulate objective coefficients onto existing variables."""
        flat = np.concatenate(self._obj) if len(self._obj) > 1 else self._obj[0]
        if len(self._obj) > 1:
            self._obj = [flat]
        np.add.at(flat, np.asarray(indices, dtype=int), np.asarray(coefs, dtype=float))

    def add_constraint(self, cols, vals, lb: float = -INF, ub: float = INF) -> int:
        cols = np.asarray(cols, dtype=int)
        vals = np.asarray(vals, dtype=float)
        self._rows.append(np.full(cols.shape, self._n_rows, dtype=int))
        self._cols.append(cols)
        self._vals.append(vals)
        self._cl.append(np.array([lb], dtype=float))
        self._cu.append(np.array([ub], dtype=float))
        row = self._n_rows
        self._n_rows += 1
        return row

    def add_constraints(self, rows, cols, vals, lb, ub) -> np.ndarray:
        """Add a block of constraints in COO form.

        ``rows`` are 0-based within the block; ``lb``/``ub`` are per-row
        arrays.  Returns the global row indices of the block.
        """
        rows = np.asarray(rows, dtype=int)
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        n_new = lb.shape[0]
        self._rows.append(rows + self._n_rows)
        self._cols.append(np.asarray(cols, dtype=int))
        self._vals.append(np.asarray(vals, dtype=float))
        self._cl.append(lb)
        self._cu.append(ub)
        out = np.arange(self._n_rows, self._n_rows + n_new)
        self._n_rows += n_new
        return out

    def solve(
        self,
        mip_rel_gap: float = 1e-6,
        time_limit: Optional[float] = None,
        presolve: bool = True,
    ) -> LpSolution:
        c = np.concatenate(self._obj) if self._obj else np.zeros(0)
        lb = np.concatenate(self._lb) if self._lb else np.zeros(0)
        ub = np.concatenate(self._ub) if self._ub else np.zeros(0)
        integrality = np.concatenate(self._integer) if self._integer else np.zeros(0)

        constraints = []
        if self._n_rows:
            a = sparse.csc_matrix(
                (
                    np.concatenate(self._vals),
                    (np.concatenate(self._rows), np.concatenate(self._cols)),
                ),
                shape=(self._n_rows, self._n_vars),
            )
            constraints.append(
                LinearConstraint(a, np.concatenate(self._cl), np.concatenate(self._cu))
            )

        # "threads" is passed through to HiGHS verbatim; single-threaded
        # search keeps results bit-reproducible.
        options: dict = {"mip_rel_gap": mip_rel_gap, "presolve": presolve, "threads": 1}
        if time_limit is not None:
            options["time_limit"] = time_limit

        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="Unrecognized options")
            res = milp(
                c=c,
                constraints=constraints,
                integrality=integrality,
                bounds=Bounds(lb, ub),
                options=options,
            )
        status = {
            0: SolveStatus.OPTIMAL,
            1: SolveStatus.LIMIT,
            2: SolveStatus.INFEASIBLE,
            3: SolveStatus.UNBOUNDED,
        }.get(res.status, SolveStatus.ERROR)
        x = np.asarray(res.x, dtype=float) if res.x is not None else None
        objective = float(res.fun) if res.fun is not None else None
        return LpSolution(status=status, x=x, objective=objective, message=res.message or "")
