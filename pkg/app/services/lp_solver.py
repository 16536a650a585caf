# app/services/lp_solver.py
"""
LP solver adapters.

Every adapter solves   min c.x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0
and reports one of the statuses below. Adapters hold no state between
solves, so one instance may be shared across threads.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from app.config import DEFAULT_SOLVER, FEASIBILITY_TOL
from app.errors import ConfigurationError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class LPSolution:
    status: str
    value: float
    x: Optional[np.ndarray] = None
    message: str = ""


class HighsSolver:
    """scipy's HiGHS dual simplex, retried with the interior-point method when
    the simplex stops without a verdict"""

    name = "highs"

    def __init__(
        self, tol: float = FEASIBILITY_TOL, method: str = "highs-ds", fallback: Optional[str] = "highs-ipm"
    ):
        self.tol = tol
        self.method = method
        self.fallback = fallback

    def solve(self, c, A_eq, b_eq, A_ub, b_ub) -> LPSolution:
        sol = self._solve(self.method, c, A_eq, b_eq, A_ub, b_ub)
        if sol.status != NUMERICAL_FAILURE or not self.fallback or self.fallback == self.method:
            return sol
        retry = self._solve(self.fallback, c, A_eq, b_eq, A_ub, b_ub)
        if retry.status == OPTIMAL:
            logger.info(f"🔁 {self.fallback} solved what {self.method} could not ({sol.message})")
            return retry
        message = f"{self.method}: {sol.message}; {self.fallback}: {retry.status} ({retry.message})"
        return LPSolution(NUMERICAL_FAILURE, float("nan"), message=message)

    def _solve(self, method, c, A_eq, b_eq, A_ub, b_ub) -> LPSolution:
        res = linprog(
            c,
            A_ub=A_ub if A_ub is not None and A_ub.shape[0] else None,
            b_ub=b_ub if A_ub is not None and A_ub.shape[0] else None,
            A_eq=A_eq if A_eq is not None and A_eq.shape[0] else None,
            b_eq=b_eq if A_eq is not None and A_eq.shape[0] else None,
            bounds=(0, None),
            method=method,
            options={
                "primal_feasibility_tolerance": self.tol,
                "dual_feasibility_tolerance": self.tol,
                "presolve": True,
            },
        )
        status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, NUMERICAL_FAILURE)
        value = float(res.fun) if status == OPTIMAL else float("nan")
        if status == NUMERICAL_FAILURE:
            logger.error(f"❌ HiGHS ({method}) returned status {res.status}: {res.message}")
        return LPSolution(status, value, res.x if status == OPTIMAL else None, str(res.message))


class TextbookSimplexSolver:
    """Dense two-phase primal simplex with Bland's rule.

    Small and slow; it exists so the LP layer can be exercised without an
    external solver.
    """

    name = "simplex"

    def __init__(self, tol: float = FEASIBILITY_TOL, max_iter: int = 50_000):
        self.tol = max(tol, 1e-11)
        self.max_iter = max_iter

    def solve(self, c, A_eq, b_eq, A_ub, b_ub) -> LPSolution:
        c = np.asarray(c, dtype=float)
        n = c.size
        blocks, rhs = [], []
        n_ub = 0
        if A_ub is not None and A_ub.shape[0]:
            A_ub = A_ub.toarray() if sp.issparse(A_ub) else np.asarray(A_ub, dtype=float)
            n_ub = A_ub.shape[0]
            blocks.append(np.hstack([A_ub, np.eye(n_ub)]))
            rhs.append(np.asarray(b_ub, dtype=float))
        if A_eq is not None and A_eq.shape[0]:
            A_eq = A_eq.toarray() if sp.issparse(A_eq) else np.asarray(A_eq, dtype=float)
            blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_ub))]))
            rhs.append(np.asarray(b_eq, dtype=float))
        if not blocks:
            if np.any(c < 0):
                return LPSolution(UNBOUNDED, float("-inf"))
            return LPSolution(OPTIMAL, 0.0, np.zeros(n))

        A = np.vstack(blocks)
        b = np.concatenate(rhs)
        neg = b < 0
        A[neg] *= -1
        b[neg] *= -1
        m, n_std = A.shape

        # phase 1: artificial basis
        tableau = np.zeros((m + 1, n_std + m + 1))
        tableau[:m, :n_std] = A
        tableau[:m, n_std:n_std + m] = np.eye(m)
        tableau[:m, -1] = b
        basis = list(range(n_std, n_std + m))
        tableau[m, :] = -tableau[:m, :].sum(axis=0)
        tableau[m, n_std:n_std + m] = 0.0
        status = self._pivot_loop(tableau, basis, n_std + m)
        if status != OPTIMAL:
            return LPSolution(NUMERICAL_FAILURE, float("nan"), message="phase 1 did not converge")
        if tableau[m, -1] < -self.tol * max(1.0, np.abs(b).max()):
            return LPSolution(INFEASIBLE, float("nan"), message="phase 1 objective positive")

        # drive artificials out of the basis where possible
        for row, var in enumerate(basis):
            if var >= n_std:
                candidates = np.nonzero(np.abs(tableau[row, :n_std]) > self.tol)[0]
                if candidates.size:
                    self._pivot(tableau, basis, row, int(candidates[0]))

        # phase 2
        keep = [r for r, var in enumerate(basis) if var < n_std]
        tableau = np.vstack([tableau[keep][:, list(range(n_std)) + [-1]], np.zeros((1, n_std + 1))])
        basis = [basis[r] for r in keep]
        cost = np.concatenate([c, np.zeros(n_std - n)])
        tableau[-1, :n_std] = cost
        for row, var in enumerate(basis):
            tableau[-1, :] -= cost[var] * tableau[row, :]
        status = self._pivot_loop(tableau, basis, n_std)
        if status == UNBOUNDED:
            return LPSolution(UNBOUNDED, float("-inf"))
        if status != OPTIMAL:
            return LPSolution(NUMERICAL_FAILURE, float("nan"), message="iteration limit")
        x = np.zeros(n_std)
        for row, var in enumerate(basis):
            x[var] = tableau[row, -1]
        return LPSolution(OPTIMAL, float(c @ x[:n]), x[:n])

    def _pivot(self, tableau, basis, row, col):
        tableau[row, :] /= tableau[row, col]
        for r in range(tableau.shape[0]):
            if r != row and tableau[r, col] != 0.0:
                tableau[r, :] -= tableau[r, col] * tableau[row, :]
        basis[row] = col

    def _pivot_loop(self, tableau, basis, n_cols) -> str:
        m = tableau.shape[0] - 1
        for _ in range(self.max_iter):
            reduced = tableau[m, :n_cols]
            entering = np.nonzero(reduced < -self.tol)[0]
            if entering.size == 0:
                return OPTIMAL
            col = int(entering[0])  # Bland
            column = tableau[:m, col]
            positive = column > self.tol
            if not positive.any():
                return UNBOUNDED
            ratios = np.full(m, np.inf)
            ratios[positive] = tableau[:m, -1][positive] / column[positive]
            best = ratios.min()
            ties = np.nonzero(ratios <= best + self.tol * max(1.0, abs(best)))[0]
            row = int(min(ties, key=lambda r: basis[r]))
            self._pivot(tableau, basis, row, col)
        return NUMERICAL_FAILURE


_SOLVERS = {"highs": HighsSolver, "simplex": TextbookSimplexSolver}


def get_solver(name: Optional[str] = None):
    name = (name or DEFAULT_SOLVER).lower()
    if name not in _SOLVERS:
        raise ConfigurationError(f"unknown LP solver '{name}', expected one of {sorted(_SOLVERS)}")
    return _SOLVERS[name]()
