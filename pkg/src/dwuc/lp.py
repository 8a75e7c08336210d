"""Linear programming substrate.

Two backends behind one contract:

* ``backend="simplex"`` -- a bounded-variable revised simplex written here:
  phase-1 artificial variables with cost 1, Dantzig pricing with a Bland's
  rule fallback after 1000 consecutive degenerate pivots, dense basis
  inverse with periodic refactorization, warm starts from an exported
  basis.  Returns a basic (vertex) solution with a full basis descriptor.
* ``backend="highs"`` -- scipy's HiGHS interface, used on the hot paths
  (branch-and-bound node relaxations, full-instance LP relaxations) where
  the pure-Python engine would be too slow.  No basis descriptor; a warm
  basis argument is accepted and ignored.

Dual sign convention used everywhere in this package: duals satisfy
``reduced_cost = c - A' y`` with ``y >= 0`` on >= rows, ``y <= 0`` on
<= rows, free on equalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .ucmodel import LE, EQ, GE, MilpProblem

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

# variable statuses inside the simplex
_AT_LB, _AT_UB, _BASIC, _FREE_NB = 0, 1, 2, 3

_FEAS_TOL = 1e-7
_DUAL_TOL = 1e-7
_PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 50
_BLAND_AFTER = 1000


class LpError(RuntimeError):
    pass


@dataclass
class LpProblem:
    """Canonical LP: min c'x, rows with senses in {<=,=,>=}, bounded vars."""

    c: np.ndarray
    A: sparse.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @staticmethod
    def from_milp(p: MilpProblem, lb=None, ub=None) -> "LpProblem":
        return LpProblem(
            c=p.c,
            A=p.A,
            senses=p.senses,
            b=p.b,
            lb=p.lb if lb is None else lb,
            ub=p.ub if ub is None else ub,
        )


@dataclass
class SimplexBasis:
    """Exported basis: per-column and per-row (slack) statuses plus the
    ordered list of basic entries (kind 0 = structural, 1 = slack)."""

    col_status: np.ndarray
    row_status: np.ndarray
    basic_kind: np.ndarray
    basic_index: np.ndarray


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    duals: Optional[np.ndarray]
    reduced_costs: Optional[np.ndarray]
    basis: Optional[SimplexBasis]
    objective: Optional[float]

    def dual_objective(self, problem) -> float:
        """Bounded-variable dual objective; equals the primal objective at
        an optimal point to within tolerances."""
        d = self.reduced_costs
        val = float(self.duals @ problem.b)
        pos = d > 1e-10
        neg = d < -1e-10
        lo = np.where(np.isfinite(problem.lb), problem.lb, 0.0)
        hi = np.where(np.isfinite(problem.ub), problem.ub, 0.0)
        val += float(d[pos] @ lo[pos]) + float(d[neg] @ hi[neg])
        return val


def solve_lp(problem, warm_basis: Optional[SimplexBasis] = None,
             backend: str = "simplex", iteration_limit: int = 200_000) -> LpSolution:
    """Solve an LP given as LpProblem or MilpProblem (integrality ignored)."""
    if backend == "simplex":
        return _RevisedSimplex(problem, iteration_limit).solve(warm_basis)
    if backend == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# HiGHS backend


def _highs_parts(problem):
    A = problem.A
    cache = getattr(A, "_dwuc_highs_parts", None)
    if cache is None:
        senses = problem.senses
        le = np.where(senses == LE)[0]
        ge = np.where(senses == GE)[0]
        eq = np.where(senses == EQ)[0]
        A_csr = A.tocsr()
        blocks = []
        if len(le):
            blocks.append(A_csr[le])
        if len(ge):
            blocks.append(-A_csr[ge])
        A_ub = sparse.vstack(blocks, format="csr") if blocks else None
        A_eq = A_csr[eq] if len(eq) else None
        cache = (le, ge, eq, A_ub, A_eq)
        try:
            A._dwuc_highs_parts = cache
        except AttributeError:
            pass
    return cache


def _solve_highs(problem) -> LpSolution:
    le, ge, eq, A_ub, A_eq = _highs_parts(problem)
    b_ub = None
    if A_ub is not None:
        b_ub = np.concatenate([problem.b[le], -problem.b[ge]])
    b_eq = problem.b[eq] if A_eq is not None else None
    bounds = np.column_stack([problem.lb, problem.ub])
    res = linprog(
        problem.c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, None, None, None, None)
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, None, None, None, None)
    if res.status == 1:
        return LpSolution(ITERATION_LIMIT, None, None, None, None, None)
    if res.status != 0:
        raise LpError(f"HiGHS failed: {res.message}")

    m = problem.A.shape[0]
    y = np.zeros(m)
    if A_ub is not None:
        marg = res.ineqlin.marginals
        y[le] = marg[: len(le)]
        y[ge] = -marg[len(le):]
    if A_eq is not None:
        y[eq] = res.eqlin.marginals
    d = problem.c - problem.A.T @ y
    return LpSolution(OPTIMAL, res.x, y, d, None, float(res.fun))


# ---------------------------------------------------------------------------
# native revised simplex


class _RevisedSimplex:
    """Bounded-variable revised simplex over the extended column set
    [structurals | one logical slack per row | phase-1 artificials]."""

    def __init__(self, problem, iteration_limit):
        self.p = problem
        self.m, self.n = problem.A.shape
        self.iteration_limit = iteration_limit

        # slack bounds by row sense: <= in [0,inf), >= in (-inf,0], = pinned
        slack_lb = np.where(problem.senses == GE, -np.inf, 0.0)
        slack_ub = np.where(problem.senses == LE, np.inf, 0.0)
        self.lb = np.concatenate([problem.lb, slack_lb])
        self.ub = np.concatenate([problem.ub, slack_ub])
        W = sparse.hstack([problem.A, sparse.eye(self.m, format="csr")], format="csc")
        self.W = W
        self.WT = W.T.tocsr()
        self.n_ext = self.n + self.m

    # -- basis machinery ----------------------------------------------------

    def _refactor(self):
        cols = []
        for j in self.basic:
            if j < self.n_ext:
                col = np.zeros(self.m)
                sl = self.W[:, j]
                col[sl.indices] = sl.data
            else:
                col = np.zeros(self.m)
                col[self.art_row[j - self.n_ext]] = self.art_sign[j - self.n_ext]
            cols.append(col)
        B = np.column_stack(cols)
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise LpError("singular basis")
        self._recompute_xB()

    def _recompute_xB(self):
        # nonbasic artificials sit at zero, so only structural/slack
        # nonbasics contribute to the right-hand side
        xs = self.x[: self.n_ext].copy()
        xs[self.basic[self.basic < self.n_ext]] = 0.0
        rhs = self.p.b - self.W @ xs
        self.xB = self.Binv @ rhs

    def _column(self, j):
        if j < self.n_ext:
            sl = self.W[:, j]
            w = self.Binv[:, sl.indices] @ sl.data
        else:
            k = j - self.n_ext
            w = self.Binv[:, self.art_row[k]] * self.art_sign[k]
        return w

    # -- main ---------------------------------------------------------------

    def solve(self, warm_basis) -> LpSolution:
        self.x = np.zeros(self.n_ext)
        self.status = np.full(self.n_ext, _AT_LB, dtype=np.int8)
        for j in range(self.n_ext):
            if np.isfinite(self.lb[j]):
                self.x[j] = self.lb[j]
                self.status[j] = _AT_LB
            elif np.isfinite(self.ub[j]):
                self.x[j] = self.ub[j]
                self.status[j] = _AT_UB
            else:
                self.x[j] = 0.0
                self.status[j] = _FREE_NB

        self.art_row = np.zeros(0, dtype=int)
        self.art_sign = np.zeros(0)
        warm_ok = False
        if warm_basis is not None:
            x0, st0 = self.x.copy(), self.status.copy()
            warm_ok = self._try_warm(warm_basis)
            if not warm_ok:
                self.x, self.status = x0, st0
        if not warm_ok:
            if not self._phase1():
                return LpSolution(INFEASIBLE, None, None, None, None, None)

        cost = np.zeros(self.n_ext + len(self.art_row))
        cost[: self.n] = self.p.c
        status = self._iterate(cost, phase=2)
        if status == ITERATION_LIMIT:
            return LpSolution(ITERATION_LIMIT, None, None, None, None, None)
        if status == UNBOUNDED:
            return LpSolution(UNBOUNDED, None, None, None, None, None)
        return self._extract(cost)

    def _try_warm(self, basis) -> bool:
        if len(basis.col_status) != self.n or len(basis.row_status) != self.m:
            return False
        if len(basis.basic_kind) != self.m:
            return False
        basic = np.where(basis.basic_kind == 0, basis.basic_index, basis.basic_index + self.n)
        if len(np.unique(basic)) != self.m:
            return False
        self.basic = basic.astype(int)
        self.status[: self.n] = basis.col_status
        self.status[self.n:] = basis.row_status
        self.status[self.basic] = _BASIC
        # clamp nonbasic values onto current bounds
        for j in range(self.n_ext):
            st = self.status[j]
            if st == _AT_LB:
                if not np.isfinite(self.lb[j]):
                    st = _AT_UB if np.isfinite(self.ub[j]) else _FREE_NB
            if st == _AT_UB and not np.isfinite(self.ub[j]):
                st = _AT_LB if np.isfinite(self.lb[j]) else _FREE_NB
            self.status[j] = st if st != _BASIC else self.status[j]
        self.x[self.status == _AT_LB] = self.lb[self.status == _AT_LB]
        self.x[self.status == _AT_UB] = self.ub[self.status == _AT_UB]
        self.x[self.status == _FREE_NB] = 0.0
        self.pos = np.full(self.n_ext, -1, dtype=int)
        self.pos[self.basic] = np.arange(self.m)
        try:
            self._refactor()
        except LpError:
            return False
        lbB = self.lb[self.basic]
        ubB = self.ub[self.basic]
        if np.all(self.xB >= lbB - 1e-7) and np.all(self.xB <= ubB + 1e-7):
            np.clip(self.xB, lbB, ubB, out=self.xB)
            self.x[self.basic] = self.xB
            return True
        return False

    def _phase1(self) -> bool:
        resid = self.p.b - self.W @ self.x
        self.art_row = np.arange(self.m)
        self.art_sign = np.where(resid >= 0, 1.0, -1.0)
        art_idx = self.n_ext + np.arange(self.m)
        self.basic = art_idx.copy()
        self.pos = np.full(self.n_ext + self.m, -1, dtype=int)
        self.pos[self.basic] = np.arange(self.m)
        self.status = np.concatenate([self.status, np.full(self.m, _BASIC, dtype=np.int8)])
        self.x = np.concatenate([self.x, np.abs(resid)])
        self.lb = np.concatenate([self.lb, np.zeros(self.m)])
        self.ub = np.concatenate([self.ub, np.full(self.m, np.inf)])
        self.Binv = np.diag(self.art_sign)
        self.xB = np.abs(resid)

        cost = np.zeros(self.n_ext + self.m)
        cost[self.n_ext:] = 1.0
        status = self._iterate(cost, phase=1)
        if status != OPTIMAL:
            raise LpError(f"phase 1 ended with {status}")
        if float(cost[self.basic] @ self.xB) > 1e-6:
            return False
        # pin artificials at zero for phase 2
        self.ub[self.n_ext:] = 0.0
        self.x[self.n_ext:] = np.where(self.status[self.n_ext:] == _BASIC, self.x[self.n_ext:], 0.0)
        return True

    def _iterate(self, cost, phase) -> str:
        m = self.m
        n_all = len(cost)
        lb, ub = self.lb, self.ub
        degen = 0
        bland = False
        pivots = 0
        for it in range(self.iteration_limit):
            if pivots % _REFACTOR_EVERY == 0 and pivots > 0:
                self._refactor()
            y = cost[self.basic] @ self.Binv
            d = cost.copy()
            d[: self.n_ext] -= self.WT @ y
            if len(self.art_row):
                d[self.n_ext:] -= y[self.art_row] * self.art_sign

            st = self.status
            viol = np.zeros(n_all)
            at_lb = st == _AT_LB
            at_ub = st == _AT_UB
            free = st == _FREE_NB
            viol[at_lb] = np.minimum(d[at_lb], 0.0)
            viol[at_ub] = -np.maximum(d[at_ub], 0.0)
            viol[free] = -np.abs(d[free])
            eligible = viol < -_DUAL_TOL
            if not np.any(eligible):
                return OPTIMAL

            if bland:
                j = int(np.argmax(eligible))
            else:
                j = int(np.argmin(viol))
            direction = 1.0 if (st[j] == _AT_LB or (st[j] == _FREE_NB and d[j] < 0)) else -1.0

            w = self._column(j)
            wd = direction * w
            xB, basic = self.xB, self.basic
            lbB = lb[basic]
            ubB = ub[basic]

            theta = np.inf
            leave_slot = -1
            dec = wd > _PIVOT_TOL
            inc = wd < -_PIVOT_TOL
            cand_theta = np.full(m, np.inf)
            cand_theta[dec] = (xB[dec] - lbB[dec]) / wd[dec]
            cand_theta[inc] = (xB[inc] - ubB[inc]) / wd[inc]
            cand_theta = np.maximum(cand_theta, 0.0)
            if np.any(np.isfinite(cand_theta)):
                tmin = float(np.min(cand_theta))
                ties = np.where(cand_theta <= tmin + 1e-9)[0]
                if bland:
                    leave_slot = int(ties[np.argmin(basic[ties])])
                else:
                    leave_slot = int(ties[np.argmax(np.abs(wd[ties]))])
                theta = tmin

            own = ub[j] - lb[j] if (np.isfinite(ub[j]) and np.isfinite(lb[j])) else np.inf
            if own < theta - 1e-12:
                # bound flip, no basis change
                self.xB = xB - wd * own
                self.x[basic] = self.xB
                self.x[j] = ub[j] if st[j] == _AT_LB else lb[j]
                self.status[j] = _AT_UB if st[j] == _AT_LB else _AT_LB
                degen = degen + 1 if own <= 1e-9 else 0
                bland = bland or degen >= _BLAND_AFTER
                pivots += 1
                continue

            if not np.isfinite(theta):
                return UNBOUNDED if phase == 2 else OPTIMAL

            r = leave_slot
            leaving = basic[r]
            self.xB = xB - wd * theta
            start = lb[j] if st[j] != _AT_UB else ub[j]
            if st[j] == _FREE_NB:
                start = self.x[j]
            newval = start + direction * theta
            hit_lb = wd[r] > 0
            self.x[basic] = self.xB
            self.x[leaving] = lbB[r] if hit_lb else ubB[r]
            self.status[leaving] = _AT_LB if hit_lb else _AT_UB
            self.status[j] = _BASIC
            self.x[j] = newval
            basic[r] = j
            self.pos[leaving] = -1
            self.pos[j] = r
            self.xB[r] = newval

            br = self.Binv[r] / w[r]
            self.Binv -= np.outer(w, br)
            self.Binv[r] = br

            degen = degen + 1 if theta <= 1e-9 else 0
            bland = bland or degen >= _BLAND_AFTER
            pivots += 1
        return ITERATION_LIMIT

    def _extract(self, cost) -> LpSolution:
        self._refactor()
        self.x[self.basic] = self.xB
        y = cost[self.basic] @ self.Binv
        x = self.x[: self.n].copy()
        d = self.p.c - self.p.A.T @ y
        obj = float(self.p.c @ x)

        col_status = self.status[: self.n].copy()
        row_status = self.status[self.n: self.n_ext].copy()
        basic_kind = np.zeros(self.m, dtype=np.int8)
        basic_index = np.zeros(self.m, dtype=int)
        for slot, j in enumerate(self.basic):
            if j < self.n:
                basic_kind[slot] = 0
                basic_index[slot] = j
            elif j < self.n_ext:
                basic_kind[slot] = 1
                basic_index[slot] = j - self.n
            else:
                # an artificial stuck at zero: report the row's own slack
                row = self.art_row[j - self.n_ext]
                basic_kind[slot] = 1
                basic_index[slot] = row
                row_status[row] = _BASIC
        basis = SimplexBasis(col_status, row_status, basic_kind, basic_index)
        return LpSolution(OPTIMAL, x, y, d, basis, obj)
