"""Branch-and-bound MILP solver with pausable, resumable sessions.

The search state lives in a BnbSession that can be handed back to
``solve_milp`` to continue exactly where a previous call ran out of
budget.  Node selection is best-bound first (ties toward deeper nodes),
with two pragmatic refinements that desk-scale budgets forced: the solver
dives depth-first until the first incumbent exists, and variables whose
bounds are equal (partially-fixed problems) are eliminated from the node
LPs and substituted back into reported solutions.  No cuts, no rounding
heuristics: partially-fixed problems are meant to be easy and the engine
stays plain so the primal heuristics' contribution is measurable.
"""

from __future__ import annotations

import hashlib
import heapq
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .ucmodel import EQ, GE, LE, MilpProblem

INT_EPS = 1e-6
NODE_CAP = 100_000

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible-budget-exhausted"
STATUS_INFEASIBLE = "infeasible"
STATUS_NO_SOLUTION = "no-solution-budget-exhausted"


class SessionMismatchError(ValueError):
    pass


class BranchingError(RuntimeError):
    pass


def problem_fingerprint(problem: MilpProblem) -> str:
    fp = getattr(problem, "_dwuc_fingerprint", None)
    if fp is None:
        h = hashlib.sha1()
        for arr in (
            problem.c, problem.b, problem.lb, problem.ub, problem.senses,
            problem.is_integer, problem.A.indptr, problem.A.indices, problem.A.data,
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        fp = h.hexdigest()
        try:
            problem._dwuc_fingerprint = fp
        except AttributeError:
            pass
    return fp


def branching_choice(x: np.ndarray, is_integer: np.ndarray, int_eps: float = INT_EPS) -> int:
    """Most fractional integer variable; ties broken by lowest index."""
    xi = x[is_integer]
    frac = np.abs(xi - np.round(xi))
    cand = np.where(frac > int_eps)[0]
    if len(cand) == 0:
        raise BranchingError("branching_choice called on an integral solution")
    scores = np.abs(xi[cand] - 0.5)
    best = float(np.min(scores))
    pick = cand[np.where(scores <= best + 1e-12)[0][0]]
    return int(np.where(is_integer)[0][pick])


# ---------------------------------------------------------------------------
# fixed-variable elimination


@dataclass
class _Reduction:
    reduced: Optional[MilpProblem]   # None when the constants are inconsistent
    free_idx: np.ndarray
    template: np.ndarray             # full x with constants filled in
    offset: float

    def expand(self, x_red: np.ndarray) -> np.ndarray:
        x = self.template.copy()
        x[self.free_idx] = x_red
        return x


def _reduce_problem(problem: MilpProblem) -> _Reduction:
    """Substitute out variables with equal bounds; fold the resulting
    single-variable rows into bounds and drop constant rows."""
    fixed = (problem.ub - problem.lb) <= 1e-12
    free_idx = np.where(~fixed)[0]
    template = np.where(fixed, problem.lb, 0.0)
    offset = float(problem.c[fixed] @ problem.lb[fixed])

    A_csc = problem.A.tocsc()
    if np.any(fixed):
        shift = A_csc[:, np.where(fixed)[0]] @ problem.lb[fixed]
    else:
        shift = np.zeros(problem.A.shape[0])
    b2 = problem.b - shift
    A_free = A_csc[:, free_idx].tocsr()
    nnz = np.diff(A_free.indptr)

    lb2 = problem.lb[free_idx].copy()
    ub2 = problem.ub[free_idx].copy()
    is_int2 = problem.is_integer[free_idx].copy()

    # constant rows: verify and drop
    for i in np.where(nnz == 0)[0]:
        s, r = problem.senses[i], b2[i]
        if (s == LE and r < -1e-7) or (s == GE and r > 1e-7) or (s == EQ and abs(r) > 1e-7):
            return _Reduction(None, free_idx, template, offset)
    # singleton rows: fold into bounds and drop
    for i in np.where(nnz == 1)[0]:
        j = A_free.indices[A_free.indptr[i]]
        a = A_free.data[A_free.indptr[i]]
        r = b2[i] / a
        s = problem.senses[i]
        if s == EQ:
            lb2[j] = max(lb2[j], r)
            ub2[j] = min(ub2[j], r)
        elif (s == LE and a > 0) or (s == GE and a < 0):
            ub2[j] = min(ub2[j], r)
        else:
            lb2[j] = max(lb2[j], r)
    np.ceil(lb2 - 1e-9, out=lb2, where=is_int2)
    np.floor(ub2 + 1e-9, out=ub2, where=is_int2)
    if np.any(lb2 > ub2 + 1e-9):
        return _Reduction(None, free_idx, template, offset)

    keep = nnz >= 2
    reduced = MilpProblem(
        c=problem.c[free_idx].copy(),
        A=A_free[keep],
        senses=problem.senses[keep].copy(),
        b=b2[keep].copy(),
        lb=lb2,
        ub=ub2,
        is_integer=is_int2,
        row_names=[problem.row_names[i] for i in np.where(keep)[0]] if problem.row_names else [],
        col_names=[problem.col_names[j] for j in free_idx] if problem.col_names else [],
        num_generators=problem.num_generators,
        num_periods=problem.num_periods,
    )
    return _Reduction(reduced, free_idx, template, offset)


# ---------------------------------------------------------------------------
# search state


class _Node:
    __slots__ = ("parent", "var", "lo", "hi", "depth", "bound")

    def __init__(self, parent, var, lo, hi, depth, bound):
        self.parent = parent
        self.var = var
        self.lo = lo
        self.hi = hi
        self.depth = depth
        self.bound = bound

    def apply_bounds(self, lb, ub):
        node = self
        while node is not None:
            if node.var >= 0:
                lb[node.var] = max(lb[node.var], node.lo)
                ub[node.var] = min(ub[node.var], node.hi)
            node = node.parent


@dataclass
class BnbSession:
    """Resumable search state for one MILP."""

    fingerprint: str
    reduction: Optional[_Reduction] = None
    heap: list = field(default_factory=list)
    deep_heap: list = field(default_factory=list)
    dive_stack: list = field(default_factory=list)
    alive: dict = field(default_factory=dict)
    seq: int = 0
    incumbent_x: Optional[np.ndarray] = None      # full-size solution
    incumbent_objective: float = np.inf
    cutoff_fathom_min: float = np.inf
    node_count: int = 0
    elapsed: float = 0.0
    max_node_seconds: float = 0.0
    exhausted: bool = False

    def push(self, node: _Node) -> None:
        self.seq += 1
        self.alive[self.seq] = node
        heapq.heappush(self.heap, (node.bound, -node.depth, self.seq))
        heapq.heappush(self.deep_heap, (-node.depth, self.seq))
        self.dive_stack.append(self.seq)

    def pop(self) -> Optional[_Node]:
        if self.incumbent_x is None:
            while self.dive_stack:
                seq = self.dive_stack.pop()
                node = self.alive.pop(seq, None)
                if node is not None:
                    return node
        h = self.deep_heap if len(self.alive) > NODE_CAP else self.heap
        for heap_ in (h, self.heap, self.deep_heap):
            while heap_:
                entry = heapq.heappop(heap_)
                node = self.alive.pop(entry[-1], None)
                if node is not None:
                    return node
        return None

    def open_bound(self) -> float:
        if not self.alive:
            return np.inf
        while self.heap and self.heap[0][-1] not in self.alive:
            heapq.heappop(self.heap)
        return self.heap[0][0] if self.heap else np.inf

    def dual_bound(self) -> float:
        return min(self.incumbent_objective, self.open_bound(), self.cutoff_fathom_min)


@dataclass
class MilpResult:
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    dual_bound: float
    gap: float
    node_count: int = 0


def _gap(incumbent: float, dual: float) -> float:
    if not np.isfinite(incumbent):
        return np.inf
    return (incumbent - dual) / max(1.0, abs(incumbent))


def _check_candidate(problem: MilpProblem, x: np.ndarray) -> bool:
    if np.any(x < problem.lb - 1e-7) or np.any(x > problem.ub + 1e-7):
        return False
    xi = x[problem.is_integer]
    if np.any(np.abs(xi - np.round(xi)) > INT_EPS):
        return False
    ax = problem.A @ x
    r = ax - problem.b
    scale = 1.0 + np.abs(problem.b)
    bad = ((problem.senses == LE) & (r > 1e-6 * scale)) | \
          ((problem.senses == GE) & (r < -1e-6 * scale)) | \
          ((problem.senses == EQ) & (np.abs(r) > 1e-6 * scale))
    return not bool(np.any(bad))


def _polish(problem, x, backend):
    ints = problem.is_integer
    xi = np.round(x[ints])
    lb = problem.lb.copy()
    ub = problem.ub.copy()
    lb[ints] = xi
    ub[ints] = xi
    sol = lp.solve_lp(lp.LpProblem.from_milp(problem, lb=lb, ub=ub), backend=backend)
    if sol.status != lp.OPTIMAL:
        return x, float(problem.c @ x)
    return sol.x, sol.objective


def solve_milp(
    problem: MilpProblem,
    budget: float,
    gap_target: float = 0.0,
    session: Optional[BnbSession] = None,
    lp_backend: str = "highs",
    warm_solution: Optional[np.ndarray] = None,
):
    """Run (or resume) branch and bound for up to ``budget`` seconds.

    Returns ``(MilpResult, BnbSession)``; pass the session back in to
    continue the search with no node work repeated.  ``warm_solution``
    (full-size, feasible) seeds the incumbent."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    fp = problem_fingerprint(problem)
    start = time.perf_counter()
    if session is None:
        session = BnbSession(fingerprint=fp)
        session.reduction = _reduce_problem(problem)
        if session.reduction.reduced is not None:
            session.push(_Node(None, -1, 0.0, 0.0, 0, -np.inf))
    elif session.fingerprint != fp:
        raise SessionMismatchError("session was created from a different problem")

    if warm_solution is not None and _check_candidate(problem, warm_solution):
        obj = float(problem.c @ warm_solution)
        if obj < session.incumbent_objective - 1e-12:
            session.incumbent_x = warm_solution.copy()
            session.incumbent_objective = obj

    red = session.reduction
    sub = red.reduced
    deadline = start + budget

    def finish():
        session.elapsed += time.perf_counter() - start
        dual = session.dual_bound()
        inc = session.incumbent_objective
        if not session.alive:
            session.exhausted = True
        if session.incumbent_x is not None:
            done = not session.alive or _gap(inc, dual) <= gap_target + 1e-12
            status = STATUS_OPTIMAL if done else STATUS_FEASIBLE
            return (
                MilpResult(status, session.incumbent_x, inc, dual,
                           max(_gap(inc, dual), 0.0), session.node_count),
                session,
            )
        if not session.alive:
            return MilpResult(STATUS_INFEASIBLE, None, None, np.inf, np.inf, session.node_count), session
        return MilpResult(STATUS_NO_SOLUTION, None, None, dual, np.inf, session.node_count), session

    if sub is None:
        session.alive.clear()
        return finish()
    ints = sub.is_integer

    while True:
        if session.incumbent_x is not None and _gap(
            session.incumbent_objective, session.dual_bound()
        ) <= gap_target + 1e-12:
            return finish()
        if time.perf_counter() >= deadline:
            return finish()
        node = session.pop()
        if node is None:
            return finish()

        if np.isfinite(session.incumbent_objective):
            cutoff = session.incumbent_objective - max(gap_target, 1e-9) * max(
                1.0, abs(session.incumbent_objective)
            )
        else:
            cutoff = np.inf
        if node.bound >= cutoff:
            session.cutoff_fathom_min = min(session.cutoff_fathom_min, node.bound)
            continue

        lbv = sub.lb.copy()
        ubv = sub.ub.copy()
        node.apply_bounds(lbv, ubv)
        if np.any(lbv > ubv + 1e-12):
            continue

        t0 = time.perf_counter()
        sol = lp.solve_lp(lp.LpProblem.from_milp(sub, lb=lbv, ub=ubv), backend=lp_backend)
        node_secs = time.perf_counter() - t0
        session.max_node_seconds = max(session.max_node_seconds, node_secs)
        session.node_count += 1

        if sol.status == lp.INFEASIBLE:
            continue
        if sol.status != lp.OPTIMAL:
            raise lp.LpError(f"node relaxation ended with status {sol.status}")
        obj_full = sol.objective + red.offset

        if obj_full >= cutoff:
            session.cutoff_fathom_min = min(session.cutoff_fathom_min, obj_full)
            continue

        xi = sol.x[ints]
        frac = np.abs(xi - np.round(xi))
        if not np.any(frac > INT_EPS):
            x_red = sol.x
            obj = obj_full
            if np.any(frac > 1e-9):
                x_red, obj_red = _polish(sub, x_red, lp_backend)
                obj = obj_red + red.offset
            if obj < session.incumbent_objective - 1e-12:
                session.incumbent_x = red.expand(x_red)
                session.incumbent_objective = float(obj)
            continue

        j = branching_choice(sol.x, ints)
        val = sol.x[j]
        down = _Node(node, j, sub.lb[j], float(np.floor(val)), node.depth + 1, obj_full)
        up = _Node(node, j, float(np.ceil(val)), sub.ub[j], node.depth + 1, obj_full)
        # push the promising side last so the dive pops it first
        if val - np.floor(val) >= 0.5:
            session.push(down)
            session.push(up)
        else:
            session.push(up)
            session.push(down)
