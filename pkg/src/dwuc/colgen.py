"""Column generation: dual warm start from the LP relaxation, stabilized
restricted master maintenance, the dual-function lower bound, and the loop
that drives a primal heuristic every iteration.

Stabilization is a box trust region around a center: in the primal it
appears as penalty columns on the coupling rows, so the master stays an LP
and its duals can never leave the box.  The surplus-direction columns also
act as the feasibility artificials (their cost is capped by the big
penalty M), so the master is feasible for any pool contents.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from . import lp
from .heuristics import HeuristicOutcome, heuristic_budget
from .pricing import Column, DualVector, solve_pricing
from .ucmodel import EQ, GE, Schedule, UcInstance, build_milp, check_feasibility

WEIGHT_EPS = 1e-6


class ColgenError(RuntimeError):
    pass


@dataclass
class IterationRecord:
    iteration: int
    bound_value: float   # dual-function value at this iteration's duals
    best_lower: float
    best_upper: float
    wall_seconds: float
    pricing_seconds: float
    heuristic_seconds: float

    @property
    def gap(self) -> float:
        if not np.isfinite(self.best_upper):
            return np.inf
        return (self.best_upper - self.best_lower) / max(abs(self.best_upper), 1e-12)


@dataclass
class BoundsLog:
    records: list = field(default_factory=list)

    def add(self, rec: IterationRecord) -> None:
        if self.records:
            prev = self.records[-1]
            assert rec.best_lower >= prev.best_lower - 1e-9
            assert rec.best_upper <= prev.best_upper + 1e-9
        assert rec.best_lower <= rec.best_upper + 1e-6 * (1.0 + abs(rec.best_upper))
        self.records.append(rec)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iteration", "l", "u", "gap", "pricing_seconds", "heuristic_seconds"])
        for r in self.records:
            w.writerow([r.iteration, f"{r.best_lower:.6f}", f"{r.best_upper:.6f}",
                        f"{r.gap:.8f}", f"{r.pricing_seconds:.4f}", f"{r.heuristic_seconds:.4f}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class RmpSolveInfo:
    weights: list                 # per generator, aligned with the pool
    duals: DualVector
    convexity_duals: np.ndarray
    objective: float
    artificial_activity: float
    multiweight_generators: int   # generators with >= 2 weights above 1e-6
    stabilized: bool


@dataclass
class RmpState:
    """Column pools and stabilization state of the restricted master."""

    instance: UcInstance
    pools: list = field(default_factory=list)
    keys: list = field(default_factory=list)
    order: list = field(default_factory=list)   # (generator, pool position) in insertion order
    center: Optional[DualVector] = None
    radius: float = 1.0
    penalty: float = 0.0
    last_basis: Optional[lp.SimplexBasis] = None
    last_ncols: int = 0

    def __post_init__(self):
        G = self.instance.num_generators
        if not self.pools:
            self.pools = [[] for _ in range(G)]
            self.keys = [set() for _ in range(G)]
        if not self.penalty:
            mr = max(g.marginal_cost for g in self.instance.generators)
            self.penalty = 10.0 * float(np.sum(self.instance.demand)) * mr + float(
                sum(g.startup_cost for g in self.instance.generators)
            )

    def add_column(self, col: Column) -> bool:
        """Add a column unless an identical schedule is already pooled."""
        k = col.key()
        if k in self.keys[col.generator]:
            return False
        self.keys[col.generator].add(k)
        self.pools[col.generator].append(col)
        self.order.append((col.generator, len(self.pools[col.generator]) - 1))
        return True

    def latest_columns(self):
        return [pool[-1] for pool in self.pools]


def init_duals_from_lpr(instance: UcInstance, lp_backend: str = "highs") -> DualVector:
    """Duals of the coupling rows of the unmasked problem's LP relaxation."""
    prob = build_milp(instance)
    sol = lp.solve_lp(lp.LpProblem.from_milp(prob), backend=lp_backend)
    if sol.status != lp.OPTIMAL:
        raise ColgenError(f"LP relaxation is {sol.status}; bad instance")
    T = instance.num_periods
    load = np.maximum(sol.duals[:T], 0.0)
    reserve = np.maximum(sol.duals[T: 2 * T], 0.0)
    return DualVector(load=load, reserve=reserve)


def lower_bound(instance: UcInstance, duals: DualVector, r_values) -> float:
    """Dual function value: rhs-weighted duals plus the summed pricing
    optima.  Valid for any nonnegative duals."""
    a_y = float(instance.demand @ duals.load) + float(instance.reserve @ duals.reserve)
    return a_y + float(np.sum(r_values))


def solve_rmp(state: RmpState, stabilized: bool = True) -> RmpSolveInfo:
    """Solve the restricted master at a vertex.

    Layout: [surplus 2T | shedding 2T | pooled weights in insertion order
    | convexity artificials G].  Surplus columns double as feasibility
    artificials; their cost is min(M, center + radius) when stabilized and
    M otherwise.  Shedding columns implement the lower half of the dual
    trust region and are inert (zero cost) when unstabilized.
    """
    inst = state.instance
    G, T = inst.num_generators, inst.num_periods
    m = 2 * T + G
    ncols = 4 * T + len(state.order) + G

    center = np.concatenate([state.center.load, state.center.reserve]) if state.center is not None else np.zeros(2 * T)
    if stabilized:
        up_cost = np.minimum(state.penalty, center + state.radius)
        low_cost = -np.maximum(0.0, center - state.radius)
    else:
        up_cost = np.full(2 * T, state.penalty)
        low_cost = np.zeros(2 * T)

    c = np.zeros(ncols)
    c[: 2 * T] = up_cost
    c[2 * T: 4 * T] = low_cost

    rows_i = list(range(2 * T)) + list(range(2 * T))
    cols_j = list(range(2 * T)) + list(range(2 * T, 4 * T))
    vals = [1.0] * (2 * T) + [-1.0] * (2 * T)

    j = 4 * T
    for (g, pos) in state.order:
        col = state.pools[g][pos]
        c[j] = col.cost
        act_load = col.load_activity
        act_res = col.reserve_activity
        nz = np.where(np.abs(act_load) > 0)[0]
        rows_i.extend(nz.tolist())
        cols_j.extend([j] * len(nz))
        vals.extend(act_load[nz].tolist())
        nz = np.where(np.abs(act_res) > 0)[0]
        rows_i.extend((T + nz).tolist())
        cols_j.extend([j] * len(nz))
        vals.extend(act_res[nz].tolist())
        rows_i.append(2 * T + g)
        cols_j.append(j)
        vals.append(1.0)
        j += 1
    for g in range(G):
        c[j] = state.penalty
        rows_i.append(2 * T + g)
        cols_j.append(j)
        vals.append(1.0)
        j += 1

    A = sparse.csr_matrix((vals, (rows_i, cols_j)), shape=(m, ncols))
    senses = np.concatenate([np.full(2 * T, GE, dtype=np.int8), np.full(G, EQ, dtype=np.int8)])
    b = np.concatenate([inst.demand, inst.reserve, np.ones(G)])
    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    prob = lp.LpProblem(c=c, A=A, senses=senses, b=b, lb=lb, ub=ub)

    warm = None
    if state.last_basis is not None and ncols >= state.last_ncols:
        extra = ncols - state.last_ncols
        if extra == 0:
            warm = state.last_basis
        else:
            # convexity artificials live at the tail; pooled columns were
            # appended just before them
            cs = state.last_basis.col_status
            head = cs[: state.last_ncols - G]
            tail = cs[state.last_ncols - G:]
            warm = lp.SimplexBasis(
                col_status=np.concatenate([head, np.zeros(extra, dtype=np.int8), tail]),
                row_status=state.last_basis.row_status,
                basic_kind=state.last_basis.basic_kind,
                basic_index=np.where(
                    state.last_basis.basic_kind == 0,
                    np.where(state.last_basis.basic_index >= state.last_ncols - G,
                             state.last_basis.basic_index + extra,
                             state.last_basis.basic_index),
                    state.last_basis.basic_index,
                ),
            )
    sol = lp.solve_lp(prob, warm_basis=warm, backend="simplex")
    if sol.status != lp.OPTIMAL:
        raise ColgenError(f"restricted master solve failed: {sol.status}")
    state.last_basis = sol.basis
    state.last_ncols = ncols

    weights = [np.zeros(len(p)) for p in state.pools]
    for idx, (g, pos) in enumerate(state.order):
        weights[g][pos] = sol.x[4 * T + idx]
    multi = sum(1 for w in weights if int(np.sum(w > WEIGHT_EPS)) >= 2)
    art = float(np.sum(sol.x[: 2 * T])) + float(np.sum(sol.x[4 * T + len(state.order):]))
    duals = DualVector(
        load=np.maximum(sol.duals[:T], 0.0),
        reserve=np.maximum(sol.duals[T: 2 * T], 0.0),
    )
    return RmpSolveInfo(
        weights=weights,
        duals=duals,
        convexity_duals=sol.duals[2 * T:].copy(),
        objective=sol.objective,
        artificial_activity=art,
        multiweight_generators=multi,
        stabilized=stabilized,
    )


@dataclass
class IterationDiagnostics:
    iteration: int
    pricing_seconds: float
    budget_seconds: float
    heuristic_seconds: float
    heuristic_slack_seconds: float
    heuristic_status: Optional[str]
    schedule_feasible: Optional[bool]
    schedule_objective: Optional[float]
    lower_at_call: float
    rmp_samples: list   # (artificials_inactive, multiweight_generators)
    mp_optimal: bool


@dataclass
class ColgenResult:
    schedule: Optional[Schedule]
    lower: float
    upper: float
    log: BoundsLog
    iterations: int
    seconds: float
    gap: float
    reached_tolerance: bool
    diagnostics: list = field(default_factory=list)
    state: Optional[RmpState] = None


def run(
    instance: UcInstance,
    tolerance: float,
    driver=None,
    deadline_seconds: float = 120.0,
    pricing_backend: str = "milp",
    lp_backend: str = "highs",
    max_iterations: int = 10_000,
    collect_diagnostics: bool = False,
) -> ColgenResult:
    """Column generation per the standard procedure: price, bound, update
    and solve the stabilized master, run the primal heuristic under its
    per-iteration budget, stop on gap or deadline."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    t_start = time.perf_counter()
    hard_deadline = t_start + deadline_seconds
    G, T = instance.num_generators, instance.num_periods

    best_lower = -np.inf
    best_upper = np.inf
    best_schedule: Optional[Schedule] = None
    log = BoundsLog()
    diagnostics = []

    duals = init_duals_from_lpr(instance, lp_backend=lp_backend)
    state = RmpState(instance=instance)
    state.center = duals
    state.radius = max(1.0, 0.2 * float(np.max(np.concatenate([duals.load, duals.reserve]))))
    best_lower_duals = duals
    prev_convexity = None

    def gap_of(u, l):
        if not np.isfinite(u):
            return np.inf
        return (u - l) / max(abs(u), 1e-12)

    reached = False
    k = 0
    while k < max_iterations:
        k += 1
        t_iter = time.perf_counter()
        if t_iter >= hard_deadline:
            k -= 1
            break

        # pricing at the current duals
        t_p = time.perf_counter()
        columns = []
        r_values = np.zeros(G)
        for g, gen in enumerate(instance.generators):
            col, r = solve_pricing(g, gen, duals, T, backend=pricing_backend)
            columns.append(col)
            r_values[g] = r
        pricing_seconds = time.perf_counter() - t_p

        bound_k = lower_bound(instance, duals, r_values)
        if bound_k > best_lower:
            best_lower = bound_k
            best_lower_duals = duals

        mp_optimal = False
        if prev_convexity is not None:
            mp_optimal = bool(np.all(r_values >= prev_convexity - 1e-7))

        for col in columns:
            state.add_column(col)

        rmp = solve_rmp(state, stabilized=True)
        rmp_samples = [(rmp.artificial_activity <= 1e-6, rmp.multiweight_generators)]
        prev_convexity = rmp.convexity_duals.copy()

        # trust region update
        y_now = np.concatenate([rmp.duals.load, rmp.duals.reserve])
        y_center = np.concatenate([state.center.load, state.center.reserve])
        at_edge = np.abs(y_now - y_center) >= state.radius * (1.0 - 1e-6)
        if float(np.mean(at_edge)) >= 0.25:
            state.radius *= 2.0
        else:
            state.radius = max(state.radius / 2.0, 1e-3)
        state.center = best_lower_duals
        duals = rmp.duals

        # primal heuristic under the shared budget policy
        budget = heuristic_budget(k, pricing_seconds)
        budget = min(budget, max(hard_deadline - time.perf_counter(), 0.0))
        outcome: Optional[HeuristicOutcome] = None
        if driver is not None and budget > 1e-4:
            ctx = HeuristicContext(
                instance=instance,
                iteration=k,
                gap_target=tolerance,
                incumbent_objective=best_upper,
                pools=state.pools,
                latest_columns=state.latest_columns(),
                lower=best_lower,
                lp_backend=lp_backend,
                solve_rmp_unstabilized=lambda: solve_rmp(state, stabilized=False),
                rmp_samples=rmp_samples,
            )
            outcome = driver.propose(ctx, budget)
            if outcome.schedule is not None:
                report = check_feasibility(instance, outcome.schedule)
                if not report.empty:
                    raise ColgenError(
                        f"heuristic {driver.name} returned an infeasible schedule: {report.summary()}"
                    )
                if outcome.objective < best_upper:
                    best_upper = outcome.objective
                    best_schedule = outcome.schedule

        heur_secs = outcome.seconds if outcome is not None else 0.0
        log.add(IterationRecord(
            iteration=k,
            bound_value=bound_k,
            best_lower=best_lower,
            best_upper=best_upper,
            wall_seconds=time.perf_counter() - t_start,
            pricing_seconds=pricing_seconds,
            heuristic_seconds=heur_secs,
        ))
        if collect_diagnostics:
            sched_feas = None
            if outcome is not None and outcome.schedule is not None:
                sched_feas = True  # validated above
            diagnostics.append(IterationDiagnostics(
                iteration=k,
                pricing_seconds=pricing_seconds,
                budget_seconds=budget,
                heuristic_seconds=heur_secs,
                heuristic_slack_seconds=outcome.node_slack_seconds if outcome else 0.0,
                heuristic_status=outcome.status if outcome else None,
                schedule_feasible=sched_feas,
                schedule_objective=outcome.objective if outcome else None,
                lower_at_call=best_lower,
                rmp_samples=rmp_samples,
                mp_optimal=mp_optimal,
            ))

        if gap_of(best_upper, best_lower) <= tolerance:
            reached = True
            break
        if outcome is not None and outcome.proves_global and mp_optimal:
            break
        if time.perf_counter() >= hard_deadline:
            break

    return ColgenResult(
        schedule=best_schedule,
        lower=best_lower,
        upper=best_upper,
        log=log,
        iterations=k,
        seconds=time.perf_counter() - t_start,
        gap=gap_of(best_upper, best_lower),
        reached_tolerance=reached,
        diagnostics=diagnostics,
        state=state,
    )


@dataclass
class HeuristicContext:
    """Everything a heuristic driver may consume in one iteration."""

    instance: UcInstance
    iteration: int
    gap_target: float
    incumbent_objective: float
    pools: list
    latest_columns: list
    lower: float
    lp_backend: str
    solve_rmp_unstabilized: Callable[[], RmpSolveInfo]
    rmp_samples: list
