"""Primal heuristics: feasibility recovery, column combination, RMP
partial-fixing, and the two learned partial-fixing variants, plus the
shared per-iteration time budget policy.

Each heuristic consumes column-generation state (pools, weights, the
latest pricing columns) and/or model predictions, and returns a
HeuristicOutcome; schedules inside outcomes are always fully feasible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from . import lp, milp
from .ucmodel import (
    ALPHA,
    GAMMA,
    ETA,
    FREE,
    EQ,
    GE,
    LE,
    MilpProblem,
    FixMask,
    Schedule,
    UcInstance,
    build_milp,
    evaluate_objective,
    schedule_from_solution,
    solution_from_schedule,
)
from .oracle import switching_from_commitment

DEFAULT_THRESHOLDS = (0.8, 0.9, 0.95, 0.99, 1.0)
INT_EPS = 1e-6

IMPROVED = "improved"
NO_IMPROVEMENT = "feasible-no-improvement"
INFEASIBLE_SUB = "infeasible-subproblem"
NO_SOLUTION = "budget-exhausted-no-solution"


def heuristic_budget(k: int, pricing_seconds: float) -> float:
    """Per-iteration heuristic time limit: pricing time times (k/10 + 2)."""
    if k < 1:
        raise ValueError("iteration counter starts at 1")
    if pricing_seconds < 0:
        raise ValueError("pricing time must be nonnegative")
    return pricing_seconds * (k / 10.0 + 2.0)


@dataclass
class HeuristicOutcome:
    status: str
    schedule: Optional[Schedule]
    objective: Optional[float]
    seconds: float
    node_slack_seconds: float = 0.0
    proves_global: bool = False


@dataclass
class StagnationState:
    counter: int = 0
    radius: int = 1


def _is_improvement(objective: float, incumbent: float) -> bool:
    if not np.isfinite(incumbent):
        return objective < incumbent
    return objective < incumbent - 1e-9 * max(1.0, abs(incumbent))


def _outcome_from_milp(instance, result, incumbent, t0, session=None, proves_global=False):
    slack = session.max_node_seconds if session is not None else 0.0
    secs = time.perf_counter() - t0
    if result.x is None:
        if result.status == milp.STATUS_INFEASIBLE:
            return HeuristicOutcome(INFEASIBLE_SUB, None, None, secs, slack)
        return HeuristicOutcome(NO_SOLUTION, None, None, secs, slack)
    sched = schedule_from_solution(instance, result.x)
    obj = evaluate_objective(instance, sched)
    status = IMPROVED if _is_improvement(obj, incumbent) else NO_IMPROVEMENT
    return HeuristicOutcome(
        status, sched, obj, secs, slack,
        proves_global=proves_global and result.status == milp.STATUS_OPTIMAL,
    )


# ---------------------------------------------------------------------------
# RMP partial-fixing (decomposition-based)


def blend_columns(pools, weights, num_periods):
    """Weighted average of each generator's pool columns: the fractional
    schedule whose integral coordinates get fixed."""
    G = len(pools)
    T = num_periods
    blend = np.zeros((G, T, 3))
    for g, (cols, w) in enumerate(zip(pools, weights)):
        for col, wi in zip(cols, w):
            if wi <= 0.0:
                continue
            blend[g, :, 0] += wi * col.on
            blend[g, :, 1] += wi * col.startup
            blend[g, :, 2] += wi * col.shutdown
    return blend


def mask_from_blend(blend, int_eps: float = INT_EPS) -> FixMask:
    G, T, _ = blend.shape
    vals = np.full((G, T, 3), FREE, dtype=np.int8)
    rounded = np.round(blend)
    integral = np.abs(blend - rounded) <= int_eps
    vals[integral] = rounded[integral].astype(np.int8)
    return FixMask(vals)


def relax_around_fractional(mask: FixMask, blend, radius: int, int_eps: float = INT_EPS):
    """Free every binary within `radius` periods of a fractional
    coordinate of the same generator."""
    G, T, _ = blend.shape
    frac_any = np.any(np.abs(blend - np.round(blend)) > int_eps, axis=2)  # (G, T)
    out = mask.values.copy()
    for g in range(G):
        ts = np.where(frac_any[g])[0]
        for t in ts:
            lo, hi = max(0, t - radius), min(T, t + radius + 1)
            out[g, lo:hi, :] = FREE
    return FixMask(out)


def rmp_partial_fix(
    instance: UcInstance,
    pools,
    weights,
    stagnation: StagnationState,
    budget: float,
    gap_target: float,
    incumbent_objective: float,
    lp_backend: str = "highs",
):
    """Fix the binaries that are integral in the RMP's weighted-average
    solution and let an MILP solve the rest.  Returns the outcome and the
    updated stagnation state."""
    t0 = time.perf_counter()
    T = instance.num_periods
    blend = blend_columns(pools, weights, T)
    mask = mask_from_blend(blend)
    radius = stagnation.radius
    if stagnation.counter >= 3:
        mask = relax_around_fractional(mask, blend, radius)
        radius += 1

    # cheap incumbent seed: round the blend outright and dispatch; often
    # feasible, and it lets the MILP prune from the first node
    warm = None
    rounded_on = np.round(blend[:, :, 0]).astype(np.int8)
    res = _dispatch_elastic(instance, rounded_on, lp_backend)
    if res is not None and float(np.max(res["deficit"], initial=0.0)) <= 1e-7:
        warm_sched = Schedule(on=rounded_on, startup=res["gammas"].astype(np.int8),
                              shutdown=res["etas"].astype(np.int8), power=res["power"])
        warm = solution_from_schedule(instance, warm_sched)

    problem = build_milp(instance, mask)
    remaining = budget - (time.perf_counter() - t0)
    if remaining <= 0:
        return (
            HeuristicOutcome(NO_SOLUTION, None, None, time.perf_counter() - t0),
            StagnationState(stagnation.counter + 1, radius),
        )
    result, session = milp.solve_milp(
        problem, budget=remaining, gap_target=gap_target, lp_backend=lp_backend,
        warm_solution=warm,
    )
    outcome = _outcome_from_milp(
        instance, result, incumbent_objective, t0, session,
        proves_global=mask.count_fixed() == 0,
    )
    if outcome.status == IMPROVED:
        new_state = StagnationState(0, 1)
    else:
        new_state = StagnationState(stagnation.counter + 1, radius)
    return outcome, new_state


# ---------------------------------------------------------------------------
# learned partial-fixing (neural network / nearest neighbour predictions)


def mask_from_predictions(predictions: np.ndarray, threshold: float) -> FixMask:
    """Fix commitment variables whose predicted probability is above the
    threshold (to 1) or below 1 - threshold (to 0); switching variables
    stay free."""
    if not (0.5 < threshold <= 1.0):
        raise ValueError("threshold must lie in (0.5, 1]")
    G, T = predictions.shape
    vals = np.full((G, T, 3), FREE, dtype=np.int8)
    vals[:, :, 0][predictions > threshold] = 1
    vals[:, :, 0][predictions < 1.0 - threshold] = 0
    return FixMask(vals)


@dataclass
class MlFixStore:
    """Cursor over thresholds plus one resumable session per threshold."""

    thresholds: tuple = DEFAULT_THRESHOLDS
    cursor: int = 0
    problems: dict = field(default_factory=dict)
    sessions: dict = field(default_factory=dict)

    def exhausted(self) -> bool:
        return self.cursor >= len(self.thresholds)


def ml_partial_fix(
    instance: UcInstance,
    predictions: np.ndarray,
    store: MlFixStore,
    budget: float,
    gap_target: float,
    incumbent_objective: float,
    lp_backend: str = "highs",
):
    """Work on the current threshold's partially-fixed MILP, resuming its
    session; advance to the next (larger) threshold once the subproblem is
    proven infeasible or solved to the gap target."""
    t0 = time.perf_counter()
    if np.any(predictions < 0) or np.any(predictions > 1):
        raise ValueError("predictions must lie in [0, 1]")
    if store.exhausted():
        return HeuristicOutcome(NO_SOLUTION, None, None, time.perf_counter() - t0)

    idx = store.cursor
    alpha = store.thresholds[idx]
    if idx not in store.problems:
        store.problems[idx] = build_milp(instance, mask_from_predictions(predictions, alpha))
    problem = store.problems[idx]
    result, session = milp.solve_milp(
        problem,
        budget=max(budget - (time.perf_counter() - t0), 1e-3),
        gap_target=gap_target,
        session=store.sessions.get(idx),
        lp_backend=lp_backend,
    )
    store.sessions[idx] = session
    if result.status in (milp.STATUS_OPTIMAL, milp.STATUS_INFEASIBLE):
        store.cursor += 1
    return _outcome_from_milp(
        instance, result, incumbent_objective, t0, session,
        proves_global=alpha >= 1.0 and gap_target <= 1e-9,
    )


# ---------------------------------------------------------------------------
# feasibility recovery local search


def _dispatch_elastic(instance: UcInstance, on, lp_backend: str):
    """Dispatch LP for a fixed commitment with penalized load/reserve
    deficit variables; the deficits localize infeasible periods."""
    G, T = instance.num_generators, instance.num_periods
    gammas, etas = [], []
    fixed = 0.0
    for g, gen in enumerate(instance.generators):
        gamma, eta = switching_from_commitment(on[g], gen.initial_on)
        gammas.append(gamma)
        etas.append(eta)
        fixed += gen.no_load_cost * float(on[g].sum()) + gen.startup_cost * float(gamma.sum())

    penalty = 10.0 * float(np.sum(instance.demand)) * max(
        g.marginal_cost for g in instance.generators
    ) + sum(g.startup_cost for g in instance.generators) + 1e3
    n = G * T + 2 * T  # power vars then load/reserve deficits
    c = np.concatenate(
        [
            np.concatenate([np.full(T, gen.marginal_cost) for gen in instance.generators]),
            np.full(2 * T, penalty),
        ]
    )
    lb = np.zeros(n)
    ub = np.concatenate(
        [
            np.concatenate(
                [gen.p_max * on[g] for g, gen in enumerate(instance.generators)]
            ).astype(float),
            np.full(2 * T, np.inf),
        ]
    )
    lb[: G * T] = np.concatenate(
        [gen.p_min * on[g] for g, gen in enumerate(instance.generators)]
    ).astype(float)

    rows_i, rows_j, rows_v, senses, rhs = [], [], [], [], []

    def add(cols, coefs, sense, b):
        r = len(rhs)
        rows_i.extend([r] * len(cols))
        rows_j.extend(cols)
        rows_v.extend(coefs)
        senses.append(sense)
        rhs.append(b)

    for t in range(T):
        add([g * T + t for g in range(G)] + [G * T + t], [1.0] * G + [1.0], GE,
            float(instance.demand[t]))
    for t in range(T):
        cap = sum(gen.p_max * on[g, t] for g, gen in enumerate(instance.generators))
        add([g * T + t for g in range(G)] + [G * T + T + t], [-1.0] * G + [1.0], GE,
            float(instance.reserve[t]) - cap)
    for g, gen in enumerate(instance.generators):
        p0, a0 = gen.initial_power, gen.initial_on
        for t in range(T):
            if t == 0:
                add([g * T], [1.0], LE, p0 + gen.ramp_up * a0 + gen.startup_ramp * gammas[g][0])
                add([g * T], [-1.0], LE, -p0 + gen.ramp_down * on[g, 0] + gen.shutdown_ramp * etas[g][0])
            else:
                add([g * T + t, g * T + t - 1], [1.0, -1.0], LE,
                    gen.ramp_up * on[g, t - 1] + gen.startup_ramp * gammas[g][t])
                add([g * T + t - 1, g * T + t], [1.0, -1.0], LE,
                    gen.ramp_down * on[g, t] + gen.shutdown_ramp * etas[g][t])

    A = sparse.csr_matrix((rows_v, (rows_i, rows_j)), shape=(len(rhs), n))
    prob = lp.LpProblem(c=c, A=A, senses=np.asarray(senses, dtype=np.int8),
                        b=np.asarray(rhs, dtype=float), lb=lb, ub=ub)
    sol = lp.solve_lp(prob, backend=lp_backend)
    if sol.status != lp.OPTIMAL:
        return None
    power = sol.x[: G * T].reshape(G, T)
    deficit = sol.x[G * T:].reshape(2, T).sum(axis=0)
    dispatch_cost = float(
        sum(gen.marginal_cost * power[g].sum() for g, gen in enumerate(instance.generators))
    )
    return dict(power=power, deficit=deficit, objective=fixed + dispatch_cost,
                gammas=np.stack(gammas), etas=np.stack(etas))


def _full_load_cost_order(instance: UcInstance):
    rho = np.array(
        [(g.no_load_cost + g.marginal_cost * g.p_max) / g.p_max for g in instance.generators]
    )
    return np.argsort(rho, kind="stable")


def _legalize(instance: UcInstance, on):
    """Repair a commitment matrix: honour forced initial windows, fill
    off-gaps shorter than min_down, extend on-runs shorter than min_up."""
    G, T = on.shape
    out = on.copy()
    for g, gen in enumerate(instance.generators):
        for t in range(min(gen.forced_on_until(), T)):
            out[g, t] = 1
        for t in range(min(gen.forced_off_until(), T)):
            out[g, t] = 0
        # fill short interior gaps (an initially-on unit's leading gap counts
        # only if it shuts down in-horizon)
        prev_on = gen.initial_on
        t = 0
        while t < T:
            if out[g, t] == 0 and prev_on == 1:
                start = t
                while t < T and out[g, t] == 0:
                    t += 1
                if t < T and (t - start) < gen.min_down:
                    out[g, start:t] = 1
            else:
                prev_on = out[g, t]
                t += 1
        # extend short on-runs forward (runs touching the horizon end may stay short)
        t = 0
        prev = gen.initial_on
        while t < T:
            if out[g, t] == 1 and prev == 0:
                start = t
                while t < T and out[g, t] == 1:
                    t += 1
                run = t - start
                if run < gen.min_up and t < T:
                    need = min(gen.min_up - run, T - t)
                    out[g, t: t + need] = 1
                    t += need
            else:
                prev = out[g, t]
                t += 1
    return out


def feasibility_recovery(
    instance: UcInstance,
    latest_columns,
    budget: float,
    incumbent_objective: float,
    lp_backend: str = "highs",
):
    """Assemble a commitment from the latest pricing columns, commit extra
    units (cheapest full-load cost first) wherever capacity misses demand
    plus reserve, then dispatch; widen around deficit periods on failure."""
    t0 = time.perf_counter()
    deadline = t0 + budget
    G, T = instance.num_generators, instance.num_periods
    on = np.stack([col.on for col in latest_columns]).astype(np.int8)
    order = _full_load_cost_order(instance)
    pmax = np.array([g.p_max for g in instance.generators])
    need = instance.demand + instance.reserve

    def cover_shortages(on_work, targets):
        changed = False
        for t in targets:
            while pmax @ on_work[:, t] < need[t] - 1e-9:
                cands = [g for g in order if on_work[g, t] == 0
                         and t >= instance.generators[g].forced_off_until()]
                if not cands:
                    break
                g = cands[0]
                gen = instance.generators[g]
                hi = min(T, t + gen.min_up)
                on_work[g, t:hi] = 1
                changed = True
        return changed

    on = _legalize(instance, on)
    cover_shortages(on, range(T))
    on = _legalize(instance, on)

    best = None
    slack = 0.0
    for attempt in range(4):
        t_lp = time.perf_counter()
        res = _dispatch_elastic(instance, on, lp_backend)
        slack = max(slack, time.perf_counter() - t_lp)
        if res is None:
            break
        bad = np.where(res["deficit"] > 1e-7)[0]
        if len(bad) == 0:
            sched = Schedule(
                on=on.copy(),
                startup=res["gammas"].astype(np.int8),
                shutdown=res["etas"].astype(np.int8),
                power=res["power"],
            )
            obj = evaluate_objective(instance, sched)
            best = (sched, obj)
            break
        if time.perf_counter() > deadline:
            break
        # widen commitment around the deficit periods and retry
        widen = attempt + 1
        for t in bad:
            lo, hi = max(0, t - widen), min(T, t + widen + 1)
            extra = [g for g in order if np.any(on[g, lo:hi] == 0)]
            for g in extra[: widen]:
                on[g, lo:hi] = np.maximum(
                    on[g, lo:hi],
                    (np.arange(lo, hi) >= instance.generators[g].forced_off_until()).astype(np.int8),
                )
        on = _legalize(instance, on)
        cover_shortages(on, range(T))
        on = _legalize(instance, on)

    secs = time.perf_counter() - t0
    if best is None:
        return HeuristicOutcome(NO_SOLUTION, None, None, secs, slack)
    sched, obj = best
    status = IMPROVED if _is_improvement(obj, incumbent_objective) else NO_IMPROVEMENT
    return HeuristicOutcome(status, sched, obj, secs, slack)


# ---------------------------------------------------------------------------
# column combination (restricted master IP)


@dataclass
class CombinationStore:
    pool_sizes: Optional[tuple] = None
    problem: Optional[MilpProblem] = None
    session: Optional[milp.BnbSession] = None
    columns: Optional[list] = None
    w_off: Optional[list] = None


def _build_combination_milp(instance: UcInstance, pools):
    """Restricted-master IP: binary selectors w per pooled column, one
    chosen per generator, dispatch free within the instance rows."""
    G, T = instance.num_generators, instance.num_periods
    sizes = [len(p) for p in pools]
    n_w = sum(sizes)
    n = G * T + n_w
    w_off = [G * T + int(np.sum(sizes[:g], dtype=int)) for g in range(G)]

    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.ones(n)
    is_int = np.zeros(n, dtype=bool)
    is_int[G * T:] = True
    col_names = [f"power[{g},{t}]" for g in range(G) for t in range(T)]
    for g, pool in enumerate(pools):
        gen = instance.generators[g]
        ub[g * T: (g + 1) * T] = gen.p_max
        for i, col in enumerate(pool):
            c[w_off[g] + i] = (
                gen.no_load_cost * float(col.on.sum())
                + gen.startup_cost * float(col.startup.sum())
            )
            col_names.append(f"w[{g},{i}]")
    c[: G * T] = np.concatenate(
        [np.full(T, gen.marginal_cost) for gen in instance.generators]
    )

    rows_i, rows_j, rows_v, senses, rhs, row_names = [], [], [], [], [], []

    def add(cols, coefs, sense, b, name):
        r = len(rhs)
        rows_i.extend([r] * len(cols))
        rows_j.extend(cols)
        rows_v.extend(coefs)
        senses.append(sense)
        rhs.append(b)
        row_names.append(name)

    for t in range(T):
        add([g * T + t for g in range(G)], [1.0] * G, GE, float(instance.demand[t]), f"load[{t}]")
    for t in range(T):
        cols = [g * T + t for g in range(G)]
        coefs = [-1.0] * G
        for g, pool in enumerate(pools):
            gen = instance.generators[g]
            for i, col in enumerate(pool):
                if col.on[t]:
                    cols.append(w_off[g] + i)
                    coefs.append(gen.p_max * float(col.on[t]))
        add(cols, coefs, GE, float(instance.reserve[t]), f"reserve[{t}]")

    for g, pool in enumerate(pools):
        gen = instance.generators[g]
        p0, a0 = gen.initial_power, gen.initial_on
        for t in range(T):
            # p_min * sum w alpha <= p <= p_max * sum w alpha
            cols = [g * T + t]
            coefs = [1.0]
            for i, col in enumerate(pool):
                if col.on[t]:
                    cols.append(w_off[g] + i)
                    coefs.append(-gen.p_min * float(col.on[t]))
            add(cols, coefs, GE, 0.0, f"pmin[{g},{t}]")
            cols = [g * T + t]
            coefs = [1.0]
            for i, col in enumerate(pool):
                if col.on[t]:
                    cols.append(w_off[g] + i)
                    coefs.append(-gen.p_max * float(col.on[t]))
            add(cols, coefs, LE, 0.0, f"pmax[{g},{t}]")
        for t in range(T):
            cols = [g * T + t]
            coefs = [1.0]
            rhs_const = 0.0
            if t == 0:
                rhs_const = p0 + gen.ramp_up * a0
            else:
                cols.append(g * T + t - 1)
                coefs.append(-1.0)
            for i, col in enumerate(pool):
                contrib = gen.startup_ramp * float(col.startup[t])
                if t > 0:
                    contrib += gen.ramp_up * float(col.on[t - 1])
                if contrib:
                    cols.append(w_off[g] + i)
                    coefs.append(-contrib)
            add(cols, coefs, LE, rhs_const, f"ramp_up[{g},{t}]")
            cols = [g * T + t]
            coefs = [-1.0]
            rhs_const2 = 0.0
            if t == 0:
                rhs_const2 = -p0
            else:
                cols.append(g * T + t - 1)
                coefs.append(1.0)
            for i, col in enumerate(pool):
                contrib = gen.ramp_down * float(col.on[t]) + gen.shutdown_ramp * float(col.shutdown[t])
                if contrib:
                    cols.append(w_off[g] + i)
                    coefs.append(-contrib)
            add(cols, coefs, LE, rhs_const2, f"ramp_down[{g},{t}]")
        add([w_off[g] + i for i in range(len(pool))], [1.0] * len(pool), EQ, 1.0, f"conv[{g}]")

    A = sparse.csr_matrix((rows_v, (rows_i, rows_j)), shape=(len(rhs), n))
    prob = MilpProblem(
        c=c, A=A, senses=np.asarray(senses, dtype=np.int8), b=np.asarray(rhs, dtype=float),
        lb=lb, ub=ub, is_integer=is_int, row_names=row_names, col_names=col_names,
        num_generators=G, num_periods=T,
    )
    prob.validate()
    return prob, w_off


def column_combination(
    instance: UcInstance,
    pools,
    store: CombinationStore,
    budget: float,
    gap_target: float,
    incumbent_objective: float,
    lp_backend: str = "highs",
):
    """Choose one pooled column per generator (restricted master IP) and
    re-optimize the dispatch; resumes its session while pools are
    unchanged."""
    t0 = time.perf_counter()
    if any(len(p) == 0 for p in pools):
        raise ValueError("every pool must be nonempty")
    sizes = tuple(len(p) for p in pools)
    if store.pool_sizes != sizes:
        store.pool_sizes = sizes
        store.problem, store.w_off = _build_combination_milp(instance, pools)
        store.session = None
        store.columns = [list(p) for p in pools]

    result, session = milp.solve_milp(
        store.problem,
        budget=max(budget - (time.perf_counter() - t0), 1e-3),
        gap_target=gap_target,
        session=store.session,
        lp_backend=lp_backend,
    )
    store.session = session
    secs = time.perf_counter() - t0
    if result.x is None:
        if result.status == milp.STATUS_INFEASIBLE:
            return HeuristicOutcome(INFEASIBLE_SUB, None, None, secs, session.max_node_seconds)
        return HeuristicOutcome(NO_SOLUTION, None, None, secs, session.max_node_seconds)

    G, T = instance.num_generators, instance.num_periods
    on = np.zeros((G, T), dtype=np.int8)
    su = np.zeros((G, T), dtype=np.int8)
    sd = np.zeros((G, T), dtype=np.int8)
    for g, pool in enumerate(store.columns):
        w = result.x[store.w_off[g]: store.w_off[g] + len(pool)]
        pick = int(np.argmax(w))
        on[g] = pool[pick].on
        su[g] = pool[pick].startup
        sd[g] = pool[pick].shutdown
    power = result.x[: G * T].reshape(G, T)
    sched = Schedule(on=on, startup=su, shutdown=sd, power=power)
    obj = evaluate_objective(instance, sched)
    status = IMPROVED if _is_improvement(obj, incumbent_objective) else NO_IMPROVEMENT
    return HeuristicOutcome(status, sched, obj, secs, session.max_node_seconds)


# ---------------------------------------------------------------------------
# drivers: persistent per-run state + the colgen-facing interface


class RecoveryDriver:
    name = "recovery"

    def propose(self, ctx, budget):
        return feasibility_recovery(
            ctx.instance, ctx.latest_columns, budget, ctx.incumbent_objective,
            lp_backend=ctx.lp_backend,
        )


class CombinationDriver:
    name = "combination"

    def __init__(self):
        self.store = CombinationStore()

    def propose(self, ctx, budget):
        return column_combination(
            ctx.instance, ctx.pools, self.store, budget, ctx.gap_target,
            ctx.incumbent_objective, lp_backend=ctx.lp_backend,
        )


class RmpFixDriver:
    name = "rmp-fix"

    def __init__(self):
        self.stagnation = StagnationState()

    def propose(self, ctx, budget):
        t0 = time.perf_counter()
        info = ctx.solve_rmp_unstabilized()
        ctx.rmp_samples.append((info.artificial_activity <= 1e-6, info.multiweight_generators))
        if info.artificial_activity > 1e-6:
            return HeuristicOutcome(INFEASIBLE_SUB, None, None, time.perf_counter() - t0)
        outcome, self.stagnation = rmp_partial_fix(
            ctx.instance, ctx.pools, info.weights, self.stagnation,
            budget - (time.perf_counter() - t0), ctx.gap_target,
            ctx.incumbent_objective, lp_backend=ctx.lp_backend,
        )
        return HeuristicOutcome(
            outcome.status, outcome.schedule, outcome.objective,
            time.perf_counter() - t0, outcome.node_slack_seconds, outcome.proves_global,
        )


class MlFixDriver:
    """Shared by the neural-network and nearest-neighbour variants; the
    difference is only where the predictions came from."""

    def __init__(self, predictions, thresholds=DEFAULT_THRESHOLDS, name="nn-fix"):
        self.name = name
        self.predictions = np.asarray(predictions, dtype=float)
        self.store = MlFixStore(thresholds=tuple(thresholds))

    def propose(self, ctx, budget):
        return ml_partial_fix(
            ctx.instance, self.predictions, self.store, budget, ctx.gap_target,
            ctx.incumbent_objective, lp_backend=ctx.lp_backend,
        )


def make_driver(name, predictions=None, thresholds=DEFAULT_THRESHOLDS):
    if name == "recovery":
        return RecoveryDriver()
    if name == "combination":
        return CombinationDriver()
    if name == "rmp-fix":
        return RmpFixDriver()
    if name in ("nn-fix", "knn-fix"):
        if predictions is None:
            raise ValueError(f"{name} needs per-variable predictions")
        return MlFixDriver(predictions, thresholds, name=name)
    raise ValueError(f"unknown heuristic {name!r}")
