"""Brute-force reference solver for tiny instances.

Enumerates every minimum-up/down-legal commitment pattern per generator,
prices each combination with a dispatch LP and keeps the best.  Exists to
cross-check the branch-and-bound engine and the pricing subproblem; it is
deliberately written against the native simplex backend and shares no
search logic with them.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import sparse

from . import lp
from .ucmodel import GE, LE, GeneratorParams, Schedule, UcInstance


def switching_from_commitment(alpha: np.ndarray, initial_on: int):
    """Derive startup/shutdown indicators from a binary on-vector."""
    prev = np.concatenate([[initial_on], alpha[:-1]])
    gamma = np.maximum(alpha - prev, 0)
    eta = np.maximum(prev - alpha, 0)
    return gamma.astype(np.int8), eta.astype(np.int8)


def commitment_is_legal(gen: GeneratorParams, alpha: np.ndarray) -> bool:
    T = len(alpha)
    for t in range(min(gen.forced_on_until(), T)):
        if alpha[t] != 1:
            return False
    for t in range(min(gen.forced_off_until(), T)):
        if alpha[t] != 0:
            return False
    gamma, eta = switching_from_commitment(alpha, gen.initial_on)
    for t in range(T):
        lo = max(t - gen.min_up + 1, 0)
        if gamma[lo: t + 1].sum() > alpha[t]:
            return False
        lo = max(t - gen.min_down + 1, 0)
        if eta[lo: t + 1].sum() > 1 - alpha[t]:
            return False
    return True


def legal_commitments(gen: GeneratorParams, T: int):
    """All feasible on-vectors of one generator over T periods."""
    out = []
    for bits in range(1 << T):
        alpha = np.array([(bits >> t) & 1 for t in range(T)], dtype=np.int8)
        if commitment_is_legal(gen, alpha):
            out.append(alpha)
    return out


def dispatch_lp(instance: UcInstance, on: np.ndarray, backend: str = "simplex"):
    """Optimal dispatch for a fixed commitment matrix.  Returns
    (total objective incl. fixed costs, power matrix) or (None, None) if
    the dispatch is infeasible."""
    G, T = instance.num_generators, instance.num_periods
    on = np.asarray(on, dtype=np.int8)
    gammas = []
    etas = []
    fixed = 0.0
    for g, gen in enumerate(instance.generators):
        gamma, eta = switching_from_commitment(on[g], gen.initial_on)
        gammas.append(gamma)
        etas.append(eta)
        fixed += gen.no_load_cost * float(on[g].sum()) + gen.startup_cost * float(gamma.sum())

    n = G * T  # p variables only, index g*T + t
    c = np.concatenate([np.full(T, gen.marginal_cost) for gen in instance.generators])
    lb = np.concatenate([gen.p_min * on[g] for g, gen in enumerate(instance.generators)]).astype(float)
    ub = np.concatenate([gen.p_max * on[g] for g, gen in enumerate(instance.generators)]).astype(float)

    rows_i, rows_j, rows_v, senses, rhs = [], [], [], [], []

    def add(cols, coefs, sense, b):
        r = len(rhs)
        rows_i.extend([r] * len(cols))
        rows_j.extend(cols)
        rows_v.extend(coefs)
        senses.append(sense)
        rhs.append(b)

    for t in range(T):
        add([g * T + t for g in range(G)], [1.0] * G, GE, float(instance.demand[t]))
    for t in range(T):
        cap = sum(gen.p_max * on[g, t] for g, gen in enumerate(instance.generators))
        add([g * T + t for g in range(G)], [-1.0] * G, GE, float(instance.reserve[t]) - cap)
    for g, gen in enumerate(instance.generators):
        p0 = gen.initial_power
        a0 = gen.initial_on
        for t in range(T):
            if t == 0:
                add([g * T], [1.0], LE,
                    p0 + gen.ramp_up * a0 + gen.startup_ramp * gammas[g][0])
                add([g * T], [-1.0], LE,
                    -p0 + gen.ramp_down * on[g, 0] + gen.shutdown_ramp * etas[g][0])
            else:
                add([g * T + t, g * T + t - 1], [1.0, -1.0], LE,
                    gen.ramp_up * on[g, t - 1] + gen.startup_ramp * gammas[g][t])
                add([g * T + t - 1, g * T + t], [1.0, -1.0], LE,
                    gen.ramp_down * on[g, t] + gen.shutdown_ramp * etas[g][t])

    A = sparse.csr_matrix((rows_v, (rows_i, rows_j)), shape=(len(rhs), n))
    prob = lp.LpProblem(c=c, A=A, senses=np.asarray(senses, dtype=np.int8),
                        b=np.asarray(rhs, dtype=float), lb=lb, ub=ub)
    sol = lp.solve_lp(prob, backend=backend)
    if sol.status != lp.OPTIMAL:
        return None, None
    power = sol.x.reshape(G, T)
    return fixed + sol.objective, power


def enumerate_optimal(instance: UcInstance, backend: str = "simplex"):
    """Exhaustive optimum over all legal commitment combinations.

    Returns (objective, Schedule); raises if no combination is feasible.
    """
    G, T = instance.num_generators, instance.num_periods
    pattern_sets = [legal_commitments(gen, T) for gen in instance.generators]
    pmax = np.array([gen.p_max for gen in instance.generators])
    pmin = np.array([gen.p_min for gen in instance.generators])
    mr = np.array([gen.marginal_cost for gen in instance.generators])
    need = instance.demand + instance.reserve

    # per-pattern fixed costs, precomputed
    fixed_costs = []
    for g, (gen, pats) in enumerate(zip(instance.generators, pattern_sets)):
        fc = []
        for alpha in pats:
            gamma, _ = switching_from_commitment(alpha, gen.initial_on)
            fc.append(gen.no_load_cost * float(alpha.sum()) + gen.startup_cost * float(gamma.sum()))
        fixed_costs.append(fc)

    best_obj = np.inf
    best_sched = None
    for combo in itertools.product(*[range(len(ps)) for ps in pattern_sets]):
        on = np.stack([pattern_sets[g][combo[g]] for g in range(G)])
        cap = pmax @ on
        if np.any(cap < need - 1e-9):
            continue
        if np.any(pmin @ on > cap - instance.reserve + 1e-9):
            continue
        fixed = sum(fixed_costs[g][combo[g]] for g in range(G))
        # cheap dispatch lower bound: every MW costs at least the cheapest
        # committed marginal price of its period
        lb_dispatch = 0.0
        ok = True
        for t in range(T):
            comm = on[:, t] > 0
            if not np.any(comm):
                if need[t] > 1e-9:
                    ok = False
                    break
                continue
            gen_floor = max(float(instance.demand[t]), float(pmin @ on[:, t]))
            lb_dispatch += float(np.min(mr[comm])) * gen_floor
        if not ok or fixed + lb_dispatch >= best_obj - 1e-12:
            continue
        obj, power = dispatch_lp(instance, on, backend=backend)
        if obj is None or obj >= best_obj - 1e-12:
            continue
        best_obj = obj
        su = np.zeros((G, T), dtype=np.int8)
        sd = np.zeros((G, T), dtype=np.int8)
        for g, gen in enumerate(instance.generators):
            su[g], sd[g] = switching_from_commitment(on[g], gen.initial_on)
        best_sched = Schedule(on=on.copy(), startup=su, shutdown=sd, power=power)
    if best_sched is None:
        raise RuntimeError("no feasible commitment combination exists")
    return best_obj, best_sched


def enumerate_pricing(gen: GeneratorParams, T: int, cost_alpha, cost_gamma, cost_power,
                      backend: str = "simplex"):
    """Exact single-generator minimizer of an arbitrary linear objective
    over the generator's feasible set; the independent pricing oracle."""
    best_val = np.inf
    best = None
    for alpha in legal_commitments(gen, T):
        gamma, eta = switching_from_commitment(alpha, gen.initial_on)
        fixed = float(cost_alpha @ alpha) + float(cost_gamma @ gamma)
        n = T
        lb = (gen.p_min * alpha).astype(float)
        ub = (gen.p_max * alpha).astype(float)
        rows_i, rows_j, rows_v, senses, rhs = [], [], [], [], []

        def add(cols, coefs, sense, b):
            r = len(rhs)
            rows_i.extend([r] * len(cols))
            rows_j.extend(cols)
            rows_v.extend(coefs)
            senses.append(sense)
            rhs.append(b)

        p0, a0 = gen.initial_power, gen.initial_on
        for t in range(T):
            if t == 0:
                add([0], [1.0], LE, p0 + gen.ramp_up * a0 + gen.startup_ramp * gamma[0])
                add([0], [-1.0], LE, -p0 + gen.ramp_down * alpha[0] + gen.shutdown_ramp * eta[0])
            else:
                add([t, t - 1], [1.0, -1.0], LE,
                    gen.ramp_up * alpha[t - 1] + gen.startup_ramp * gamma[t])
                add([t - 1, t], [1.0, -1.0], LE,
                    gen.ramp_down * alpha[t] + gen.shutdown_ramp * eta[t])
        A = sparse.csr_matrix((rows_v, (rows_i, rows_j)), shape=(len(rhs), n))
        prob = lp.LpProblem(c=np.asarray(cost_power, dtype=float), A=A,
                            senses=np.asarray(senses, dtype=np.int8),
                            b=np.asarray(rhs, dtype=float), lb=lb, ub=ub)
        sol = lp.solve_lp(prob, backend=backend)
        if sol.status != lp.OPTIMAL:
            continue
        val = fixed + sol.objective
        if val < best_val - 1e-12 or (
            val < best_val + 1e-12 and best is not None and alpha.sum() < best[0].sum()
        ):
            best_val = val
            best = (alpha, gamma, eta, sol.x.copy())
    if best is None:
        raise RuntimeError("generator has no legal commitment")
    return best_val, best
