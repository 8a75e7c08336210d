import numpy as np
import pytest

from dwuc.heuristics import (
    CombinationStore,
    MlFixStore,
    StagnationState,
    blend_columns,
    column_combination,
    feasibility_recovery,
    heuristic_budget,
    mask_from_blend,
    mask_from_predictions,
    ml_partial_fix,
    relax_around_fractional,
    rmp_partial_fix,
    IMPROVED,
    INFEASIBLE_SUB,
    NO_IMPROVEMENT,
)
from dwuc.instgen import generate_instance
from dwuc.milp import solve_milp
from dwuc.oracle import dispatch_lp, enumerate_optimal
from dwuc.pricing import DualVector, make_column, solve_pricing
from dwuc.ucmodel import (
    FREE,
    Schedule,
    UcInstance,
    build_milp,
    check_feasibility,
    evaluate_objective,
    schedule_from_solution,
)
from conftest import make_generator


def test_budget_formula_paper_value():
    assert heuristic_budget(10, 4.0) == pytest.approx(12.0)


def test_budget_formula_zero_pricing():
    assert heuristic_budget(1, 0.0) == 0.0


def test_budget_formula_direct():
    assert heuristic_budget(20, 2.5) == pytest.approx(10.0)


def test_budget_formula_preconditions():
    with pytest.raises(ValueError):
        heuristic_budget(0, 1.0)
    with pytest.raises(ValueError):
        heuristic_budget(3, -1.0)


# -- masks from predictions --------------------------------------------------


def test_prediction_mask_at_090():
    preds = np.array([[0.99, 0.85, 0.50, 0.05]])
    mask = mask_from_predictions(preds, 0.9)
    alpha = mask.values[0, :, 0]
    assert alpha[0] == 1
    assert alpha[1] == FREE and alpha[2] == FREE
    assert alpha[3] == 0
    assert np.all(mask.values[:, :, 1:] == FREE)


def test_prediction_mask_at_080():
    preds = np.array([[0.99, 0.85, 0.50, 0.05]])
    mask = mask_from_predictions(preds, 0.8)
    alpha = mask.values[0, :, 0]
    assert alpha[0] == 1 and alpha[1] == 1
    assert alpha[2] == FREE
    assert alpha[3] == 0


def test_prediction_mask_at_one_fixes_nothing():
    rng = np.random.default_rng(0)
    preds = rng.random((3, 8))
    mask = mask_from_predictions(preds, 1.0)
    assert mask.count_fixed() == 0


def test_threshold_monotonicity_random_vectors():
    rng = np.random.default_rng(1)
    thresholds = (0.8, 0.9, 0.95, 0.99, 1.0)
    for _ in range(100):
        preds = rng.random((2, 6))
        fixed = [set(zip(*np.where(mask_from_predictions(preds, a).values >= 0)))
                 for a in thresholds]
        for small, large in zip(fixed, fixed[1:]):
            assert large <= small


# -- RMP partial fixing -------------------------------------------------------


def _pool_from_duals(inst, duals):
    pools = []
    for g, gen in enumerate(inst.generators):
        col, _ = solve_pricing(g, gen, duals, inst.num_periods)
        pools.append([col])
    return pools


def test_degenerate_weights_fix_everything(two_unit_instance):
    inst = two_unit_instance
    T = inst.num_periods
    duals = DualVector(load=np.full(T, 30.0), reserve=np.zeros(T))
    pools = _pool_from_duals(inst, duals)
    weights = [np.array([1.0]) for _ in pools]
    blend = blend_columns(pools, weights, T)
    mask = mask_from_blend(blend)
    assert mask.count_free() == 0
    outcome, stag = rmp_partial_fix(inst, pools, weights, StagnationState(), budget=20.0,
                                    gap_target=0.0, incumbent_objective=np.inf)
    assert outcome.schedule is not None
    on = np.stack([pools[g][0].on for g in range(2)])
    assert np.array_equal(outcome.schedule.on, on)
    obj_dispatch, _ = dispatch_lp(inst, on)
    assert outcome.objective == pytest.approx(obj_dispatch, rel=1e-9)


def test_half_weights_fix_only_common_coordinates():
    g = make_generator(min_up=1, min_down=1)
    colA = make_column(0, g, np.array([1, 0]), np.array([1, 0]), np.array([0, 1]),
                       np.array([30.0, 0.0]))
    colB = make_column(0, g, np.array([1, 1]), np.array([1, 0]), np.array([0, 0]),
                       np.array([30.0, 30.0]))
    blend = blend_columns([[colA, colB]], [np.array([0.5, 0.5])], 2)
    assert np.allclose(blend[0, :, 0], [1.0, 0.5])
    mask = mask_from_blend(blend)
    assert mask.values[0, 0, 0] == 1      # alpha t=0 fixed on
    assert mask.values[0, 1, 0] == FREE   # alpha t=1 fractional
    assert mask.values[0, 0, 1] == 1      # startup t=0 common to both
    assert mask.values[0, 1, 2] == FREE   # shutdown t=1 differs


def test_stagnation_relaxation_widens_window():
    blend = np.zeros((1, 6, 3))
    blend[0, :, 0] = [1, 1, 0.5, 1, 1, 1]
    mask = mask_from_blend(blend)
    relaxed = relax_around_fractional(mask, blend, radius=1)
    assert np.all(relaxed.values[0, 1:4, :] == FREE)
    assert np.all(relaxed.values[0, 0, :] >= 0)
    assert np.all(relaxed.values[0, 4:, :] >= 0)
    wider = relax_around_fractional(mask, blend, radius=2)
    assert np.all(wider.values[0, 0:5, :] == FREE)


def test_stagnation_counter_and_reset(two_unit_instance):
    inst = two_unit_instance
    T = inst.num_periods
    duals = DualVector(load=np.full(T, 30.0), reserve=np.zeros(T))
    pools = _pool_from_duals(inst, duals)
    weights = [np.array([1.0]) for _ in pools]
    out1, st1 = rmp_partial_fix(inst, pools, weights, StagnationState(), 20.0, 0.0, np.inf)
    assert out1.status == IMPROVED and st1.counter == 0
    # same incumbent again: no improvement, counter grows
    out2, st2 = rmp_partial_fix(inst, pools, weights, st1, 20.0, 0.0, out1.objective)
    assert out2.status == NO_IMPROVEMENT and st2.counter == 1


# -- ML partial fixing --------------------------------------------------------


def test_ml_fix_solves_and_advances_cursor(two_unit_instance):
    inst = two_unit_instance
    res, _ = solve_milp(build_milp(inst), budget=30.0)
    sched = schedule_from_solution(inst, res.x)
    preds = np.clip(sched.on.astype(float), 0.02, 0.98)
    preds = 0.02 + 0.96 * sched.on.astype(float)  # confident, correct predictions
    store = MlFixStore(thresholds=(0.9, 1.0))
    out = ml_partial_fix(inst, preds, store, budget=30.0, gap_target=0.0,
                         incumbent_objective=np.inf)
    assert out.schedule is not None
    assert store.cursor == 1  # solved to optimality, cursor advanced
    assert out.objective <= res.objective + 1e-6


def test_ml_fix_infeasible_threshold_advances():
    g = make_generator()
    inst = UcInstance(id="mlinf", generators=(g,), demand=np.array([50.0, 50.0]),
                      reserve=np.zeros(2))
    preds = np.full((1, 2), 0.01)  # confidently (and wrongly) off
    store = MlFixStore(thresholds=(0.8, 1.0))
    out = ml_partial_fix(inst, preds, store, budget=20.0, gap_target=0.0,
                         incumbent_objective=np.inf)
    assert out.status == INFEASIBLE_SUB
    assert store.cursor == 1
    out2 = ml_partial_fix(inst, preds, store, budget=20.0, gap_target=0.0,
                          incumbent_objective=np.inf)
    assert out2.schedule is not None  # threshold 1.0 fixes nothing


def test_ml_fix_exhausted_returns_no_solution(two_unit_instance):
    store = MlFixStore(thresholds=(1.0,))
    store.cursor = 1
    out = ml_partial_fix(two_unit_instance, np.full((2, 4), 0.5), store, 5.0, 0.0, np.inf)
    assert out.schedule is None


def test_ml_fix_session_resumes_across_calls():
    inst = generate_instance(6, 12, seed=14)
    preds = np.full((6, 12), 0.5)  # nothing fixed at 0.8: hardest subproblem
    store = MlFixStore(thresholds=(0.8,))
    out = ml_partial_fix(inst, preds, store, budget=0.05, gap_target=0.0,
                         incumbent_objective=np.inf)
    sess1 = store.sessions[0]
    n1 = sess1.node_count
    ml_partial_fix(inst, preds, store, budget=0.05, gap_target=0.0,
                   incumbent_objective=np.inf)
    assert store.sessions[0] is sess1
    assert sess1.node_count >= n1


# -- feasibility recovery -----------------------------------------------------


def test_recovery_keeps_covering_columns(two_unit_instance):
    inst = two_unit_instance
    T = inst.num_periods
    duals = DualVector(load=np.full(T, 50.0), reserve=np.full(T, 5.0))
    cols = [solve_pricing(g, gen, duals, T)[0] for g, gen in enumerate(inst.generators)]
    need = inst.demand + inst.reserve
    cap = np.stack([inst.generators[g].p_max * cols[g].on for g in range(2)]).sum(axis=0)
    assert np.all(cap >= need)  # premise: columns already cover everything
    out = feasibility_recovery(inst, cols, budget=20.0, incumbent_objective=np.inf)
    assert out.schedule is not None
    assert np.array_equal(out.schedule.on, np.stack([c.on for c in cols]))


def test_recovery_commits_cheapest_when_all_off():
    gens = (
        make_generator(no_load_cost=2.0, marginal_cost=3.0, p_max=120.0, p_min=10.0,
                       ramp_up=120.0, ramp_down=120.0, startup_ramp=120.0,
                       shutdown_ramp=120.0),
        make_generator(no_load_cost=50.0, marginal_cost=40.0, p_max=120.0, p_min=10.0,
                       ramp_up=120.0, ramp_down=120.0, startup_ramp=120.0,
                       shutdown_ramp=120.0),
    )
    inst = UcInstance(id="rec", generators=gens, demand=np.array([80.0, 90.0, 70.0]),
                      reserve=np.array([8.0, 9.0, 7.0]))
    cols = [make_column(g, gen, np.zeros(3, dtype=np.int8), np.zeros(3, dtype=np.int8),
                        np.zeros(3, dtype=np.int8), np.zeros(3))
            for g, gen in enumerate(gens)]
    out = feasibility_recovery(inst, cols, budget=20.0, incumbent_objective=np.inf)
    assert out.schedule is not None
    assert check_feasibility(inst, out.schedule).empty
    # cheap unit alone covers demand+reserve: the expensive one stays off
    assert np.all(out.schedule.on[0] == 1)
    assert np.all(out.schedule.on[1] == 0)


def test_recovery_patches_single_interior_shortage():
    cheap_idle = make_generator(no_load_cost=5.0, marginal_cost=4.0, p_max=100.0,
                                p_min=5.0, min_up=2, min_down=1,
                                ramp_up=100.0, ramp_down=100.0,
                                startup_ramp=100.0, shutdown_ramp=100.0)
    dear_idle = make_generator(no_load_cost=80.0, marginal_cost=60.0, p_max=100.0,
                               p_min=5.0, min_up=2, min_down=1,
                               ramp_up=100.0, ramp_down=100.0,
                               startup_ramp=100.0, shutdown_ramp=100.0)
    running = make_generator(no_load_cost=1.0, marginal_cost=2.0, p_max=100.0, p_min=5.0,
                             initially_on=True, initial_run=1,
                             ramp_up=100.0, ramp_down=100.0,
                             startup_ramp=100.0, shutdown_ramp=100.0)
    inst = UcInstance(id="patch", generators=(running, cheap_idle, dear_idle),
                      demand=np.array([60.0, 60.0, 180.0, 60.0]),
                      reserve=np.zeros(4))
    T = 4
    on_run = np.ones(T, dtype=np.int8)
    cols = [
        make_column(0, running, on_run, np.zeros(T, dtype=np.int8),
                    np.zeros(T, dtype=np.int8), np.full(T, 60.0)),
        make_column(1, cheap_idle, np.zeros(T, dtype=np.int8), np.zeros(T, dtype=np.int8),
                    np.zeros(T, dtype=np.int8), np.zeros(T)),
        make_column(2, dear_idle, np.zeros(T, dtype=np.int8), np.zeros(T, dtype=np.int8),
                    np.zeros(T, dtype=np.int8), np.zeros(T)),
    ]
    out = feasibility_recovery(inst, cols, budget=20.0, incumbent_objective=np.inf)
    assert out.schedule is not None
    assert check_feasibility(inst, out.schedule).empty
    # the cheaper idle unit covers the shortage over a min-up-legal window
    assert out.schedule.on[1, 2] == 1
    assert out.schedule.on[1].sum() == cheap_idle.min_up
    assert np.all(out.schedule.on[2] == 0)


# -- column combination -------------------------------------------------------


def test_combination_single_choice(two_unit_instance):
    inst = two_unit_instance
    T = inst.num_periods
    duals = DualVector(load=np.full(T, 50.0), reserve=np.full(T, 5.0))
    pools = _pool_from_duals(inst, duals)
    store = CombinationStore()
    out = column_combination(inst, pools, store, budget=20.0, gap_target=0.0,
                             incumbent_objective=np.inf)
    if out.schedule is not None:
        on = np.stack([pools[g][0].on for g in range(2)])
        obj, _ = dispatch_lp(inst, on)
        assert out.objective == pytest.approx(obj, rel=1e-9)


def test_combination_with_optimal_columns_reaches_optimum():
    inst = generate_instance(3, 4, seed=19)
    z_star, sched = enumerate_optimal(inst)
    pools = []
    T = inst.num_periods
    duals = DualVector.zeros(T)
    for g, gen in enumerate(inst.generators):
        off_col, _ = solve_pricing(g, gen, duals, T)
        opt_col = make_column(g, gen, sched.on[g], sched.startup[g], sched.shutdown[g],
                              sched.power[g])
        pools.append([off_col, opt_col])
    out = column_combination(inst, pools, CombinationStore(), budget=30.0,
                             gap_target=0.0, incumbent_objective=np.inf)
    assert out.schedule is not None
    assert out.objective == pytest.approx(z_star, rel=1e-6)


def test_combination_all_off_pools_infeasible():
    g = make_generator()
    inst = UcInstance(id="coff", generators=(g,), demand=np.array([50.0]),
                      reserve=np.zeros(1))
    pools = [[make_column(0, g, np.zeros(1, dtype=np.int8), np.zeros(1, dtype=np.int8),
                          np.zeros(1, dtype=np.int8), np.zeros(1))]]
    out = column_combination(inst, pools, CombinationStore(), budget=10.0,
                             gap_target=0.0, incumbent_objective=np.inf)
    assert out.status == INFEASIBLE_SUB


def test_outcome_objective_matches_schedule(two_unit_instance):
    inst = two_unit_instance
    T = inst.num_periods
    duals = DualVector(load=np.full(T, 40.0), reserve=np.zeros(T))
    pools = _pool_from_duals(inst, duals)
    weights = [np.array([1.0]) for _ in pools]
    out, _ = rmp_partial_fix(inst, pools, weights, StagnationState(), 20.0, 0.0, np.inf)
    if out.schedule is not None:
        assert out.objective == pytest.approx(evaluate_objective(inst, out.schedule), abs=1e-6)
        assert check_feasibility(inst, out.schedule).empty
