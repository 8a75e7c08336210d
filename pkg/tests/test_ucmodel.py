import numpy as np
import pytest

from dwuc import lp
from dwuc.instgen import generate_instance
from dwuc.milp import solve_milp
from dwuc.oracle import dispatch_lp
from dwuc.ucmodel import (
    FixMask,
    GeneratorParams,
    InvalidInstanceError,
    Schedule,
    UcInstance,
    build_milp,
    check_feasibility,
    evaluate_objective,
    schedule_from_solution,
)
from conftest import make_generator


def test_smallest_problem_structure():
    # one generator, one period, initially off: 4 variables and one row of
    # each family, with the t=1 ramp-up acting as a startup output bound
    g = make_generator()
    inst = UcInstance(id="t", generators=(g,), demand=np.array([30.0]), reserve=np.array([5.0]))
    prob = build_milp(inst)
    assert prob.num_cols == 4
    families = [n.split("[")[0] for n in prob.row_names]
    for fam in ("load", "reserve", "pmin", "pmax", "ramp_up", "ramp_down",
                "min_up", "min_down", "switch", "pair"):
        assert families.count(fam) == 1
    # the startup bound: p - startup_ramp * gamma <= 0 for an off unit
    i = prob.row_names.index("ramp_up[0,0]")
    row = prob.A.getrow(i).toarray().ravel()
    assert row[3] == 1.0 and row[1] == -g.startup_ramp
    assert prob.b[i] == 0.0


def test_full_mask_makes_problem_a_dispatch_lp(two_unit_instance):
    inst = two_unit_instance
    prob0 = build_milp(inst)
    res, _ = solve_milp(prob0, budget=30.0)
    sched = schedule_from_solution(inst, res.x)
    mask = FixMask.from_schedule(sched)
    prob = build_milp(inst, mask)
    ints = np.where(prob.is_integer)[0]
    assert np.all(prob.lb[ints] == prob.ub[ints])
    sol = lp.solve_lp(lp.LpProblem.from_milp(prob), backend="highs")
    obj_dispatch, _ = dispatch_lp(inst, sched.on)
    assert sol.status == lp.OPTIMAL
    assert abs(sol.objective - obj_dispatch) <= 1e-6 * (1 + abs(obj_dispatch))


def test_row_and_column_counts_by_enumeration():
    # every family enumerated over g and t, with t=1 rows present under the
    # initial-state convention: per generator 8T rows, plus 2T coupling rows
    g1 = make_generator(min_up=2, min_down=2, initial_run=2)
    g2 = make_generator(initially_on=True)
    inst = UcInstance(id="c", generators=(g1, g2),
                      demand=np.array([40.0, 50.0, 60.0]),
                      reserve=np.array([5.0, 5.0, 5.0]))
    G, T = 2, 3
    prob = build_milp(inst)
    assert prob.num_cols == 4 * G * T == 24
    expected = 0
    for fam, count in (("load", T), ("reserve", T), ("pmin", G * T), ("pmax", G * T),
                       ("ramp_up", G * T), ("ramp_down", G * T), ("min_up", G * T),
                       ("min_down", G * T), ("switch", G * T), ("pair", G * T)):
        assert sum(1 for n in prob.row_names if n.startswith(fam + "[")) == count
        expected += count
    assert prob.num_rows == expected == 2 * T + 8 * G * T


def test_mask_shape_mismatch_rejected(two_unit_instance):
    bad = FixMask.all_free(3, 4)
    with pytest.raises(ValueError):
        build_milp(two_unit_instance, bad)


def test_objective_direct_formula():
    g = make_generator(min_up=2, min_down=2, initial_run=2)
    inst = UcInstance(id="o", generators=(g,), demand=np.array([10.0, 20.0]),
                      reserve=np.array([0.0, 0.0]))
    sched = Schedule(
        on=np.array([[1, 1]], dtype=np.int8),
        startup=np.array([[1, 0]], dtype=np.int8),
        shutdown=np.array([[0, 0]], dtype=np.int8),
        power=np.array([[10.0, 20.0]]),
    )
    assert evaluate_objective(inst, sched) == 5 * 2 + 2 * 30 + 10 * 1 == 80


def test_objective_all_off_is_zero(two_unit_instance):
    T = two_unit_instance.num_periods
    z = np.zeros((2, T))
    sched = Schedule(on=z.astype(np.int8), startup=z.astype(np.int8),
                     shutdown=z.astype(np.int8), power=z)
    assert evaluate_objective(two_unit_instance, sched) == 0.0


def test_objective_matches_independent_resummation(tiny_instances):
    rng = np.random.default_rng(0)
    for inst in tiny_instances:
        G, T = inst.num_generators, inst.num_periods
        on = rng.integers(0, 2, size=(G, T)).astype(np.int8)
        su = rng.integers(0, 2, size=(G, T)).astype(np.int8)
        power = rng.uniform(0, 50, size=(G, T)) * on
        sched = Schedule(on=on, startup=su, shutdown=np.zeros((G, T), dtype=np.int8), power=power)
        # independent oracle: plain element loops
        total = 0.0
        for g in range(G):
            gen = inst.generators[g]
            for t in range(T):
                total += gen.no_load_cost * on[g, t] + gen.marginal_cost * power[g, t] \
                    + gen.startup_cost * su[g, t]
        assert abs(evaluate_objective(inst, sched) - total) < 1e-9


def test_feasibility_all_off_reports_load_shortfall():
    g = make_generator()
    inst = UcInstance(id="f", generators=(g,), demand=np.array([100.0, 100.0]),
                      reserve=np.array([0.0, 0.0]))
    z = np.zeros((1, 2))
    rep = check_feasibility(inst, Schedule(on=z.astype(np.int8), startup=z.astype(np.int8),
                                           shutdown=z.astype(np.int8), power=z))
    loads = [v for v in rep.violations if v.family == "load"]
    assert len(loads) == 2
    assert all(abs(v.magnitude - 100.0) < 1e-12 for v in loads)


def test_feasibility_solver_optimum_is_clean(tiny_instances):
    for inst in tiny_instances:
        prob = build_milp(inst)
        res, _ = solve_milp(prob, budget=30.0)
        sched = schedule_from_solution(inst, res.x)
        assert check_feasibility(inst, sched).empty


def test_feasibility_flags_single_ramp_violation():
    g = make_generator(ramp_up=30.0, min_up=2, min_down=2, initial_run=2)
    inst = UcInstance(id="r", generators=(g,), demand=np.array([20.0, 20.0]),
                      reserve=np.array([0.0, 0.0]))
    sched = Schedule(
        on=np.array([[1, 1]], dtype=np.int8),
        startup=np.array([[1, 0]], dtype=np.int8),
        shutdown=np.array([[0, 0]], dtype=np.int8),
        power=np.array([[25.0, 90.0]]),
    )
    rep = check_feasibility(inst, sched)
    ramps = [v for v in rep.violations if v.family == "ramp_up"]
    assert len(ramps) == 1
    assert ramps[0].period == 1
    assert abs(ramps[0].magnitude - ((90.0 - 25.0) - 30.0)) < 1e-9


def test_masked_solutions_stay_feasible_for_original(tiny_instances):
    # feasible set under any mask is a subset of the unmasked one
    rng = np.random.default_rng(1)
    for inst in tiny_instances[:4]:
        prob0 = build_milp(inst)
        res0, _ = solve_milp(prob0, budget=30.0)
        sched0 = schedule_from_solution(inst, res0.x)
        mask = FixMask.from_schedule(sched0)
        # free a random subset
        G, T = inst.num_generators, inst.num_periods
        drop = rng.random((G, T, 3)) < 0.5
        mask.values[drop] = -1
        prob = build_milp(inst, mask)
        res, _ = solve_milp(prob, budget=30.0)
        assert res.x is not None
        sched = schedule_from_solution(inst, res.x)
        assert check_feasibility(inst, sched).empty


def test_objective_linearity_in_dispatch(two_unit_instance):
    inst = two_unit_instance
    prob = build_milp(inst)
    res, _ = solve_milp(prob, budget=30.0)
    sched = schedule_from_solution(inst, res.x)
    p2 = sched.power * 0.9 + 0.1 * sched.power.mean()
    s2 = Schedule(on=sched.on, startup=sched.startup, shutdown=sched.shutdown, power=p2)
    lam = 0.3
    mix = Schedule(on=sched.on, startup=sched.startup, shutdown=sched.shutdown,
                   power=lam * sched.power + (1 - lam) * p2)
    a = evaluate_objective(inst, sched)
    b = evaluate_objective(inst, s2)
    m = evaluate_objective(inst, mix)
    assert abs(m - (lam * a + (1 - lam) * b)) < 1e-8


def test_lp_relaxation_fails_only_integrality(tiny_instances):
    for inst in tiny_instances[:4]:
        prob = build_milp(inst)
        sol = lp.solve_lp(lp.LpProblem.from_milp(prob), backend="highs")
        sched = Schedule(
            on=_extract(inst, sol.x, 0),
            startup=_extract(inst, sol.x, 1),
            shutdown=_extract(inst, sol.x, 2),
            power=_extract(inst, sol.x, 3),
        )
        rep = check_feasibility(inst, sched)
        for v in rep.violations:
            assert v.family.startswith("integrality")


def _extract(inst, x, kind):
    from dwuc.ucmodel import var_index
    G, T = inst.num_generators, inst.num_periods
    out = np.zeros((G, T))
    for g in range(G):
        out[g] = x[var_index(g, kind, 0, T): var_index(g, kind, 0, T) + T]
    return out


def test_generator_invariants_enforced():
    with pytest.raises(InvalidInstanceError):
        make_generator(p_min=-1.0).validate()
    with pytest.raises(InvalidInstanceError):
        make_generator(p_min=50.0, startup_ramp=40.0).validate()
    with pytest.raises(InvalidInstanceError):
        make_generator(min_up=0).validate()
    with pytest.raises(InvalidInstanceError):
        make_generator(ramp_up=0.0).validate()


def test_instance_capacity_validation():
    g = make_generator(p_max=50.0, p_min=5.0, startup_ramp=40.0, shutdown_ramp=40.0)
    inst = UcInstance(id="v", generators=(g,), demand=np.array([100.0]), reserve=np.array([0.0]))
    with pytest.raises(InvalidInstanceError):
        inst.validate()


def test_instance_json_roundtrip(tmp_path, two_unit_instance):
    p = tmp_path / "inst.json"
    two_unit_instance.save(p)
    back = UcInstance.load(p)
    back.validate()
    assert back.id == two_unit_instance.id
    assert np.allclose(back.demand, two_unit_instance.demand)
    assert back.generators == two_unit_instance.generators


def test_schedule_json_roundtrip(tmp_path, two_unit_instance):
    inst = two_unit_instance
    prob = build_milp(inst)
    res, _ = solve_milp(prob, budget=30.0)
    sched = schedule_from_solution(inst, res.x)
    p = tmp_path / "sched.json"
    sched.save(p)
    back = Schedule.load(p)
    assert np.array_equal(back.on, sched.on)
    assert np.allclose(back.power, sched.power)
