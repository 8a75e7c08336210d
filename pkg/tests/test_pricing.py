import numpy as np
import pytest

from dwuc.instgen import generate_instance
from dwuc.oracle import enumerate_pricing
from dwuc.pricing import (
    Column,
    DualVector,
    PricingError,
    column_reduced_cost,
    make_column,
    reduced_cost_coefficients,
    solve_pricing,
)
from dwuc.ucmodel import ALPHA, ETA, GAMMA, POWER, Schedule, UcInstance, check_feasibility
from conftest import make_generator

BACKENDS = ("milp", "dp")


def test_zero_duals_recover_true_costs():
    g = make_generator()
    T = 4
    coefs = reduced_cost_coefficients(g, DualVector.zeros(T))
    assert np.allclose(coefs[ALPHA], g.no_load_cost)
    assert np.allclose(coefs[GAMMA], g.startup_cost)
    assert np.allclose(coefs[ETA], 0.0)
    assert np.allclose(coefs[POWER], g.marginal_cost)


def test_marginal_dual_cancels_power_coefficient():
    g = make_generator()
    T = 3
    y = DualVector(load=np.full(T, g.marginal_cost), reserve=np.zeros(T))
    coefs = reduced_cost_coefficients(g, y)
    assert np.allclose(coefs[POWER], 0.0)
    assert np.allclose(coefs[ALPHA], g.no_load_cost)


def test_reduced_cost_substitution_identity():
    # objective of any schedule under the pricing coefficients equals its
    # true cost minus the dual-weighted activities
    rng = np.random.default_rng(5)
    g = make_generator(min_up=2, min_down=2, initial_run=2)
    T = 2
    y = DualVector(load=rng.uniform(0, 50, T), reserve=rng.uniform(0, 10, T))
    coefs = reduced_cost_coefficients(g, y)
    for on, su, sd, p in [
        (np.array([1, 1]), np.array([1, 0]), np.array([0, 0]), np.array([30.0, 60.0])),
        (np.zeros(2, dtype=int), np.zeros(2, dtype=int), np.zeros(2, dtype=int), np.zeros(2)),
    ]:
        lhs = float(coefs[ALPHA] @ on + coefs[GAMMA] @ su + coefs[ETA] @ sd + coefs[POWER] @ p)
        col = make_column(0, g, on, su, sd, p)
        rhs = column_reduced_cost(col, g, y)
        assert abs(lhs - rhs) < 1e-9


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_duals_off_unit_stays_off(backend):
    g = make_generator()
    col, r = solve_pricing(0, g, DualVector.zeros(4), 4, backend=backend)
    assert r == pytest.approx(0.0, abs=1e-9)
    assert col.on.sum() == 0
    assert col.cost == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_huge_load_duals_run_flat_out(backend):
    g = make_generator()
    T = 4
    y = DualVector(load=np.full(T, 10.0 * g.marginal_cost), reserve=np.zeros(T))
    col, r = solve_pricing(0, g, y, T, backend=backend)
    coefs = reduced_cost_coefficients(g, y)
    val, (alpha, gamma, eta, p) = enumerate_pricing(g, T, coefs[ALPHA], coefs[GAMMA], coefs[POWER])
    assert abs(r - val) <= 1e-6 * (1 + abs(val))
    # output is feasibility-maximal: the enumeration oracle agrees exactly
    assert np.allclose(col.power, p, atol=1e-6)


@pytest.mark.parametrize("backend", BACKENDS)
def test_random_duals_match_enumeration(backend):
    rng = np.random.default_rng(11)
    for trial in range(12):
        T = 4
        inst = generate_instance(3, T, seed=trial + 50)
        g = inst.generators[trial % 3]
        y = DualVector(load=rng.uniform(0, 60, T), reserve=rng.uniform(0, 8, T))
        col, r = solve_pricing(0, g, y, T, backend=backend)
        coefs = reduced_cost_coefficients(g, y)
        val, _ = enumerate_pricing(g, T, coefs[ALPHA], coefs[GAMMA], coefs[POWER])
        assert abs(r - val) <= 1e-6 * (1 + abs(val))
        assert r <= 1e-9


def test_exactness_up_to_six_periods():
    rng = np.random.default_rng(23)
    for trial in range(10):
        T = int(rng.integers(2, 7))
        inst = generate_instance(2, T, seed=trial + 400)
        g = inst.generators[trial % 2]
        y = DualVector(load=rng.uniform(0, 60, T), reserve=rng.uniform(0, 8, T))
        coefs = reduced_cost_coefficients(g, y)
        val, _ = enumerate_pricing(g, T, coefs[ALPHA], coefs[GAMMA], coefs[POWER])
        for backend in BACKENDS:
            col, r = solve_pricing(0, g, y, T, backend=backend)
            assert abs(r - val) <= 1e-6 * (1 + abs(val))


def test_reduced_cost_concave_in_duals():
    rng = np.random.default_rng(9)
    g = make_generator(min_up=2, min_down=2, initial_run=2)
    T = 4
    for _ in range(15):
        y1 = DualVector(load=rng.uniform(0, 40, T), reserve=rng.uniform(0, 5, T))
        y2 = DualVector(load=rng.uniform(0, 40, T), reserve=rng.uniform(0, 5, T))
        lam = float(rng.uniform(0, 1))
        ymid = DualVector(load=lam * y1.load + (1 - lam) * y2.load,
                          reserve=lam * y1.reserve + (1 - lam) * y2.reserve)
        _, r1 = solve_pricing(0, g, y1, T)
        _, r2 = solve_pricing(0, g, y2, T)
        _, rm = solve_pricing(0, g, ymid, T)
        assert rm >= lam * r1 + (1 - lam) * r2 - 1e-6


def test_column_activities_recomputable_bitwise():
    rng = np.random.default_rng(2)
    inst = generate_instance(3, 5, seed=77)
    for g_i, gen in enumerate(inst.generators):
        y = DualVector(load=rng.uniform(0, 50, 5), reserve=rng.uniform(0, 6, 5))
        col, _ = solve_pricing(g_i, gen, y, 5)
        assert np.array_equal(col.load_activity, col.power)
        assert np.array_equal(col.reserve_activity, gen.p_max * col.on - col.power)


def test_pricing_columns_are_feasible_schedules():
    rng = np.random.default_rng(31)
    for trial in range(10):
        T = int(rng.integers(2, 8))
        inst = generate_instance(2, T, seed=trial)
        g = inst.generators[trial % 2]
        y = DualVector(load=rng.uniform(0, 80, T), reserve=rng.uniform(0, 10, T))
        for backend in BACKENDS:
            col, _ = solve_pricing(0, g, y, T, backend=backend)
            tiny = UcInstance(id="x", generators=(g,), demand=np.zeros(T), reserve=np.zeros(T))
            sched = Schedule(on=col.on.reshape(1, -1), startup=col.startup.reshape(1, -1),
                             shutdown=col.shutdown.reshape(1, -1), power=col.power.reshape(1, -1))
            assert check_feasibility(tiny, sched).empty


def test_negative_duals_rejected():
    with pytest.raises(PricingError):
        DualVector(load=np.array([-1.0]), reserve=np.array([0.0])).validate()
