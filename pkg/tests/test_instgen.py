import numpy as np
import pytest

from dwuc.instgen import DemandSpec, FleetSpec, generate_fleet, generate_instance, sample_demand
from dwuc.oracle import switching_from_commitment
from dwuc.ucmodel import InvalidInstanceError, Schedule, UcInstance, check_feasibility
from dwuc.heuristics import _dispatch_elastic


def test_fleet_deterministic_under_seed():
    a = generate_fleet(FleetSpec(7, seed=7))
    b = generate_fleet(FleetSpec(7, seed=7))
    assert [g.to_dict() for g in a] == [g.to_dict() for g in b]


def test_fleet_invariants_and_uniqueness():
    fleet = generate_fleet(FleetSpec(50, seed=1))
    assert len(fleet) == 50
    for g in fleet:
        g.validate()
    assert sum(g.p_max for g in fleet) > 0
    dicts = [tuple(sorted(g.to_dict().items())) for g in fleet]
    assert len(set(dicts)) == 50


def test_fleet_seeds_differ():
    a = generate_fleet(FleetSpec(10, seed=1))
    b = generate_fleet(FleetSpec(10, seed=2))
    assert [g.to_dict() for g in a] != [g.to_dict() for g in b]


def test_fleet_fraction_validation():
    with pytest.raises(InvalidInstanceError):
        generate_fleet(FleetSpec(5, seed=0, base_fraction=0.5, mid_fraction=0.2,
                                 peaker_fraction=0.2))


def test_demand_noiseless_reproducible():
    spec = DemandSpec(periods=24, noise=0.0, seed=3)
    d1, r1 = sample_demand(1000.0, spec)
    d2, r2 = sample_demand(1000.0, spec)
    assert np.array_equal(d1, d2)
    assert np.array_equal(r1, r2)
    # pure baseline-plus-harmonics shape: peak hits the configured fraction
    assert abs(np.max(d1) - 0.7 * 1000.0) < 1e-9


def test_reserve_proportionality():
    spec = DemandSpec(periods=8, noise=0.0, reserve_fraction=0.1, seed=0)
    d, r = sample_demand(500.0, spec)
    assert np.allclose(r, 0.1 * d)


def test_headroom_monte_carlo():
    capacity = 800.0
    for seed in range(1000):
        spec = DemandSpec(periods=12, noise=0.08, seed=seed)
        d, r = sample_demand(capacity, spec)
        assert np.max(d + r) <= 0.95 * capacity + 1e-9
        assert np.min(d) >= 0.0


def test_generated_instances_validate():
    for seed in range(20):
        inst = generate_instance(1 + seed % 5, 2 + seed % 8, seed=seed)
        inst.validate()


def test_commit_everything_is_dispatchable():
    # default-spec feasibility property: switching everything on (as early
    # as allowed) admits a feasible dispatch
    for seed in range(12):
        inst = generate_instance(2 + seed % 6, 6 + seed % 18, seed=seed * 13)
        G, T = inst.num_generators, inst.num_periods
        on = np.ones((G, T), dtype=np.int8)
        for g, gen in enumerate(inst.generators):
            on[g, : gen.forced_off_until()] = 0
        res = _dispatch_elastic(inst, on, "highs")
        assert res is not None
        assert float(np.max(res["deficit"], initial=0.0)) <= 1e-7
        sched = Schedule(on=on, startup=res["gammas"].astype(np.int8),
                         shutdown=res["etas"].astype(np.int8), power=res["power"])
        assert check_feasibility(inst, sched).empty
