import numpy as np
import pytest

from dwuc.instgen import generate_instance
from dwuc.ucmodel import GeneratorParams, UcInstance


def make_generator(**kw):
    base = dict(
        no_load_cost=5.0, marginal_cost=2.0, startup_cost=10.0,
        p_max=100.0, p_min=20.0, ramp_up=50.0, ramp_down=50.0,
        startup_ramp=60.0, shutdown_ramp=60.0, min_up=1, min_down=1,
        initially_on=False, initial_run=1,
    )
    base.update(kw)
    return GeneratorParams(**base)


@pytest.fixture
def two_unit_instance():
    g1 = make_generator(min_up=2, min_down=2, initial_run=2)
    g2 = make_generator(no_load_cost=8.0, marginal_cost=5.0, startup_cost=4.0,
                        p_max=60.0, p_min=10.0, ramp_up=40.0, ramp_down=40.0,
                        startup_ramp=50.0, shutdown_ramp=50.0,
                        initially_on=True, initial_run=1)
    inst = UcInstance(id="two-unit", generators=(g1, g2),
                      demand=np.array([50.0, 90.0, 120.0, 60.0]),
                      reserve=np.array([10.0, 10.0, 10.0, 10.0]))
    inst.validate()
    return inst


@pytest.fixture
def tiny_instances():
    out = []
    for seed in range(8):
        G = 1 + seed % 3
        T = 2 + seed % 3
        out.append(generate_instance(G, T, seed=seed + 100))
    return out
