"""Synthetic unit-commitment instances: fleets and demand/reserve profiles.

Three generator size classes (base / mid / peaker) with per-generator
parameter jitter of +-15% around class templates, and a two-harmonic daily
demand shape with multiplicative noise.  Everything is a pure function of
its spec and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ucmodel import GeneratorParams, UcInstance, InvalidInstanceError

# class templates: values are midpoints, each jittered +-15% per generator.
# Deliberately mild nonconvexities (small minimum outputs, startup costs a
# few no-load periods) keep desk-scale decomposition gaps tight; fleets of
# ten units already close to 0.1%.
_CLASS_TEMPLATES = {
    "base": dict(
        p_max=320.0, p_min_frac=0.18, marginal_cost=13.0, no_load_per_mw=1.2,
        startup_per_no_load=4.0, ramp_frac=0.45, su_ramp_frac=0.60,
        min_up=5, min_down=5, initially_on=True,
    ),
    "mid": dict(
        p_max=150.0, p_min_frac=0.15, marginal_cost=24.0, no_load_per_mw=0.9,
        startup_per_no_load=3.0, ramp_frac=0.65, su_ramp_frac=0.80,
        min_up=3, min_down=3, initially_on=False,
    ),
    "peaker": dict(
        p_max=70.0, p_min_frac=0.08, marginal_cost=48.0, no_load_per_mw=0.6,
        startup_per_no_load=1.5, ramp_frac=0.95, su_ramp_frac=1.0,
        min_up=1, min_down=1, initially_on=False,
    ),
}


@dataclass(frozen=True)
class FleetSpec:
    generator_count: int
    seed: int
    base_fraction: float = 0.35
    mid_fraction: float = 0.40
    peaker_fraction: float = 0.25
    max_updown: int | None = None  # clamp min up/down times (tiny horizons)

    def validate(self) -> None:
        if self.generator_count < 1:
            raise InvalidInstanceError("generator_count must be >= 1")
        s = self.base_fraction + self.mid_fraction + self.peaker_fraction
        if abs(s - 1.0) > 1e-9:
            raise InvalidInstanceError(f"class fractions must sum to 1 (got {s})")


@dataclass(frozen=True)
class DemandSpec:
    periods: int
    peak_fraction: float = 0.70
    amplitude: float = 0.25
    noise: float = 0.03
    reserve_fraction: float = 0.10
    seed: int = 0

    def validate(self) -> None:
        if self.periods < 1:
            raise InvalidInstanceError("periods must be >= 1")
        if not (0.0 < self.peak_fraction < 1.0):
            raise InvalidInstanceError("peak fraction must be in (0,1)")
        if self.reserve_fraction < 0:
            raise InvalidInstanceError("reserve fraction must be >= 0")


def _class_counts(spec: FleetSpec):
    fracs = np.array([spec.base_fraction, spec.mid_fraction, spec.peaker_fraction])
    raw = fracs * spec.generator_count
    counts = np.floor(raw).astype(int)
    # largest remainder
    while counts.sum() < spec.generator_count:
        counts[int(np.argmax(raw - counts))] += 1
    return {"base": counts[0], "mid": counts[1], "peaker": counts[2]}


def generate_fleet(spec: FleetSpec):
    """Deterministic fleet from the spec; every generator unique."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    counts = _class_counts(spec)
    fleet = []
    for cls in ("base", "mid", "peaker"):
        tpl = _CLASS_TEMPLATES[cls]
        for _ in range(counts[cls]):
            j = lambda v: float(v * rng.uniform(0.85, 1.15))
            p_max = j(tpl["p_max"])
            p_min = j(tpl["p_min_frac"]) * p_max
            ramp = max(j(tpl["ramp_frac"]) * p_max, 1e-3)
            su_ramp = max(j(tpl["su_ramp_frac"]) * p_max, p_min * 1.02)
            min_up = max(1, int(round(j(tpl["min_up"]))))
            min_down = max(1, int(round(j(tpl["min_down"]))))
            if spec.max_updown is not None:
                min_up = min(min_up, spec.max_updown)
                min_down = min(min_down, spec.max_updown)
            no_load = j(tpl["no_load_per_mw"]) * p_max
            gen = GeneratorParams(
                no_load_cost=no_load,
                marginal_cost=j(tpl["marginal_cost"]),
                startup_cost=j(tpl["startup_per_no_load"]) * no_load,
                p_max=p_max,
                p_min=p_min,
                ramp_up=ramp,
                ramp_down=max(j(tpl["ramp_frac"]) * p_max, 1e-3),
                startup_ramp=su_ramp,
                shutdown_ramp=max(j(tpl["su_ramp_frac"]) * p_max, p_min * 1.02),
                min_up=min_up,
                min_down=min_down,
                initially_on=tpl["initially_on"],
                initial_run=min_up if tpl["initially_on"] else min_down,
            )
            gen.validate()
            fleet.append(gen)
    seen = {tuple(sorted(g.to_dict().items())) for g in fleet}
    if len(seen) != len(fleet):
        raise InvalidInstanceError("duplicate generators in the sampled fleet")
    return fleet


def sample_demand(capacity: float, spec: DemandSpec):
    """Demand and reserve profiles with a guaranteed 5% capacity headroom:
    demand_t + reserve_t <= 0.95 * capacity for all t."""
    spec.validate()
    if capacity <= 0:
        raise InvalidInstanceError("capacity must be positive")
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.periods, dtype=float)
    cyc = 2.0 * np.pi * (t - 6.0) / 24.0
    shape = 0.55 + spec.amplitude * (0.8 * np.sin(cyc) + 0.2 * np.sin(2.0 * cyc + 1.0))
    peak = spec.peak_fraction * capacity
    demand = peak * shape / float(np.max(shape))
    if spec.noise > 0:
        factors = np.clip(rng.normal(1.0, spec.noise, size=spec.periods), 0.5, 1.5)
        demand = demand * factors
    cap_per_t = 0.95 * capacity / (1.0 + spec.reserve_fraction)
    demand = np.clip(demand, 0.0, cap_per_t)
    reserve = spec.reserve_fraction * demand
    return demand, reserve


def generate_instance(
    generator_count: int,
    periods: int,
    seed: int,
    instance_id: str | None = None,
    fleet_seed: int | None = None,
    peak_fraction: float = 0.70,
    noise: float = 0.03,
    reserve_fraction: float = 0.10,
) -> UcInstance:
    """Convenience wrapper: one fleet plus one sampled profile.

    The fleet seed defaults to the profile seed so distinct seeds give
    fully distinct instances; pass ``fleet_seed`` to hold the fleet fixed
    while varying demand (the repeated-solve setting of the ML heuristic).
    """
    fs = fleet_seed if fleet_seed is not None else seed
    fleet = generate_fleet(FleetSpec(generator_count, fs, max_updown=max(1, min(8, periods))))
    capacity = float(sum(g.p_max for g in fleet))
    demand, reserve = sample_demand(
        capacity,
        DemandSpec(periods, peak_fraction=peak_fraction, noise=noise,
                   reserve_fraction=reserve_fraction, seed=seed),
    )
    # cap demand by what the fleet can ramp to when everything switches on
    # as early as allowed, so commit-everything is always dispatchable
    reach = np.zeros(periods)
    for g in fleet:
        t = np.arange(periods, dtype=float)
        if g.initially_on:
            r = np.minimum(g.p_max, g.initial_power + g.ramp_up * (t + 1.0))
        else:
            start = float(g.forced_off_until())
            r = np.minimum(g.p_max, g.startup_ramp + g.ramp_up * (t - start))
            r[t < start] = 0.0
        reach += np.maximum(r, 0.0)
    cap_t = 0.92 * reach / (1.0 + reserve_fraction)
    demand = np.minimum(demand, cap_t)
    reserve = reserve_fraction * demand
    inst = UcInstance(
        id=instance_id or f"uc-g{generator_count}-t{periods}-s{seed}",
        generators=tuple(fleet),
        demand=demand,
        reserve=reserve,
    )
    inst.validate()
    return inst
