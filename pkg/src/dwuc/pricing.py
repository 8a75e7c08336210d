"""Per-generator pricing subproblem: minimize the reduced cost of one
generator's schedule given the master duals.

The baseline solver is an exact single-generator MILP through the
branch-and-bound engine.  A dynamic-programming alternative over on-run
intervals is available behind ``backend="dp"``; both must agree to 1e-6
and the tests enforce that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import milp
from .ucmodel import ALPHA, GAMMA, ETA, POWER, GeneratorParams, build_single_generator_milp


class PricingError(RuntimeError):
    pass


@dataclass(frozen=True)
class DualVector:
    """Duals of the coupling rows: load and reserve, one value per period.
    Both are duals of >= rows and must be (numerically) nonnegative."""

    load: np.ndarray
    reserve: np.ndarray

    def validate(self) -> None:
        if len(self.load) != len(self.reserve):
            raise PricingError("dual vector length mismatch")
        if np.any(self.load < -1e-9) or np.any(self.reserve < -1e-9):
            raise PricingError("negative dual for a >= row")

    @staticmethod
    def zeros(T: int) -> "DualVector":
        return DualVector(np.zeros(T), np.zeros(T))


@dataclass(frozen=True)
class Column:
    """One extreme point of a generator's feasible set with its true cost
    and its activity on the coupling rows."""

    generator: int
    on: np.ndarray
    startup: np.ndarray
    shutdown: np.ndarray
    power: np.ndarray
    cost: float
    load_activity: np.ndarray      # per-period generation
    reserve_activity: np.ndarray   # per-period committed headroom

    def key(self) -> bytes:
        return (
            self.on.astype(np.int8).tobytes()
            + self.startup.astype(np.int8).tobytes()
            + self.shutdown.astype(np.int8).tobytes()
            + np.round(self.power, 9).tobytes()
        )


def make_column(gen_index: int, gen: GeneratorParams, on, startup, shutdown, power) -> Column:
    on = np.asarray(on, dtype=np.int8)
    startup = np.asarray(startup, dtype=np.int8)
    shutdown = np.asarray(shutdown, dtype=np.int8)
    power = np.asarray(power, dtype=float)
    cost = (
        gen.no_load_cost * float(on.sum())
        + gen.marginal_cost * float(power.sum())
        + gen.startup_cost * float(startup.sum())
    )
    return Column(
        generator=gen_index,
        on=on,
        startup=startup,
        shutdown=shutdown,
        power=power,
        cost=cost,
        load_activity=power.copy(),
        reserve_activity=gen.p_max * on - power,
    )


def reduced_cost_coefficients(gen: GeneratorParams, duals: DualVector) -> dict:
    """Objective coefficients of the pricing subproblem, per variable kind."""
    duals.validate()
    T = len(duals.load)
    return {
        ALPHA: gen.no_load_cost - duals.reserve * gen.p_max,
        GAMMA: np.full(T, gen.startup_cost),
        ETA: np.zeros(T),
        POWER: gen.marginal_cost - duals.load + duals.reserve,
    }


def column_reduced_cost(col: Column, gen: GeneratorParams, duals: DualVector) -> float:
    """True cost minus dual-weighted coupling activities of one column."""
    return col.cost - float(duals.load @ col.load_activity) - float(
        duals.reserve @ col.reserve_activity
    )


def solve_pricing(
    gen_index: int,
    gen: GeneratorParams,
    duals: DualVector,
    T: int,
    backend: str = "milp",
    budget: float = 60.0,
):
    """Exact minimizer of the reduced cost over the generator's feasible
    set.  Returns (Column, r_value)."""
    if backend == "dp":
        from .pricing_dp import solve_pricing_dp

        return solve_pricing_dp(gen_index, gen, duals, T)
    if backend != "milp":
        raise ValueError(f"unknown pricing backend {backend!r}")
    coefs = reduced_cost_coefficients(gen, duals)
    prob = build_single_generator_milp(gen, T, objective=coefs)
    res, _ = milp.solve_milp(prob, budget=budget, gap_target=0.0)
    if res.status != milp.STATUS_OPTIMAL:
        raise PricingError(
            f"pricing subproblem not solved to optimality (status {res.status}); "
            "generator data may be invalid"
        )
    x = res.x
    col = make_column(
        gen_index,
        gen,
        np.round(x[0:T]),
        np.round(x[T: 2 * T]),
        np.round(x[2 * T: 3 * T]),
        x[3 * T: 4 * T],
    )
    return col, float(res.objective)
