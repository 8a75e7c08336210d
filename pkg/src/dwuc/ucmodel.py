"""Unit commitment data model: instances, schedules, the MILP in matrix form,
objective evaluation and feasibility checking.

Conventions used throughout the package:

* periods are 0-indexed internally (t = 0..T-1),
* the load balance row is a ``>=`` constraint (overgeneration is shed at
  zero cost),
* the period before the horizon is implied by the generator's initial
  state: ``alpha[g,-1] = 1`` and ``p[g,-1] = p_min`` for an initially-on
  unit, both zero otherwise,
* an initial on-run shorter than the minimum uptime forces the unit to
  stay on for the remainder of the window (symmetrically for off-runs).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

# variable kinds, in column-layout order
ALPHA, GAMMA, ETA, POWER = 0, 1, 2, 3
KIND_NAMES = ("alpha", "gamma", "eta", "power")
BINARY_KINDS = (ALPHA, GAMMA, ETA)

# senses of constraint rows
LE, EQ, GE = -1, 0, 1

FEAS_EPS = 1e-6

# mask codes
FREE = -1


class InvalidInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    """Technical and cost data of one generator."""

    no_load_cost: float
    marginal_cost: float
    startup_cost: float
    p_max: float
    p_min: float
    ramp_up: float
    ramp_down: float
    startup_ramp: float
    shutdown_ramp: float
    min_up: int
    min_down: int
    initially_on: bool
    initial_run: int  # length of the initial on-run (on units) or off-run (off units)

    def validate(self) -> None:
        if not (0.0 <= self.p_min <= self.p_max):
            raise InvalidInstanceError(f"need 0 <= p_min <= p_max, got {self.p_min}, {self.p_max}")
        for name in ("no_load_cost", "marginal_cost", "startup_cost"):
            if getattr(self, name) < 0:
                raise InvalidInstanceError(f"{name} must be >= 0")
        for name in ("ramp_up", "ramp_down", "startup_ramp", "shutdown_ramp"):
            if getattr(self, name) <= 0:
                raise InvalidInstanceError(f"{name} must be > 0")
        if self.startup_ramp < self.p_min or self.shutdown_ramp < self.p_min:
            raise InvalidInstanceError("startup/shutdown ramp below p_min makes the unit unable to switch")
        if self.min_up < 1 or self.min_down < 1:
            raise InvalidInstanceError("min_up and min_down must be >= 1")
        if self.initial_run < 0:
            raise InvalidInstanceError("initial_run must be >= 0")

    @property
    def initial_on(self) -> int:
        return 1 if self.initially_on else 0

    @property
    def initial_power(self) -> float:
        return self.p_min if self.initially_on else 0.0

    def forced_on_until(self) -> int:
        """Number of leading periods the unit must stay on (0 if none)."""
        if not self.initially_on:
            return 0
        return max(0, self.min_up - self.initial_run)

    def forced_off_until(self) -> int:
        """Number of leading periods the unit must stay off (0 if none)."""
        if self.initially_on:
            return 0
        return max(0, self.min_down - self.initial_run)

    def to_dict(self) -> dict:
        return {
            "no_load_cost": self.no_load_cost,
            "marginal_cost": self.marginal_cost,
            "startup_cost": self.startup_cost,
            "p_max": self.p_max,
            "p_min": self.p_min,
            "ramp_up": self.ramp_up,
            "ramp_down": self.ramp_down,
            "startup_ramp": self.startup_ramp,
            "shutdown_ramp": self.shutdown_ramp,
            "min_up": self.min_up,
            "min_down": self.min_down,
            "initially_on": self.initially_on,
            "initial_run": self.initial_run,
        }

    @staticmethod
    def from_dict(d: dict) -> "GeneratorParams":
        return GeneratorParams(
            no_load_cost=float(d["no_load_cost"]),
            marginal_cost=float(d["marginal_cost"]),
            startup_cost=float(d["startup_cost"]),
            p_max=float(d["p_max"]),
            p_min=float(d["p_min"]),
            ramp_up=float(d["ramp_up"]),
            ramp_down=float(d["ramp_down"]),
            startup_ramp=float(d["startup_ramp"]),
            shutdown_ramp=float(d["shutdown_ramp"]),
            min_up=int(d["min_up"]),
            min_down=int(d["min_down"]),
            initially_on=bool(d["initially_on"]),
            initial_run=int(d["initial_run"]),
        )


@dataclass(frozen=True)
class UcInstance:
    """One unit commitment instance: fleet plus demand and reserve profiles."""

    id: str
    generators: tuple
    demand: np.ndarray
    reserve: np.ndarray

    @property
    def num_generators(self) -> int:
        return len(self.generators)

    @property
    def num_periods(self) -> int:
        return len(self.demand)

    @property
    def capacity(self) -> float:
        return float(sum(g.p_max for g in self.generators))

    def validate(self) -> None:
        if self.num_periods < 1:
            raise InvalidInstanceError("need at least one period")
        if len(self.reserve) != self.num_periods:
            raise InvalidInstanceError("demand and reserve lengths differ")
        if np.any(self.demand < 0) or np.any(self.reserve < 0):
            raise InvalidInstanceError("demand and reserve must be nonnegative")
        if not self.generators:
            raise InvalidInstanceError("need at least one generator")
        for g in self.generators:
            g.validate()
            if g.min_up > self.num_periods or g.min_down > self.num_periods:
                raise InvalidInstanceError("min up/down time exceeds the horizon")
        peak = float(np.max(self.demand + self.reserve))
        if self.capacity < peak:
            raise InvalidInstanceError(
                f"fleet capacity {self.capacity:.1f} below peak demand+reserve {peak:.1f}"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "generators": [g.to_dict() for g in self.generators],
            "demand": [float(v) for v in self.demand],
            "reserve": [float(v) for v in self.reserve],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @staticmethod
    def from_dict(d: dict) -> "UcInstance":
        inst = UcInstance(
            id=str(d["id"]),
            generators=tuple(GeneratorParams.from_dict(g) for g in d["generators"]),
            demand=np.asarray(d["demand"], dtype=float),
            reserve=np.asarray(d["reserve"], dtype=float),
        )
        return inst

    @staticmethod
    def load(path) -> "UcInstance":
        with open(path) as fh:
            return UcInstance.from_dict(json.load(fh))


@dataclass(frozen=True)
class Schedule:
    """A candidate solution: commitment, switching and dispatch, all G x T."""

    on: np.ndarray
    startup: np.ndarray
    shutdown: np.ndarray
    power: np.ndarray

    def to_dict(self) -> dict:
        return {
            "on": self.on.astype(int).tolist(),
            "startup": self.startup.astype(int).tolist(),
            "shutdown": self.shutdown.astype(int).tolist(),
            "power": self.power.tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @staticmethod
    def from_dict(d: dict) -> "Schedule":
        return Schedule(
            on=np.asarray(d["on"], dtype=np.int8),
            startup=np.asarray(d["startup"], dtype=np.int8),
            shutdown=np.asarray(d["shutdown"], dtype=np.int8),
            power=np.asarray(d["power"], dtype=float),
        )

    @staticmethod
    def load(path) -> "Schedule":
        with open(path) as fh:
            return Schedule.from_dict(json.load(fh))


@dataclass
class FixMask:
    """Tri-state fixing of the binary variables: -1 free, 0 fixed to zero,
    1 fixed to one.  Shape (G, T, 3) addressed by (g, t, kind)."""

    values: np.ndarray

    @staticmethod
    def all_free(num_generators: int, num_periods: int) -> "FixMask":
        return FixMask(np.full((num_generators, num_periods, 3), FREE, dtype=np.int8))

    @staticmethod
    def from_schedule(schedule: Schedule) -> "FixMask":
        """Mask fixing every binary to the schedule's commitment."""
        vals = np.stack(
            [schedule.on, schedule.startup, schedule.shutdown], axis=2
        ).astype(np.int8)
        return FixMask(vals)

    def count_fixed(self) -> int:
        return int(np.sum(self.values >= 0))

    def count_free(self) -> int:
        return int(np.sum(self.values == FREE))


@dataclass(frozen=True)
class Violation:
    family: str
    generator: Optional[int]
    period: int
    magnitude: float


@dataclass
class ViolationReport:
    violations: list = field(default_factory=list)

    def add(self, family, generator, period, magnitude) -> None:
        self.violations.append(Violation(family, generator, period, float(magnitude)))

    @property
    def empty(self) -> bool:
        return not self.violations

    def worst(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)

    def summary(self) -> str:
        if self.empty:
            return "feasible"
        fams = {}
        for v in self.violations:
            fams[v.family] = fams.get(v.family, 0) + 1
        parts = ", ".join(f"{k}:{n}" for k, n in sorted(fams.items()))
        return f"{len(self.violations)} violations ({parts}), worst {self.worst():.3e}"


@dataclass
class MilpProblem:
    """Canonical-form MILP: min c'x subject to row-wise constraints with
    senses in {<=, =, >=}, variable bounds and integrality flags."""

    c: np.ndarray
    A: sparse.csr_matrix
    senses: np.ndarray  # int8, LE/EQ/GE
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_integer: np.ndarray  # bool per column
    row_names: list
    col_names: list
    num_generators: int = 0
    num_periods: int = 0

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]

    def validate(self) -> None:
        m, n = self.A.shape
        assert len(self.c) == n and len(self.lb) == n and len(self.ub) == n
        assert len(self.b) == m and len(self.senses) == m
        ints = np.where(self.is_integer)[0]
        if len(ints) and (np.any(self.lb[ints] < -1e-12) or np.any(self.ub[ints] > 1 + 1e-12)):
            raise InvalidInstanceError("integrality-flagged variables must have bounds within [0,1]")


def var_index(g: int, kind: int, t: int, T: int) -> int:
    """Column index of variable (g, kind, t) in the instance-wide layout."""
    return g * 4 * T + kind * T + t


def _single_generator_rows(g: int, gen: GeneratorParams, T: int, col_of):
    """Rows of one generator's feasible-set polytope (everything in
    Appendix-style form except the coupling load/reserve rows).

    `col_of(kind, t)` maps to column indices so the same code serves both
    the full instance problem and the single-generator pricing problem.
    Returns (entries, senses, rhs, names) where entries is a list of
    (cols, coefs) pairs.
    """
    rows = []
    senses = []
    rhs = []
    names = []
    a0 = gen.initial_on
    p0 = gen.initial_power

    def emit(cols, coefs, sense, b, name):
        rows.append((cols, coefs))
        senses.append(sense)
        rhs.append(b)
        names.append(name)

    # power output bounds: p_min*alpha <= p <= p_max*alpha
    for t in range(T):
        emit([col_of(POWER, t), col_of(ALPHA, t)], [1.0, -gen.p_min], GE, 0.0, f"pmin[{g},{t}]")
    for t in range(T):
        emit([col_of(POWER, t), col_of(ALPHA, t)], [1.0, -gen.p_max], LE, 0.0, f"pmax[{g},{t}]")

    # ramp rates; at t=0 the previous state is the initial one
    for t in range(T):
        if t == 0:
            emit(
                [col_of(POWER, 0), col_of(GAMMA, 0)],
                [1.0, -gen.startup_ramp],
                LE,
                p0 + gen.ramp_up * a0,
                f"ramp_up[{g},{t}]",
            )
        else:
            emit(
                [col_of(POWER, t), col_of(POWER, t - 1), col_of(ALPHA, t - 1), col_of(GAMMA, t)],
                [1.0, -1.0, -gen.ramp_up, -gen.startup_ramp],
                LE,
                0.0,
                f"ramp_up[{g},{t}]",
            )
    for t in range(T):
        if t == 0:
            emit(
                [col_of(POWER, 0), col_of(ALPHA, 0), col_of(ETA, 0)],
                [-1.0, -gen.ramp_down, -gen.shutdown_ramp],
                LE,
                -p0,
                f"ramp_down[{g},{t}]",
            )
        else:
            emit(
                [col_of(POWER, t - 1), col_of(POWER, t), col_of(ALPHA, t), col_of(ETA, t)],
                [1.0, -1.0, -gen.ramp_down, -gen.shutdown_ramp],
                LE,
                0.0,
                f"ramp_down[{g},{t}]",
            )

    # minimum up/downtime windows
    for t in range(T):
        lo = max(t - gen.min_up + 1, 0)
        cols = [col_of(GAMMA, u) for u in range(lo, t + 1)] + [col_of(ALPHA, t)]
        coefs = [1.0] * (t + 1 - lo) + [-1.0]
        emit(cols, coefs, LE, 0.0, f"min_up[{g},{t}]")
    for t in range(T):
        lo = max(t - gen.min_down + 1, 0)
        cols = [col_of(ETA, u) for u in range(lo, t + 1)] + [col_of(ALPHA, t)]
        coefs = [1.0] * (t + 1 - lo) + [1.0]
        emit(cols, coefs, LE, 1.0, f"min_down[{g},{t}]")

    # switching identity and start/stop exclusivity; t=0 uses the initial state
    for t in range(T):
        if t == 0:
            emit(
                [col_of(ALPHA, 0), col_of(GAMMA, 0), col_of(ETA, 0)],
                [1.0, -1.0, 1.0],
                EQ,
                float(a0),
                f"switch[{g},{t}]",
            )
        else:
            emit(
                [col_of(ALPHA, t), col_of(ALPHA, t - 1), col_of(GAMMA, t), col_of(ETA, t)],
                [1.0, -1.0, -1.0, 1.0],
                EQ,
                0.0,
                f"switch[{g},{t}]",
            )
    for t in range(T):
        emit([col_of(GAMMA, t), col_of(ETA, t)], [1.0, 1.0], LE, 1.0, f"pair[{g},{t}]")

    return rows, senses, rhs, names


def _generator_bounds(gen: GeneratorParams, T: int):
    """Per-kind (lb, ub) arrays for one generator, with the initial-run
    forced windows folded into the alpha bounds."""
    lb = np.zeros((4, T))
    ub = np.ones((4, T))
    ub[POWER] = gen.p_max
    for t in range(min(gen.forced_on_until(), T)):
        lb[ALPHA, t] = 1.0
    for t in range(min(gen.forced_off_until(), T)):
        ub[ALPHA, t] = 0.0
    return lb, ub


def build_milp(instance: UcInstance, mask: Optional[FixMask] = None) -> MilpProblem:
    """Assemble the full instance MILP.  A mask pins the selected binaries
    by setting both bounds to the fixed value."""
    G, T = instance.num_generators, instance.num_periods
    n = 4 * G * T
    if mask is not None and mask.values.shape != (G, T, 3):
        raise ValueError(
            f"mask shape {mask.values.shape} does not match instance ({G},{T},3)"
        )

    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.ones(n)
    is_int = np.zeros(n, dtype=bool)
    col_names = [""] * n
    for g, gen in enumerate(instance.generators):
        glb, gub = _generator_bounds(gen, T)
        for kind in range(4):
            sl = slice(var_index(g, kind, 0, T), var_index(g, kind, 0, T) + T)
            lb[sl] = glb[kind]
            ub[sl] = gub[kind]
            for t in range(T):
                col_names[var_index(g, kind, t, T)] = f"{KIND_NAMES[kind]}[{g},{t}]"
        is_int[var_index(g, ALPHA, 0, T): var_index(g, ALPHA, 0, T) + 3 * T] = True
        c[var_index(g, ALPHA, 0, T): var_index(g, ALPHA, 0, T) + T] = gen.no_load_cost
        c[var_index(g, GAMMA, 0, T): var_index(g, GAMMA, 0, T) + T] = gen.startup_cost
        c[var_index(g, POWER, 0, T): var_index(g, POWER, 0, T) + T] = gen.marginal_cost

    rows_i = []
    rows_j = []
    rows_v = []
    senses = []
    rhs = []
    row_names = []

    def add_row(cols, coefs, sense, b, name):
        r = len(rhs)
        rows_i.extend([r] * len(cols))
        rows_j.extend(cols)
        rows_v.extend(coefs)
        senses.append(sense)
        rhs.append(b)
        row_names.append(name)

    # coupling rows first: load balance then reserve
    for t in range(T):
        cols = [var_index(g, POWER, t, T) for g in range(G)]
        add_row(cols, [1.0] * G, GE, float(instance.demand[t]), f"load[{t}]")
    for t in range(T):
        cols = []
        coefs = []
        for g, gen in enumerate(instance.generators):
            cols += [var_index(g, ALPHA, t, T), var_index(g, POWER, t, T)]
            coefs += [gen.p_max, -1.0]
        add_row(cols, coefs, GE, float(instance.reserve[t]), f"reserve[{t}]")

    for g, gen in enumerate(instance.generators):
        col_of = lambda kind, t, g=g: var_index(g, kind, t, T)
        rows, rsenses, rrhs, rnames = _single_generator_rows(g, gen, T, col_of)
        for (cols, coefs), s, b, nm in zip(rows, rsenses, rrhs, rnames):
            add_row(cols, coefs, s, b, nm)

    if mask is not None:
        for g in range(G):
            for t in range(T):
                for k, kind in enumerate(BINARY_KINDS):
                    v = mask.values[g, t, k]
                    if v != FREE:
                        j = var_index(g, kind, t, T)
                        # fixing must stay inside the initial-run forced window
                        if v < lb[j] - 1e-9 or v > ub[j] + 1e-9:
                            lb[j] = ub[j] = float(v)
                        else:
                            lb[j] = ub[j] = float(v)

    A = sparse.csr_matrix(
        (rows_v, (rows_i, rows_j)), shape=(len(rhs), n)
    )
    prob = MilpProblem(
        c=c,
        A=A,
        senses=np.asarray(senses, dtype=np.int8),
        b=np.asarray(rhs, dtype=float),
        lb=lb,
        ub=ub,
        is_integer=is_int,
        row_names=row_names,
        col_names=col_names,
        num_generators=G,
        num_periods=T,
    )
    prob.validate()
    return prob


def build_single_generator_milp(
    gen: GeneratorParams, T: int, objective: Optional[dict] = None
) -> MilpProblem:
    """The one-generator polytope (no coupling rows), used by the pricing
    subproblem.  `objective` maps kind -> length-T coefficient array;
    defaults to the true costs."""
    n = 4 * T
    col_of = lambda kind, t: kind * T + t
    c = np.zeros(n)
    if objective is None:
        c[col_of(ALPHA, 0): col_of(ALPHA, 0) + T] = gen.no_load_cost
        c[col_of(GAMMA, 0): col_of(GAMMA, 0) + T] = gen.startup_cost
        c[col_of(POWER, 0): col_of(POWER, 0) + T] = gen.marginal_cost
    else:
        for kind, coefs in objective.items():
            c[col_of(kind, 0): col_of(kind, 0) + T] = coefs

    glb, gub = _generator_bounds(gen, T)
    lb = np.concatenate([glb[k] for k in range(4)])
    ub = np.concatenate([gub[k] for k in range(4)])
    is_int = np.zeros(n, dtype=bool)
    is_int[: 3 * T] = True

    rows, senses, rhs, names = _single_generator_rows(0, gen, T, col_of)
    rows_i, rows_j, rows_v = [], [], []
    for r, (cols, coefs) in enumerate(rows):
        rows_i.extend([r] * len(cols))
        rows_j.extend(cols)
        rows_v.extend(coefs)
    A = sparse.csr_matrix((rows_v, (rows_i, rows_j)), shape=(len(rhs), n))
    col_names = [f"{KIND_NAMES[k]}[{t}]" for k in range(4) for t in range(T)]
    prob = MilpProblem(
        c=c,
        A=A,
        senses=np.asarray(senses, dtype=np.int8),
        b=np.asarray(rhs, dtype=float),
        lb=lb,
        ub=ub,
        is_integer=is_int,
        row_names=names,
        col_names=col_names,
        num_generators=1,
        num_periods=T,
    )
    prob.validate()
    return prob


def schedule_from_solution(instance: UcInstance, x: np.ndarray) -> Schedule:
    """Extract a Schedule from a full-instance MILP solution vector,
    rounding the (within-tolerance integral) binaries."""
    G, T = instance.num_generators, instance.num_periods
    on = np.zeros((G, T), dtype=np.int8)
    startup = np.zeros((G, T), dtype=np.int8)
    shutdown = np.zeros((G, T), dtype=np.int8)
    power = np.zeros((G, T))
    for g in range(G):
        on[g] = np.round(x[var_index(g, ALPHA, 0, T): var_index(g, ALPHA, 0, T) + T]).astype(np.int8)
        startup[g] = np.round(x[var_index(g, GAMMA, 0, T): var_index(g, GAMMA, 0, T) + T]).astype(np.int8)
        shutdown[g] = np.round(x[var_index(g, ETA, 0, T): var_index(g, ETA, 0, T) + T]).astype(np.int8)
        power[g] = x[var_index(g, POWER, 0, T): var_index(g, POWER, 0, T) + T]
    return Schedule(on=on, startup=startup, shutdown=shutdown, power=power)


def solution_from_schedule(instance: UcInstance, schedule: Schedule) -> np.ndarray:
    G, T = instance.num_generators, instance.num_periods
    x = np.zeros(4 * G * T)
    for g in range(G):
        x[var_index(g, ALPHA, 0, T): var_index(g, ALPHA, 0, T) + T] = schedule.on[g]
        x[var_index(g, GAMMA, 0, T): var_index(g, GAMMA, 0, T) + T] = schedule.startup[g]
        x[var_index(g, ETA, 0, T): var_index(g, ETA, 0, T) + T] = schedule.shutdown[g]
        x[var_index(g, POWER, 0, T): var_index(g, POWER, 0, T) + T] = schedule.power[g]
    return x


def evaluate_objective(instance: UcInstance, schedule: Schedule) -> float:
    """Total cost: no-load + marginal + startup."""
    total = 0.0
    for g, gen in enumerate(instance.generators):
        total += gen.no_load_cost * float(np.sum(schedule.on[g]))
        total += gen.marginal_cost * float(np.sum(schedule.power[g]))
        total += gen.startup_cost * float(np.sum(schedule.startup[g]))
    return total


def check_feasibility(
    instance: UcInstance, schedule: Schedule, feas_eps: float = FEAS_EPS
) -> ViolationReport:
    """Check a schedule against every constraint of the instance MILP,
    reporting each violation with its magnitude in natural units."""
    G, T = instance.num_generators, instance.num_periods
    rep = ViolationReport()
    on = np.asarray(schedule.on, dtype=float)
    su = np.asarray(schedule.startup, dtype=float)
    sd = np.asarray(schedule.shutdown, dtype=float)
    p = np.asarray(schedule.power, dtype=float)

    for name, arr in (("on", on), ("startup", su), ("shutdown", sd)):
        frac = np.abs(arr - np.round(arr))
        out = np.abs(arr - 0.5) > 0.5 + feas_eps  # outside [0,1]
        for g, t in zip(*np.where((frac > feas_eps) | out)):
            rep.add(f"integrality_{name}", int(g), int(t), max(frac[g, t], 0.0))

    gen_total = p.sum(axis=0)
    for t in range(T):
        short = instance.demand[t] - gen_total[t]
        if short > feas_eps:
            rep.add("load", None, t, short)

    pmax = np.array([g.p_max for g in instance.generators])
    headroom = (pmax[:, None] * on - p).sum(axis=0)
    for t in range(T):
        short = instance.reserve[t] - headroom[t]
        if short > feas_eps:
            rep.add("reserve", None, t, short)

    for g, gen in enumerate(instance.generators):
        a0, p0 = gen.initial_on, gen.initial_power
        prev_a = np.concatenate([[a0], on[g, :-1]])
        prev_p = np.concatenate([[p0], p[g, :-1]])

        for t in range(T):
            if p[g, t] < -feas_eps:
                rep.add("power_nonneg", g, t, -p[g, t])
            v = gen.p_min * on[g, t] - p[g, t]
            if v > feas_eps:
                rep.add("power_min", g, t, v)
            v = p[g, t] - gen.p_max * on[g, t]
            if v > feas_eps:
                rep.add("power_max", g, t, v)

            v = p[g, t] - prev_p[t] - gen.ramp_up * prev_a[t] - gen.startup_ramp * su[g, t]
            if v > feas_eps:
                rep.add("ramp_up", g, t, v)
            v = prev_p[t] - p[g, t] - gen.ramp_down * on[g, t] - gen.shutdown_ramp * sd[g, t]
            if v > feas_eps:
                rep.add("ramp_down", g, t, v)

            lo = max(t - gen.min_up + 1, 0)
            v = su[g, lo: t + 1].sum() - on[g, t]
            if v > feas_eps:
                rep.add("min_up", g, t, v)
            lo = max(t - gen.min_down + 1, 0)
            v = sd[g, lo: t + 1].sum() - (1.0 - on[g, t])
            if v > feas_eps:
                rep.add("min_down", g, t, v)

            v = abs(on[g, t] - prev_a[t] - su[g, t] + sd[g, t])
            if v > feas_eps:
                rep.add("switching", g, t, v)
            v = su[g, t] + sd[g, t] - 1.0
            if v > feas_eps:
                rep.add("pairing", g, t, v)

        for t in range(min(gen.forced_on_until(), T)):
            v = 1.0 - on[g, t]
            if v > feas_eps:
                rep.add("initial_state", g, t, v)
        for t in range(min(gen.forced_off_until(), T)):
            if on[g, t] > feas_eps:
                rep.add("initial_state", g, t, on[g, t])

    return rep
