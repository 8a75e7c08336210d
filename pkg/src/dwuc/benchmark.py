"""Experiment harness: time-to-tolerance runs (how fast each heuristic
proves a given suboptimality) and best-bound-within-time-limit runs
(solution quality when the budget is fixed), with censored averaging and
pure, replayable aggregation."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import colgen, milp
from .heuristics import DEFAULT_THRESHOLDS, MlFixStore, make_driver, ml_partial_fix
from .learning import KnnModel, NeuralNet, instance_features, predict_knn, predict_nn
from .ucmodel import UcInstance, build_milp, check_feasibility

ML_METHODS = ("nn-fix", "knn-fix")


@dataclass
class BenchmarkReport:
    mode: str                 # "tolerance" or "timelimit"
    rows: list                # aggregated table rows
    raw: list                 # per-run records, sufficient to regenerate rows

    def to_json(self, path=None) -> str:
        text = json.dumps({"mode": self.mode, "rows": self.rows, "raw": self.raw}, indent=1)
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None) -> str:
        if self.mode == "tolerance":
            header = "method,tolerance,instances,solved,mean_seconds,mean_iterations"
            lines = [header]
            for r in self.rows:
                lines.append(
                    f"{r['method']},{r['tolerance']},{r['instances']},{r['solved']},"
                    f"{r['mean_seconds']:.3f},{r['mean_iterations']:.3f}"
                )
        else:
            header = "method,time_limit,instances,solved,mean_suboptimality"
            lines = [header]
            for r in self.rows:
                sub = "" if r["mean_suboptimality"] is None else f"{r['mean_suboptimality']:.6f}"
                lines.append(
                    f"{r['method']},{r['time_limit']},{r['instances']},{r['solved']},{sub}"
                )
        text = "\n".join(lines) + "\n"
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def predictions_for(instance: UcInstance, method: str, nn_model=None, nn_capacity=None,
                    knn_model: Optional[KnnModel] = None) -> np.ndarray:
    G, T = instance.num_generators, instance.num_periods
    if method == "nn-fix":
        if nn_model is None:
            raise ValueError("nn-fix needs a trained network")
        omega = instance_features(instance, nn_capacity)
        return predict_nn(nn_model, omega, shape=(G, T))
    if method == "knn-fix":
        if knn_model is None:
            raise ValueError("knn-fix needs a stored dataset")
        omega = instance_features(instance, nn_capacity)
        return predict_knn(knn_model, omega, shape=(G, T))
    raise ValueError(method)


def _driver_for(instance, method, nn_model=None, nn_capacity=None, knn_model=None,
                thresholds=DEFAULT_THRESHOLDS):
    if method in ML_METHODS:
        preds = predictions_for(instance, method, nn_model, nn_capacity, knn_model)
        return make_driver(method, predictions=preds, thresholds=thresholds)
    return make_driver(method)


# ---------------------------------------------------------------------------
# evaluation 1: time to prove a tolerance


def run_time_to_tolerance(
    instances,
    methods,
    tolerances,
    deadline_seconds: float = 120.0,
    nn_model=None,
    nn_capacity=None,
    knn_model=None,
    pricing_backend: str = "milp",
    collect_diagnostics: bool = False,
    progress: bool = False,
) -> BenchmarkReport:
    """One colgen run per (instance, method) at the tightest tolerance;
    every tolerance row is derived from the same trajectory."""
    tolerances = sorted(tolerances, reverse=True)
    tightest = min(tolerances)
    raw = []
    diagnostics = []
    for inst in instances:
        for method in methods:
            driver = _driver_for(inst, method, nn_model, nn_capacity, knn_model)
            res = colgen.run(
                inst, tolerance=tightest, driver=driver,
                deadline_seconds=deadline_seconds, pricing_backend=pricing_backend,
                collect_diagnostics=collect_diagnostics,
            )
            traj = [
                {"iteration": r.iteration, "gap": r.gap, "wall": r.wall_seconds}
                for r in res.log.records
            ]
            raw.append({
                "instance": inst.id,
                "method": method,
                "deadline": deadline_seconds,
                "trajectory": traj,
                "iterations": res.iterations,
                "seconds": res.seconds,
                "final_gap": res.gap if np.isfinite(res.gap) else None,
            })
            if collect_diagnostics:
                diagnostics.append((inst.id, method, res))
            if progress:
                print(f"[benchmark] {inst.id} {method}: gap={res.gap * 100:.3f}% "
                      f"iters={res.iterations} {res.seconds:.1f}s", flush=True)
    report = BenchmarkReport("tolerance", aggregate_tolerance(raw, tolerances), raw)
    if collect_diagnostics:
        report.diagnostics = diagnostics
    return report


def aggregate_tolerance(raw, tolerances) -> list:
    """Censored averaging: unsolved runs count the full deadline and the
    iterations reached by it."""
    rows = []
    methods = []
    for rec in raw:
        if rec["method"] not in methods:
            methods.append(rec["method"])
    for method in methods:
        recs = [r for r in raw if r["method"] == method]
        for tol in tolerances:
            times, iters, solved = [], [], 0
            for r in recs:
                hit = None
                for pt in r["trajectory"]:
                    if pt["gap"] is not None and pt["gap"] <= tol:
                        hit = pt
                        break
                if hit is not None:
                    solved += 1
                    times.append(hit["wall"])
                    iters.append(hit["iteration"])
                else:
                    times.append(r["deadline"])
                    iters.append(r["iterations"])
            rows.append({
                "method": method,
                "tolerance": tol,
                "instances": len(recs),
                "solved": solved,
                "mean_seconds": float(np.mean(times)) if times else 0.0,
                "mean_iterations": float(np.mean(iters)) if iters else 0.0,
            })
    return rows


# ---------------------------------------------------------------------------
# evaluation 2: best feasible solution within a time limit


def run_standalone_ml(instance, predictions, time_limit, thresholds=DEFAULT_THRESHOLDS,
                      lp_backend="highs"):
    """ML partial-fixing without column generation: walk the thresholds in
    ascending order, solving each partially-fixed problem, within one
    overall time budget.  Returns (best objective or None, schedule, seconds)."""
    store = MlFixStore(thresholds=tuple(thresholds))
    t0 = time.perf_counter()
    best_obj, best_sched = None, None
    while True:
        remaining = time_limit - (time.perf_counter() - t0)
        if remaining <= 1e-3 or store.exhausted():
            break
        outcome = ml_partial_fix(
            instance, predictions, store, remaining, gap_target=0.0,
            incumbent_objective=best_obj if best_obj is not None else np.inf,
            lp_backend=lp_backend,
        )
        if outcome.schedule is not None and (best_obj is None or outcome.objective < best_obj):
            best_obj, best_sched = outcome.objective, outcome.schedule
    return best_obj, best_sched, time.perf_counter() - t0


def reference_lower_bound(instance, seconds: float = 60.0, lp_backend: str = "highs") -> float:
    """Dual bound of a long plain branch-and-bound run; the stand-in for
    the paper's hours-long exact-solver reference bounds."""
    prob = build_milp(instance)
    res, _ = milp.solve_milp(prob, budget=seconds, gap_target=0.0, lp_backend=lp_backend)
    return float(res.dual_bound) if np.isfinite(res.dual_bound) else -np.inf


def run_time_limit(
    instances,
    methods,
    time_limits,
    reference_seconds: float = 60.0,
    nn_model=None,
    nn_capacity=None,
    knn_model=None,
    pricing_backend: str = "milp",
    progress: bool = False,
) -> BenchmarkReport:
    """Best feasible solution within each time limit.  ML methods run
    standalone (no column generation); the others run the full loop with
    an out-of-reach tolerance.  Suboptimality is measured against a long
    reference run's lower bound."""
    raw = []
    ref = {}
    for inst in instances:
        ref[inst.id] = reference_lower_bound(inst, reference_seconds)
        if progress:
            print(f"[benchmark] reference bound {inst.id}: {ref[inst.id]:.1f}", flush=True)
    limits = sorted(time_limits)
    for inst in instances:
        for method in methods:
            for limit in limits:
                if method in ML_METHODS:
                    preds = predictions_for(inst, method, nn_model, nn_capacity, knn_model)
                    obj, sched, secs = run_standalone_ml(inst, preds, limit)
                    iters = 0
                else:
                    driver = _driver_for(inst, method)
                    res = colgen.run(inst, tolerance=1e-9, driver=driver,
                                     deadline_seconds=limit, pricing_backend=pricing_backend)
                    obj = res.upper if np.isfinite(res.upper) else None
                    sched = res.schedule
                    iters = res.iterations
                if sched is not None:
                    assert check_feasibility(inst, sched).empty
                raw.append({
                    "instance": inst.id,
                    "method": method,
                    "time_limit": limit,
                    "objective": obj,
                    "iterations": iters,
                    "reference_bound": ref[inst.id],
                })
                if progress:
                    print(f"[benchmark] {inst.id} {method} limit={limit}s -> {obj}", flush=True)
    return BenchmarkReport("timelimit", aggregate_timelimit(raw), raw)


def aggregate_timelimit(raw) -> list:
    rows = []
    seen = []
    for rec in raw:
        key = (rec["method"], rec["time_limit"])
        if key not in seen:
            seen.append(key)
    for method, limit in seen:
        recs = [r for r in raw if r["method"] == method and r["time_limit"] == limit]
        solved = [r for r in recs if r["objective"] is not None]
        subs = []
        for r in solved:
            lb = r["reference_bound"]
            if np.isfinite(lb) and r["objective"] > 0:
                subs.append((r["objective"] - lb) / r["objective"])
        rows.append({
            "method": method,
            "time_limit": limit,
            "instances": len(recs),
            "solved": len(solved),
            "mean_suboptimality": float(np.mean(subs)) if subs else None,
        })
    return rows
