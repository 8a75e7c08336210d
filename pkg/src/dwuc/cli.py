"""Command line entry point: instance generation, solving, dataset
construction, model training, benchmarking, and the tiny-instance exact
oracle."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bench
from . import colgen
from .heuristics import DEFAULT_THRESHOLDS
from .instgen import DemandSpec, FleetSpec, generate_fleet, generate_instance, sample_demand
from .learning import (
    Dataset,
    NeuralNet,
    build_dataset,
    knn_from_dataset,
    train_nn,
)
from .oracle import enumerate_optimal
from .ucmodel import UcInstance, InvalidInstanceError

ML_METHODS = ("nn-fix", "knn-fix")


def _error_exit(message, code=2):
    print(json.dumps({"error": message}), file=sys.stdout)
    return code


def cmd_generate(args) -> int:
    if args.count == 1:
        inst = generate_instance(args.generators, args.periods, seed=args.seed,
                                 fleet_seed=args.fleet_seed)
        inst.save(args.out)
        print(json.dumps({"written": str(args.out), "id": inst.id}))
        return 0
    stem = Path(args.out)
    written = []
    for i in range(args.count):
        inst = generate_instance(args.generators, args.periods, seed=args.seed + i,
                                 fleet_seed=args.fleet_seed)
        path = stem.with_name(f"{stem.stem}_{i:03d}{stem.suffix or '.json'}")
        inst.save(path)
        written.append(str(path))
    print(json.dumps({"written": written}))
    return 0


def _load_ml(args, need: str):
    nn_model = nn_capacity = knn_model = None
    if need == "nn-fix":
        if not args.model:
            raise InvalidInstanceError("nn-fix requires --model")
        nn_model, nn_capacity = NeuralNet.load(args.model)
    if need == "knn-fix":
        if not args.knn_dataset:
            raise InvalidInstanceError("knn-fix requires --knn-dataset")
        ds = Dataset.load(args.knn_dataset)
        knn_model = knn_from_dataset(ds, k=min(args.knn_k, len(ds)))
        nn_capacity = ds.capacity
    return nn_model, nn_capacity, knn_model


def cmd_solve(args) -> int:
    try:
        inst = UcInstance.load(args.instance)
        inst.validate()
    except (OSError, KeyError, ValueError) as exc:
        return _error_exit(f"cannot load instance: {exc}")
    try:
        nn_model, nn_capacity, knn_model = _load_ml(args, args.heuristic)
    except (OSError, KeyError, ValueError) as exc:
        return _error_exit(f"cannot load model: {exc}")

    if args.standalone:
        if args.heuristic not in ML_METHODS:
            return _error_exit("--standalone applies only to nn-fix/knn-fix")
        preds = bench.predictions_for(inst, args.heuristic, nn_model, nn_capacity, knn_model)
        obj, sched, secs = bench.run_standalone_ml(
            inst, preds, args.time_limit_seconds or args.deadline_seconds
        )
        result = {
            "objective": obj,
            "lower_bound": None,
            "gap": None,
            "iterations": 0,
            "seconds": secs,
            "schedule_file": None,
        }
        if sched is not None and args.schedule_out:
            sched.save(args.schedule_out)
            result["schedule_file"] = str(args.schedule_out)
        print(json.dumps(result, indent=1))
        if args.out:
            with open(args.out, "w") as fh:
                json.dump(result, fh, indent=1)
        return 0 if obj is not None else 1

    driver = bench._driver_for(inst, args.heuristic, nn_model, nn_capacity, knn_model)
    res = colgen.run(
        inst,
        tolerance=args.tolerance,
        driver=driver,
        deadline_seconds=args.deadline_seconds,
        pricing_backend=args.pricing_backend,
    )
    result = {
        "objective": res.upper if np.isfinite(res.upper) else None,
        "lower_bound": res.lower if np.isfinite(res.lower) else None,
        "gap": res.gap if np.isfinite(res.gap) else None,
        "iterations": res.iterations,
        "seconds": res.seconds,
        "schedule_file": None,
    }
    if res.schedule is not None and args.schedule_out:
        res.schedule.save(args.schedule_out)
        result["schedule_file"] = str(args.schedule_out)
    if args.bounds_log:
        res.log.to_csv(args.bounds_log)
    print(json.dumps(result, indent=1))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=1)
    return 0 if (result["gap"] is not None and result["gap"] <= args.tolerance) else 1


def cmd_build_dataset(args) -> int:
    fleet = generate_fleet(FleetSpec(args.generators, args.fleet_seed))
    spec = DemandSpec(periods=args.periods, seed=args.seed)
    ds = build_dataset(
        fleet,
        spec,
        args.count,
        per_instance_deadline=args.deadline_seconds,
        heuristic=args.heuristic,
        pricing_backend=args.pricing_backend,
        progress=not args.quiet,
    )
    ds.save(args.out)
    print(json.dumps({"written": str(args.out), "examples": len(ds), "skipped": ds.skipped}))
    return 0


def cmd_train(args) -> int:
    ds = Dataset.load(args.dataset)
    if len(ds) == 0:
        return _error_exit("dataset has no examples")
    X = ds.inputs()
    Y = ds.label_matrix()
    if args.arch == "deeper":
        arch = [X.shape[1], 1000, 1000, 1000, 1000, Y.shape[1]]
    else:
        arch = [X.shape[1], 400, 400, Y.shape[1]]
    history = []
    net = train_nn(ds, architecture=arch, epochs=args.epochs, seed=args.seed,
                   learning_rate=args.learning_rate, loss_history=history)
    net.save(args.out, capacity=ds.capacity)
    print(json.dumps({"written": str(args.out), "arch": arch,
                      "initial_loss": history[0], "final_loss": history[-1]}))
    return 0


def cmd_benchmark(args) -> int:
    paths = sorted(Path(args.instances).glob("*.json"))
    if not paths:
        return _error_exit(f"no instances in {args.instances}")
    instances = []
    for p in paths:
        inst = UcInstance.load(p)
        inst.validate()
        instances.append(inst)
    methods = args.methods.split(",")
    nn_model = nn_capacity = knn_model = None
    for m in methods:
        loaded = _load_ml(args, m)
        nn_model = loaded[0] or nn_model
        nn_capacity = loaded[1] or nn_capacity
        knn_model = loaded[2] or knn_model

    if args.time_limits:
        limits = [float(v) for v in args.time_limits.split(",")]
        report = bench.run_time_limit(
            instances, methods, limits,
            reference_seconds=args.reference_seconds,
            nn_model=nn_model, nn_capacity=nn_capacity, knn_model=knn_model,
            pricing_backend=args.pricing_backend, progress=not args.quiet,
        )
    else:
        tols = [float(v) for v in args.tolerances.split(",")]
        report = bench.run_time_to_tolerance(
            instances, methods, tols,
            deadline_seconds=args.deadline_seconds,
            nn_model=nn_model, nn_capacity=nn_capacity, knn_model=knn_model,
            pricing_backend=args.pricing_backend, progress=not args.quiet,
        )
    report.to_csv(args.out + ".csv")
    report.to_json(args.out + ".json")
    print(json.dumps({"written": [args.out + ".csv", args.out + ".json"]}))
    return 0


def cmd_oracle(args) -> int:
    try:
        inst = UcInstance.load(args.instance)
        inst.validate()
    except (OSError, KeyError, ValueError) as exc:
        return _error_exit(f"cannot load instance: {exc}")
    if inst.num_generators > 4 or inst.num_periods > 6:
        return _error_exit("oracle is exhaustive; limit to G <= 4, T <= 6")
    obj, sched = enumerate_optimal(inst)
    result = {"objective": obj}
    if args.schedule_out:
        sched.save(args.schedule_out)
        result["schedule_file"] = str(args.schedule_out)
    print(json.dumps(result, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dwuc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize instances")
    p.add_argument("--generators", type=int, required=True)
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fleet-seed", type=int, default=None)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance with column generation")
    p.add_argument("instance")
    p.add_argument("--heuristic", default="rmp-fix",
                   choices=["recovery", "combination", "rmp-fix", "nn-fix", "knn-fix"])
    p.add_argument("--tolerance", type=float, default=0.001)
    p.add_argument("--deadline-seconds", type=float, default=120.0)
    p.add_argument("--time-limit-seconds", type=float, default=None)
    p.add_argument("--standalone", action="store_true")
    p.add_argument("--pricing-backend", default="milp", choices=["milp", "dp"])
    p.add_argument("--model", default=None)
    p.add_argument("--knn-dataset", default=None)
    p.add_argument("--knn-k", type=int, default=50)
    p.add_argument("--out", default=None)
    p.add_argument("--schedule-out", default=None)
    p.add_argument("--bounds-log", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("build-dataset", help="solve training instances and store labels")
    p.add_argument("--generators", type=int, required=True)
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fleet-seed", type=int, default=0)
    p.add_argument("--deadline-seconds", type=float, default=60.0)
    p.add_argument("--heuristic", default="recovery")
    p.add_argument("--pricing-backend", default="milp", choices=["milp", "dp"])
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train the commitment-probability network")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--arch", default="original", choices=["original", "deeper"])
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("benchmark", help="run the experiment harness over an instance directory")
    p.add_argument("--instances", required=True)
    p.add_argument("--methods", required=True)
    p.add_argument("--tolerances", default="0.005,0.0025,0.001")
    p.add_argument("--time-limits", default=None)
    p.add_argument("--deadline-seconds", type=float, default=120.0)
    p.add_argument("--reference-seconds", type=float, default=60.0)
    p.add_argument("--pricing-backend", default="milp", choices=["milp", "dp"])
    p.add_argument("--model", default=None)
    p.add_argument("--knn-dataset", default=None)
    p.add_argument("--knn-k", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("oracle", help="exhaustive solver for tiny instances")
    p.add_argument("instance")
    p.add_argument("--schedule-out", default=None)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInstanceError as exc:
        return _error_exit(str(exc))


if __name__ == "__main__":
    sys.exit(main())
