"""Training data construction, a from-scratch feed-forward network for
per-variable commitment probabilities, and the nearest-neighbour
predictor.

The network is trained as one big multi-label binary classifier: inputs
are the normalized demand and reserve profiles (length 2T), outputs one
sigmoid per commitment variable (G*T).  Plain mini-batch gradient descent;
everything is deterministic under the seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import colgen
from .heuristics import make_driver
from .instgen import DemandSpec, sample_demand
from .ucmodel import UcInstance


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainingExample:
    omega: np.ndarray      # (2T,) normalized demand then reserve
    labels: np.ndarray     # (G, T) binary commitment
    gap: float
    instance_id: str = ""


@dataclass
class Dataset:
    examples: list = field(default_factory=list)
    capacity: float = 0.0
    skipped: int = 0

    def __len__(self):
        return len(self.examples)

    def inputs(self) -> np.ndarray:
        return np.stack([ex.omega for ex in self.examples])

    def label_matrix(self) -> np.ndarray:
        return np.stack([ex.labels.reshape(-1) for ex in self.examples]).astype(float)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"capacity": self.capacity, "skipped": self.skipped}) + "\n")
            for ex in self.examples:
                fh.write(json.dumps({
                    "omega": ex.omega.tolist(),
                    "labels": ex.labels.astype(int).tolist(),
                    "gap": ex.gap,
                    "instance_id": ex.instance_id,
                }) + "\n")

    @staticmethod
    def load(path) -> "Dataset":
        with open(path) as fh:
            header = json.loads(fh.readline())
            ds = Dataset(capacity=header["capacity"], skipped=header.get("skipped", 0))
            for line in fh:
                d = json.loads(line)
                ds.examples.append(TrainingExample(
                    omega=np.asarray(d["omega"], dtype=float),
                    labels=np.asarray(d["labels"], dtype=np.int8),
                    gap=float(d["gap"]),
                    instance_id=d.get("instance_id", ""),
                ))
        return ds


def instance_features(instance: UcInstance, capacity: Optional[float] = None) -> np.ndarray:
    cap = capacity if capacity is not None else instance.capacity
    return np.concatenate([instance.demand / cap, instance.reserve / cap])


def build_dataset(
    fleet,
    demand_spec: DemandSpec,
    instance_count: int,
    label_tolerance: float = 0.0025,
    per_instance_deadline: float = 60.0,
    heuristic: str = "recovery",
    pricing_backend: str = "milp",
    seed_offset: int = 0,
    progress: bool = False,
) -> Dataset:
    """Solve sampled instances to the label tolerance and keep the
    commitments of the proven-good schedules; unsolved instances are
    skipped and counted."""
    if instance_count < 1:
        raise ValueError("instance_count must be >= 1")
    capacity = float(sum(g.p_max for g in fleet))
    ds = Dataset(capacity=capacity)
    for i in range(instance_count):
        spec_i = DemandSpec(
            periods=demand_spec.periods,
            peak_fraction=demand_spec.peak_fraction,
            amplitude=demand_spec.amplitude,
            noise=demand_spec.noise,
            reserve_fraction=demand_spec.reserve_fraction,
            seed=demand_spec.seed + seed_offset + i,
        )
        demand, reserve = sample_demand(capacity, spec_i)
        inst = UcInstance(
            id=f"train-{spec_i.seed}", generators=tuple(fleet), demand=demand, reserve=reserve
        )
        inst.validate()
        res = colgen.run(
            inst,
            tolerance=label_tolerance,
            driver=make_driver(heuristic),
            deadline_seconds=per_instance_deadline,
            pricing_backend=pricing_backend,
        )
        if not res.reached_tolerance or res.schedule is None:
            ds.skipped += 1
            continue
        ds.examples.append(TrainingExample(
            omega=instance_features(inst, capacity),
            labels=res.schedule.on.astype(np.int8),
            gap=res.gap,
            instance_id=inst.id,
        ))
        if progress:
            print(f"[dataset] {i + 1}/{instance_count} solved={len(ds.examples)} "
                  f"skipped={ds.skipped} gap={res.gap * 100:.3f}%", flush=True)
    return ds


# ---------------------------------------------------------------------------
# feed-forward network


@dataclass
class NeuralNet:
    sizes: list
    weights: list
    biases: list

    def save(self, path, capacity: float) -> None:
        with open(path, "w") as fh:
            json.dump({
                "arch": list(self.sizes),
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "input_norm": {"capacity": capacity},
            }, fh)

    @staticmethod
    def load(path):
        with open(path) as fh:
            d = json.load(fh)
        net = NeuralNet(
            sizes=list(d["arch"]),
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
        )
        return net, float(d["input_norm"]["capacity"])


def init_network(sizes, seed: int) -> NeuralNet:
    """Glorot-uniform weights, zero biases, deterministic under the seed."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NeuralNet(sizes=list(sizes), weights=weights, biases=biases)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward(net: NeuralNet, X):
    """Returns per-layer pre-activations and activations; ReLU hidden,
    sigmoid output."""
    acts = [X]
    zs = []
    a = X
    L = len(net.weights)
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ W.T + b
        zs.append(z)
        a = _sigmoid(z) if i == L - 1 else np.maximum(z, 0.0)
        acts.append(a)
    return zs, acts


def nn_loss(net: NeuralNet, X, Y) -> float:
    """Mean binary cross-entropy over all outputs."""
    _, acts = _forward(net, X)
    P = np.clip(acts[-1], 1e-12, 1.0 - 1e-12)
    return float(-np.mean(Y * np.log(P) + (1.0 - Y) * np.log(1.0 - P)))


def nn_gradients(net: NeuralNet, X, Y):
    """Analytic gradients of the mean BCE loss; sigmoid+BCE gives the
    (P - Y)/N output delta, hidden layers backpropagate through ReLU."""
    n = X.shape[0]
    zs, acts = _forward(net, X)
    P = acts[-1]
    delta = (P - Y) / (n * Y.shape[1])
    grads_W = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_W[layer] = delta.T @ acts[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer]) * (zs[layer - 1] > 0)
    return grads_W, grads_b


def train_nn(
    dataset: Dataset,
    architecture=None,
    epochs: int = 200,
    seed: int = 0,
    learning_rate: float = 1e-3,
    batch_size: int = 32,
    loss_history: Optional[list] = None,
) -> NeuralNet:
    """Mini-batch gradient descent on the mean BCE; returns the trained
    network.  Raises TrainingDivergedError on a non-finite loss."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    X = dataset.inputs()
    Y = dataset.label_matrix()
    if architecture is None:
        architecture = [X.shape[1], 400, 400, Y.shape[1]]
    if architecture[0] != X.shape[1] or architecture[-1] != Y.shape[1]:
        raise ValueError("architecture does not match the dataset shapes")
    net = init_network(architecture, seed)
    rng = np.random.default_rng(seed + 1)
    initial = nn_loss(net, X, Y)
    if loss_history is not None:
        loss_history.append(initial)
    n = X.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start: start + batch_size]
            gW, gb = nn_gradients(net, X[idx], Y[idx])
            for i in range(len(net.weights)):
                net.weights[i] -= learning_rate * gW[i]
                net.biases[i] -= learning_rate * gb[i]
        loss = nn_loss(net, X, Y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"loss became non-finite at epoch {epoch + 1}; lower the learning rate"
            )
        if loss_history is not None:
            loss_history.append(loss)
    final = nn_loss(net, X, Y)
    if final > initial + 1e-9:
        raise TrainingDivergedError(
            f"training increased the loss ({initial:.6f} -> {final:.6f})"
        )
    return net


def predict_nn(net: NeuralNet, omega: np.ndarray, shape=None) -> np.ndarray:
    """Per-variable commitment probabilities, strictly inside (0, 1)."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != net.sizes[0]:
        raise ValueError(f"input length {omega.shape[-1]} != {net.sizes[0]}")
    _, acts = _forward(net, omega.reshape(1, -1))
    out = np.clip(acts[-1][0], 1e-15, 1.0 - 1e-15)
    if shape is not None:
        out = out.reshape(shape)
    return out


# ---------------------------------------------------------------------------
# nearest neighbour predictor


@dataclass
class KnnModel:
    inputs: np.ndarray    # (N, 2T)
    labels: np.ndarray    # (N, G*T)
    k: int = 50

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.k > len(self.inputs):
            raise ValueError(f"k={self.k} exceeds dataset size {len(self.inputs)}")


def knn_from_dataset(dataset: Dataset, k: int = 50) -> KnnModel:
    model = KnnModel(inputs=dataset.inputs(), labels=dataset.label_matrix(), k=k)
    model.validate()
    return model


def predict_knn(model: KnnModel, omega: np.ndarray, shape=None) -> np.ndarray:
    """Mean label vector of the k nearest stored inputs (Euclidean);
    ties at the k-th distance break by insertion order."""
    model.validate()
    omega = np.asarray(omega, dtype=float)
    d2 = np.sum((model.inputs - omega) ** 2, axis=1)
    nearest = np.argsort(d2, kind="stable")[: model.k]
    out = model.labels[nearest].mean(axis=0)
    if shape is not None:
        out = out.reshape(shape)
    return out
