"""Steering-angle regressor: frozen random projection into a trainable
two-layer head (512 hidden units, rectifier, scalar output), trained with
Adam on mean squared error.

The projection models a fixed generic feature extractor: it is drawn once at
init and never receives gradients. The loss compares the raw (unwrapped)
head output against targets in (-pi, pi]; wrapping is applied only at
inference time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from .augmentation import Dataset, normalize_features
from .geometry import wrap_angle


@dataclass
class RegressorModel:
    projection: np.ndarray  # (F, D), fixed at init, never updated
    w1: np.ndarray  # (H, F)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: float
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None
    init_seed: int = 0

    @property
    def input_dim(self) -> int:
        return int(self.projection.shape[1])

    def trainable(self) -> dict[str, np.ndarray]:
        return {
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": np.array([self.b2]),
        }


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-4
    batch_size: int = 64
    epochs: int = 100
    lr_halving_period: int = 25
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if min(self.lr0, self.batch_size, self.epochs, self.lr_halving_period) <= 0:
            raise ValueError("lr0, batch_size, epochs, lr_halving_period must be positive")


def _uniform_init(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_model(seed: int, input_dim: int, projection_dim: int = 128, hidden: int = 512) -> RegressorModel:
    """Seeded scaled-uniform init (+/- sqrt(6 / (fan_in + fan_out))); zero biases."""
    if min(input_dim, projection_dim, hidden) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    projection = _uniform_init(rng, projection_dim, input_dim)
    w1 = _uniform_init(rng, hidden, projection_dim)
    w2 = _uniform_init(rng, 1, hidden)[0]
    return RegressorModel(
        projection=projection,
        w1=w1,
        b1=np.zeros(hidden),
        w2=w2,
        b2=0.0,
        init_seed=seed,
    )


def forward_raw(model: RegressorModel, normalized_features: np.ndarray) -> float:
    """Unwrapped head output for one normalized feature vector."""
    return float(_predict_raw_batch(model, normalized_features.reshape(1, -1))[0])


def forward(model: RegressorModel, normalized_features: np.ndarray) -> float:
    """Predicted yaw delta, wrapped to (-pi, pi]."""
    return wrap_angle(forward_raw(model, normalized_features))


def predict(model: RegressorModel, raw_features: np.ndarray) -> float:
    """Inference from an unnormalized observation, using the stats captured
    from the training dataset."""
    if model.feature_mean is None or model.feature_std is None:
        raise ValueError("model carries no normalization statistics")
    x = normalize_features(model.feature_mean, model.feature_std, raw_features)
    return forward(model, x)


def _predict_raw_batch(model: RegressorModel, x: np.ndarray) -> np.ndarray:
    if x.shape[1] != model.input_dim:
        raise ValueError(f"dimension mismatch: got {x.shape[1]}, expected {model.input_dim}")
    z = x @ model.projection.T
    return _predict_from_projected(model, z)


def _predict_from_projected(model: RegressorModel, z: np.ndarray) -> np.ndarray:
    h = np.maximum(z @ model.w1.T + model.b1, 0.0)
    return h @ model.w2 + model.b2


def _loss_grad_projected(
    model: RegressorModel, z: np.ndarray, targets: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    n = z.shape[0]
    a = z @ model.w1.T + model.b1
    h = np.maximum(a, 0.0)
    pred = h @ model.w2 + model.b2
    err = pred - targets
    loss = float(np.mean(err**2))
    g = (2.0 / n) * err
    gw2 = h.T @ g
    gb2 = float(g.sum())
    dh = np.outer(g, model.w2)
    da = dh * (a > 0.0)
    gw1 = da.T @ z
    gb1 = da.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": np.array([gb2])}


def loss_and_gradient(
    model: RegressorModel, features: np.ndarray, targets: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE over the batch (raw, unwrapped predictions) and the backprop
    gradients for the head parameters. The projection gets no gradient."""
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    if features.shape[1] != model.input_dim:
        raise ValueError(f"dimension mismatch: got {features.shape[1]}, expected {model.input_dim}")
    z = features @ model.projection.T
    return _loss_grad_projected(model, z, targets)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """In-place bias-corrected Adam update."""
    if lr <= 0:
        raise ValueError("lr must be > 0")
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise RuntimeError("diverged: non-finite gradient")
    state.t += 1
    b1c = 1.0 - state.beta1**state.t
    b2c = 1.0 - state.beta2**state.t
    for key, p in params.items():
        g = grads[key]
        state.m[key] = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1.0 - state.beta2) * g**2
        m_hat = state.m[key] / b1c
        v_hat = state.v[key] / b2c
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Step schedule: the base rate is halved every lr_halving_period epochs."""
    if not (0 <= epoch < config.epochs):
        raise ValueError("epoch out of range")
    return config.lr0 / 2 ** (epoch // config.lr_halving_period)


def train(
    dataset: Dataset,
    config: TrainConfig,
    seed: int,
    projection_dim: int = 128,
    hidden: int = 512,
) -> tuple[RegressorModel, list[float]]:
    """Mini-batch training over the full recipe; returns the trained model
    (with the dataset's normalization statistics embedded) and the per-epoch
    mean squared error history."""
    if not dataset.samples:
        raise ValueError("empty dataset")
    x = normalize_features(dataset.feature_mean, dataset.feature_std, dataset.features())
    y = dataset.targets()
    n = x.shape[0]

    model = init_model(seed, x.shape[1], projection_dim, hidden)
    model.feature_mean = dataset.feature_mean.copy()
    model.feature_std = dataset.feature_std.copy()
    z = x @ model.projection.T  # projection is frozen, so project once

    params = model.trainable()
    state = AdamState.for_params(params)
    rng = np.random.default_rng(config.shuffle_seed)
    history: list[float] = []
    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        order = rng.permutation(n)
        sse = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = _loss_grad_projected(model, z[idx], y[idx])
            adam_step(params, grads, state, lr)
            model.b2 = float(params["b2"][0])
            sse += loss * idx.shape[0]
        epoch_loss = sse / n
        if not math.isfinite(epoch_loss):
            raise RuntimeError(f"diverged at epoch {epoch}")
        history.append(epoch_loss)
    return model, history


def save_model(model: RegressorModel, file: FilePath | str) -> None:
    """JSON serialization; floats use Python's shortest round-trip decimal
    encoding, so a save/load cycle is bit-faithful."""
    doc = {
        "input_dim": model.input_dim,
        "projection_dim": int(model.projection.shape[0]),
        "hidden": int(model.w1.shape[0]),
        "init_seed": model.init_seed,
        "projection": model.projection.tolist(),
        "w1": model.w1.tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.tolist(),
        "b2": model.b2,
        "feature_mean": None if model.feature_mean is None else model.feature_mean.tolist(),
        "feature_std": None if model.feature_std is None else model.feature_std.tolist(),
    }
    FilePath(file).write_text(json.dumps(doc, sort_keys=True))


def load_model(file: FilePath | str) -> RegressorModel:
    doc = json.loads(FilePath(file).read_text())
    return RegressorModel(
        projection=np.array(doc["projection"], dtype=float),
        w1=np.array(doc["w1"], dtype=float),
        b1=np.array(doc["b1"], dtype=float),
        w2=np.array(doc["w2"], dtype=float),
        b2=float(doc["b2"]),
        feature_mean=None if doc["feature_mean"] is None else np.array(doc["feature_mean"], dtype=float),
        feature_std=None if doc["feature_std"] is None else np.array(doc["feature_std"], dtype=float),
        init_seed=int(doc["init_seed"]),
    )
