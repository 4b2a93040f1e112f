"""Small fully connected networks trained with backpropagation and Adam.

Everything is float64.  Layers compute ``h @ W + b``; hidden layers use ReLU
and the output is either sigmoid or linear.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .gf2 import ShapeError

__all__ = [
    "MlpModel",
    "TrainConfig",
    "AdamState",
    "ModelFormatError",
    "CHECKPOINT_VERSION",
    "init_model",
    "forward",
    "loss_value",
    "grad",
    "adam_step",
    "train",
    "save_model",
    "load_model",
]

CHECKPOINT_VERSION = 1
LOSSES = ("mse", "bce")


class ModelFormatError(ValueError):
    """A checkpoint file is corrupt or has an unsupported version."""


@dataclass(eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "sigmoid"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if self.output_activation not in ("sigmoid", "linear"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("number of parameter arrays does not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if np.shape(w) != expected or np.shape(b) != (expected[1],):
                raise ShapeError(f"layer {i}: weight {np.shape(w)} / bias {np.shape(b)} do not chain as {expected}")
        # all parameters live in one contiguous buffer; weights/biases are views
        self.flat = np.concatenate([np.ravel(p) for p in _interleave(self.weights, self.biases)]).astype(np.float64)
        self.weights, self.biases = _views(self.flat, self.layer_sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
        )

    @property
    def n_parameters(self) -> int:
        return self.flat.size

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat)))

    def __call__(self, x):
        return forward(self, x)


def _interleave(weights, biases):
    return [p for pair in zip(weights, biases) for p in pair]


def _views(flat: np.ndarray, sizes: Sequence[int]):
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out))
        pos += fan_in * fan_out
        biases.append(flat[pos : pos + fan_out])
        pos += fan_out
    return weights, biases


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 100
    epochs: int = 1000
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


def init_model(layer_sizes: Sequence[int], rng: np.random.Generator, output_activation: str = "sigmoid") -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(layer_sizes), weights, biases, output_activation)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 + 0.5 * np.tanh(0.5 * z)


def _forward_cache(model: MlpModel, x: np.ndarray):
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i < last:
            h = np.maximum(z, 0.0)
        else:
            h = z
        acts.append(h)
    return acts  # acts[-1] holds output pre-activations


def _as_batch(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n_inputs:
        raise ShapeError(f"input has length {x.shape[1]}, model expects {model.n_inputs}")
    return x, single


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output for one input vector or a batch of row vectors."""
    xb, single = _as_batch(model, x)
    z = _forward_cache(model, xb)[-1]
    y = _sigmoid(z) if model.output_activation == "sigmoid" else z
    return y[0] if single else y


def _check_targets(model: MlpModel, x: np.ndarray, targets, mask):
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if t.shape != (x.shape[0], model.n_outputs):
        raise ShapeError(f"targets have shape {t.shape}, expected {(x.shape[0], model.n_outputs)}")
    if mask is not None:
        mask = np.atleast_2d(np.asarray(mask, dtype=np.float64))
        if mask.shape != t.shape:
            raise ShapeError(f"mask has shape {mask.shape}, expected {t.shape}")
    return t, mask


def _elementwise_loss(model: MlpModel, z: np.ndarray, t: np.ndarray, loss: str) -> np.ndarray:
    if loss == "mse":
        y = _sigmoid(z) if model.output_activation == "sigmoid" else z
        return (y - t) ** 2
    if loss == "bce":
        if model.output_activation != "sigmoid":
            raise ValueError("binary cross-entropy needs a sigmoid output")
        # -t log s(z) - (1-t) log(1-s(z)), written stably in terms of z
        return np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")


def loss_value(model: MlpModel, inputs, targets, loss: str = "mse", mask=None) -> float:
    """Batch mean of the per-sample loss summed over (masked) output components."""
    x, _ = _as_batch(model, inputs)
    t, mask = _check_targets(model, x, targets, mask)
    elem = _elementwise_loss(model, _forward_cache(model, x)[-1], t, loss)
    if mask is not None:
        elem = elem * mask
    return float(elem.sum() / x.shape[0])


def grad(model: MlpModel, inputs, targets, loss: str = "mse", mask=None):
    """Loss value and exact gradients ``[(dW_0, db_0), ...]`` of :func:`loss_value`."""
    x, _ = _as_batch(model, inputs)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    t, mask = _check_targets(model, x, targets, mask)
    value, flat = _flat_grad(model, x, t, loss, mask)
    dw, db = _views(flat, model.layer_sizes)
    return value, list(zip(dw, db))


def _flat_grad(model: MlpModel, x: np.ndarray, t: np.ndarray, loss: str, mask=None, out=None):
    """Loss value and the gradient laid out like ``model.flat``."""
    out = np.empty_like(model.flat) if out is None else out
    dws, dbs = _views(out, model.layer_sizes)
    acts = _forward_cache(model, x)
    z = acts[-1]
    elem = _elementwise_loss(model, z, t, loss)
    if mask is not None:
        elem = elem * mask
    batch = x.shape[0]
    value = float(elem.sum() / batch)

    if loss == "bce":
        delta = _sigmoid(z) - t
    elif model.output_activation == "sigmoid":
        y = _sigmoid(z)
        delta = 2.0 * (y - t) * y * (1.0 - y)
    else:
        delta = 2.0 * (z - t)
    if mask is not None:
        delta = delta * mask
    delta /= batch

    for i in range(len(model.weights) - 1, -1, -1):
        np.matmul(acts[i].T, delta, out=dws[i])
        np.sum(delta, axis=0, out=dbs[i])
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return value, out


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        return cls(np.zeros_like(model.flat), np.zeros_like(model.flat), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step)

    def scratch(self) -> tuple[np.ndarray, np.ndarray]:
        buf = self.__dict__.get("_scratch")
        if buf is None or buf[0].shape != self.m.shape:
            buf = (np.empty_like(self.m), np.empty_like(self.m))
            self.__dict__["_scratch"] = buf
        return buf


def adam_step(model: MlpModel, state: AdamState, grads, config: TrainConfig) -> tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update, applied in place to ``model`` and ``state``.

    ``grads`` is either the per-layer list returned by :func:`grad` or a flat
    vector laid out like ``model.flat``.
    """
    if isinstance(grads, np.ndarray):
        g = grads
    else:
        g = np.concatenate([np.ravel(a) for pair in grads for a in pair])
    if g.shape != model.flat.shape or state.m.shape != model.flat.shape:
        raise ShapeError("gradient or optimizer state does not match the model")
    state.step += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    m, v = state.m, state.v
    t, u = state.scratch()
    # in-place form of m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2; p -= lr/c1 * m / (sqrt(v/c2) + eps)
    np.multiply(g, 1.0 - b1, out=t)
    m *= b1
    m += t
    np.multiply(g, g, out=t)
    t *= 1.0 - b2
    v *= b2
    v += t
    np.divide(v, c2, out=t)
    np.sqrt(t, out=t)
    t += config.adam_epsilon
    np.multiply(m, config.learning_rate / c1, out=u)
    u /= t
    model.flat -= u
    return model, state


def train(
    model: MlpModel,
    dataset: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
    loss: str = "mse",
    state: AdamState | None = None,
) -> tuple[MlpModel, list[float]]:
    """Mini-batch Adam with seeded shuffling; trains ``model`` in place.

    The returned history holds the sample-weighted mean of the mini-batch
    losses seen during each epoch.
    """
    inputs = np.atleast_2d(np.asarray(dataset[0], dtype=np.float64))
    targets = np.atleast_2d(np.asarray(dataset[1], dtype=np.float64))
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    if targets.shape[0] != n:
        raise ShapeError(f"{n} inputs but {targets.shape[0]} targets")
    rng = np.random.default_rng(config.seed)
    state = state or AdamState.zeros_like(model)
    if inputs.shape[1] != model.n_inputs or targets.shape[1] != model.n_outputs:
        raise ShapeError(f"dataset shapes {inputs.shape}/{targets.shape} do not fit layer sizes {model.layer_sizes}")
    history = []
    buf = np.empty_like(model.flat)
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            value, g = _flat_grad(model, inputs[idx], targets[idx], loss, None, buf)
            total += value * idx.size
            adam_step(model, state, g, config)
        history.append(total / n)
        if not (math.isfinite(history[-1]) and model.is_finite()):
            raise FloatingPointError(f"non-finite loss or parameters at epoch {epoch + 1}")
    return model, history


def model_to_dict(model: MlpModel) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "output_activation": model.output_activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def model_from_dict(doc: dict) -> MlpModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("checkpoint must be a JSON object")
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise ModelFormatError(f"unsupported checkpoint version {version!r} (this build reads version {CHECKPOINT_VERSION})")
    try:
        weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
        return MlpModel(tuple(doc["layer_sizes"]), weights, biases, doc["output_activation"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed checkpoint: {exc}") from None


def save_model(model: MlpModel, path: str | Path) -> None:
    # repr-based float output round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n")


def load_model(path: str | Path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt checkpoint {path}: {exc}") from None
    return model_from_dict(doc)
