"""Scoring models: linear and sigmoid-MLP rankers with manual backprop.

A model maps each item's feature vector to one real log score, items
independently of one another.  The backward pass consumes the per-item
gradient weights lambda produced by the estimators and returns the
parameter gradient of sum_d lambda_d * m(d); training then takes plain
gradient ascent steps.  No autodiff framework is involved, which keeps the
dependency surface at numpy and makes the chain rule directly testable
against finite differences.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = 1


class NonFiniteGradientError(FloatingPointError):
    """A parameter update was about to apply NaN or infinite values."""


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Weight matrices and bias vectors of a feedforward scorer.

    weights[i] has shape (fan_in, fan_out); hidden layers use sigmoid
    activations and the final layer is linear with a single output.  An
    empty hidden tuple gives a plain linear model.
    """

    weights: tuple
    biases: tuple
    feature_dim: int
    hidden: tuple

    def __post_init__(self):
        dims = (self.feature_dim, *self.hidden, 1)
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("layer count does not match the architecture")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} shapes {w.shape}/{b.shape} do not match {dims[i:i+2]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} contains non-finite parameters")

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Per-layer inputs kept from a forward pass for the backward pass."""

    layer_inputs: tuple  # input to each layer; layer_inputs[0] is the features
    scores: np.ndarray


@dataclass(frozen=True, eq=False)
class ParamGradient:
    weights: tuple
    biases: tuple

    def __add__(self, other):
        return ParamGradient(
            weights=tuple(a + b for a, b in zip(self.weights, other.weights)),
            biases=tuple(a + b for a, b in zip(self.biases, other.biases)),
        )


def init_params(feature_dim: int, hidden=(32, 32), seed=0) -> ModelParams:
    """Uniform init in [-r, r] with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    dims = (feature_dim, *hidden, 1)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(
        weights=tuple(weights), biases=tuple(biases),
        feature_dim=feature_dim, hidden=tuple(hidden),
    )


def _sigmoid(z):
    # Evaluated piecewise so neither branch exponentiates a large positive z.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def score(params: ModelParams, features) -> tuple[np.ndarray, ForwardTrace]:
    """Log scores for one query group's items plus the backprop trace."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.feature_dim:
        raise ValueError(f"features must be (items, {params.feature_dim})")
    inputs = [x]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        h = z if i == last else _sigmoid(z)
        if i != last:
            inputs.append(h)
    scores = h[:, 0]
    return scores, ForwardTrace(layer_inputs=tuple(inputs), scores=scores)


def backward(params: ModelParams, trace: ForwardTrace, lam) -> ParamGradient:
    """Parameter gradient of sum_d lambda_d * m(d), via the saved trace."""
    lam = np.asarray(lam, dtype=np.float64)
    n_items = trace.layer_inputs[0].shape[0]
    if lam.shape != (n_items,):
        raise ValueError("lambda must hold one weight per item")
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    delta = lam[:, None]
    for i in range(len(params.weights) - 1, -1, -1):
        grads_w[i] = trace.layer_inputs[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            h = trace.layer_inputs[i]
            delta = (delta @ params.weights[i].T) * h * (1.0 - h)
    return ParamGradient(weights=tuple(grads_w), biases=tuple(grads_b))


def sgd_step(params: ModelParams, grad: ParamGradient, learning_rate: float) -> ModelParams:
    """Ascent step w <- w + lr * grad; the lambda convention fixes the sign."""
    for i, (gw, gb) in enumerate(zip(grad.weights, grad.biases)):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NonFiniteGradientError(
                f"non-finite gradient in layer {i} "
                f"(|w| max {np.abs(gw).max() if gw.size else 0}, "
                f"|b| max {np.abs(gb).max() if gb.size else 0})"
            )
    return ModelParams(
        weights=tuple(w + learning_rate * gw for w, gw in zip(params.weights, grad.weights)),
        biases=tuple(b + learning_rate * gb for b, gb in zip(params.biases, grad.biases)),
        feature_dim=params.feature_dim,
        hidden=params.hidden,
    )


def params_vector(params: ModelParams) -> np.ndarray:
    """All parameters flattened to one vector (pairs with params_from_vector)."""
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def params_from_vector(template: ModelParams, vec) -> ModelParams:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size != template.n_parameters:
        raise ValueError("vector length does not match the parameter count")
    weights, biases, at = [], [], 0
    for w, b in zip(template.weights, template.biases):
        weights.append(vec[at : at + w.size].reshape(w.shape))
        at += w.size
        biases.append(vec[at : at + b.size].copy())
        at += b.size
    return ModelParams(
        weights=tuple(weights), biases=tuple(biases),
        feature_dim=template.feature_dim, hidden=template.hidden,
    )


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").reshape(shape).astype(np.float64)


def save_checkpoint(params: ModelParams, path):
    """Write a versioned JSON checkpoint; round-trips byte-identically."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "feature_dim": params.feature_dim,
        "hidden": list(params.hidden),
        "layers": [
            {"weight": _encode(w), "bias": _encode(b)}
            for w, b in zip(params.weights, params.biases)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    dims = (doc["feature_dim"], *doc["hidden"], 1)
    weights = tuple(
        _decode(layer["weight"], (dims[i], dims[i + 1]))
        for i, layer in enumerate(doc["layers"])
    )
    biases = tuple(
        _decode(layer["bias"], (dims[i + 1],)) for i, layer in enumerate(doc["layers"])
    )
    return ModelParams(
        weights=weights, biases=biases,
        feature_dim=doc["feature_dim"], hidden=tuple(doc["hidden"]),
    )
