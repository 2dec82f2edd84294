"""Feed-forward softmax classifier with per-example-weighted cross-entropy.

Everything is plain numpy in double precision. The loss for a batch is
(1/|B|) * sum_i lambda_i * (-log p[y_i]), so a zero weight contributes zero
loss and zero gradient, and all-ones weights reduce to the unweighted mean
cross-entropy bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

LOG_CLAMP = 1e-12  # floor for log(p); keeps the loss finite


@dataclass
class ClassifierState:
    layer_sizes: list
    weights: list  # per layer, shape (fan_in, fan_out)
    biases: list  # per layer, shape (fan_out,)
    activation: str = "relu"
    rng_seed: int = 0

    @property
    def num_classes(self):
        return self.layer_sizes[-1]

    def copy(self):
        return ClassifierState(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            rng_seed=self.rng_seed,
        )

    def flatten(self):
        """All parameters as one vector (row-major, weights then bias per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


@dataclass
class OptimizerState:
    kind: str = "adam"  # "sgd" | "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)  # Adam first moments
    v: list = field(default_factory=list)  # Adam second moments

    def __post_init__(self):
        # zero is allowed so a fine-tune phase can be disabled outright
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind: {self.kind}")


@dataclass
class Batch:
    ids: list
    features: np.ndarray  # (n, dim)
    labels: np.ndarray  # (n,)
    weights: np.ndarray  # (n,), in [0,1]

    def __post_init__(self):
        n = len(self.ids)
        if n < 1:
            raise ValueError("batch must contain at least one example")
        if not (len(self.features) == len(self.labels) == len(self.weights) == n):
            raise ValueError("batch field lengths differ")


def init_classifier(layer_sizes, activation="relu", seed=0):
    """Fresh parameters: weights ~ N(0, 1/fan_in), biases zero, seeded."""
    if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
        raise ValueError(f"invalid layer sizes: {layer_sizes}")
    if activation not in ("relu", "tanh"):
        raise ValueError(f"unknown activation: {activation}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ClassifierState(list(layer_sizes), weights, biases, activation, seed)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(z, kind):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    return 1.0 - np.tanh(z) ** 2


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(s, X):
    """Returns (probabilities, pre-activation cache, activation cache)."""
    a = X
    zs, acts = [], [a]
    last = len(s.weights) - 1
    for i, (w, b) in enumerate(zip(s.weights, s.biases)):
        z = a @ w + b
        zs.append(z)
        a = z if i == last else _activate(z, s.activation)
        acts.append(a)
    return _softmax(zs[-1]), zs, acts


def predict_proba(s, features):
    """Class probability vector(s); accepts a single vector or a matrix."""
    X = np.asarray(features, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != s.layer_sizes[0]:
        raise ValueError(
            f"feature length {X.shape[1]} != input dim {s.layer_sizes[0]}"
        )
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite feature values")
    probs, _, _ = _forward(s, X)
    return probs[0] if single else probs


def weighted_ce_loss(s, batch):
    """Weighted cross-entropy loss and its gradients.

    Returns (loss, grads) with grads a list of (dW, db) per layer. Examples
    whose predicted probability hits the log clamp get a zero gradient,
    consistent with the clamped (constant) loss.
    """
    X = np.asarray(batch.features, dtype=np.float64)
    y = np.asarray(batch.labels, dtype=np.int64)
    lam = np.asarray(batch.weights, dtype=np.float64)
    n = len(y)
    probs, zs, acts = _forward(s, X)
    p_assigned = probs[np.arange(n), y]
    loss = float(np.mean(lam * -np.log(np.maximum(p_assigned, LOG_CLAMP))))

    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    scale = lam / n
    scale = np.where(p_assigned <= LOG_CLAMP, 0.0, scale)
    delta = (probs - onehot) * scale[:, None]

    grads = [None] * len(s.weights)
    for i in range(len(s.weights) - 1, -1, -1):
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ s.weights[i].T) * _activate_grad(zs[i - 1], s.activation)
    return loss, grads


def step(s, o, grads):
    """Apply one optimizer update in place; returns (state, optimizer)."""
    if len(grads) != len(s.weights):
        raise ValueError("gradient/parameter layer count mismatch")
    for (dw, db), w, b in zip(grads, s.weights, s.biases):
        if dw.shape != w.shape or db.shape != b.shape:
            raise ValueError("gradient shape mismatch")
    if o.kind == "sgd":
        for (dw, db), w, b in zip(grads, s.weights, s.biases):
            w -= o.learning_rate * dw
            b -= o.learning_rate * db
        return s, o
    if not o.m:
        o.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(s.weights, s.biases)]
        o.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(s.weights, s.biases)]
    o.step_count += 1
    t = o.step_count
    for i, (dw, db) in enumerate(grads):
        for g, p, slot in ((dw, s.weights[i], 0), (db, s.biases[i], 1)):
            m = o.m[i][slot]
            v = o.v[i][slot]
            m *= o.beta1
            m += (1 - o.beta1) * g
            v *= o.beta2
            v += (1 - o.beta2) * g * g
            m_hat = m / (1 - o.beta1**t)
            v_hat = v / (1 - o.beta2**t)
            p -= o.learning_rate * m_hat / (np.sqrt(v_hat) + o.eps)
    return s, o


def train_epoch(s, o, batches):
    """One pass over the batches in order.

    Returns (state, optimizer, mean_loss, prob_map) where prob_map holds, for
    every example seen, the probability of its assigned label from the forward
    pass used for that batch's loss (i.e. before the batch's update).
    """
    prob_map = {}
    losses = []
    for batch in batches:
        X = np.asarray(batch.features, dtype=np.float64)
        probs, _, _ = _forward(s, X)
        for j, ex_id in enumerate(batch.ids):
            prob_map[ex_id] = float(probs[j, batch.labels[j]])
        loss, grads = weighted_ce_loss(s, batch)
        losses.append(loss)
        step(s, o, grads)
    mean_loss = float(np.mean(losses)) if losses else 0.0
    return s, o, mean_loss, prob_map


def save_checkpoint(s, path):
    """JSON checkpoint: shapes plus row-major parameter lists, float-exact."""
    payload = {
        "layer_sizes": list(s.layer_sizes),
        "activation": s.activation,
        "rng_seed": s.rng_seed,
        "weights": [w.ravel().tolist() for w in s.weights],
        "biases": [b.tolist() for b in s.biases],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    sizes = payload["layer_sizes"]
    weights = [
        np.array(flat, dtype=np.float64).reshape(fan_in, fan_out)
        for flat, fan_in, fan_out in zip(payload["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.array(b, dtype=np.float64) for b in payload["biases"]]
    return ClassifierState(
        layer_sizes=list(sizes),
        weights=weights,
        biases=biases,
        activation=payload["activation"],
        rng_seed=payload["rng_seed"],
    )
