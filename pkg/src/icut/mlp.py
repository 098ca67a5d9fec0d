"""From-scratch one-hidden-layer MLP with Adam, plus trace-based scores.

Binary targets train through a single sigmoid output with binary
cross-entropy; more classes switch to softmax + cross-entropy.  Training
records a per-epoch, per-sample correctness trace against the training
labels, which feeds the forgetting-count baseline.  Everything is plain
numpy and bit-for-bit deterministic given the seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import LabeledDataset, Metrics, balanced_error

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int = 32
    epochs: int = 20
    batch_size: int = 1024
    learning_rate: float = 1e-2
    num_classes: int = 2
    seed: int = 0

    def __post_init__(self):
        if min(self.hidden_units, self.epochs, self.batch_size, self.num_classes) < 1:
            raise ValueError("all MLP config counts must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class TrainedClassifier:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    num_classes: int
    trace: Optional[np.ndarray] = None  # epochs x n_train correctness bits

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError("feature dimension mismatch")
        H = np.maximum(X @ self.W1 + self.b1, 0.0)
        Z = H @ self.W2 + self.b2
        if self.num_classes == 2:
            p1 = _sigmoid(Z[:, 0])
            return np.column_stack([1.0 - p1, p1])
        return _softmax(Z)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def init_params(d: int, hidden: int, out: int, rng: np.random.Generator):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
    s1 = 1.0 / np.sqrt(d)
    s2 = 1.0 / np.sqrt(hidden)
    return [
        rng.uniform(-s1, s1, size=(d, hidden)),
        rng.uniform(-s1, s1, size=hidden),
        rng.uniform(-s2, s2, size=(hidden, out)),
        rng.uniform(-s2, s2, size=out),
    ]


def loss_and_grads(params, X: np.ndarray, y: np.ndarray, num_classes: int):
    """Mean loss over the batch and gradients for [W1, b1, W2, b2]."""
    W1, b1, W2, b2 = params
    B = X.shape[0]
    Z1 = X @ W1 + b1
    H = np.maximum(Z1, 0.0)
    Z2 = H @ W2 + b2
    if num_classes == 2:
        p = _sigmoid(Z2[:, 0])
        yf = y.astype(np.float64)
        eps = 1e-12
        loss = -np.mean(yf * np.log(p + eps) + (1.0 - yf) * np.log(1.0 - p + eps))
        dZ2 = ((p - yf) / B)[:, None]
    else:
        P = _softmax(Z2)
        loss = -np.mean(np.log(P[np.arange(B), y] + 1e-12))
        dZ2 = P.copy()
        dZ2[np.arange(B), y] -= 1.0
        dZ2 /= B
    gW2 = H.T @ dZ2
    gb2 = dZ2.sum(axis=0)
    dH = dZ2 @ W2.T
    dZ1 = dH * (Z1 > 0)
    gW1 = X.T @ dZ1
    gb1 = dZ1.sum(axis=0)
    return float(loss), [gW1, gb1, gW2, gb2]


def train_mlp(train: LabeledDataset, config: MlpConfig) -> TrainedClassifier:
    """Mini-batch Adam training with a per-epoch correctness trace."""
    if train.n == 0:
        raise ValueError("empty selection")
    X = train.features
    y = train.noisy_labels
    out_units = 1 if config.num_classes == 2 else config.num_classes
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed) & (2**63 - 1), 23]))
    params = init_params(train.d, config.hidden_units, out_units, rng)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    t = 0
    trace = np.zeros((config.epochs, train.n), dtype=bool)
    model = TrainedClassifier(*params, num_classes=config.num_classes)
    for epoch in range(config.epochs):
        order = rng.permutation(train.n)
        for start in range(0, train.n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grads = loss_and_grads(params, X[idx], y[idx], config.num_classes)
            t += 1
            for i, g in enumerate(grads):
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g
                mhat = m[i] / (1.0 - ADAM_BETA1**t)
                vhat = v[i] / (1.0 - ADAM_BETA2**t)
                params[i] -= config.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
        model = TrainedClassifier(*params, num_classes=config.num_classes)
        trace[epoch] = model.predict(X) == y
    model.trace = trace
    return model


def evaluate(model: TrainedClassifier, test: LabeledDataset) -> Metrics:
    """Accuracy and balanced error against the test set's true labels."""
    if test.true_labels is None:
        raise ValueError("ground truth unavailable")
    pred = model.predict(test.features)
    acc = float(np.mean(pred == test.true_labels))
    bal = balanced_error(pred, test.true_labels)
    return Metrics(classifier_accuracy=acc, balanced_error=bal)


def entropy_scores(model: TrainedClassifier, dataset: LabeledDataset) -> np.ndarray:
    """Shannon entropy (nats) of each predictive distribution."""
    P = np.clip(model.predict_proba(dataset.features), 1e-12, 1.0 - 1e-12)
    return -(P * np.log(P)).sum(axis=1)


def forgetting_counts(trace: np.ndarray) -> np.ndarray:
    """Correct->incorrect transitions; never-correct gets the epoch count."""
    trace = np.asarray(trace, dtype=bool)
    if trace.ndim != 2 or trace.size == 0:
        raise ValueError("empty trace")
    epochs = trace.shape[0]
    forgets = (trace[:-1] & ~trace[1:]).sum(axis=0) if epochs > 1 else np.zeros(trace.shape[1], dtype=np.int64)
    never = ~trace.any(axis=0)
    counts = forgets.astype(np.int64)
    counts[never] = epochs
    return counts


MAGIC = b"MLP1"


def save_classifier(model: TrainedClassifier, path) -> None:
    """Flat binary: magic, u32-LE dims (d, hidden, C), then f64-LE layers."""
    d, hidden = model.W1.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", d, hidden, model.num_classes))
        for arr in (model.W1, model.b1, model.W2, model.b2):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_classifier(path) -> TrainedClassifier:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ValueError("not a classifier weight file")
    if len(blob) < 16:
        raise ValueError("corrupt classifier weight file")
    d, hidden, C = struct.unpack_from("<III", blob, 4)
    out_units = 1 if C == 2 else C
    shapes = [(d, hidden), (hidden,), (hidden, out_units), (out_units,)]
    if len(blob) != 16 + 8 * sum(int(np.prod(s)) for s in shapes):
        raise ValueError("corrupt classifier weight file")
    offset = 16
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        arrays.append(arr.astype(np.float64))
        offset += count * 8
    return TrainedClassifier(*arrays, num_classes=C)
