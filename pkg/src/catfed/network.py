"""Dense feed-forward classifier trained with plain SGD.

Float64 everywhere, ReLU hidden layers, softmax output.  Parameters are held
in immutable arrays; every training step returns a fresh ModelParams, which is
what lets concurrent client updates share one global model safely.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-12  # clamp before log so empty-probability classes stay finite


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.003
    batch_size: int = 32
    local_epochs: int = 1

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.local_epochs < 1:
            raise ValueError(f"local_epochs must be positive, got {self.local_epochs}")


@dataclass(frozen=True)
class ModelParams:
    """Layered weights (fan_out x fan_in) and biases (fan_out,), read-only."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty and parallel")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {l}: weight {w.shape} / bias {b.shape} mismatch")
            if l > 0 and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(
                    f"layer {l}: fan-in {w.shape[1]} != previous fan-out "
                    f"{self.weights[l - 1].shape[0]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {l}: non-finite parameters")
            w.flags.writeable = False
            b.flags.writeable = False

    @property
    def architecture(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]


@dataclass(frozen=True)
class EvalReport:
    """Accuracy plus a per-category loss ledger.

    ``summed_loss`` is accumulated category-major (ascending category id), so
    summing the per-category entries in id order reproduces it exactly.
    ``per_category_loss`` maps category id -> (summed loss, sample count) and
    has no entry for categories absent from the evaluated set.
    """

    accuracy: float
    total_loss: float
    summed_loss: float
    per_category_loss: dict[int, tuple[float, int]] = field(default_factory=dict)
    num_samples: int = 0
    num_categories: int = 0


def init_model(architecture: list[int], rng: np.random.Generator) -> ModelParams:
    """Uniform fan-in-scaled weights (bound sqrt(6/fan_in)), zero biases."""
    if len(architecture) < 2 or any(int(n) < 1 for n in architecture):
        raise ValueError(f"architecture needs >= 2 positive widths, got {architecture}")
    weights = []
    biases = []
    for fan_in, fan_out in zip(architecture[:-1], architecture[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=tuple(weights), biases=tuple(biases))


def _check_batch(model: ModelParams, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.weights[0].shape[1]:
        raise ValueError(
            f"batch shape {batch.shape} incompatible with input width "
            f"{model.weights[0].shape[1]}"
        )
    return batch


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=1, keepdims=True)


def _forward_trace(model: ModelParams, batch: np.ndarray):
    # Returns per-layer inputs (post-activation) and the final probabilities.
    activations = [batch]
    a = batch
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        a = _softmax(z) if l == last else np.maximum(z, 0.0)
        activations.append(a)
    return activations


def forward(model: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Class probabilities for each row of ``batch``; rows sum to 1."""
    return _forward_trace(model, _check_batch(model, batch))[-1]


def _check_labels(model: ModelParams, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= model.num_classes):
        raise ValueError(
            f"labels must be in [0, {model.num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels.astype(np.intp)


def per_sample_losses(model: ModelParams, batch: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Cross-entropy of each sample against its label."""
    batch = _check_batch(model, batch)
    labels = _check_labels(model, labels)
    probs = forward(model, batch)
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def loss_and_grad(
    model: ModelParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, ModelParams]:
    """Mean softmax cross-entropy and its exact gradient via backpropagation."""
    batch = _check_batch(model, batch)
    labels = _check_labels(model, labels)
    n = batch.shape[0]
    if n == 0:
        raise ValueError("batch is empty")

    activations = _forward_trace(model, batch)
    probs = activations[-1]
    picked = probs[np.arange(n), labels]
    loss = float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())

    # Output delta of softmax + cross-entropy; hidden deltas gated by ReLU.
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grad_w = [np.empty(0)] * len(model.weights)
    grad_b = [np.empty(0)] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        a_in = activations[l]
        grad_w[l] = delta.T @ a_in
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l]
            delta = np.where(activations[l] > 0.0, delta, 0.0)

    return loss, ModelParams(weights=tuple(grad_w), biases=tuple(grad_b))


def sgd_step(model: ModelParams, grad: ModelParams, learning_rate: float) -> ModelParams:
    weights = tuple(w - learning_rate * g for w, g in zip(model.weights, grad.weights))
    biases = tuple(b - learning_rate * g for b, g in zip(model.biases, grad.biases))
    return ModelParams(weights=weights, biases=biases)


def client_update(
    model: ModelParams,
    images: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
) -> ModelParams:
    """Local refinement: per epoch, shuffle, split into batches of B, SGD each.

    The last short batch is trained on rather than dropped.  The input model
    is never touched; the updated copy is returned.
    """
    images = _check_batch(model, images)
    if images.shape[0] == 0:
        raise ValueError("client data is empty")
    labels = _check_labels(model, labels)
    if labels.shape[0] != images.shape[0]:
        raise ValueError(f"{images.shape[0]} images vs {labels.shape[0]} labels")

    current = model
    n = images.shape[0]
    for _ in range(config.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grad = loss_and_grad(current, images[idx], labels[idx])
            current = sgd_step(current, grad, config.learning_rate)
    return current


def evaluate(model: ModelParams, images: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Argmax accuracy plus the per-category loss decomposition."""
    images = _check_batch(model, images)
    if images.shape[0] == 0:
        raise ValueError("evaluation set is empty")
    labels = _check_labels(model, labels)
    losses = per_sample_losses(model, images, labels)
    predictions = np.argmax(forward(model, images), axis=1)
    accuracy = float(np.mean(predictions == labels))

    per_category: dict[int, tuple[float, int]] = {}
    summed = 0.0
    for c in range(model.num_classes):
        mask = labels == c
        count = int(mask.sum())
        if count == 0:
            continue
        category_sum = float(losses[mask].sum())
        per_category[c] = (category_sum, count)
        summed += category_sum

    return EvalReport(
        accuracy=accuracy,
        total_loss=summed / images.shape[0],
        summed_loss=summed,
        per_category_loss=per_category,
        num_samples=images.shape[0],
        num_categories=model.num_classes,
    )


def save_model(model: ModelParams, path) -> None:
    """Checkpoint: count-prefixed <i32 widths, then per layer row-major <f8 W, then b."""
    arch = model.architecture
    with open(path, "wb") as f:
        f.write(struct.pack("<i", len(arch)))
        f.write(struct.pack(f"<{len(arch)}i", *arch))
        for w, b in zip(model.weights, model.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path) -> ModelParams:
    with open(path, "rb") as f:
        raw = f.read(4)
        if len(raw) < 4:
            raise ValueError(f"{path}: truncated header")
        (n_widths,) = struct.unpack("<i", raw)
        if n_widths < 2:
            raise ValueError(f"{path}: invalid width count {n_widths}")
        arch = list(struct.unpack(f"<{n_widths}i", f.read(4 * n_widths)))
        weights = []
        biases = []
        for fan_in, fan_out in zip(arch[:-1], arch[1:]):
            w = np.frombuffer(f.read(8 * fan_out * fan_in), dtype="<f8")
            b = np.frombuffer(f.read(8 * fan_out), dtype="<f8")
            if w.size != fan_out * fan_in or b.size != fan_out:
                raise ValueError(f"{path}: truncated layer payload")
            weights.append(w.reshape(fan_out, fan_in).copy())
            biases.append(b.copy())
    return ModelParams(weights=tuple(weights), biases=tuple(biases))
