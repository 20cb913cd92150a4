"""Minibatch SGD with momentum, keeping the best validation epoch."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .network import (NetworkConfig, backward, cross_entropy, forward, init_params,
                      softmax)

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    params: object
    history: list = field(default_factory=list)
    best_epoch: int | None = None

    def __iter__(self):
        # allows ``params, history = train(...)``
        return iter((self.params, self.history))


def _evaluate(params, images, labels, batch_size):
    if len(images) == 0:
        return float("nan"), float("nan")
    probs = np.concatenate([softmax(forward(params, images[i:i + batch_size])[0])
                            for i in range(0, len(images), batch_size)])
    acc = float(np.mean(probs.argmax(axis=1) == labels))
    return cross_entropy(probs, labels), acc


def train(train_set, val_set, config, net=None, dtype=np.float64):
    """Train from scratch.

    ``train_set`` and ``val_set`` are ``(images, labels)`` pairs with images
    shaped (N, H, W, 3) in [0, 1]. Returns a :class:`TrainResult` holding the
    parameters of the best validation epoch and the per-epoch history.
    """
    x_train, y_train = (np.asarray(a) for a in train_set)
    x_val, y_val = (np.asarray(a) for a in val_set)
    if len(x_train) == 0:
        raise ValueError("training set is empty")
    net = net or NetworkConfig(input_size=x_train.shape[1:])
    x_train = x_train.astype(dtype, copy=False)
    x_val = x_val.astype(dtype, copy=False)
    y_train = y_train.astype(np.intp)
    y_val = y_val.astype(np.intp)

    params = init_params(net, config.seed, dtype=dtype)
    result = TrainResult(params.copy())
    if config.epochs == 0:
        return result
    rng = np.random.default_rng(config.seed + 1)
    velocity = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    lr = np.dtype(dtype).type(config.learning_rate)
    mu = np.dtype(dtype).type(config.momentum)
    best_acc = (-np.inf, -np.inf)
    n = len(x_train)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, cache = forward(params, x_train[idx])
            probs = softmax(logits)
            loss = cross_entropy(probs, y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}")
            loss_sum += loss * len(idx)
            correct += int(np.sum(probs.argmax(axis=1) == y_train[idx]))
            grads = backward(params, cache, y_train[idx])
            for k, g in grads.items():
                v = velocity[k]
                v *= mu
                v -= lr * g
                params.tensors[k] += v
        val_loss, val_acc = _evaluate(params, x_val, y_val, 256)
        rec = EpochRecord(epoch, loss_sum / n, correct / n, val_loss, val_acc)
        result.history.append(rec)
        log.info("epoch %d: train loss %.4f acc %.4f | val loss %.4f acc %.4f",
                 epoch, rec.train_loss, rec.train_accuracy, val_loss, val_acc)
        # best validation accuracy, then lowest validation loss, then earliest
        score = (val_acc, -val_loss) if np.isfinite(val_acc) else (-np.inf, -rec.train_loss)
        if score > best_acc:
            best_acc = score
            result.params = params.copy()
            result.best_epoch = epoch
    return result


def history_to_csv(history):
    lines = ["epoch,train_loss,train_accuracy,val_loss,val_accuracy"]
    for r in history:
        lines.append(f"{r.epoch},{r.train_loss!r},{r.train_accuracy!r},"
                     f"{r.val_loss!r},{r.val_accuracy!r}")
    return "\n".join(lines) + "\n"
