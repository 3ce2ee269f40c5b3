"""Minibatch training, evaluation and input preprocessing."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .functional import NonFiniteError, softmax_cross_entropy
from .network import Network
from .optim import Adam

log = logging.getLogger(__name__)


def preprocess(channels: np.ndarray, scale: np.ndarray | None = None):
    """log(1 + v) per entry, divided by a per-channel maximum.

    ``channels`` is (N, C, H, W). When ``scale`` is None it is computed from
    this array (pass the training split); returns (features, scale).
    """
    x = np.log1p(np.asarray(channels, dtype=np.float64))
    if scale is None:
        scale = x.max(axis=(0, 2, 3)) if len(x) else np.ones(x.shape[1])
        scale = np.where(scale > 0, scale, 1.0)
    return x / np.asarray(scale)[None, :, None, None], np.asarray(scale, dtype=np.float64)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float

    def csv_row(self) -> str:
        return f"{self.epoch},{self.train_loss:.10g},{self.train_acc:.10g},{self.test_acc:.10g}"


CSV_HEADER = "epoch,train_loss,train_acc,test_acc"


def evaluate(network: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 64):
    """Mean loss, accuracy and predictions over (x, y) in fixed-order batches."""
    if len(x) == 0:
        return float("nan"), float("nan"), np.zeros(0, dtype=np.int64)
    losses, preds = [], []
    for start in range(0, len(x), batch_size):
        logits = network.forward(x[start : start + batch_size])
        loss, _ = softmax_cross_entropy(logits, y[start : start + batch_size])
        losses.append(loss * len(logits))
        preds.append(logits.argmax(axis=1))
    preds = np.concatenate(preds)
    return float(sum(losses) / len(x)), float(np.mean(preds == y)), preds


def train(network: Network, optimizer: Adam, x_train, y_train, x_test, y_test, *,
          epochs: int, batch_size: int = 16, rng: np.random.Generator,
          on_epoch: Callable[[EpochRecord], None] | None = None,
          log_steps: bool = False) -> list[EpochRecord]:
    """Shuffle each epoch with ``rng`` and take one Adam step per minibatch.

    After every epoch the train loss/accuracy and test accuracy are measured
    with a full pass in fixed order.
    """
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(x_train))
        for step, start in enumerate(range(0, len(order), batch_size), start=1):
            idx = order[start : start + batch_size]
            network.zero_grad()
            try:
                loss = network.loss_and_grad(x_train[idx], y_train[idx])
            except NonFiniteError as exc:
                raise NonFiniteError(f"epoch {epoch} step {step}: {exc}") from None
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch} step {step}")
            optimizer.step(network.named_grads())
            if log_steps:
                log.info("epoch %d step %d loss %.6f", epoch, step, loss)
        train_loss, train_acc, _ = evaluate(network, x_train, y_train)
        _, test_acc, _ = evaluate(network, x_test, y_test)
        record = EpochRecord(epoch, train_loss, train_acc, test_acc)
        history.append(record)
        if on_epoch:
            on_epoch(record)
    return history


def confusion_matrix(y_true, y_pred, classes: int) -> np.ndarray:
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm
