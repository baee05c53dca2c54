"""Multinomial logistic regression and local minibatch SGD.

Parameters are a flat vector of length ``C * D`` laid out class-major, where
``D`` is the feature dimension including the bias column.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset


class NonFiniteParameters(FloatingPointError):
    pass


@dataclass(frozen=True)
class LocalSgdConfig:
    H: int = 12
    b: int = 50
    eta: float = 0.01
    lam: float = 0.0

    def __post_init__(self):
        if self.H < 0:
            raise ValueError("H must be >= 0")
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


def num_params(data: Dataset) -> int:
    return data.dim * data.num_classes


def _weights(w: np.ndarray, data: Dataset) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (num_params(data),):
        raise ValueError(
            f"parameter vector has shape {w.shape}, expected ({num_params(data)},)"
        )
    return w.reshape(data.num_classes, data.dim)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss(w, data: Dataset, lam: float = 0.0) -> float:
    """Mean cross-entropy plus ``lam / 2 * ||w||^2``."""
    W = _weights(w, data)
    logp = _log_softmax(data.features @ W.T)
    ce = -logp[np.arange(len(data)), data.labels].mean()
    return float(ce + 0.5 * lam * np.dot(W.ravel(), W.ravel()))


def stochastic_gradient(w, data: Dataset, batch_indices, lam: float = 0.0) -> np.ndarray:
    """Gradient of the batch-mean loss (including the L2 term) at ``w``."""
    W = _weights(w, data)
    idx = np.asarray(batch_indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty minibatch")
    xb = data.features[idx]
    prob = np.exp(_log_softmax(xb @ W.T))
    prob[np.arange(idx.size), data.labels[idx]] -= 1.0
    return (prob.T @ xb).ravel() / idx.size + lam * W.ravel()


def gradient(w, data: Dataset, lam: float = 0.0) -> np.ndarray:
    return stochastic_gradient(w, data, np.arange(len(data)), lam)


def accuracy(w, data: Dataset) -> float:
    """Fraction of argmax-correct predictions; ties go to the lowest class."""
    W = _weights(w, data)
    pred = np.argmax(data.features @ W.T, axis=1)
    return float(np.mean(pred == data.labels))


def draw_batches(m: int, cfg: LocalSgdConfig, rng: np.random.Generator) -> np.ndarray:
    """``(H, b)`` sample indices drawn uniformly with replacement."""
    return rng.integers(0, m, size=(cfg.H, cfg.b), dtype=np.int64)


def local_sgd(w_t, data: Dataset, cfg: LocalSgdConfig, rng: np.random.Generator) -> np.ndarray:
    """Run ``cfg.H`` minibatch SGD steps from ``w_t``; return ``w_H - w_t``."""
    w_t = np.asarray(w_t, dtype=np.float64)
    _weights(w_t, data)
    if cfg.H == 0:
        return np.zeros_like(w_t)
    batches = draw_batches(len(data), cfg, rng)
    w_end = _kernels.local_sgd_logistic(
        data.features, data.labels, w_t, batches, cfg.eta, cfg.lam, data.num_classes
    )
    if not np.all(np.isfinite(w_end)):
        raise NonFiniteParameters("local SGD produced non-finite parameters")
    return w_end - w_t


class LogisticModel:
    """Adapter used by the engine; the ridge counterpart lives in ``theory``."""

    name = "logistic"

    @staticmethod
    def num_params(data: Dataset) -> int:
        return num_params(data)

    @staticmethod
    def loss(w, data: Dataset, lam: float = 0.0) -> float:
        return loss(w, data, lam)

    @staticmethod
    def accuracy(w, data: Dataset) -> float | None:
        return accuracy(w, data)

    @staticmethod
    def local_sgd(w_t, data: Dataset, cfg: LocalSgdConfig, rng) -> np.ndarray:
        return local_sgd(w_t, data, cfg, rng)
