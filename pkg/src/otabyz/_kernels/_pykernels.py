"""Numpy implementations of the hot loops (fallback for ``_ckernels``)."""
from __future__ import annotations

import numpy as np


def smoothed_objective(points, z, eps):
    d = np.linalg.norm(points - z, axis=1)
    return float(np.where(d <= eps, d * d / (2.0 * eps) + eps / 2.0, d).sum())


def weiszfeld(points, z0, eps, tol, max_iters):
    z = np.array(z0, dtype=np.float64, copy=True)
    iters = 0
    for k in range(max_iters):
        w = 1.0 / np.maximum(eps, np.linalg.norm(points - z, axis=1))
        nz = w @ points / w.sum()
        step = np.linalg.norm(nz - z)
        z = nz
        iters = k + 1
        if step <= tol:
            return z, iters, True
    return z, iters, False


def local_sgd_logistic(X, y, w0, batches, eta, lam, C):
    D = X.shape[1]
    w = np.array(w0, dtype=np.float64, copy=True)
    b = batches.shape[1]
    for batch in batches:
        xb = X[batch]
        W = w.reshape(C, D)
        logits = xb @ W.T
        logits -= logits.max(axis=1, keepdims=True)
        prob = np.exp(logits)
        prob /= prob.sum(axis=1, keepdims=True)
        prob[np.arange(b), y[batch]] -= 1.0
        g = (prob.T @ xb).ravel() / b
        w -= eta * (g + lam * w)
    return w
