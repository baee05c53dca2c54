"""Convergence-bound quantities and empirical estimates of their constants.

The bound has the form ``E||w_t - w*||^2 <= (1 - eta*mu)^t * offset + A`` with
``offset = ||w_0 - w*||^2 - A``. ``offset`` is what the literature writes as a
capital B; it is renamed here because ``B`` already counts Byzantine clients.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import model as logistic
from .data import Dataset

log = logging.getLogger(__name__)

INFLATION = 1.5


class DomainError(ValueError):
    """Inputs outside the region where the bound is defined."""


def c_alpha(B: int, G: int) -> float:
    """Geometric-median contamination factor ``(2 - 2a) / (1 - 2a)``, ``a = B/G``."""
    if G < 1 or B < 0:
        raise DomainError("need G >= 1 and B >= 0")
    if not 2 * B < G:
        raise DomainError(f"B={B} >= G/2={G / 2}: geometric median guarantee void")
    alpha = B / G
    return (2 - 2 * alpha) / (1 - 2 * alpha)


@dataclass(frozen=True)
class TheoremConstants:
    mu: float
    L: float
    delta2: float
    kappa2: float
    K2: float
    p: int
    sigma2: float
    P: float
    h_min: float
    eta: float
    B: int
    G: int

    def validate(self):
        if not self.mu > 0:
            raise DomainError("mu must be > 0")
        if self.L < self.mu:
            raise DomainError("L must be >= mu")
        if min(self.delta2, self.kappa2, self.K2, self.sigma2) < 0:
            raise DomainError("variance bounds must be >= 0")
        if not (self.P > 0 and self.h_min > 0 and self.eta > 0):
            raise DomainError("P, h_min and eta must be > 0")
        c_alpha(self.B, self.G)

    @property
    def step_size_ok(self) -> bool:
        return self.eta < self.mu / (2 * self.L ** 2)

    @property
    def max_step_size(self) -> float:
        return self.mu / (2 * self.L ** 2)


def asymptotic_error(c: TheoremConstants) -> float:
    c.validate()
    noise = c.p * c.sigma2 / (c.P * c.h_min ** 2) * c.K2
    return 2.0 / c.mu ** 2 * c_alpha(c.B, c.G) ** 2 * (c.delta2 + c.kappa2 + noise)


def bound_sequence(c: TheoremConstants, delta0: float, T: int) -> list:
    """Bound values for ``t = 0..T`` (``T + 1`` entries)."""
    rate = 1.0 - c.eta * c.mu
    if not c.eta * c.mu < 1:
        raise DomainError("eta * mu must be < 1")
    if not c.step_size_ok:
        log.warning("eta=%.3g exceeds mu/(2L^2)=%.3g; the bound is not guaranteed",
                    c.eta, c.max_step_size)
    A = asymptotic_error(c)
    offset = delta0 - A
    return [rate ** t * offset + A for t in range(T + 1)]


# -- ridge regression problem -------------------------------------------------

def ridge_loss(w, data: Dataset, lam: float = 0.0) -> float:
    r = data.features @ w - data.labels
    return float(0.5 * np.mean(r * r) + 0.5 * lam * np.dot(w, w))


def ridge_gradient(w, data: Dataset, lam: float = 0.0, batch_indices=None) -> np.ndarray:
    x, y = data.features, data.labels
    if batch_indices is not None:
        batch_indices = np.asarray(batch_indices, dtype=np.int64)
        if batch_indices.size == 0:
            raise ValueError("empty minibatch")
        x, y = x[batch_indices], y[batch_indices]
    return x.T @ (x @ w - y) / len(y) + lam * w


def ridge_per_sample_gradients(w, data: Dataset, lam: float = 0.0) -> np.ndarray:
    r = data.features @ w - data.labels
    return data.features * r[:, None] + lam * w


def ridge_optimum(datasets, lam: float) -> np.ndarray:
    """Minimizer of the average of equally weighted client ridge losses."""
    p = datasets[0].dim
    hess = lam * np.eye(p)
    rhs = np.zeros(p)
    for d in datasets:
        hess += d.features.T @ d.features / len(d) / len(datasets)
        rhs += d.features.T @ d.labels / len(d) / len(datasets)
    return np.linalg.solve(hess, rhs)


class RidgeModel:
    """Quadratic-loss counterpart of ``model.LogisticModel``."""

    name = "ridge"

    @staticmethod
    def num_params(data: Dataset) -> int:
        return data.dim

    @staticmethod
    def loss(w, data, lam=0.0):
        return ridge_loss(w, data, lam)

    @staticmethod
    def gradient(w, data, lam=0.0):
        return ridge_gradient(w, data, lam)

    @staticmethod
    def per_sample_gradients(w, data, lam=0.0):
        return ridge_per_sample_gradients(w, data, lam)

    @staticmethod
    def hessian(w, data, lam=0.0):
        x = data.features
        return x.T @ x / len(data) + lam * np.eye(x.shape[1])

    @staticmethod
    def accuracy(w, data):
        return None

    @staticmethod
    def local_sgd(w_t, data, cfg, rng):
        w_t = np.asarray(w_t, dtype=np.float64)
        w = w_t.copy()
        for _ in range(cfg.H):
            idx = rng.integers(0, len(data), size=cfg.b, dtype=np.int64)
            w -= cfg.eta * ridge_gradient(w, data, cfg.lam, idx)
        return w - w_t


class _LogisticAdapter:
    """Gradient surface of the logistic model for constant estimation."""

    @staticmethod
    def gradient(w, data, lam=0.0):
        return logistic.gradient(w, data, lam)

    @staticmethod
    def per_sample_gradients(w, data, lam=0.0):
        W = np.asarray(w).reshape(data.num_classes, data.dim)
        logits = data.features @ W.T
        logits -= logits.max(axis=1, keepdims=True)
        prob = np.exp(logits)
        prob /= prob.sum(axis=1, keepdims=True)
        prob[np.arange(len(data)), data.labels] -= 1.0
        g = prob[:, :, None] * data.features[:, None, :]
        return g.reshape(len(data), -1) + lam * np.asarray(w)


def _hvp(model, datasets, lam, w, v, h=1e-4):
    def grad(x):
        return sum(model.gradient(x, d, lam) for d in datasets) / len(datasets)
    return (grad(w + h * v) - grad(w - h * v)) / (2 * h)


def _power_iteration(matvec, p, rng, iters=3000, rtol=1e-12):
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for _ in range(iters):
        u = matvec(v)
        lam = float(np.dot(v, u))
        nrm = np.linalg.norm(u)
        if nrm == 0:
            return 0.0
        v = u / nrm
        if abs(lam - lam_old) <= rtol * max(1.0, abs(lam)):
            break
        lam_old = lam
    return lam


def hessian_extremes(model, datasets, lam, w, rng) -> tuple:
    """(smallest, largest) Hessian eigenvalue of the averaged loss at ``w``.

    Uses the model's explicit ``hessian`` when it has one, otherwise
    finite-difference Hessian-vector products.
    """
    p = w.size
    if hasattr(model, "hessian"):
        hess = sum(model.hessian(w, d, lam) for d in datasets) / len(datasets)
        matvec = hess.__matmul__
    else:
        def matvec(v):
            return _hvp(model, datasets, lam, w, v)
    top = _power_iteration(matvec, p, rng)
    low = top - _power_iteration(lambda v: top * v - matvec(v), p, rng)
    return low, top


def _ball_points(center, radius, count, rng):
    p = center.size
    pts = []
    for _ in range(count):
        u = rng.standard_normal(p)
        u /= np.linalg.norm(u)
        pts.append(center + radius * rng.uniform() ** (1.0 / p) * u)
    return pts


def estimate_constants(model, clients, lam: float, *, batch_size: int = 1,
                       center=None, radius: float = 1.0, extra_points=(),
                       sample_count: int = 20, hessian_points: int = 3,
                       seed: int = 0, inflation: float = INFLATION,
                       **channel) -> TheoremConstants:
    """Estimate strong convexity, smoothness and gradient-variation bounds.

    ``clients`` are the honest clients' datasets. Gradient statistics are
    maximized over ``center``, ``extra_points`` and ``sample_count`` points
    drawn uniformly from the ball of ``radius`` around ``center``, then
    multiplied by ``inflation``. ``channel`` supplies the remaining constant
    fields (``sigma2, P, h_min, eta, B, G``).
    """
    if not lam > 0:
        raise DomainError("constant estimation needs lambda > 0 (strong convexity)")
    if model is None or getattr(model, "name", "") == "logistic":
        model = _LogisticAdapter
    rng = np.random.default_rng(seed)
    p = clients[0].features.shape[1] * (clients[0].num_classes or 1)
    center = np.zeros(p) if center is None else np.asarray(center, dtype=np.float64)
    points = [center, *map(np.asarray, extra_points), *_ball_points(center, radius, sample_count, rng)]

    mu, L = math.inf, 0.0
    for w in points[:max(1, hessian_points)]:
        low, top = hessian_extremes(model, clients, lam, w, rng)
        mu, L = min(mu, low), max(L, top)
    mu = max(mu, lam)  # the L2 term alone guarantees lam

    delta2 = kappa2 = K2 = 0.0
    for w in points:
        grads = [model.gradient(w, d, lam) for d in clients]
        gbar = sum(grads) / len(grads)
        for d, g in zip(clients, grads):
            delta2 = max(delta2, float(np.sum((g - gbar) ** 2)))
            per = model.per_sample_gradients(w, d, lam)
            var = float(np.mean(np.sum((per - g) ** 2, axis=1))) / batch_size
            kappa2 = max(kappa2, var)
            K2 = max(K2, float(np.dot(g, g)) + var)

    consts = dict(sigma2=0.0, P=1.0, h_min=0.1, eta=1e-3, B=0, G=1)
    consts.update(channel)
    return TheoremConstants(mu=mu, L=max(L, mu), delta2=inflation * delta2,
                            kappa2=inflation * kappa2, K2=inflation * K2, p=p, **consts)

