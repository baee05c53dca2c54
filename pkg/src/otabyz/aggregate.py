"""Aggregation of group updates: arithmetic mean and smoothed geometric median."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeomedConfig:
    """Smoothed Weiszfeld settings. ``tol=None`` means ``1e-7 * (1 + ||init||)``."""

    epsilon: float = 1e-4
    tol: Optional[float] = None
    max_iters: int = 100

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class GeomedResult:
    z: np.ndarray
    iterations: int
    converged: bool


def _stack(updates) -> np.ndarray:
    if len(updates) == 0:
        raise ValueError("cannot aggregate an empty set of updates")
    arr = np.ascontiguousarray(np.asarray(updates, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError("updates must be equal-length vectors")
    return arr


def mean(updates) -> np.ndarray:
    return _stack(updates).mean(axis=0)


def smoothed_norm(x, epsilon: float) -> float:
    """Huber-style smoothing of the Euclidean norm around the origin."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    r = float(np.linalg.norm(x))
    if r <= epsilon:
        return r * r / (2.0 * epsilon) + epsilon / 2.0
    return r


def objective(z, updates, epsilon: float) -> float:
    """``sum_i ||z - u_i||_eps``."""
    return float(_kernels.smoothed_objective(_stack(updates), np.asarray(z, dtype=np.float64), epsilon))


def weiszfeld_step(z, updates, epsilon: float) -> np.ndarray:
    """One inverse-distance reweighting; distances are floored at ``epsilon``."""
    pts = _stack(updates)
    w = 1.0 / np.maximum(epsilon, np.linalg.norm(pts - np.asarray(z), axis=1))
    return w @ pts / w.sum()


def coordinate_median(updates) -> np.ndarray:
    return np.median(_stack(updates), axis=0)


def geomed(updates, cfg: GeomedConfig = GeomedConfig(), full_output: bool = False):
    """Smoothed geometric median, started at the coordinate-wise median.

    Stops when an iteration moves less than the tolerance or after
    ``cfg.max_iters`` steps; in the latter case the current iterate is
    returned and the miss is logged.
    """
    pts = _stack(updates)
    z0 = np.median(pts, axis=0)
    tol = cfg.tol if cfg.tol is not None else 1e-7 * (1.0 + float(np.linalg.norm(z0)))
    if len(pts) == 1:
        res = GeomedResult(pts[0].copy(), 0, True)
    else:
        z, iters, converged = _kernels.weiszfeld(pts, z0, cfg.epsilon, tol, cfg.max_iters)
        if not converged:
            log.debug("Weiszfeld hit max_iters=%d without reaching tol=%.3g",
                      cfg.max_iters, tol)
        res = GeomedResult(np.asarray(z), int(iters), bool(converged))
    return res if full_output else res.z

