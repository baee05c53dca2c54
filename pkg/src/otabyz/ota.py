"""Analog over-the-air transmission of model updates.

Baseband is simulated with real vectors. With perfect channel knowledge the
client's phase pre-rotation ``exp(-j*phi)`` cancels the channel phase exactly,
so only the channel modulus enters the received signal; ``superpose``
multiplies each transmitted vector by its real gain ``h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class EmptyGroupError(RuntimeError):
    """Every client of a group fell below the truncation threshold."""


@dataclass(frozen=True)
class ChannelRealization:
    h: float
    phi: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("channel modulus must be > 0")
        if not -math.pi <= self.phi <= math.pi:
            raise ValueError("phase must lie in [-pi, pi]")


@dataclass(frozen=True)
class OtaConfig:
    P: float = 1.0
    sigma2: float = 1e-2
    h_min: float = 0.1
    rho_mode: str = "fixed"
    rho: float = 8.0
    fading_scale: float = 1.0

    def __post_init__(self):
        if not self.P > 0:
            raise ValueError("P must be > 0")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if not self.h_min > 0:
            raise ValueError("h_min must be > 0")
        if self.rho_mode not in ("fixed", "estimated"):
            raise ValueError("rho_mode must be 'fixed' or 'estimated'")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if not self.fading_scale > 0:
            raise ValueError("fading_scale must be > 0")


class Transmission(NamedTuple):
    """One client's slot contribution; ``signal`` is None when silent."""

    client: int
    signal: Optional[np.ndarray]
    channel: ChannelRealization


@dataclass(frozen=True)
class GroupReception:
    y: np.ndarray
    active_set: tuple

    @property
    def active_count(self) -> int:
        return len(self.active_set)


def draw_channels(N: int, rng: np.random.Generator, scale: float = 1.0) -> list:
    """Block-fading draws: Rayleigh moduli and uniform phases."""
    if N < 1:
        raise ValueError("N must be >= 1")
    h = rng.rayleigh(scale, size=N)
    # Rayleigh draws are a.s. positive; guard the measure-zero case.
    h = np.maximum(h, np.finfo(float).tiny)
    phi = rng.uniform(-math.pi, math.pi, size=N)
    return [ChannelRealization(float(a), float(b)) for a, b in zip(h, phi)]


def compute_rho(P: float, max_update_norm_sq: float) -> float:
    """Power scaling so the largest expected update just meets the budget."""
    if not (P > 0 and max_update_norm_sq > 0):
        raise ValueError("P and the maximum squared update norm must be > 0")
    return math.sqrt(P / max_update_norm_sq)


def precode(m, ch: ChannelRealization, rho: float, h_min: float):
    """Channel-inverting precoder; returns None (silent) when ``h <= h_min``."""
    if ch.h <= h_min:
        return None
    return (rho * h_min / ch.h) * np.asarray(m, dtype=np.float64)


def superpose(group_signals, sigma2: float, rng: np.random.Generator, p: int | None = None) -> GroupReception:
    """Sum the faded transmissions of one slot and add receiver noise.

    ``group_signals`` is a sequence of ``Transmission``. ``p`` is only needed
    when every member is silent.
    """
    active = [t for t in group_signals if t.signal is not None]
    if p is None:
        if not active:
            raise ValueError("vector length unknown: all transmissions are silent")
        p = active[0].signal.shape[0]
    y = np.zeros(p, dtype=np.float64)
    for t in active:
        y += t.channel.h * t.signal
    if sigma2 > 0:
        y += math.sqrt(sigma2) * rng.standard_normal(p)
    return GroupReception(y, tuple(t.client for t in active))


def estimate_group_update(rx: GroupReception, rho: float, h_min: float) -> np.ndarray:
    if rx.active_count == 0:
        raise EmptyGroupError("no active client in group")
    return rx.y / (rho * h_min * rx.active_count)


def effective_noise_variance(sigma2: float, active: int, rho: float, h_min: float) -> float:
    """Per-coordinate variance of the noise left on a group update estimate."""
    return sigma2 / (active ** 2 * rho ** 2 * h_min ** 2)
