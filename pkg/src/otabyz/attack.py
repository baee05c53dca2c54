"""Byzantine client behaviours."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset

ATTACK_KINDS = ("none", "gaussian", "classflip")


@dataclass(frozen=True)
class AttackSpec:
    """Which clients misbehave and how.

    ``power_exempt`` lets Gaussian attackers skip the ``rho`` factor of the
    precoder (they still invert their channel).
    """

    kind: str = "none"
    byzantine_count: int = 0
    variance: float = 30.0
    selection_seed: int = 0
    power_exempt: bool = False

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.byzantine_count < 0:
            raise ValueError("byzantine_count must be >= 0")
        if self.kind == "gaussian" and not self.variance > 0:
            raise ValueError("gaussian attack variance must be > 0")


def select_byzantine(N: int, B: int, seed: int) -> frozenset:
    """Uniformly random ``B``-subset of ``range(N)``."""
    if not 0 <= B < N:
        raise ValueError(f"need 0 <= B < N, got B={B}, N={N}")
    rng = np.random.default_rng(seed)
    return frozenset(int(i) for i in rng.choice(N, size=B, replace=False))


def gaussian_attack(w_t, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Sample ``N(w_t, variance * I)``; sent in place of the real update."""
    if not variance > 0:
        raise ValueError("variance must be > 0")
    w_t = np.asarray(w_t, dtype=np.float64)
    return w_t + math.sqrt(variance) * rng.standard_normal(w_t.shape)


def classflip_transform(data: Dataset) -> Dataset:
    """Relabel ``y -> 9 - y`` (ten-class data only)."""
    if data.num_classes != 10:
        raise ValueError(f"class flip needs 10 classes, dataset has {data.num_classes}")
    return Dataset(data.features, 9 - data.labels, data.num_classes)
