"""Monte-Carlo check of the convergence bound on a ridge-regression problem."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import theory
from .engine import Simulation, SimConfig, load_datasets


@dataclass
class BoundCheck:
    B: int
    mean_dist: np.ndarray      # seed-averaged ||w_t - w*||^2, t = 0..T
    bound: np.ndarray          # bound(t), t = 0..T
    constants: theory.TheoremConstants

    @property
    def ratios(self) -> np.ndarray:
        return self.mean_dist / self.bound

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())

    @property
    def holds(self) -> bool:
        # bound(0) equals the initial distance up to rounding of (d0 - A) + A
        return bool(np.all(self.mean_dist <= self.bound * (1 + 1e-9)))

    def empirical_floor(self, tail: float = 0.5) -> float:
        """Mean distance over the last ``tail`` fraction of rounds."""
        start = int(len(self.mean_dist) * (1 - tail))
        return float(self.mean_dist[start:].mean())


def check_bound(base: SimConfig, B: int, seeds) -> BoundCheck:
    """Average the squared distance to the optimum over ``seeds`` master seeds."""
    cfg = dataclasses.replace(
        base, bound=True, eval_every=base.rounds,
        attack=dataclasses.replace(base.attack, kind="gaussian" if B else "none",
                                   byzantine_count=B),
    )
    datasets = load_datasets(cfg.data)
    curves = []
    sim = None
    for seed in seeds:
        sim = Simulation(dataclasses.replace(cfg, seed=int(seed)), datasets) if sim is None \
            else _reseed(sim, int(seed))
        w = np.zeros(sim.p)
        dist = [float(np.sum((w - sim.w_star) ** 2))]
        for t in range(cfg.rounds):
            w, _ = sim.run_round(w, t)
            dist.append(float(np.sum((w - sim.w_star) ** 2)))
        curves.append(dist)
    return BoundCheck(B, np.mean(curves, axis=0), np.asarray(sim.bounds), sim.constants)


def _reseed(sim: Simulation, seed: int) -> Simulation:
    # the problem instance, constants and bound do not depend on the master seed
    sim.cfg = dataclasses.replace(sim.cfg, seed=seed)
    return sim


def validate_theorem(base: SimConfig, seeds, B_values=(0, 2, 4)) -> list:
    return [check_bound(base, B, seeds) for B in B_values]
