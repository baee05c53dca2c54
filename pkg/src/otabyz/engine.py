"""Round-by-round simulation of grouped over-the-air federated learning.

Per round: broadcast ``w_t``, compute client updates (honest local SGD or an
attack), split clients into ``G`` random groups, transmit each group in its
own slot, estimate one update per group and combine the group updates with
the geometric median (or the mean baseline).

Randomness is drawn from named substreams of the master seed:
``client:n:t`` (minibatches), ``attack:n:t``, ``grouping:t``,
``channels:t:g`` and ``noise:t:g``. The dataset itself is generated and
partitioned from ``data.seed`` so Monte-Carlo runs over master seeds share
one problem instance.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import aggregate, attack, data, model, ota, theory
from .aggregate import GeomedConfig
from .attack import AttackSpec
from .model import LocalSgdConfig, NonFiniteParameters
from .ota import OtaConfig
from .rng import substream

log = logging.getLogger(__name__)

DATA_SOURCES = ("auto", "mnist", "synth", "ridge")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    """Where the training/test data comes from.

    ``auto`` uses MNIST when the IDX files are found (``dir`` or
    ``OTA_BYZ_DATA_DIR``) and Gaussian blobs otherwise. ``ridge`` builds a
    linear-regression problem for bound validation.
    """

    source: str = "auto"
    dir: str = ""
    seed: int = 0
    synth_d: int = 100
    synth_classes: int = 10
    synth_spread: float = 0.3
    synth_train: int = 60000
    synth_test: int = 10000
    noise: float = 0.5


@dataclass(frozen=True)
class SimConfig:
    N: int = 100
    G: int = 20
    rounds: int = 100
    seed: int = 0
    aggregation: str = "geomed"
    eval_every: int = 1
    bound: bool = False
    sgd: LocalSgdConfig = field(default_factory=LocalSgdConfig)
    ota: OtaConfig = field(default_factory=OtaConfig)
    geomed: GeomedConfig = field(default_factory=GeomedConfig)
    attack: AttackSpec = field(default_factory=AttackSpec)
    data: DataConfig = field(default_factory=DataConfig)

    def validate(self):
        if self.N < 1 or self.G < 1:
            raise ConfigError("N and G must be >= 1")
        if self.N % self.G:
            raise ConfigError(f"G={self.G} does not divide N={self.N}")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.aggregation not in ("geomed", "mean"):
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if self.data.source not in DATA_SOURCES:
            raise ConfigError(f"unknown data source {self.data.source!r}")
        B = self.attack.byzantine_count if self.attack.kind != "none" else 0
        if not B < self.N:
            raise ConfigError(f"attack.B={B} must be < N={self.N}")
        if self.attack.kind == "classflip" and self.data.source == "ridge":
            raise ConfigError("class-flip attack needs a classification dataset")
        if self.bound and self.data.source != "ridge":
            raise ConfigError("bound tracking is only available for the ridge problem")
        if self.bound and not 2 * B < self.G:
            raise ConfigError("bound tracking needs attack.B < G/2")


@dataclass
class RoundMetrics:
    round: int
    train_loss: Optional[float] = None
    test_loss: Optional[float] = None
    test_acc: Optional[float] = None
    dist_sq: Optional[float] = None
    bound: Optional[float] = None
    empty_groups: int = 0
    weiszfeld_iters: Optional[int] = None
    rho: Optional[float] = None
    tx_power: Optional[float] = None


@dataclass
class RunResult:
    metrics: list
    w_final: np.ndarray
    initial: RoundMetrics


def partition_groups(N: int, G: int, rng: np.random.Generator) -> list:
    """Random split of ``range(N)`` into ``G`` equal groups (sorted members)."""
    if G < 1 or N % G:
        raise ConfigError(f"G={G} does not divide N={N}")
    perm = rng.permutation(N)
    return [np.sort(chunk) for chunk in perm.reshape(G, N // G)]


def load_datasets(cfg: DataConfig):
    """Return ``(train, test, w_true_or_None)``."""
    if cfg.source == "ridge":
        train, w_true = data.synth_regression(cfg.synth_train + cfg.synth_test,
                                              cfg.synth_d, cfg.noise, cfg.seed)
        idx = np.arange(len(train))
        return train.subset(idx[:cfg.synth_train]), train.subset(idx[cfg.synth_train:]), w_true
    if cfg.source in ("auto", "mnist"):
        files = data.find_mnist(cfg.dir or None)
        if files is not None:
            return data.load_idx(*files["train"]), data.load_idx(*files["test"]), None
        if cfg.source == "mnist":
            raise ConfigError("MNIST IDX files not found (set data.dir or OTA_BYZ_DATA_DIR)")
        log.info("MNIST not found; falling back to synthetic Gaussian blobs")
    full = data.synth_classify(cfg.synth_train + cfg.synth_test, cfg.synth_d,
                               cfg.synth_classes, cfg.synth_spread, cfg.seed)
    idx = np.arange(len(full))
    return full.subset(idx[:cfg.synth_train]), full.subset(idx[cfg.synth_train:]), None


class Simulation:
    """Holds the static state of one configured run."""

    def __init__(self, cfg: SimConfig, datasets=None):
        cfg.validate()
        self.cfg = cfg
        train, test, _ = datasets if datasets is not None else load_datasets(cfg.data)
        self.train, self.test = train, test
        self.model = theory.RidgeModel if cfg.data.source == "ridge" else model.LogisticModel
        self.p = self.model.num_params(train)

        part = data.partition_uniform(train, cfg.N, cfg.data.seed)
        self.clients = [train.subset(ix) for ix in part.assignments]
        spec = cfg.attack
        B = spec.byzantine_count if spec.kind != "none" else 0
        self.byzantine = attack.select_byzantine(cfg.N, B, spec.selection_seed)
        if spec.kind == "classflip":
            for n in self.byzantine:
                self.clients[n] = attack.classflip_transform(self.clients[n])
        self.honest = [n for n in range(cfg.N) if n not in self.byzantine]

        self.w_star = None
        self.bounds = None
        if cfg.data.source == "ridge":
            self.w_star = theory.ridge_optimum([self.clients[n] for n in self.honest], cfg.sgd.lam)
        if cfg.bound:
            self.constants = self.estimate_constants()
            delta0 = float(np.dot(self.w_star, self.w_star))
            self.bounds = theory.bound_sequence(self.constants, delta0, cfg.rounds)

    def estimate_constants(self) -> theory.TheoremConstants:
        cfg = self.cfg
        w0 = np.zeros(self.p)
        return theory.estimate_constants(
            self.model, [self.clients[n] for n in self.honest], cfg.sgd.lam,
            batch_size=cfg.sgd.b, center=self.w_star,
            radius=float(np.linalg.norm(self.w_star)), extra_points=[w0],
            seed=cfg.data.seed, sigma2=cfg.ota.sigma2, P=cfg.ota.P,
            h_min=cfg.ota.h_min, eta=cfg.sgd.eta, B=len(self.byzantine), G=cfg.G,
        )

    # -- one round ------------------------------------------------------------

    def client_updates(self, w_t: np.ndarray, t: int) -> list:
        cfg = self.cfg
        out = []
        for n in range(cfg.N):
            if n in self.byzantine and cfg.attack.kind == "gaussian":
                m = attack.gaussian_attack(w_t, cfg.attack.variance,
                                           substream(cfg.seed, "attack", n, t))
            else:
                m = self.model.local_sgd(w_t, self.clients[n], cfg.sgd,
                                         substream(cfg.seed, "client", n, t))
            out.append(m)
        return out

    def _rho(self, updates) -> float:
        cfg = self.cfg.ota
        if cfg.rho_mode == "fixed":
            return cfg.rho
        peak = max(float(np.dot(updates[n], updates[n])) for n in self.honest)
        if peak == 0.0:
            return cfg.rho
        return ota.compute_rho(cfg.P, peak)

    def run_round(self, w_t: np.ndarray, t: int):
        """Execute round ``t`` (0-based); return ``(w_next, RoundMetrics)``."""
        cfg = self.cfg
        updates = self.client_updates(w_t, t)
        rho = self._rho(updates)
        exempt = cfg.attack.kind == "gaussian" and cfg.attack.power_exempt

        groups = partition_groups(cfg.N, cfg.G, substream(cfg.seed, "grouping", t))
        group_updates = []
        empty = 0
        honest_power = 0.0
        for g, members in enumerate(groups):
            chans = ota.draw_channels(len(members), substream(cfg.seed, "channels", t, g),
                                      cfg.ota.fading_scale)
            tx = []
            for n, ch in zip(members, chans):
                n = int(n)
                gain = 1.0 if exempt and n in self.byzantine else rho
                x = ota.precode(updates[n], ch, gain, cfg.ota.h_min)
                if x is not None and n not in self.byzantine:
                    honest_power += float(np.dot(x, x))
                tx.append(ota.Transmission(n, x, ch))
            rx = ota.superpose(tx, cfg.ota.sigma2, substream(cfg.seed, "noise", t, g), self.p)
            try:
                group_updates.append(ota.estimate_group_update(rx, rho, cfg.ota.h_min))
            except ota.EmptyGroupError:
                empty += 1

        iters = None
        if not group_updates:
            log.warning("round %d: every group was silent; model unchanged", t)
            w_next = w_t.copy()
        elif cfg.aggregation == "geomed":
            res = aggregate.geomed(group_updates, cfg.geomed, full_output=True)
            iters = res.iterations
            w_next = w_t + res.z
        else:
            w_next = w_t + aggregate.mean(group_updates)
        if not np.all(np.isfinite(w_next)):
            raise NonFiniteParameters(f"round {t}: global model became non-finite")

        metrics = RoundMetrics(round=t + 1, empty_groups=empty, weiszfeld_iters=iters,
                               rho=rho, tx_power=honest_power / max(1, len(self.honest)))
        if (t + 1) % cfg.eval_every == 0 or t + 1 == cfg.rounds:
            self.evaluate(w_next, metrics)
        return w_next, metrics

    def evaluate(self, w: np.ndarray, metrics: RoundMetrics) -> RoundMetrics:
        lam = self.cfg.sgd.lam
        metrics.train_loss = self.model.loss(w, self.train, lam)
        metrics.test_loss = self.model.loss(w, self.test, lam)
        metrics.test_acc = self.model.accuracy(w, self.test)
        if self.w_star is not None:
            metrics.dist_sq = float(np.sum((w - self.w_star) ** 2))
        if self.bounds is not None:
            metrics.bound = self.bounds[metrics.round]
        return metrics

    def run(self) -> RunResult:
        w = np.zeros(self.p)
        initial = self.evaluate(w, RoundMetrics(round=0))
        history = []
        for t in range(self.cfg.rounds):
            w, m = self.run_round(w, t)
            history.append(m)
        return RunResult(history, w, initial)


def run(cfg: SimConfig, datasets=None) -> RunResult:
    return Simulation(cfg, datasets).run()


def final_value(metrics: list, name: str) -> float:
    for m in reversed(metrics):
        v = getattr(m, name)
        if v is not None:
            return v
    return math.nan
