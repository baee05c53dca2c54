import numpy as np
import pytest

from otabyz import attack
from otabyz.attack import AttackSpec
from otabyz.data import Dataset, synth_classify
from otabyz.engine import DataConfig, SimConfig, Simulation


def test_select_none():
    assert attack.select_byzantine(10, 0, seed=3) == frozenset()


def test_select_deterministic_and_sized():
    a = attack.select_byzantine(100, 9, seed=5)
    assert a == attack.select_byzantine(100, 9, seed=5)
    assert len(a) == 9 and all(0 <= n < 100 for n in a)


def test_select_reaches_every_singleton():
    seen = {attack.select_byzantine(2, 1, seed=s) for s in range(32)}
    assert seen == {frozenset({0}), frozenset({1})}


@pytest.mark.parametrize("N,B", [(5, 5), (5, 6), (5, -1)])
def test_select_rejects(N, B):
    with pytest.raises(ValueError):
        attack.select_byzantine(N, B, seed=0)


def test_gaussian_attack_moments():
    rng = np.random.default_rng(21)
    w_t = np.array([0.5, -1.0, 2.0, 0.0])
    draws = np.array([attack.gaussian_attack(w_t, 30.0, rng) for _ in range(10_000)])
    np.testing.assert_allclose(draws.mean(axis=0), w_t, atol=4 * np.sqrt(30 / 10_000))
    # isotropic: pool the per-coordinate variances
    assert abs(draws.var(axis=0, ddof=1).mean() / 30.0 - 1) <= 0.03


def test_gaussian_attack_rejects_variance():
    with pytest.raises(ValueError):
        attack.gaussian_attack(np.zeros(2), 0.0, np.random.default_rng(0))


def test_classflip_mapping():
    x = np.arange(20, dtype=float).reshape(10, 2)
    ds = Dataset(x, np.arange(10), 10)
    flipped = attack.classflip_transform(ds)
    assert flipped.labels.tolist() == [9, 8, 7, 6, 5, 4, 3, 2, 1, 0]
    assert flipped.features is ds.features
    assert np.array_equal(attack.classflip_transform(flipped).labels, ds.labels)


def test_classflip_needs_ten_classes():
    with pytest.raises(ValueError):
        attack.classflip_transform(synth_classify(12, 2, 3, 0.1, seed=0))


def test_spec_invariants():
    with pytest.raises(ValueError):
        AttackSpec(kind="labelnoise")
    with pytest.raises(ValueError):
        AttackSpec(kind="gaussian", variance=0)
    with pytest.raises(ValueError):
        AttackSpec(byzantine_count=-1)


@pytest.mark.parametrize("kind", ["gaussian", "classflip"])
def test_honest_updates_unaffected_by_attackers(kind):
    data = DataConfig(source="synth", synth_d=4, synth_train=400, synth_test=50)
    clean = Simulation(SimConfig(N=10, G=5, rounds=1, seed=3, data=data))
    attacked = Simulation(SimConfig(N=10, G=5, rounds=1, seed=3, data=data,
                                    attack=AttackSpec(kind, 3, selection_seed=1)))
    w = np.random.default_rng(0).normal(size=clean.p) * 0.1
    a, b = clean.client_updates(w, 4), attacked.client_updates(w, 4)
    assert len(attacked.byzantine) == 3
    for n in attacked.honest:
        assert a[n].tobytes() == b[n].tobytes()
    assert any(not np.array_equal(a[n], b[n]) for n in attacked.byzantine)
