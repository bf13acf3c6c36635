import numpy as np
import pytest

from simrep.contrastive import (
    TrainConfig,
    TrainingDiverged,
    default_policy,
    default_spec,
    normalize_fit,
    train_ensemble,
    train_member,
)
from simrep.nn import init_encoder
from simrep.simulators.output import SimulationOutput
from simrep.simulators.testdata import gen_testdata


def small_dataset(n=60, seed=0):
    rng = np.random.default_rng(seed)
    return [SimulationOutput("vector", rng.normal(size=5)) for _ in range(n)]


def small_setup():
    spec = default_spec("vector", (5,), output_dim=3)
    cfg = TrainConfig(batch_size=16, temperature=0.5, epochs=2, ensemble_size=2)
    return spec, cfg, default_policy("vector")


def test_zero_epochs_returns_init():
    spec, cfg, policy = small_setup()
    cfg = TrainConfig(batch_size=16, epochs=0, ensemble_size=1)
    data = small_dataset()
    w, curve = train_member(data, spec, cfg, policy, seed=5)
    assert np.array_equal(w.to_flat(), init_encoder(spec, 5).to_flat())
    assert curve.size == 0


def test_training_bit_deterministic():
    spec, cfg, policy = small_setup()
    data = small_dataset()
    w1, c1 = train_member(data, spec, cfg, policy, seed=9)
    w2, c2 = train_member(data, spec, cfg, policy, seed=9)
    assert np.array_equal(w1.to_flat(), w2.to_flat())
    assert np.array_equal(c1, c2)


def test_different_seeds_differ():
    spec, cfg, policy = small_setup()
    data = small_dataset()
    w1, _ = train_member(data, spec, cfg, policy, seed=1)
    w2, _ = train_member(data, spec, cfg, policy, seed=2)
    assert not np.array_equal(w1.to_flat(), w2.to_flat())


def test_loss_decreases_on_testdata():
    _, outputs = gen_testdata("A", 300, seed=3)
    mean, std = normalize_fit(outputs)
    normalized = [SimulationOutput("vector", (o.data - mean) / std) for o in outputs]
    spec = default_spec("vector", (9,), output_dim=2)
    cfg = TrainConfig(batch_size=32, epochs=5, ensemble_size=1)
    _, curve = train_member(normalized, spec, cfg, default_policy("vector"), seed=4)
    assert curve[-1] < curve[0]


def test_ensemble_of_one_wraps_member():
    spec, _, policy = small_setup()
    cfg = TrainConfig(batch_size=16, epochs=2, ensemble_size=1, member_seeds=(123,))
    data = small_dataset()
    model = train_ensemble(data, spec, cfg, policy)
    mean, std = normalize_fit(data)
    normalized = [SimulationOutput("vector", (o.data - mean) / std) for o in data]
    w, _ = train_member(normalized, spec, cfg, policy, seed=123)
    assert np.array_equal(model.members[0].to_flat(), w.to_flat())


def test_ensemble_deterministic_and_sized():
    spec, cfg, policy = small_setup()
    cfg = TrainConfig(batch_size=16, epochs=2, ensemble_size=3)
    data = small_dataset()
    m1 = train_ensemble(data, spec, cfg, policy, base_seed=7)
    m2 = train_ensemble(data, spec, cfg, policy, base_seed=7)
    assert m1.size == 3 and len(m1.loss_curves) == 3
    for a, b in zip(m1.members, m2.members):
        assert np.array_equal(a.to_flat(), b.to_flat())
    assert len(set(m1.member_seeds)) == 3


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=1)
    with pytest.raises(ValueError):
        TrainConfig(temperature=0.0)
    with pytest.raises(ValueError):
        TrainConfig(ensemble_size=2, member_seeds=(1, 1))
    with pytest.raises(ValueError):
        TrainConfig(ensemble_size=2, member_seeds=(1,))


def test_divergence_reports_step():
    # an enormous learning rate overflows float32 weights within one epoch
    spec, _, policy = small_setup()
    cfg = TrainConfig(batch_size=16, epochs=1, ensemble_size=1, lr=1e30)
    data = small_dataset()
    mean, std = normalize_fit(data)
    normalized = [SimulationOutput("vector", (o.data - mean) / std) for o in data]
    with pytest.raises(TrainingDiverged, match="epoch 0"):
        train_member(normalized, spec, cfg, policy, seed=1)
