"""Shared fixtures. Trained ensembles are expensive, so they are session
scoped and pinned to fixed seeds; desk-scale sizes keep the whole suite in
the minutes range."""

from __future__ import annotations

import numpy as np
import pytest

from simrep.contrastive import TrainConfig, default_policy, default_spec, train_ensemble
from simrep.simulators import ABMParams, gen_testdata, load_toy_network, monte_carlo
from simrep.simulators.output import SimulationOutput
from simrep.simulators.sampling import abm_default_ranges, fba_default_ranges, lv_default_ranges

LV_OPTS = dict(t_final=500.0, dt=0.01, n_out=200)
ABM_BASE = dict(lattice=24, steps=60)


@pytest.fixture(scope="session")
def testdata_a():
    return gen_testdata("A", 2000, seed=11)


@pytest.fixture(scope="session")
def testdata_b():
    return gen_testdata("B", 2000, seed=12)


def _train_testdata(outputs, base_seed):
    spec = default_spec("vector", (9,), output_dim=2)
    cfg = TrainConfig(batch_size=64, temperature=0.5, epochs=10, ensemble_size=5)
    return train_ensemble(outputs, spec, cfg, default_policy("vector"), base_seed)


@pytest.fixture(scope="session")
def testdata_a_model(testdata_a):
    return _train_testdata(testdata_a[1], base_seed=101)


@pytest.fixture(scope="session")
def testdata_b_model(testdata_b):
    return _train_testdata(testdata_b[1], base_seed=102)


@pytest.fixture(scope="session")
def lv_dataset():
    res = monte_carlo("lv", lv_default_ranges(), 600, seed=21, lv_opts=LV_OPTS)
    assert not res.failures
    return res


@pytest.fixture(scope="session")
def lv_model(lv_dataset):
    spec = default_spec("timeseries", (200, 4), output_dim=16)
    cfg = TrainConfig(batch_size=64, temperature=0.5, epochs=12, ensemble_size=5)
    return train_ensemble(lv_dataset.outputs, spec, cfg,
                          default_policy("timeseries"), base_seed=303)


@pytest.fixture(scope="session")
def toy_net():
    return load_toy_network()


@pytest.fixture(scope="session")
def fba_dataset():
    res = monte_carlo("fba", fba_default_ranges(), 400, seed=31)
    assert not res.failures
    return res


@pytest.fixture(scope="session")
def fba_models(fba_dataset):
    spec = default_spec("vector", (20,), output_dim=16)
    cfg = TrainConfig(batch_size=64, temperature=0.5, epochs=15, ensemble_size=5)
    policy = default_policy("vector")
    return [
        train_ensemble(fba_dataset.outputs, spec, cfg, policy, base_seed=s)
        for s in (51, 52)
    ]


@pytest.fixture(scope="session")
def abm_dataset():
    base = ABMParams(**ABM_BASE)
    return monte_carlo("abm", abm_default_ranges(), 100, seed=41, replicates=5, base=base)


@pytest.fixture(scope="session")
def abm_model(abm_dataset):
    spec = default_spec("grid", (24, 24, 3), output_dim=16)
    cfg = TrainConfig(batch_size=64, temperature=0.5, epochs=8, ensemble_size=3)
    return train_ensemble(abm_dataset.outputs, spec, cfg,
                          default_policy("grid"), base_seed=61)


@pytest.fixture(scope="session")
def tiny_vector_model():
    """Small, quickly trained vector ensemble for plumbing tests."""
    rng = np.random.default_rng(9)
    outputs = [SimulationOutput("vector", rng.normal(size=6), params=rng.uniform(size=2))
               for _ in range(48)]
    spec = default_spec("vector", (6,), output_dim=4)
    cfg = TrainConfig(batch_size=16, temperature=0.5, epochs=2, ensemble_size=2)
    model = train_ensemble(outputs, spec, cfg, default_policy("vector"), base_seed=77)
    return model, outputs


@pytest.fixture(scope="session")
def tiny_fba_model(fba_dataset):
    """Two-member ensemble over flux vectors, for FBA analysis plumbing."""
    spec = default_spec("vector", (20,), output_dim=8)
    cfg = TrainConfig(batch_size=32, temperature=0.5, epochs=2, ensemble_size=2)
    return train_ensemble(fba_dataset.outputs[:120], spec, cfg,
                          default_policy("vector"), base_seed=88)


@pytest.fixture(scope="session")
def tiny_lv_model():
    """Two-member ensemble over short LV runs, for analysis plumbing."""
    from simrep.simulators.sampling import lv_default_ranges

    res = monte_carlo("lv", lv_default_ranges(), 32, seed=14,
                      lv_opts=dict(t_final=20.0, dt=0.01, n_out=40))
    spec = default_spec("timeseries", (40, 4), output_dim=8)
    cfg = TrainConfig(batch_size=16, temperature=0.5, epochs=2, ensemble_size=2)
    return train_ensemble(res.outputs, spec, cfg,
                          default_policy("timeseries"), base_seed=99)
