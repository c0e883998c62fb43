import numpy as np
import pytest

from aglnet.equivalence import is_irreducible
from aglnet.errors import ContractViolation
from aglnet.network import NetworkParams, forward_batch
from aglnet.optim import TrainConfig
from aglnet.pipeline import Grids, Method
from aglnet.simgen import (
    GroundTruthModel,
    SimConfig,
    generate_dataset,
    generate_true_model,
    replication_seeds,
    run_experiment,
)


class TestTrueModel:
    def test_support_layout(self):
        model = generate_true_model(SimConfig(n_s=3, n_z=2), seed=0)
        assert model.support.tolist() == [True, True, True, False, False]
        assert np.all(model.params.first_layer[:, 3:] == 0.0)
        assert model.params.first_layer.shape == (10, 5)

    def test_irreducible(self):
        for seed in range(50):
            assert is_irreducible(generate_true_model(SimConfig(n_s=3, n_z=2), seed=seed).params)

    def test_weight_moments(self):
        cfg = SimConfig(n_s=1, n_z=0, n_hidden=1)
        draws = [generate_true_model(cfg, seed=s).params for s in range(10_000)]
        u = np.array([p.first_layer[0, 0] for p in draws])
        w = np.array([p.output_weights[0] for p in draws])
        b1 = np.array([p.bias1[0] for p in draws])
        assert abs(u.mean() - 1.0) < 0.05
        assert abs(w.mean() - 1.0) < 0.05
        assert abs(b1.mean()) < 0.05
        assert abs(u.var() - 1.0) < 0.05

    def test_seeded(self):
        a = generate_true_model(SimConfig(), seed=3)
        b = generate_true_model(SimConfig(), seed=3)
        np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())

    def test_rejects_nonzero_nonsignificant_column(self):
        with pytest.raises(ContractViolation):
            GroundTruthModel(NetworkParams(np.ones((2, 2)), np.zeros(2), np.ones(2), 0.0), [True, False])


class TestDataset:
    def test_noiseless(self):
        model = generate_true_model(SimConfig(n_s=2, n_z=1), seed=1)
        data = generate_dataset(model, 100, seed=2)
        np.testing.assert_array_equal(data.targets, forward_batch(model.params, data.inputs))

    def test_noise_variance(self):
        model = generate_true_model(SimConfig(n_s=1, n_z=1), seed=1, sigma2=1.0)
        data = generate_dataset(model, 100_000, seed=5)
        resid = data.targets - forward_batch(model.params, data.inputs)
        assert abs(resid.var() - 1.0) < 0.05
        assert abs(data.inputs.mean()) < 0.02 and abs(data.inputs.var() - 1.0) < 0.02

    def test_seeded(self):
        model = generate_true_model(SimConfig(), seed=1, sigma2=0.5)
        a, b = generate_dataset(model, 50, 9), generate_dataset(model, 50, 9)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.targets, b.targets)

    def test_replication_seeds_independent_of_order(self):
        assert replication_seeds(0, 0.4, 3) == replication_seeds(0, 0.4, 3)
        assert len(set(replication_seeds(0, 0.4, 3) + replication_seeds(0, 0.2, 3))) == 6


FAST = TrainConfig(epochs=5, batch_size=100)


class TestExperiment:
    def test_shape(self):
        cfg = SimConfig(n=120, sigma2_list=[0.0], repeats=1, seed=2)
        report = run_experiment(cfg, [Method.GL, Method.ERM_AGL, Method.GL_AGL], Grids(lam=(0.01,)), FAST)
        assert len(report.records) == 3
        assert sorted(r.method for r in report.records) == ["ERM_AGL", "GL", "GL_AGL"]
        assert all(len(r.selected) == 2 and r.support == [True, False] for r in report.records)

    def test_deterministic(self):
        cfg = SimConfig(n=90, sigma2_list=[0.0, 0.5], repeats=2, seed=11)
        a = run_experiment(cfg, [Method.GL], Grids(lam=(0.01, 0.1)), FAST)
        b = run_experiment(cfg, [Method.GL], Grids(lam=(0.01, 0.1)), FAST)
        assert a.to_dict() == b.to_dict()

    def test_parallel_equals_serial(self):
        cfg = SimConfig(n=60, sigma2_list=[0.2], repeats=2, seed=5)
        a = run_experiment(cfg, [Method.GL], Grids(lam=(0.1,)), FAST, jobs=1)
        b = run_experiment(cfg, [Method.GL], Grids(lam=(0.1,)), FAST, jobs=2)
        assert a.to_dict() == b.to_dict()

    def test_failed_fit_recorded(self):
        cfg = SimConfig(n=2, sigma2_list=[0.0], repeats=1)
        report = run_experiment(cfg, [Method.GL], Grids(lam=(0.1,)), FAST)
        rec = report.records[0]
        assert rec.error is not None and rec.selected is None
