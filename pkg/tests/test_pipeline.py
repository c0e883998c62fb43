import numpy as np
import pytest

from aglnet.errors import ContractViolation
from aglnet.network import Dataset, NetworkParams, empirical_risk
from aglnet.optim import Mode, TrainConfig, train
from aglnet.penalty import PenaltyKind, PenaltySpec, group_norms
from aglnet.pipeline import (
    AdaptiveFitter,
    Grids,
    Method,
    cross_validate,
    fit_adaptive,
    fit_erm,
    fit_group_lasso,
    fold_indices,
    group_lasso_fitter,
    run_pipeline,
    select_features,
    stability_run,
    zeta_path,
)
from aglnet.simgen import SimConfig, generate_dataset, generate_true_model
from conftest import random_dataset, random_params

QUICK = TrainConfig(epochs=20, batch_size=32, n_hidden=4)


@pytest.fixture(scope="module")
def noisy_feature_data():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(150, 3))
    y = np.tanh(X[:, 0] - 0.5 * X[:, 1]) + 0.3 * rng.normal(size=150)
    return Dataset(X, y)


@pytest.fixture(scope="module")
def zero_noise_results():
    model = generate_true_model(SimConfig(n_s=1, n_z=1), seed=0)
    data = generate_dataset(model, 1000, seed=0)
    cfg = TrainConfig(epochs=2000, seed=0)
    return {m: run_pipeline(data, m, Grids(), cfg) for m in Method}


class TestFits:
    def test_erm_seeded(self, noisy_feature_data):
        a = fit_erm(noisy_feature_data, QUICK)
        b = fit_erm(noisy_feature_data, QUICK)
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    def test_group_lasso_zero_is_erm(self, noisy_feature_data):
        a = fit_group_lasso(noisy_feature_data, 0.0, QUICK)
        b = fit_erm(noisy_feature_data, QUICK)
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    def test_group_lasso_huge_proximal(self, noisy_feature_data):
        cfg = TrainConfig(epochs=3, batch_size=32, n_hidden=4, mode=Mode.PROXIMAL)
        p = fit_group_lasso(noisy_feature_data, 1e6, cfg)
        assert np.all(group_norms(p) == 0.0)

    def test_constant_target_fit(self):
        rng = np.random.default_rng(1)
        y = 0.7 + 0.01 * rng.normal(size=200)
        data = Dataset(rng.normal(size=(200, 2)), y)
        p = fit_erm(data, TrainConfig(epochs=3000, init_scale=0.01))
        from aglnet.network import forward_batch

        assert np.all(np.abs(forward_batch(p, data.inputs) - y.mean()) < 0.05)

    def test_adaptive_unit_init_matches_group_lasso(self, rng, noisy_feature_data):
        init = random_params(rng, n_hidden=4, n_inputs=3)
        init.first_layer /= np.linalg.norm(init.first_layer, axis=0)
        lam = 0.05
        a = fit_adaptive(noisy_feature_data, lam, 2.0, init, QUICK)
        b, _ = train(noisy_feature_data, PenaltySpec(PenaltyKind.GROUP_LASSO, lam), QUICK, init=init)
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    @pytest.mark.parametrize("mode", list(Mode))
    def test_adaptive_zero_init_column_stays_zero(self, rng, noisy_feature_data, mode):
        init = random_params(rng, n_hidden=4, n_inputs=3)
        init.first_layer[:, 2] = 0.0
        p = fit_adaptive(noisy_feature_data, 0.01, 2.0, init, TrainConfig(epochs=20, n_hidden=4, mode=mode))
        assert np.all(p.first_layer[:, 2] == 0.0)
        assert group_norms(p)[2] == 0.0


class TestSelect:
    def test_examples(self):
        p = NetworkParams([[0.5, 1e-5]], [0.0], [1.0], 0.0)
        assert select_features(p, 1e-3).tolist() == [True, False]
        assert not select_features(NetworkParams.zeros(3, 4)).any()

    def test_boundary_is_not_selected(self):
        p = NetworkParams([[1e-3, 0.002]], [0.0], [1.0], 0.0)
        assert select_features(p, 1e-3).tolist() == [False, True]

    def test_cutoff_positive(self):
        with pytest.raises(ContractViolation):
            select_features(NetworkParams.zeros(1, 1), 0.0)


class TestCrossValidate:
    def test_singleton(self, noisy_feature_data):
        best, table = cross_validate(noisy_feature_data, [0.3], 3, group_lasso_fitter, QUICK)
        assert best == 0.3 and len(table) == 1

    def test_duplicate_best(self, noisy_feature_data):
        grid = [0.001, 1.0, 0.001]
        best, table = cross_validate(noisy_feature_data, grid, 3, group_lasso_fitter, QUICK)
        assert table[0][1] == table[2][1]
        assert best == min(table, key=lambda r: (r[1], r[0]))[0]

    def test_ties_go_to_smaller(self, noisy_feature_data):
        def constant_fitter(data, value, cfg):
            return NetworkParams.zeros(4, data.n_inputs)

        best, _ = cross_validate(noisy_feature_data, [2.0, 0.5, 1.0], 3, constant_fitter, QUICK)
        assert best == 0.5

    def test_hold_out_oracle(self, noisy_feature_data):
        cfg = TrainConfig(epochs=40, batch_size=32, n_hidden=4, mode=Mode.PROXIMAL, seed=4)
        grid = [0.0, 1e6]
        _, table = cross_validate(noisy_feature_data, grid, 3, group_lasso_fitter, cfg)
        from aglnet._rng import derive_seed

        folds = fold_indices(noisy_feature_data.n, 3, cfg.seed)
        oracle = []
        for lam in grid:
            losses = []
            for j, val in enumerate(folds):
                tr = np.setdiff1d(np.arange(noisy_feature_data.n), val)
                spec = PenaltySpec(PenaltyKind.GROUP_LASSO, lam)
                p, _ = train(noisy_feature_data.subset(tr), spec, cfg.with_seed(derive_seed(cfg.seed, j)))
                losses.append(empirical_risk(p, noisy_feature_data.subset(val)))
            oracle.append(np.mean(losses))
        np.testing.assert_allclose([r[1] for r in table], oracle, rtol=1e-10)
        # the constant model cannot beat the fitted one on a real signal
        assert table[0][1] < table[1][1]

    def test_folds_partition(self):
        folds = fold_indices(10, 3, seed=0)
        assert sorted(np.concatenate(folds).tolist()) == list(range(10))
        assert [len(f) for f in folds] == [4, 3, 3]

    def test_too_few_rows(self, rng):
        with pytest.raises(ContractViolation):
            cross_validate(random_dataset(rng, n=2), [0.1], 3, group_lasso_fitter, QUICK)

    def test_empty_grid(self, noisy_feature_data):
        with pytest.raises(ContractViolation):
            cross_validate(noisy_feature_data, [], 3, group_lasso_fitter, QUICK)

    def test_parallel_equals_serial(self, noisy_feature_data):
        a = cross_validate(noisy_feature_data, [0.01, 0.1], 3, group_lasso_fitter, QUICK, jobs=1)
        b = cross_validate(noisy_feature_data, [0.01, 0.1], 3, group_lasso_fitter, QUICK, jobs=2)
        assert a == b

    def test_adaptive_fitter_picklable(self, rng):
        import pickle

        f = AdaptiveFitter(random_params(rng), 2.0)
        assert pickle.loads(pickle.dumps(f)).gamma == 2.0


class TestRunPipeline:
    def test_zero_grid_gl_is_erm(self, noisy_feature_data):
        res = run_pipeline(noisy_feature_data, Method.GL, Grids(lam=(0.0,)), QUICK)
        erm = fit_erm(noisy_feature_data, QUICK)
        np.testing.assert_array_equal(res.fitted.to_vector(), erm.to_vector())
        np.testing.assert_array_equal(res.selected, select_features(erm))
        assert res.chosen_lambda == 0.0 and res.chosen_zeta is None

    @pytest.mark.parametrize("method", list(Method))
    def test_result_consistent(self, noisy_feature_data, method):
        res = run_pipeline(noisy_feature_data, method, Grids(lam=(0.01, 0.1)), QUICK)
        np.testing.assert_array_equal(res.selected, res.norms > res.cutoff)
        np.testing.assert_array_equal(res.norms, group_norms(res.fitted))
        assert res.trace.shape == (QUICK.epochs,)
        if method is Method.GL:
            assert set(res.cv_table) == {"lambda"}
        else:
            assert res.initial is not None and res.chosen_zeta in (0.01, 0.1)
        d = res.to_dict()
        assert d["method"] == method.value and d["selected"] == res.selected.tolist()

    def test_schedule_warning(self, noisy_feature_data):
        with pytest.warns(UserWarning, match="below"):
            run_pipeline(noisy_feature_data, Method.ERM_AGL, Grids(lam=(1e-6,)), QUICK, warn_schedule=True)

    @pytest.mark.parametrize("method", list(Method))
    def test_zero_noise_recovers_support(self, zero_noise_results, method):
        assert zero_noise_results[method].selected.tolist() == [True, False]

    def test_zero_noise_significant_norm(self, zero_noise_results):
        assert zero_noise_results[Method.GL].norms[0] > 1e-3

    def test_adaptive_variants_agree(self, zero_noise_results):
        np.testing.assert_array_equal(
            zero_noise_results[Method.ERM_AGL].selected, zero_noise_results[Method.GL_AGL].selected
        )


class TestStability:
    def test_single_repeat_binary(self, noisy_feature_data):
        freq = stability_run(noisy_feature_data, Method.GL, Grids(lam=(0.01,)), QUICK, repeats=1)
        assert set(freq.tolist()) <= {0.0, 1.0}

    def test_repeatable(self, noisy_feature_data):
        a = stability_run(noisy_feature_data, Method.GL, Grids(lam=(0.01,)), QUICK, repeats=3)
        b = stability_run(noisy_feature_data, Method.GL, Grids(lam=(0.01,)), QUICK, repeats=3)
        np.testing.assert_array_equal(a, b)
        assert np.all((a >= 0) & (a <= 1))

    def test_frequency_is_mean_of_runs(self, noisy_feature_data):
        grids = Grids(lam=(0.01,))
        freq = stability_run(noisy_feature_data, Method.GL, grids, QUICK, repeats=2)
        masks = [run_pipeline(noisy_feature_data, Method.GL, grids, QUICK.with_seed(s)).selected for s in (0, 1)]
        np.testing.assert_array_equal(freq, np.mean(masks, axis=0))

    def test_repeats_positive(self, noisy_feature_data):
        with pytest.raises(ContractViolation):
            stability_run(noisy_feature_data, Method.GL, None, QUICK, repeats=0)


def test_zeta_path_reports(noisy_feature_data):
    cfg = TrainConfig(epochs=30, batch_size=32, n_hidden=4, mode=Mode.PROXIMAL)
    init = fit_erm(noisy_feature_data, cfg)
    path = zeta_path(noisy_feature_data, [1.0, 0.001, 1e4], init, cfg)
    assert path.zetas == [0.001, 1.0, 1e4]
    assert len(path.selected) == 3
    assert not path.selected[-1].any()
    for lo, hi in path.violations:
        assert lo < hi
