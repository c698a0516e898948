"""Adam optimizer, training loop, early stopping, repeated runs."""

import math
from dataclasses import replace

import numpy as np
import pytest

from gcnkit.data import GraphDataset, generate_sbm
from gcnkit.errors import TrainingDiverged, ValidationError
from gcnkit.graph import build_operators
from gcnkit.model import LossConfig, ModelParams
from gcnkit.training import (
    AdamState,
    TrainConfig,
    adam_step,
    build_propagator,
    evaluate,
    run_repeated,
    train,
)

from conftest import csr_from_dense

# Frozen from an independent scalar Adam (beta1=0.9, beta2=0.999, eps=1e-8,
# lr=0.1, w=1.0, gradient stream [1, 1, -0.5, 2]).
ADAM_REFERENCE = [
    0.900000001,
    0.8000000020000007,
    0.7484346620169926,
    0.6766002883743223,
]


def scalar_params(w):
    return ModelParams(w0=np.array([[w]]), w1=np.array([[0.0]]),
                       hidden_dim=1, dropout_rate=0.0)


class TestAdam:
    def test_matches_scalar_reference(self):
        params = scalar_params(1.0)
        state = AdamState.init(params)
        for grad, want in zip([1.0, 1.0, -0.5, 2.0], ADAM_REFERENCE):
            grads = (np.array([[grad]]), np.array([[0.0]]))
            params, state = adam_step(params, grads, state, 0.1)
            assert abs(params.w0[0, 0] - want) < 1e-12

    def test_step_counter(self):
        params = scalar_params(0.0)
        state = AdamState.init(params)
        assert state.step == 0
        _, state = adam_step(params, (np.zeros((1, 1)), np.zeros((1, 1))), state, 0.1)
        assert state.step == 1

    def test_zero_gradient_keeps_weights(self):
        params = scalar_params(0.7)
        state = AdamState.init(params)
        params, _ = adam_step(params, (np.zeros((1, 1)), np.zeros((1, 1))), state, 0.1)
        assert params.w0[0, 0] == 0.7

    def test_first_step_magnitude(self):
        """Bias correction makes the first step almost exactly lr."""
        params = scalar_params(0.0)
        state = AdamState.init(params)
        params, _ = adam_step(params, (np.full((1, 1), 3.0), np.zeros((1, 1))),
                              state, 0.1)
        assert abs(params.w0[0, 0] + 0.1) < 1e-8

    def test_update_independent_of_gradient_scale_sign(self):
        """A constant-sign gradient stream moves weights by about lr each step."""
        params = scalar_params(0.0)
        state = AdamState.init(params)
        for _ in range(10):
            params, state = adam_step(
                params, (np.full((1, 1), 123.4), np.zeros((1, 1))), state, 0.01)
        assert abs(params.w0[0, 0] + 0.1) < 1e-3


def three_node_dataset():
    path = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
    return GraphDataset(
        name="path",
        features=np.eye(3),
        adjacency=csr_from_dense(path),
        labels=np.array([0, 1, 1]),
        num_classes=2,
        train_idx=np.array([0]),
        val_idx=np.array([1]),
        test_idx=np.array([2]),
    )


class TestEvaluate:
    def test_tie_breaks_to_lowest_class(self):
        """Zero weights give uniform probabilities; argmax picks class 0."""
        ds = three_node_dataset()
        ops = build_operators(ds.adjacency)
        params = ModelParams(w0=np.zeros((3, 4)), w1=np.zeros((4, 2)),
                             hidden_dim=4, dropout_rate=0.0)
        acc = evaluate(params, ops.norm_adjacency, ds, np.array([0, 1, 2]))
        assert abs(acc - 1.0 / 3.0) < 1e-15  # only node 0 carries class 0

    def test_single_node_mask(self):
        ds = three_node_dataset()
        ops = build_operators(ds.adjacency)
        params = ModelParams(np.zeros((3, 2)), np.zeros((2, 2)), 2, 0.0)
        assert evaluate(params, ops.norm_adjacency, ds, np.array([0])) == 1.0
        assert evaluate(params, ops.norm_adjacency, ds, np.array([1])) == 0.0

    def test_empty_mask_raises(self):
        ds = three_node_dataset()
        ops = build_operators(ds.adjacency)
        params = ModelParams(np.zeros((3, 2)), np.zeros((2, 2)), 2, 0.0)
        with pytest.raises(ValidationError):
            evaluate(params, ops.norm_adjacency, ds, np.array([], dtype=int))


def quick_config(**overrides):
    base = dict(learning_rate=0.01, max_epochs=200, min_epochs_before_stop=30,
                patience=10, seed=0, hidden_dim=16, dropout_rate=0.5,
                loss=LossConfig(weight_decay_lambda=5e-4))
    base.update(overrides)
    return TrainConfig(**base)


class TestTrainConfig:
    def test_rejects_bad_patience(self):
        with pytest.raises(ValidationError):
            quick_config(patience=0)

    def test_rejects_min_above_max(self):
        with pytest.raises(ValidationError):
            quick_config(min_epochs_before_stop=300, max_epochs=200)

    def test_transition_requires_k(self):
        with pytest.raises(ValidationError):
            quick_config(propagator_kind="transition")

    def test_rejects_unknown_propagator(self):
        with pytest.raises(ValidationError):
            quick_config(propagator_kind="chebyshev")


class TestBuildPropagator:
    def test_default_uses_norm_adjacency(self, sbm_small):
        ops = build_operators(sbm_small.adjacency)
        propagator, reg = build_propagator(quick_config(), ops)
        assert propagator is ops.norm_adjacency
        assert reg is None

    def test_laplacian_reg_operator(self, sbm_small):
        ops = build_operators(sbm_small.adjacency)
        config = quick_config(
            loss=LossConfig(graph_reg_weight=1e-3, graph_reg_kind="laplacian"))
        _, reg = build_propagator(config, ops)
        assert reg is ops.laplacian

    def test_transition_reg_reuses_propagator_for_same_order(self, sbm_small):
        ops = build_operators(sbm_small.adjacency)
        config = quick_config(
            propagator_kind="transition", k=2, n_walks=300,
            loss=LossConfig(graph_reg_weight=1e-3, graph_reg_kind="transition",
                            graph_reg_k=2))
        propagator, reg = build_propagator(config, ops)
        assert reg is propagator

    def test_transition_reg_different_order(self, sbm_small):
        ops = build_operators(sbm_small.adjacency)
        config = quick_config(
            propagator_kind="transition", k=1, n_walks=300,
            loss=LossConfig(graph_reg_weight=1e-3, graph_reg_kind="transition",
                            graph_reg_k=3))
        propagator, reg = build_propagator(config, ops)
        assert reg is not propagator
        assert not reg.equals(propagator)


class TestTrain:
    def test_deterministic(self, sbm_small):
        a = train(quick_config(max_epochs=40), sbm_small)
        b = train(quick_config(max_epochs=40), sbm_small)
        assert a.test_accuracy == b.test_accuracy
        assert a.epochs_run == b.epochs_run
        for ra, rb in zip(a.history, b.history):
            assert ra == rb
        np.testing.assert_array_equal(a.best_params.w0, b.best_params.w0)

    def test_seed_changes_run(self, sbm_small):
        a = train(quick_config(max_epochs=30, min_epochs_before_stop=0), sbm_small)
        b = train(quick_config(max_epochs=30, min_epochs_before_stop=0, seed=1),
                  sbm_small)
        assert a.history[-1].train_loss != b.history[-1].train_loss

    def test_zero_epochs(self, sbm_small):
        result = train(quick_config(max_epochs=0, min_epochs_before_stop=0),
                       sbm_small)
        assert result.epochs_run == 0
        assert result.stop_reason == "epoch_limit"
        assert result.history == ()
        assert 0.0 <= result.test_accuracy <= 1.0
        assert math.isnan(result.best_val_loss)

    def test_learns_sbm(self, sbm_small):
        result = train(quick_config(), sbm_small)
        assert result.test_accuracy >= 0.95
        assert result.epochs_run <= 200

    def test_history_structure(self, sbm_small):
        result = train(quick_config(max_epochs=25, min_epochs_before_stop=0,
                                    patience=25), sbm_small)
        assert len(result.history) == result.epochs_run
        for i, record in enumerate(result.history, start=1):
            assert record.epoch == i
            assert math.isfinite(record.train_loss)
            assert math.isfinite(record.val_loss)
            assert 0.0 <= record.val_accuracy <= 1.0
            assert record.weight_decay >= 0.0

    def test_training_loss_decreases(self, sbm_small):
        result = train(quick_config(max_epochs=120, min_epochs_before_stop=120,
                                    patience=120, dropout_rate=0.0), sbm_small)
        losses = [r.train_loss for r in result.history]
        head = np.mean(losses[:10])
        tail = np.mean(losses[-10:])
        assert tail < head * 0.5

    def test_early_stop_respects_minimum(self, sbm_small):
        """With patience 1 the stop can come no earlier than min+1 epochs."""
        result = train(quick_config(max_epochs=200, min_epochs_before_stop=60,
                                    patience=1), sbm_small)
        if result.stop_reason == "early_stop":
            assert result.epochs_run >= 61
        else:
            assert result.epochs_run == 200

    def test_early_stop_staleness(self, sbm_small):
        result = train(quick_config(max_epochs=200, min_epochs_before_stop=10,
                                    patience=7), sbm_small)
        assert result.stop_reason == "early_stop"
        val_losses = [r.val_loss for r in result.history]
        best = int(np.argmin(val_losses)) + 1
        assert best == result.best_epoch
        # The final stretch after the best epoch never improved on it.
        assert result.epochs_run - best >= 7

    def test_epoch_limit_reason(self, sbm_small):
        result = train(quick_config(max_epochs=15, min_epochs_before_stop=15,
                                    patience=100), sbm_small)
        assert result.stop_reason == "epoch_limit"
        assert result.epochs_run == 15

    def test_best_params_give_reported_accuracy(self, sbm_small):
        result = train(quick_config(max_epochs=60), sbm_small)
        ops = build_operators(sbm_small.adjacency)
        acc = evaluate(result.best_params, ops.norm_adjacency, sbm_small,
                       sbm_small.test_idx)
        assert acc == result.test_accuracy

    def test_best_val_loss_matches_history(self, sbm_small):
        result = train(quick_config(max_epochs=50), sbm_small)
        val_losses = [r.val_loss for r in result.history]
        assert result.best_val_loss == min(val_losses)

    def test_log_callback_sees_every_epoch(self, sbm_small):
        seen = []
        train(quick_config(max_epochs=12, min_epochs_before_stop=12,
                           patience=50), sbm_small, log=seen.append)
        assert [r.epoch for r in seen] == list(range(1, 13))

    def test_transition_propagator_trains(self, sbm_small):
        config = quick_config(propagator_kind="transition", k=2, n_walks=1500,
                              max_epochs=150)
        result = train(config, sbm_small)
        assert result.test_accuracy >= 0.85

    def test_empty_train_split_raises(self):
        ds = three_node_dataset()
        empty = replace(ds, train_idx=np.array([], dtype=np.int64))
        with pytest.raises(ValidationError):
            train(quick_config(max_epochs=5, min_epochs_before_stop=0), empty)

    def test_divergence_raises_with_components(self, sbm_small):
        """An absurd learning rate overflows the logit regularizer quickly."""
        config = quick_config(
            learning_rate=1e78, max_epochs=50, min_epochs_before_stop=0,
            loss=LossConfig(weight_decay_lambda=5e-4, graph_reg_weight=1.0,
                            graph_reg_kind="laplacian", reg_on_logits=True))
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDiverged) as excinfo:
                train(config, sbm_small)
        err = excinfo.value
        assert err.epoch >= 1
        assert "weight_decay" in err.components
        assert not math.isfinite(err.components["total"])
        assert "epoch" in str(err)


class TestRunRepeated:
    def test_matches_individual_runs(self, sbm_small):
        config = quick_config(max_epochs=30, min_epochs_before_stop=0, patience=5)
        repeated = run_repeated(config, sbm_small, 3, 10)
        singles = [train(replace(config, seed=10 + i), sbm_small) for i in range(3)]
        for run, single in zip(repeated.runs, singles):
            assert run.test_accuracy == single.test_accuracy
            assert run.epochs_run == single.epochs_run
        accs = np.array([s.test_accuracy for s in singles])
        assert abs(repeated.mean_accuracy - accs.mean()) < 1e-15
        assert abs(repeated.std_accuracy - accs.std()) < 1e-15
        assert repeated.n_runs == 3

    def test_seeds_recorded(self, sbm_small):
        config = quick_config(max_epochs=10, min_epochs_before_stop=0, patience=3)
        repeated = run_repeated(config, sbm_small, 2, 5)
        assert [r.seed for r in repeated.runs] == [5, 6]

    def test_rejects_zero_runs(self, sbm_small):
        with pytest.raises(ValidationError):
            run_repeated(quick_config(), sbm_small, 0, 0)

    def test_divergence_reports_run_seed(self, sbm_small):
        config = quick_config(
            learning_rate=1e78, max_epochs=50, min_epochs_before_stop=0,
            loss=LossConfig(weight_decay_lambda=5e-4, graph_reg_weight=1.0,
                            graph_reg_kind="laplacian", reg_on_logits=True))
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDiverged) as excinfo:
                run_repeated(config, sbm_small, 2, 3)
        assert excinfo.value.components["run_seed"] == 3
