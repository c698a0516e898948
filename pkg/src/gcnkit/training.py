"""Full-batch training with Adam, two early-stopping regimes, and
multi-seed aggregation.

One epoch is: seeded-dropout forward, total loss on the train split,
analytic gradients, one Adam update, then a deterministic evaluation pass
for validation loss (mean cross-entropy on the val split) and accuracy.
Early stopping triggers once the epoch count exceeds the configured minimum
and validation loss has not improved for ``patience`` consecutive epochs;
the parameters at the best validation loss are restored before the single
test evaluation.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .data import GraphDataset, row_normalize_features
from .errors import TrainingDiverged, ValidationError
from .graph import (
    GraphOperatorSet,
    build_operators,
    walk_estimated_transition_matrix,
)
from .model import (
    LossConfig,
    ModelParams,
    forward,
    gradients,
    init_params,
    masked_cross_entropy,
    total_loss,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    max_epochs: int = 5000
    min_epochs_before_stop: int = 30
    patience: int = 10
    seed: int = 0
    hidden_dim: int = 16
    dropout_rate: float = 0.5
    loss: LossConfig = field(default_factory=lambda: LossConfig(weight_decay_lambda=5e-4))
    propagator_kind: str = "normalized_adjacency"  # or "transition"
    k: int | None = None
    n_walks: int = 10000
    prune_threshold: float = 0.0
    normalize_features: bool = True

    def __post_init__(self):
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if self.min_epochs_before_stop > self.max_epochs:
            raise ValidationError("min_epochs_before_stop must be <= max_epochs")
        if self.propagator_kind not in ("normalized_adjacency", "transition"):
            raise ValidationError(f"unknown propagator_kind {self.propagator_kind!r}")
        if self.propagator_kind == "transition" and (self.k is None or self.k < 1):
            raise ValidationError("transition propagator requires k >= 1")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    cross_entropy: float
    weight_decay: float
    graph_reg: float
    val_loss: float
    val_accuracy: float


@dataclass(frozen=True)
class TrainResult:
    epochs_run: int
    stop_reason: str  # "early_stop" | "epoch_limit"
    history: tuple
    test_accuracy: float
    seed: int
    best_epoch: int
    best_val_loss: float
    best_params: ModelParams


@dataclass(frozen=True)
class AdamState:
    step: int
    m_w0: np.ndarray
    v_w0: np.ndarray
    m_w1: np.ndarray
    v_w1: np.ndarray

    @classmethod
    def init(cls, params: ModelParams):
        return cls(
            step=0,
            m_w0=np.zeros_like(params.w0),
            v_w0=np.zeros_like(params.w0),
            m_w1=np.zeros_like(params.w1),
            v_w1=np.zeros_like(params.w1),
        )


def adam_step(params: ModelParams, grads, state: AdamState, learning_rate):
    """One Adam update; returns (new params, new state)."""
    d_w0, d_w1 = grads
    t = state.step + 1
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t

    def update(w, g, m, v):
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * (g * g)
        w = w - learning_rate * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
        return w, m, v

    w0, m_w0, v_w0 = update(params.w0, d_w0, state.m_w0, state.v_w0)
    w1, m_w1, v_w1 = update(params.w1, d_w1, state.m_w1, state.v_w1)
    return (
        replace(params, w0=w0, w1=w1),
        AdamState(step=t, m_w0=m_w0, v_w0=v_w0, m_w1=m_w1, v_w1=v_w1),
    )


def evaluate(params: ModelParams, propagator, dataset: GraphDataset, mask,
             features=None):
    """Accuracy of argmax predictions over ``mask`` (ties -> lowest class)."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValidationError("cannot evaluate on an empty mask")
    x = features if features is not None else _prepared_features(dataset, True)
    trace = forward(params, propagator, x, mode="eval")
    predicted = np.argmax(trace.probs[mask], axis=1)
    return float(np.mean(predicted == dataset.labels[mask]))


def _prepared_features(dataset, normalize):
    return row_normalize_features(dataset.features) if normalize else dataset.features


def _epoch_seed(run_seed, epoch):
    return kernels.mix64_scalar(((run_seed & 0xFFFFFFFF) << 32) | (epoch & 0xFFFFFFFF))


def build_propagator(config: TrainConfig, operators: GraphOperatorSet):
    """Propagation operator and graph-regularizer operator for a config."""
    if config.propagator_kind == "transition":
        transition = walk_estimated_transition_matrix(
            operators, config.k, config.n_walks, config.seed, config.prune_threshold
        )
        propagator = transition.matrix
    else:
        transition = None
        propagator = operators.norm_adjacency

    reg_operator = None
    if config.loss.graph_reg_kind == "laplacian":
        reg_operator = operators.laplacian
    elif config.loss.graph_reg_kind == "transition":
        reg_k = config.loss.graph_reg_k or config.k
        if reg_k is None or reg_k < 1:
            raise ValidationError("transition regularizer requires a positive order")
        if transition is not None and transition.order == reg_k:
            reg_operator = transition.matrix
        else:
            reg_operator = walk_estimated_transition_matrix(
                operators, reg_k, config.n_walks, config.seed, config.prune_threshold
            ).matrix
    return propagator, reg_operator


def train(config: TrainConfig, dataset: GraphDataset, operators=None,
          log=None) -> TrainResult:
    """Train one model; fully deterministic given (config, dataset).

    ``operators`` may carry a prebuilt GraphOperatorSet to avoid
    reconstruction across repeated runs; ``log`` is an optional callback
    receiving each EpochRecord.
    """
    if dataset.train_idx.size == 0 or dataset.val_idx.size == 0:
        raise ValidationError("training requires non-empty train and val splits")
    if operators is None:
        operators = build_operators(dataset.adjacency)
    propagator, reg_operator = build_propagator(config, operators)
    propagator_t = propagator.transpose()
    reg_operator_t = reg_operator.transpose() if reg_operator is not None else None

    x = _prepared_features(dataset, config.normalize_features)
    params = init_params(
        dataset.num_features, config.hidden_dim, dataset.num_classes,
        config.dropout_rate, config.seed,
    )
    state = AdamState.init(params)

    best_params = params
    best_val = math.inf
    best_epoch = 0
    stale = 0
    history = []
    stop_reason = "epoch_limit"
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        trace = forward(params, propagator, x, mode="train",
                        seed=_epoch_seed(config.seed, epoch))
        breakdown = total_loss(trace, params, dataset.labels, dataset.train_idx,
                               config.loss, reg_operator)
        if not math.isfinite(breakdown.total):
            raise TrainingDiverged(epoch, {
                "cross_entropy": breakdown.cross_entropy,
                "weight_decay": breakdown.weight_decay,
                "graph_reg": breakdown.graph_reg,
                "total": breakdown.total,
            })
        grads = gradients(trace, params, propagator, dataset.labels,
                          dataset.train_idx, config.loss, reg_operator,
                          propagator_t=propagator_t, reg_operator_t=reg_operator_t)
        params, state = adam_step(params, grads, state, config.learning_rate)

        eval_trace = forward(params, propagator, x, mode="eval")
        _, val_loss = masked_cross_entropy(eval_trace.probs, dataset.labels,
                                           dataset.val_idx)
        val_pred = np.argmax(eval_trace.probs[dataset.val_idx], axis=1)
        val_acc = float(np.mean(val_pred == dataset.labels[dataset.val_idx]))

        record = EpochRecord(
            epoch=epoch,
            train_loss=breakdown.total,
            cross_entropy=breakdown.cross_entropy,
            weight_decay=breakdown.weight_decay,
            graph_reg=breakdown.graph_reg,
            val_loss=val_loss,
            val_accuracy=val_acc,
        )
        history.append(record)
        if log is not None:
            log(record)
        epochs_run = epoch

        if val_loss < best_val:
            best_val = val_loss
            best_params = params
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
        if epoch > config.min_epochs_before_stop and stale >= config.patience:
            stop_reason = "early_stop"
            break

    test_accuracy = evaluate(best_params, propagator, dataset, dataset.test_idx,
                             features=x)
    return TrainResult(
        epochs_run=epochs_run,
        stop_reason=stop_reason,
        history=tuple(history),
        test_accuracy=test_accuracy,
        seed=config.seed,
        best_epoch=best_epoch,
        best_val_loss=best_val if math.isfinite(best_val) else float("nan"),
        best_params=best_params,
    )


@dataclass(frozen=True)
class RepeatedResult:
    runs: tuple
    mean_accuracy: float
    std_accuracy: float
    mean_epochs: float

    @property
    def n_runs(self):
        return len(self.runs)


def run_repeated(config: TrainConfig, dataset: GraphDataset, n_runs, base_seed,
                 operators=None, log=None) -> RepeatedResult:
    """n_runs independent trainings with seeds base_seed..base_seed+n_runs-1."""
    if n_runs < 1:
        raise ValidationError("n_runs must be >= 1")
    if operators is None:
        operators = build_operators(dataset.adjacency)
    runs = []
    for offset in range(n_runs):
        run_config = replace(config, seed=base_seed + offset)
        try:
            runs.append(train(run_config, dataset, operators=operators, log=log))
        except TrainingDiverged as exc:
            raise TrainingDiverged(
                exc.epoch, {**exc.components, "run_seed": base_seed + offset}
            ) from exc
    accs = np.array([r.test_accuracy for r in runs])
    epochs = np.array([r.epochs_run for r in runs], dtype=np.float64)
    return RepeatedResult(
        runs=tuple(runs),
        mean_accuracy=float(accs.mean()),
        std_accuracy=float(accs.std()),
        mean_epochs=float(epochs.mean()),
    )
