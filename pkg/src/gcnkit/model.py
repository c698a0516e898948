"""Two-layer graph convolutional classifier with pluggable propagation
operator and manually derived gradients.

The forward pass is

    probs = row_softmax( M . relu( M . drop(X) . W0 ) . drop . W1 )

where M is either the symmetric-normalized self-loop adjacency or a k-step
transition matrix, and inverted dropout is applied to the input of each
layer in train mode only. Losses combine masked cross-entropy, first-layer
weight decay, and an optional quadratic graph regularizer tr(f' Q f) with
Q the graph Laplacian or a transition matrix.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeError, ValidationError
from .graph import TransitionMatrix
from .tensor import CSRMatrix, as_dense, spmm

LOG_CLAMP = 1e-15


@dataclass(frozen=True)
class ModelParams:
    w0: np.ndarray  # (num_features, hidden_dim)
    w1: np.ndarray  # (hidden_dim, num_classes)
    hidden_dim: int
    dropout_rate: float

    def __post_init__(self):
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValidationError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.w0.shape[1] != self.hidden_dim or self.w1.shape[0] != self.hidden_dim:
            raise ShapeError("weight shapes inconsistent with hidden_dim")


@dataclass(frozen=True)
class LossConfig:
    """Loss composition: cross-entropy + weight decay + optional graph term."""

    weight_decay_lambda: float = 0.0
    graph_reg_weight: float = 0.0
    graph_reg_kind: str = "none"  # "none" | "laplacian" | "transition"
    graph_reg_k: int | None = None  # transition order when kind == "transition"
    reg_on_logits: bool = False  # ablation: regularize pre-softmax activations
    flip_transition_sign: bool = False  # ablation only; default keeps the +tr(f' P f) form

    def __post_init__(self):
        if self.graph_reg_kind not in ("none", "laplacian", "transition"):
            raise ValidationError(f"unknown graph_reg_kind {self.graph_reg_kind!r}")
        if self.weight_decay_lambda < 0 or self.graph_reg_weight < 0:
            raise ValidationError("loss coefficients must be non-negative")


@dataclass(frozen=True)
class ForwardTrace:
    """All intermediates of one forward pass, as needed for backprop."""

    mode: str
    x_dropped: np.ndarray
    pre_hidden: np.ndarray      # M . drop(X) . W0
    hidden: np.ndarray          # relu(pre_hidden)
    hidden_dropped: np.ndarray
    pre_output: np.ndarray      # logits
    probs: np.ndarray
    drop_mask0: np.ndarray | None  # scaled keep masks, None in eval mode
    drop_mask1: np.ndarray | None


def init_params(num_features, hidden_dim, num_classes, dropout_rate, seed) -> ModelParams:
    """Symmetric-uniform initialization scaled by 1/sqrt(fan_in + fan_out)."""
    rng = np.random.default_rng([seed, 0])
    a0 = 1.0 / np.sqrt(num_features + hidden_dim)
    a1 = 1.0 / np.sqrt(hidden_dim + num_classes)
    return ModelParams(
        w0=rng.uniform(-a0, a0, size=(num_features, hidden_dim)),
        w1=rng.uniform(-a1, a1, size=(hidden_dim, num_classes)),
        hidden_dim=hidden_dim,
        dropout_rate=dropout_rate,
    )


def row_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ModelParams, propagator: CSRMatrix, features, mode="eval",
            seed=None) -> ForwardTrace:
    """Run the two-layer model; ``mode`` is "eval" or "train".

    Train mode applies seeded inverted dropout and is deterministic given
    the seed; eval mode has no randomness.
    """
    x = as_dense(features)
    n = x.shape[0]
    if propagator.shape != (n, n):
        raise ShapeError(f"propagator {propagator.shape} does not match {n} nodes")
    if params.w0.shape[0] != x.shape[1]:
        raise ShapeError(
            f"w0 expects {params.w0.shape[0]} features, dataset has {x.shape[1]}"
        )
    if mode not in ("train", "eval"):
        raise ValidationError(f"mode must be 'train' or 'eval', got {mode!r}")

    mask0 = mask1 = None
    if mode == "train" and params.dropout_rate > 0.0:
        if seed is None:
            raise ValidationError("train mode requires a dropout seed")
        rng = np.random.default_rng([seed, 1])
        keep = 1.0 - params.dropout_rate
        mask0 = (rng.random(x.shape) < keep) / keep
        mask1 = (rng.random((n, params.hidden_dim)) < keep) / keep

    x_dropped = x * mask0 if mask0 is not None else x
    pre_hidden = spmm(propagator, x_dropped @ params.w0)
    hidden = np.maximum(pre_hidden, 0.0)
    hidden_dropped = hidden * mask1 if mask1 is not None else hidden
    pre_output = spmm(propagator, hidden_dropped @ params.w1)
    probs = row_softmax(pre_output)
    return ForwardTrace(
        mode=mode,
        x_dropped=x_dropped,
        pre_hidden=pre_hidden,
        hidden=hidden,
        hidden_dropped=hidden_dropped,
        pre_output=pre_output,
        probs=probs,
        drop_mask0=mask0,
        drop_mask1=mask1,
    )


def masked_cross_entropy(probs, labels, mask):
    """Cross-entropy over the masked nodes; returns (sum, mean).

    Probabilities are clamped at LOG_CLAMP before the log so a confidently
    wrong prediction yields a large finite loss, never NaN.
    """
    probs = as_dense(probs)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        return 0.0, 0.0
    if mask.min() < 0 or mask.max() >= probs.shape[0]:
        raise ValidationError("mask index out of range")
    picked_labels = labels[mask]
    if picked_labels.min() < 0 or picked_labels.max() >= probs.shape[1]:
        raise ValidationError("masked node has an out-of-range label")
    p = probs[mask, picked_labels]
    total = float(-np.log(np.maximum(p, LOG_CLAMP)).sum())
    return total, total / mask.size


def weight_decay_loss(w0, lam):
    """(lambda / 2) * sum of squared first-layer weights."""
    if lam == 0.0:
        return 0.0
    return 0.5 * float(lam) * float(np.sum(w0 * w0))


def _as_csr(operator):
    if isinstance(operator, TransitionMatrix):
        return operator.matrix
    return operator


def quadratic_form_trace(operator, f):
    """trace(f' Q f) for a sparse Q."""
    q = _as_csr(operator)
    f = as_dense(f)
    if q.shape != (f.shape[0], f.shape[0]):
        raise ShapeError(f"operator {q.shape} does not match {f.shape[0]} nodes")
    return float(np.sum(f * spmm(q, f)))


def laplacian_reg_loss(laplacian, probs):
    """trace(f' L f): penalizes adjacent nodes with differing outputs."""
    return quadratic_form_trace(laplacian, probs)


def transition_reg_loss(transition, probs):
    """trace(f' P^k f), kept in exactly this form (note: not a smoothness
    penalty; the sign is preserved from the combined-loss definition)."""
    return quadratic_form_trace(transition, probs)


@dataclass(frozen=True)
class LossBreakdown:
    cross_entropy_sum: float
    cross_entropy: float  # per-node mean; this is what training minimizes
    weight_decay: float
    graph_reg: float      # unweighted regularizer value
    total: float


def total_loss(trace: ForwardTrace, params: ModelParams, labels, mask,
               config: LossConfig, reg_operator=None) -> LossBreakdown:
    """Mean cross-entropy + weight decay + weighted graph regularizer."""
    ce_sum, ce_mean = masked_cross_entropy(trace.probs, labels, mask)
    wd = weight_decay_loss(params.w0, config.weight_decay_lambda)
    reg = 0.0
    if config.graph_reg_kind != "none":
        if reg_operator is None:
            raise ValidationError(
                f"graph_reg_kind={config.graph_reg_kind!r} requires a reg_operator"
            )
        f = trace.pre_output if config.reg_on_logits else trace.probs
        reg = quadratic_form_trace(reg_operator, f)
        if config.graph_reg_kind == "transition" and config.flip_transition_sign:
            reg = -reg
    total = ce_mean + wd + config.graph_reg_weight * reg
    return LossBreakdown(ce_sum, ce_mean, wd, reg, total)


def gradients(trace: ForwardTrace, params: ModelParams, propagator: CSRMatrix,
              labels, mask, config: LossConfig, reg_operator=None,
              propagator_t: CSRMatrix | None = None,
              reg_operator_t: CSRMatrix | None = None):
    """Exact gradients of ``total_loss`` with respect to (w0, w1).

    The dropout masks stored in the trace are reused, so this matches finite
    differences of the same seeded forward pass. The cross-entropy log clamp
    is ignored (it only binds at probabilities below LOG_CLAMP).
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    z = trace.probs
    n, c = z.shape
    if propagator_t is None:
        propagator_t = propagator.transpose()

    d_logits = np.zeros((n, c), dtype=np.float64)
    if mask.size:
        d_logits[mask] = z[mask]
        d_logits[mask, labels[mask]] -= 1.0
        d_logits[mask] /= mask.size

    if config.graph_reg_kind != "none" and config.graph_reg_weight != 0.0:
        if reg_operator is None:
            raise ValidationError(
                f"graph_reg_kind={config.graph_reg_kind!r} requires a reg_operator"
            )
        q = _as_csr(reg_operator)
        q_t = _as_csr(reg_operator_t) if reg_operator_t is not None else q.transpose()
        coeff = config.graph_reg_weight
        if config.graph_reg_kind == "transition" and config.flip_transition_sign:
            coeff = -coeff
        f = trace.pre_output if config.reg_on_logits else z
        g = coeff * (spmm(q, f) + spmm(q_t, f))
        if config.reg_on_logits:
            d_logits += g
        else:
            # Chain rule through the row softmax.
            d_logits += z * (g - np.sum(g * z, axis=1, keepdims=True))

    v = spmm(propagator_t, d_logits)
    d_w1 = trace.hidden_dropped.T @ v
    d_hidden = v @ params.w1.T
    if trace.drop_mask1 is not None:
        d_hidden = d_hidden * trace.drop_mask1
    d_pre_hidden = d_hidden * (trace.pre_hidden > 0.0)
    t = spmm(propagator_t, d_pre_hidden)
    d_w0 = trace.x_dropped.T @ t
    if config.weight_decay_lambda != 0.0:
        d_w0 = d_w0 + config.weight_decay_lambda * params.w0
    return d_w0, d_w1


def with_weights(params: ModelParams, w0, w1) -> ModelParams:
    return replace(params, w0=w0, w1=w1)
