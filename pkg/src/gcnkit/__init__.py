"""Semi-supervised node classification on graphs.

Two-layer graph convolutional networks with a normalized-adjacency or
random-walk transition propagator, optional Laplacian or transition
regularization, analytic gradients, and full-batch Adam training.
"""

from .data import (
    GraphDataset,
    datasets_equal,
    generate_sbm,
    load_dataset,
    row_normalize_features,
    save_dataset,
)
from .errors import (
    DatasetError,
    GcnkitError,
    ShapeError,
    TrainingDiverged,
    ValidationError,
)
from .graph import (
    GraphOperatorSet,
    TransitionMatrix,
    build_operators,
    exact_transition_matrix,
    one_step_transition,
    walk_estimated_transition_matrix,
)
from .model import (
    LossConfig,
    LossBreakdown,
    ModelParams,
    forward,
    gradients,
    init_params,
    laplacian_reg_loss,
    masked_cross_entropy,
    row_softmax,
    total_loss,
    transition_reg_loss,
    weight_decay_loss,
)
from .tensor import CSRMatrix, as_dense
from .training import (
    EpochRecord,
    RepeatedResult,
    TrainConfig,
    TrainResult,
    evaluate,
    run_repeated,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CSRMatrix",
    "DatasetError",
    "EpochRecord",
    "GcnkitError",
    "GraphDataset",
    "GraphOperatorSet",
    "LossBreakdown",
    "LossConfig",
    "ModelParams",
    "RepeatedResult",
    "ShapeError",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "TransitionMatrix",
    "ValidationError",
    "as_dense",
    "build_operators",
    "datasets_equal",
    "evaluate",
    "exact_transition_matrix",
    "forward",
    "generate_sbm",
    "gradients",
    "init_params",
    "laplacian_reg_loss",
    "load_dataset",
    "masked_cross_entropy",
    "one_step_transition",
    "row_normalize_features",
    "row_softmax",
    "run_repeated",
    "save_dataset",
    "total_loss",
    "train",
    "transition_reg_loss",
    "walk_estimated_transition_matrix",
    "weight_decay_loss",
]
