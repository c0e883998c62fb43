"""Feature selection for one-hidden-layer tanh networks with the adaptive group lasso."""

from .errors import ContractViolation, DivergenceError, ParseError
from .network import (
    Dataset,
    LossKind,
    NetworkParams,
    Task,
    empirical_risk,
    forward,
    forward_batch,
    grad_risk,
    predict_prob,
)
from .optim import AdamState, Mode, TrainConfig, adam_step, train
from .penalty import (
    AdaptiveWeights,
    PenaltyKind,
    PenaltySpec,
    adaptive_penalty,
    adaptive_weights,
    block_soft_threshold,
    group_lasso_penalty,
    group_norms,
)
from .equivalence import EquivTransform, apply_transform, equiv_distance, is_irreducible
from .metrics import ExperimentReport, accuracy, fdr_per_feature, tpr_per_feature, validation_study
from .pipeline import (
    Grids,
    Method,
    SelectionResult,
    cross_validate,
    fit_adaptive,
    fit_erm,
    fit_group_lasso,
    run_pipeline,
    select_features,
    stability_run,
)
from .simgen import SimConfig, generate_dataset, generate_true_model, run_experiment
from .tabular import load_csv

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "DivergenceError",
    "ParseError",
    "Dataset",
    "LossKind",
    "NetworkParams",
    "Task",
    "empirical_risk",
    "forward",
    "forward_batch",
    "grad_risk",
    "predict_prob",
    "AdamState",
    "Mode",
    "TrainConfig",
    "adam_step",
    "train",
    "AdaptiveWeights",
    "PenaltyKind",
    "PenaltySpec",
    "adaptive_penalty",
    "adaptive_weights",
    "block_soft_threshold",
    "group_lasso_penalty",
    "group_norms",
    "EquivTransform",
    "apply_transform",
    "equiv_distance",
    "is_irreducible",
    "ExperimentReport",
    "accuracy",
    "fdr_per_feature",
    "tpr_per_feature",
    "validation_study",
    "Grids",
    "Method",
    "SelectionResult",
    "cross_validate",
    "fit_adaptive",
    "fit_erm",
    "fit_group_lasso",
    "run_pipeline",
    "select_features",
    "stability_run",
    "SimConfig",
    "generate_dataset",
    "generate_true_model",
    "run_experiment",
    "load_csv",
]
