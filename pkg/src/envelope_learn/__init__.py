"""Learning the stable operating envelope of an engine from imbalanced data.

Labeling of per-cycle engine traces, linear baselines, extreme learning
machines and SMO-trained SVMs with cost-sensitive and re-sampling variants,
skewed-data metrics and grid search, plus a seeded synthetic engine.
"""

__version__ = "0.1.0"

from ._accel import backend
from .data import (
    DataError, LabeledDataset, ScaleParams, STABLE, UNSTABLE, read_dataset_csv, sign, standardize_apply,
    standardize_fit, write_dataset_csv,
)
from .elm import ElmModel, class_weights, elm_predict, elm_train, init_hidden_layer
from .evaluation import (
    EvalReport, GridSpec, confusion_rates, grid_search, loss_value, multi_seed_study, sensitivity_sweep,
)
from .labeling import EngineTrace, LabelingConfig, build_feature_vector, label_cycles
from .linear import LinearModel, SingularSystemError, predict_linear, train_linear_ls, train_logistic
from .models_io import load_model, save_model
from .resampling import ResampleSpec, oversample, undersample
from .svm import SmoNotConverged, SvmConfig, SvmModel, rbf_kernel, svm_predict, svm_train
from .synthetic import GeneratorConfig, generate_trace, make_benchmark, preset
from .trainers import Trainer

__all__ = [
    "__version__", "backend", "DataError", "LabeledDataset", "ScaleParams", "STABLE", "UNSTABLE",
    "read_dataset_csv", "sign", "standardize_apply", "standardize_fit", "write_dataset_csv",
    "ElmModel", "class_weights", "elm_predict", "elm_train", "init_hidden_layer",
    "EvalReport", "GridSpec", "confusion_rates", "grid_search", "loss_value", "multi_seed_study",
    "sensitivity_sweep", "EngineTrace", "LabelingConfig", "build_feature_vector", "label_cycles",
    "LinearModel", "SingularSystemError", "predict_linear", "train_linear_ls", "train_logistic",
    "load_model", "save_model", "ResampleSpec", "oversample", "undersample",
    "SmoNotConverged", "SvmConfig", "SvmModel", "rbf_kernel", "svm_predict", "svm_train",
    "GeneratorConfig", "generate_trace", "make_benchmark", "preset", "Trainer",
]
