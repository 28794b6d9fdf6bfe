"""Generative models for gene-expression microarrays.

Thin re-export of the compiled core: dataset parsing, synthetic data, RBM and
GAN training, classifier heads, metrics, and the experiment harness.
"""

from deepgen._core import (
    ConfigError,
    DeepgenError,
    DimensionError,
    ExpressionMatrix,
    FormatError,
    GanModel,
    IoError,
    LabelError,
    LogisticModel,
    NumericError,
    ParseError,
    RbmModel,
    SplitError,
    StateError,
    SvmModel,
    __version__,
    attach_labels,
    augment_replicate,
    evaluate_labels,
    f1_round_consistent,
    load_label_map,
    logistic_fit,
    make_synthetic,
    minmax_scale,
    parse_series_matrix,
    parse_tsv_matrix,
    run_experiment,
    run_sweep,
    shuffle_split,
    svm_fit,
    train_gan,
    train_rbm,
    write_series_matrix,
    write_synthetic_files,
)

__all__ = [
    "ConfigError",
    "DeepgenError",
    "DimensionError",
    "ExpressionMatrix",
    "FormatError",
    "GanModel",
    "IoError",
    "LabelError",
    "LogisticModel",
    "NumericError",
    "ParseError",
    "RbmModel",
    "SplitError",
    "StateError",
    "SvmModel",
    "__version__",
    "attach_labels",
    "augment_replicate",
    "evaluate_labels",
    "f1_round_consistent",
    "load_label_map",
    "logistic_fit",
    "make_synthetic",
    "minmax_scale",
    "parse_series_matrix",
    "parse_tsv_matrix",
    "run_experiment",
    "run_sweep",
    "shuffle_split",
    "svm_fit",
    "train_gan",
    "train_rbm",
    "write_series_matrix",
    "write_synthetic_files",
]
