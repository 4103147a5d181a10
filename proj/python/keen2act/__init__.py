"""Two-stage item and activity recommender."""

from ._core import (
    ConfigError,
    Dataset,
    Error,
    Model,
    NumericalError,
    ParseError,
    __version__,
    average_precision_at_k,
    config_keys,
    evaluate,
    load_dataset,
    load_model,
    synthetic,
    train,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "Error",
    "Model",
    "NumericalError",
    "ParseError",
    "__version__",
    "average_precision_at_k",
    "config_keys",
    "evaluate",
    "load_dataset",
    "load_model",
    "synthetic",
    "train",
]
