"""Time series classification with quantiles over fixed dyadic intervals."""

from .core import (
    ConfigError,
    DataError,
    FeatureMatrix,
    LabeledDataset,
    QuantError,
    relabel,
)
from .forest import Forest, TrainConfig
from .intervals import default_depth, make_intervals
from .model import Model, load_model, save_model, train
from .representations import Representation
from .transform import (
    FittedTransform,
    TransformConfig,
    interval_quantiles,
    quantile_count,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FeatureMatrix",
    "FittedTransform",
    "Forest",
    "LabeledDataset",
    "Model",
    "QuantError",
    "Representation",
    "TrainConfig",
    "TransformConfig",
    "default_depth",
    "interval_quantiles",
    "load_model",
    "make_intervals",
    "quantile_count",
    "relabel",
    "save_model",
    "train",
]
