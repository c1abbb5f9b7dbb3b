from .base import ConfigError, Explanation, HyperParam, MatchingModel, ModelContext, ModelSpec
from .layers import (
    KernelBank,
    LayerError,
    attention,
    default_kernel_bank,
    kernel_pooling,
    matching_histogram,
    matching_matrix,
)
from .registry import (
    MODEL_IDS,
    PersistError,
    build_model,
    get_spec,
    list_model_specs,
    load_model,
    save_model,
)
from .dssm import DssmModel
from .drmm import DrmmModel
from .knrm import KnrmModel

__all__ = [
    "ConfigError",
    "Explanation",
    "HyperParam",
    "MatchingModel",
    "ModelContext",
    "ModelSpec",
    "KernelBank",
    "LayerError",
    "attention",
    "default_kernel_bank",
    "kernel_pooling",
    "matching_histogram",
    "matching_matrix",
    "MODEL_IDS",
    "PersistError",
    "build_model",
    "get_spec",
    "list_model_specs",
    "load_model",
    "save_model",
    "DssmModel",
    "DrmmModel",
    "KnrmModel",
]
