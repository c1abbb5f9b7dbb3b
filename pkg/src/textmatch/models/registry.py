"""The model registry: specs with schemas, builders, and weight persistence."""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from .. import autodiff as ad
from .base import ConfigError, HyperParam, MatchingModel, ModelContext, ModelSpec
from .dssm import DssmModel
from .drmm import DrmmModel
from .knrm import KnrmModel

__all__ = [
    "PersistError",
    "MODEL_IDS",
    "list_model_specs",
    "get_spec",
    "build_model",
    "save_model",
    "load_model",
]


class PersistError(Exception):
    """Weight manifest/blob inconsistent or unreadable."""


# Training-side knobs live in each model's schema so that studio forms,
# job configs, and search spaces all validate against one source.
def _training_schema(lr_default: float = 0.01, num_neg_default: int = 1) -> Tuple[HyperParam, ...]:
    return (
        HyperParam("loss", "categorical",
                   ("pairwise_hinge", "pointwise_mse", "pointwise_bce", "listwise_ce"),
                   "pairwise_hinge"),
        HyperParam("optimizer", "categorical", ("adam", "sgd"), "adam"),
        HyperParam("learning_rate", "float", (1e-6, 1e3), lr_default),
        HyperParam("margin", "float", (1e-6, 10.0), 1.0),
        HyperParam("epochs", "int", (1, 1000), 10),
        HyperParam("batch_size", "int", (1, 1024), 32),
        HyperParam("num_neg_per_pos", "int", (1, 50), num_neg_default),
    )

_EMBED_SCHEMA: Tuple[HyperParam, ...] = (
    HyperParam("embed_dim", "int", (4, 300), 50),
    HyperParam("max_len", "int", (4, 500), 30),
)

_SPECS: Dict[str, ModelSpec] = {
    "dssm": ModelSpec(
        id="dssm",
        name="Deep Structured Semantic Matcher",
        family="representation",
        description=(
            "Hashes each text into letter-trigram counts and encodes both "
            "sides with a shared stack of tanh layers; the match score is "
            "the cosine similarity of the two encodings."
        ),
        schema=(
            HyperParam("hidden1", "int", (4, 1024), 300),
            HyperParam("hidden2", "int", (4, 1024), 300),
            HyperParam("repr_dim", "int", (2, 512), 128),
        )
        + _training_schema(lr_default=0.005, num_neg_default=3),
    ),
    "drmm": ModelSpec(
        id="drmm",
        name="Deep Relevance Matcher",
        family="interaction",
        description=(
            "Buckets each query term's cosine similarities against the "
            "document into a matching histogram, scores every histogram with "
            "a small feed-forward net, and aggregates the per-term signals "
            "with an idf-driven softmax gate."
        ),
        schema=(
            HyperParam("bins", "int", (2, 100), 30),
            HyperParam("hist_mode", "categorical", ("ch", "nh", "lch"), "lch"),
            HyperParam("ffn_hidden", "int", (1, 64), 5),
        )
        + _EMBED_SCHEMA
        + _training_schema(),
    ),
    "knrm": ModelSpec(
        id="knrm",
        name="Kernel-Pooling Neural Ranker",
        family="interaction",
        description=(
            "Pools the word-by-word cosine matrix with a bank of Gaussian "
            "kernels into soft-match features, combined by a trained linear "
            "layer under a tanh."
        ),
        schema=(
            HyperParam("kernels", "int", (2, 30), 11),
            HyperParam("sigma", "float", (0.005, 1.0), 0.1),
            HyperParam("exact_sigma", "float", (1e-4, 0.1), 0.001),
        )
        + _EMBED_SCHEMA
        + _training_schema(),
    ),
}

_CLASSES: Dict[str, type] = {"dssm": DssmModel, "drmm": DrmmModel, "knrm": KnrmModel}
for _id, _cls in _CLASSES.items():
    _cls.spec = _SPECS[_id]

MODEL_IDS: Tuple[str, ...] = tuple(sorted(_SPECS))


def list_model_specs() -> List[ModelSpec]:
    """All registered specs in ascending id order."""
    return [_SPECS[mid] for mid in MODEL_IDS]


def get_spec(model_id: str) -> ModelSpec:
    spec = _SPECS.get(model_id)
    if spec is None:
        raise ConfigError(f"unknown model id {model_id!r} (known: {', '.join(MODEL_IDS)})")
    return spec


def build_model(
    model_id: str,
    overrides: Dict | None,
    context: ModelContext,
    seed: int,
) -> MatchingModel:
    """Validate hyper-parameters and construct a freshly initialized model."""
    spec = get_spec(model_id)
    resolved = spec.resolve(overrides)
    rng = np.random.default_rng([seed, 0])
    return _CLASSES[model_id].fresh(resolved, context, rng)


def save_model(model: MatchingModel) -> Tuple[dict, bytes]:
    """Serialize to a JSON manifest plus a little-endian float64 blob.

    The blob holds every parameter flattened in manifest order.
    """
    manifest = {
        "model_id": model.spec.id,
        "hyper_params": model.hyper_params,
        "parameters": [
            {"name": p.name, "shape": list(p.value.shape), "trainable": p.trainable}
            for p in model.params.values()
        ],
    }
    blob = b"".join(
        np.ascontiguousarray(p.value, dtype="<f8").tobytes()
        for p in model.params.values()
    )
    return manifest, blob


def load_model(manifest: dict, blob: bytes) -> MatchingModel:
    """Rebuild a model from its manifest and weight blob."""
    model_id = manifest.get("model_id")
    spec = get_spec(model_id)
    hyper_params = spec.resolve(manifest.get("hyper_params"))
    entries = manifest.get("parameters", [])
    expected = sum(int(np.prod(e["shape"])) for e in entries) * 8
    if len(blob) != expected:
        raise PersistError(
            f"weight blob holds {len(blob)} bytes but the manifest needs {expected}"
        )
    params: Dict[str, ad.Parameter] = {}
    offset = 0
    for entry in entries:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += count * 8
        params[entry["name"]] = ad.Parameter(
            entry["name"], arr.astype(np.float64), trainable=bool(entry.get("trainable", True))
        )
    return _CLASSES[model_id](hyper_params, params)
