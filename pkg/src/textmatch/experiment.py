"""End-to-end orchestration shared by the CLI, the studio service, and tuning.

One experiment = fit the model's data transformer on the training split,
process every split, derive corpus statistics and embeddings, build the
model, and train it. The CLI and the service both run through here, so their
artifacts and metric values are identical for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Sequence

from .automl import data_transformer_for
from .dataset import DataPack, idf_weights, load_embeddings
from .models import MatchingModel, ModelContext, build_model, get_spec
from .text_pipeline import Pipeline
from .train_eval import EpochEvent, TrainConfig, TrainResult, evaluate, train

__all__ = ["ExperimentRun", "prepare_experiment", "run_experiment", "evaluate_pack"]

DEFAULT_METRICS = ("ndcg@10", "map")


@dataclass
class PreparedExperiment:
    model: MatchingModel
    pipeline: Pipeline
    packs: Dict[str, DataPack]  # processed, keyed by split name


@dataclass
class ExperimentRun:
    model: MatchingModel
    pipeline: Pipeline
    packs: Dict[str, DataPack]
    result: TrainResult


def _fit_corpus(pack: DataPack) -> list:
    # One shared vocabulary over both sides: queries and documents must live
    # in the same embedding/trigram space.
    return list(pack.left.values()) + list(pack.right.values())


def prepare_experiment(
    model_id: str,
    overrides: Mapping | None,
    raw_packs: Mapping[str, DataPack],
    seed: int,
    embedding_path=None,
) -> PreparedExperiment:
    """Fit the transformer on the train split and build a fresh model."""
    if "train" not in raw_packs:
        raise ValueError("raw_packs must include a 'train' split")
    spec = get_spec(model_id)
    hp = spec.resolve(overrides)
    pipeline = data_transformer_for(model_id, hp)
    pipeline.fit_transform(_fit_corpus(raw_packs["train"]))
    packs = {name: pack.map_texts(pipeline.transform) for name, pack in raw_packs.items()}

    context = ModelContext()
    if model_id == "dssm":
        context.input_dim = pipeline.find("term_counts").size
    else:
        vocab = pipeline.find("vocabulary")
        dim = int(hp["embed_dim"])
        context.embeddings = load_embeddings(
            embedding_path, vocab.term_index, vocab.size, dim, seed=[seed, 1]
        )
        if model_id == "drmm":
            context.idf = idf_weights(packs["train"]).as_vector(vocab.size)
    model = build_model(model_id, overrides, context, seed)
    return PreparedExperiment(model=model, pipeline=pipeline, packs=packs)


def run_experiment(
    model_id: str,
    overrides: Mapping | None,
    raw_packs: Mapping[str, DataPack],
    seed: int,
    metrics: Sequence[str] = DEFAULT_METRICS,
    embedding_path=None,
    event_sink: Callable[[EpochEvent], None] | None = None,
) -> ExperimentRun:
    """Prepare and train; validation defaults to the train split if absent."""
    prepared = prepare_experiment(model_id, overrides, raw_packs, seed, embedding_path)
    valid = prepared.packs.get("valid", prepared.packs["train"])
    config = TrainConfig.from_hyper_params(prepared.model.hyper_params, seed, metrics)
    result = train(prepared.model, prepared.packs["train"], valid, config, event_sink)
    return ExperimentRun(
        model=prepared.model,
        pipeline=prepared.pipeline,
        packs=prepared.packs,
        result=result,
    )


def evaluate_pack(model: MatchingModel, pack: DataPack, metrics: Sequence[str]) -> Dict[str, float]:
    return evaluate(model, pack, metrics)


def surface_tokens(pipeline: Pipeline, text: str) -> list:
    """Tokens aligned with a model's interaction-matrix axis for one text.

    Runs the pipeline up to (not including) the vocabulary stage, then applies
    the same truncation the fixed-length stage would, so token i labels row i
    of the unpadded matrix.
    """
    upto = pipeline.index_of("vocabulary")
    tokens = pipeline.transform(text, upto=upto)
    fixed = pipeline.find("fixed_length")
    if fixed is not None:
        tokens = tokens[: fixed.params["length"]]
    return list(tokens)


def explain_texts(model: MatchingModel, pipeline: Pipeline, text_left: str, text_right: str) -> dict:
    """Score two raw texts and attach the model-family explanation document."""
    left = pipeline.transform(text_left)
    right = pipeline.transform(text_right)
    exp = model.explain(left, right)
    doc = exp.to_json()
    if exp.family == "interaction":
        doc["left_tokens"] = surface_tokens(pipeline, text_left)
        doc["right_tokens"] = surface_tokens(pipeline, text_right)
    return {"score": exp.score, "explanation": doc}
