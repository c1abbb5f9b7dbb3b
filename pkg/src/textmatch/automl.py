"""Seeded random search over declared hyper-parameter domains.

Each registered model also owns a data transformer that turns raw text into
its required input format. Trials are independent: trial i's configuration
depends only on (seed, i, space), so runs reproduce and parallel execution
cannot change the selected best.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping

import numpy as np

from .dataset import DataPack
from .models import get_spec
from .text_pipeline import (
    FixedLengthUnit,
    FrequencyFilterUnit,
    LowercaseUnit,
    Pipeline,
    PuncRemovalUnit,
    TermCountsUnit,
    TokenizeUnit,
    VocabularyUnit,
    WordHashingUnit,
)

__all__ = [
    "SearchSpaceError",
    "TuneError",
    "Categorical",
    "IntUniform",
    "FloatUniform",
    "FloatLogUniform",
    "SearchSpace",
    "space_from_json",
    "sample",
    "data_transformer_for",
    "Trial",
    "TuneResult",
    "tune",
]


class SearchSpaceError(Exception):
    """A search space domain is malformed or names an unknown parameter."""


class TuneError(Exception):
    """Random search could not produce any successful trial."""


@dataclass(frozen=True)
class Categorical:
    items: tuple

    def __post_init__(self):
        if not self.items:
            raise SearchSpaceError("categorical domain must be non-empty")

    def draw(self, rng: np.random.Generator):
        return self.items[int(rng.integers(0, len(self.items)))]

    def to_json(self) -> dict:
        return {"kind": "categorical", "items": list(self.items)}


@dataclass(frozen=True)
class IntUniform:
    lo: int
    hi: int  # inclusive

    def __post_init__(self):
        if self.lo >= self.hi:
            raise SearchSpaceError(f"int_uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def draw(self, rng: np.random.Generator):
        return int(rng.integers(self.lo, self.hi + 1))

    def to_json(self) -> dict:
        return {"kind": "int_uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class FloatUniform:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo >= self.hi:
            raise SearchSpaceError(f"float_uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def draw(self, rng: np.random.Generator):
        return float(rng.uniform(self.lo, self.hi))

    def to_json(self) -> dict:
        return {"kind": "float_uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class FloatLogUniform:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo <= 0:
            raise SearchSpaceError(f"float_log_uniform needs lo > 0, got {self.lo}")
        if self.lo >= self.hi:
            raise SearchSpaceError(
                f"float_log_uniform needs lo < hi, got [{self.lo}, {self.hi}]"
            )

    def draw(self, rng: np.random.Generator):
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))

    def to_json(self) -> dict:
        return {"kind": "float_log_uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class SearchSpace:
    domains: Mapping[str, object]

    def validate_for(self, model_id: str) -> None:
        schema_names = {hp.name for hp in get_spec(model_id).schema}
        unknown = sorted(set(self.domains) - schema_names)
        if unknown:
            raise SearchSpaceError(
                f"space names parameters missing from {model_id}'s schema: "
                + ", ".join(unknown)
            )

    def to_json(self) -> dict:
        return {name: dom.to_json() for name, dom in self.domains.items()}


_DOMAIN_KINDS = {
    "categorical": lambda doc: Categorical(tuple(doc["items"])),
    "int_uniform": lambda doc: IntUniform(int(doc["lo"]), int(doc["hi"])),
    "float_uniform": lambda doc: FloatUniform(float(doc["lo"]), float(doc["hi"])),
    "float_log_uniform": lambda doc: FloatLogUniform(float(doc["lo"]), float(doc["hi"])),
}


def space_from_json(doc: Mapping[str, dict]) -> SearchSpace:
    domains = {}
    for name, entry in doc.items():
        kind = entry.get("kind")
        maker = _DOMAIN_KINDS.get(kind)
        if maker is None:
            raise SearchSpaceError(
                f"{name}: unknown domain kind {kind!r} "
                f"(valid: {', '.join(sorted(_DOMAIN_KINDS))})"
            )
        domains[name] = maker(entry)
    return SearchSpace(domains)


def sample(space: SearchSpace, rng: np.random.Generator) -> Dict[str, object]:
    """One independent draw per parameter, in sorted name order."""
    return {name: space.domains[name].draw(rng) for name in sorted(space.domains)}


def data_transformer_for(model_id: str, hyper_params: Mapping | None = None) -> Pipeline:
    """The unfitted preprocessing pipeline a model requires.

    Count-tower models hash words to trigram counts; embedding models map to
    padded index sequences.
    """
    spec = get_spec(model_id)  # raises on unknown ids
    hp = spec.resolve(hyper_params)
    if model_id == "dssm":
        return Pipeline(
            [TokenizeUnit(), LowercaseUnit(), PuncRemovalUnit(), WordHashingUnit(), TermCountsUnit()]
        )
    return Pipeline(
        [
            TokenizeUnit(),
            LowercaseUnit(),
            PuncRemovalUnit(),
            FrequencyFilterUnit(min_freq=1),
            VocabularyUnit(),
            FixedLengthUnit(length=int(hp["max_len"])),
        ]
    )


@dataclass
class Trial:
    index: int
    config: Dict[str, object]
    status: str = "pending"  # pending | done | failed
    metric: float | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "config": self.config,
            "status": self.status,
            "metric": self.metric,
            "error": self.error,
        }


@dataclass
class TuneResult:
    trials: List[Trial]
    best_index: int
    best_run: object  # the winning trial's ExperimentRun

    def to_json(self) -> dict:
        return {
            "trials": [t.to_json() for t in self.trials],
            "best_index": self.best_index,
        }


def trial_seed(seed: int, index: int) -> int:
    """Deterministic per-trial seed derived only from (seed, index)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def tune(
    model_id: str,
    space: SearchSpace,
    raw_packs: Mapping[str, DataPack],
    trials: int,
    seed: int,
    selection_metric: str = "ndcg@10",
    base_overrides: Mapping | None = None,
    embedding_path=None,
    event_sink: Callable[[Trial], None] | None = None,
) -> TuneResult:
    """Pure random search: sample, train, evaluate, keep the best trial.

    Failed trials (divergence, bad configurations) are recorded and skipped
    for selection; ties on the metric go to the lowest trial index.
    """
    from . import experiment  # deferred: experiment builds on this module

    if trials < 1:
        raise TuneError(f"trials must be >= 1, got {trials}")
    space.validate_for(model_id)
    table: List[Trial] = []
    best: Trial | None = None
    best_run = None
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        config = sample(space, rng)
        overrides = {**(base_overrides or {}), **config}
        trial = Trial(index=i, config=config)
        try:
            run = experiment.run_experiment(
                model_id,
                overrides,
                raw_packs,
                seed=trial_seed(seed, i),
                metrics=(selection_metric,),
                embedding_path=embedding_path,
            )
            if run.result.status != "done":
                raise TuneError(run.result.error or "training failed")
            trial.status = "done"
            trial.metric = run.result.history[-1].metrics[selection_metric]
        except Exception as exc:
            trial.status = "failed"
            trial.error = str(exc)
        table.append(trial)
        if trial.status == "done" and (best is None or trial.metric > best.metric):
            best = trial
            best_run = run
        if event_sink is not None:
            event_sink(trial)
    if best is None:
        details = "; ".join(f"trial {t.index}: {t.error}" for t in table)
        raise TuneError(f"all {trials} trial(s) failed: {details}")
    return TuneResult(trials=table, best_index=best.index, best_run=best_run)
