"""Model registry types: hyper-parameter schemas, specs, and the model base.

Every matching model exposes the same surface: a named parameter set, batch
scoring through the autodiff graph, single-pair scoring, and an explanation
(representation vectors or an interaction matrix plus component weights).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .. import autodiff as ad

__all__ = [
    "ConfigError",
    "HyperParam",
    "ModelSpec",
    "Explanation",
    "ModelContext",
    "MatchingModel",
    "glorot",
    "affine",
]


class ConfigError(Exception):
    """A configuration violates a model's hyper-parameter schema."""


@dataclass(frozen=True)
class HyperParam:
    """One schema entry: categorical list, or inclusive int/float range."""

    name: str
    kind: str  # "categorical" | "int" | "float"
    domain: tuple
    default: object

    def check(self, value) -> object:
        if self.kind == "categorical":
            if value not in self.domain:
                raise ConfigError(
                    f"{self.name}: {value!r} not in {list(self.domain)}"
                )
            return value
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{self.name}: expected an integer, got {value!r}")
            value = int(value)
        elif self.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)):
                raise ConfigError(f"{self.name}: expected a number, got {value!r}")
            value = float(value)
        lo, hi = self.domain
        if not (lo <= value <= hi):
            raise ConfigError(f"{self.name}: {value!r} outside [{lo}, {hi}]")
        return value

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "domain": list(self.domain),
            "default": self.default,
        }


@dataclass(frozen=True)
class ModelSpec:
    """A model family: identity, school, prose description, and schema."""

    id: str
    name: str
    family: str  # "representation" | "interaction"
    description: str
    schema: Tuple[HyperParam, ...]

    def defaults(self) -> Dict[str, object]:
        return {hp.name: hp.default for hp in self.schema}

    def resolve(self, overrides: Dict[str, object] | None) -> Dict[str, object]:
        """Merge overrides into defaults, validating names, types, domains."""
        overrides = dict(overrides or {})
        known = {hp.name: hp for hp in self.schema}
        unknown = sorted(set(overrides) - set(known))
        if unknown:
            raise ConfigError(
                f"{self.id}: unknown hyper-parameter(s): {', '.join(unknown)}"
            )
        resolved = self.defaults()
        errors = []
        for name, value in overrides.items():
            try:
                resolved[name] = known[name].check(value)
            except ConfigError as exc:
                errors.append(str(exc))
        if errors:
            raise ConfigError(f"{self.id}: " + "; ".join(errors))
        return resolved

    def summary(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "family": self.family,
            "description": self.description,
        }

    def to_json(self) -> dict:
        doc = self.summary()
        doc["schema"] = [hp.to_json() for hp in self.schema]
        return doc


@dataclass
class Explanation:
    """What a model can show about one scored pair.

    Representation models expose the two encoded vectors; interaction models
    expose the cosine interaction matrix (unpadded extents) plus the final
    component weights (kernel weights or term gates).
    """

    family: str
    score: float
    left_vector: List[float] | None = None
    right_vector: List[float] | None = None
    matrix: List[List[float]] | None = None
    weights: List[float] | None = None

    def to_json(self) -> dict:
        doc = {"family": self.family, "score": self.score}
        if self.family == "representation":
            doc["left_vector"] = self.left_vector
            doc["right_vector"] = self.right_vector
        else:
            doc["matrix"] = self.matrix
            doc["weights"] = self.weights
        return doc


@dataclass
class ModelContext:
    """Corpus-derived inputs a model needs at build time.

    input_dim: width of count vectors (trigram towers); embeddings: [V, d]
    matrix with zero padding row; idf: per-index weights aligned with the
    vocabulary.
    """

    input_dim: int | None = None
    embeddings: np.ndarray | None = None
    idf: np.ndarray | None = None


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def affine(x: ad.Node, w: ad.Node, b: ad.Node) -> ad.Node:
    """x @ w + bias row, the bias replicated via an explicit ones column."""
    ones = ad.constant(np.ones((x.value.shape[0], 1)))
    return ad.add(ad.matmul(x, w), ad.matmul(ones, b))


class MatchingModel:
    """Base for concrete models; subclasses fill in scoring and explanation."""

    spec: ModelSpec

    def __init__(self, hyper_params: Dict[str, object], params: Dict[str, ad.Parameter]):
        self.hyper_params = dict(hyper_params)
        self.params = dict(params)
        if len({p.name for p in self.params.values()}) != len(self.params):
            raise ConfigError("parameter names must be unique within a model")

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def trainable_params(self) -> Dict[str, ad.Parameter]:
        return {k: p for k, p in self.params.items() if p.trainable}

    def pair_features(self, left_processed, right_processed):
        """Model-specific fixed inputs for one (left, right) pair."""
        raise NotImplementedError

    def batch_score_node(self, features: Sequence) -> ad.Node:
        """Score a batch of pair features; returns a [batch, 1] node."""
        raise NotImplementedError

    def score_batch(self, pairs: Sequence[Tuple]) -> np.ndarray:
        feats = [self.pair_features(l, r) for l, r in pairs]
        return self.batch_score_node(feats).value

    def score(self, left_processed, right_processed) -> float:
        """Deterministic scalar match score for one processed pair."""
        return float(self.score_batch([(left_processed, right_processed)])[0, 0])

    def explain(self, left_processed, right_processed) -> Explanation:
        raise NotImplementedError
