"""Composable text processing units with a unified fit/transform interface.

Each unit performs one transformation and declares its input/output category
(text, tokens, indices, or counts); a Pipeline chains units whose categories
line up. Stateless units transform directly; stateful ones (frequency filter,
vocabulary, term counts) must be fitted first. Fitted pipelines are immutable,
deterministic, and JSON-serializable.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from typing import Dict, Iterable, List, Sequence

import numpy as np

__all__ = [
    "PipelineError",
    "ProcessorUnit",
    "TokenizeUnit",
    "LowercaseUnit",
    "PuncRemovalUnit",
    "FrequencyFilterUnit",
    "VocabularyUnit",
    "WordHashingUnit",
    "FixedLengthUnit",
    "TermCountsUnit",
    "Pipeline",
    "tokenize",
    "lowercase",
    "punc_removal",
    "word_hashing",
    "fixed_length",
    "unit_from_json",
]

PAD_INDEX = 0
OOV_INDEX = 1


class PipelineError(Exception):
    """Configuration or usage error in a processing unit or pipeline."""


def tokenize(text: str) -> List[str]:
    """Split on runs of Unicode whitespace; punctuation stays attached."""
    return text.split()


def lowercase(tokens: Sequence[str]) -> List[str]:
    return [t.lower() for t in tokens]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def punc_removal(tokens: Sequence[str]) -> List[str]:
    """Strip punctuation characters from each token, dropping emptied tokens."""
    out = []
    for t in tokens:
        stripped = "".join(ch for ch in t if not _is_punct(ch))
        if stripped:
            out.append(stripped)
    return out


def word_hashing(token: str) -> List[str]:
    """All consecutive letter trigrams of '#'+token+'#', duplicates retained."""
    if not token:
        raise PipelineError("word_hashing: token must be non-empty")
    wrapped = "#" + token + "#"
    return [wrapped[i : i + 3] for i in range(len(wrapped) - 2)]


def fixed_length(seq: Sequence, length: int, pad_value) -> list:
    """Truncate past `length` (keeping the head) or right-pad with pad_value."""
    if length < 1:
        raise PipelineError(f"fixed_length: length must be >= 1, got {length}")
    clipped = list(seq[:length])
    if len(clipped) < length:
        clipped.extend([pad_value] * (length - len(clipped)))
    return clipped


def _frequency_order(corpus: Iterable[Sequence[str]]) -> List[str]:
    # Descending frequency, ties broken lexicographically: reproducible fits.
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    return sorted(counts, key=lambda t: (-counts[t], t))


class ProcessorUnit:
    """Base unit: a `kind`, an input/output category, and optional state."""

    kind: str = ""
    input_category: str = ""
    output_category: str = ""
    stateful: bool = False

    def __init__(self, **params):
        self.params = params
        self.fitted = not self.stateful

    def fit(self, corpus: Iterable) -> "ProcessorUnit":
        self.fitted = True
        return self

    def transform(self, item):
        raise NotImplementedError

    def _require_fitted(self):
        if not self.fitted:
            raise PipelineError(f"{self.kind}: transform called before fit")

    def state_to_json(self) -> dict:
        return {}

    def state_from_json(self, state: dict) -> None:
        pass

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params, "state": self.state_to_json()}


class TokenizeUnit(ProcessorUnit):
    kind = "tokenize"
    input_category = "text"
    output_category = "tokens"

    def transform(self, text: str) -> List[str]:
        return tokenize(text)


class LowercaseUnit(ProcessorUnit):
    kind = "lowercase"
    input_category = "tokens"
    output_category = "tokens"

    def transform(self, tokens: Sequence[str]) -> List[str]:
        return lowercase(tokens)


class PuncRemovalUnit(ProcessorUnit):
    kind = "punc_removal"
    input_category = "tokens"
    output_category = "tokens"

    def transform(self, tokens: Sequence[str]) -> List[str]:
        return punc_removal(tokens)


class FrequencyFilterUnit(ProcessorUnit):
    """Keeps only terms whose corpus frequency reaches `min_freq`."""

    kind = "frequency_filter"
    input_category = "tokens"
    output_category = "tokens"
    stateful = True

    def __init__(self, min_freq: int = 1):
        if min_freq < 1:
            raise PipelineError(f"frequency_filter: min_freq must be >= 1, got {min_freq}")
        super().__init__(min_freq=min_freq)
        self.keep: set = set()

    def fit(self, corpus: Iterable[Sequence[str]]) -> "FrequencyFilterUnit":
        counts = Counter()
        for tokens in corpus:
            counts.update(tokens)
        self.keep = {t for t, c in counts.items() if c >= self.params["min_freq"]}
        return super().fit(corpus)

    def transform(self, tokens: Sequence[str]) -> List[str]:
        self._require_fitted()
        return [t for t in tokens if t in self.keep]

    def state_to_json(self) -> dict:
        return {"keep": sorted(self.keep)}

    def state_from_json(self, state: dict) -> None:
        self.keep = set(state["keep"])
        self.fitted = True


class VocabularyUnit(ProcessorUnit):
    """Term -> integer index; 0 reserved for padding, 1 for out-of-vocabulary.

    Indices 2.. are assigned by descending corpus frequency with lexicographic
    tie-breaking, so refitting on the same corpus reproduces the same map.
    """

    kind = "vocabulary"
    input_category = "tokens"
    output_category = "indices"
    stateful = True

    def __init__(self):
        super().__init__()
        self.term_index: Dict[str, int] = {}

    def fit(self, corpus: Iterable[Sequence[str]]) -> "VocabularyUnit":
        self.term_index = {
            term: i + 2 for i, term in enumerate(_frequency_order(corpus))
        }
        return super().fit(corpus)

    @property
    def size(self) -> int:
        """Total index count including the two reserved slots."""
        return len(self.term_index) + 2

    def transform(self, tokens: Sequence[str]) -> List[int]:
        self._require_fitted()
        return [self.term_index.get(t, OOV_INDEX) for t in tokens]

    def state_to_json(self) -> dict:
        return {"terms": sorted(self.term_index.items(), key=lambda kv: kv[1])}

    def state_from_json(self, state: dict) -> None:
        self.term_index = {term: int(idx) for term, idx in state["terms"]}
        self.fitted = True


class WordHashingUnit(ProcessorUnit):
    """Expand each word token into its letter trigrams (flattened, in order)."""

    kind = "word_hashing"
    input_category = "tokens"
    output_category = "tokens"

    def transform(self, tokens: Sequence[str]) -> List[str]:
        out: List[str] = []
        for t in tokens:
            out.extend(word_hashing(t))
        return out


class FixedLengthUnit(ProcessorUnit):
    kind = "fixed_length"
    input_category = "indices"
    output_category = "indices"

    def __init__(self, length: int, pad_value: int = PAD_INDEX):
        if length < 1:
            raise PipelineError(f"fixed_length: length must be >= 1, got {length}")
        super().__init__(length=length, pad_value=pad_value)

    def transform(self, seq: Sequence[int]) -> List[int]:
        return fixed_length(seq, self.params["length"], self.params["pad_value"])


class TermCountsUnit(ProcessorUnit):
    """Count tokens into a dense frequency vector over the fitted term set.

    Column order follows the vocabulary convention (frequency then lexicographic);
    unseen terms are ignored. Output is a float64 vector, the input format of
    count-based towers.
    """

    kind = "term_counts"
    input_category = "tokens"
    output_category = "counts"
    stateful = True

    def __init__(self):
        super().__init__()
        self.term_column: Dict[str, int] = {}

    def fit(self, corpus: Iterable[Sequence[str]]) -> "TermCountsUnit":
        self.term_column = {t: i for i, t in enumerate(_frequency_order(corpus))}
        return super().fit(corpus)

    @property
    def size(self) -> int:
        return len(self.term_column)

    def transform(self, tokens: Sequence[str]) -> np.ndarray:
        self._require_fitted()
        vec = np.zeros(len(self.term_column), dtype=np.float64)
        for t in tokens:
            col = self.term_column.get(t)
            if col is not None:
                vec[col] += 1.0
        return vec

    def state_to_json(self) -> dict:
        return {"terms": sorted(self.term_column.items(), key=lambda kv: kv[1])}

    def state_from_json(self, state: dict) -> None:
        self.term_column = {term: int(col) for term, col in state["terms"]}
        self.fitted = True


_UNIT_CLASSES = {
    cls.kind: cls
    for cls in (
        TokenizeUnit,
        LowercaseUnit,
        PuncRemovalUnit,
        FrequencyFilterUnit,
        VocabularyUnit,
        WordHashingUnit,
        FixedLengthUnit,
        TermCountsUnit,
    )
}


def unit_from_json(doc: dict) -> ProcessorUnit:
    kind = doc.get("kind")
    cls = _UNIT_CLASSES.get(kind)
    if cls is None:
        raise PipelineError(f"unknown unit kind {kind!r}")
    unit = cls(**doc.get("params", {}))
    unit.state_from_json(doc.get("state", {}))
    return unit


class Pipeline:
    """An ordered unit chain whose categories must line up end to end."""

    def __init__(self, units: Sequence[ProcessorUnit]):
        self.units = list(units)
        for prev, nxt in zip(self.units, self.units[1:]):
            if prev.output_category != nxt.input_category:
                raise PipelineError(
                    f"pipeline: {prev.kind} outputs {prev.output_category!r} but "
                    f"{nxt.kind} expects {nxt.input_category!r}"
                )

    @property
    def fitted(self) -> bool:
        return all(u.fitted for u in self.units)

    def fit_transform(self, corpus: Sequence) -> List:
        """Fit stateful units in order on the progressively transformed corpus."""
        current = list(corpus)
        for unit in self.units:
            if unit.stateful:
                unit.fit(current)
            current = [unit.transform(item) for item in current]
        return current

    def transform(self, item, upto: int | None = None):
        """Apply the fitted chain to one item; `upto` stops after that many units."""
        units = self.units if upto is None else self.units[:upto]
        for unit in units:
            item = unit.transform(item)
        return item

    def transform_corpus(self, corpus: Sequence) -> List:
        return [self.transform(item) for item in corpus]

    def find(self, kind: str) -> ProcessorUnit | None:
        for u in self.units:
            if u.kind == kind:
                return u
        return None

    def index_of(self, kind: str) -> int:
        for i, u in enumerate(self.units):
            if u.kind == kind:
                return i
        raise PipelineError(f"pipeline has no {kind!r} unit")

    def to_json(self) -> dict:
        return {"units": [u.to_json() for u in self.units]}

    @classmethod
    def from_json(cls, doc: dict) -> "Pipeline":
        return cls([unit_from_json(u) for u in doc["units"]])

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, payload: str) -> "Pipeline":
        return cls.from_json(json.loads(payload))
