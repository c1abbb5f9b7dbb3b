"""Data ingestion, the DataPack container, batch generation, and corpus stats.

File formats (UTF-8, LF): corpora are TSV lines "id<TAB>text"; relation files
are "label<TAB>left_id<TAB>right_id" with non-negative integer labels.
Embeddings use the whitespace text format with an optional "count dim" header.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np

__all__ = [
    "IngestionError",
    "BatchError",
    "Relation",
    "DataPack",
    "Batch",
    "load_corpus",
    "load_relations",
    "build_pack",
    "pointwise_batches",
    "pairwise_batches",
    "listwise_batches",
    "load_embeddings",
    "IdfTable",
    "idf_weights",
]

Relation = Tuple[str, str, int]


class IngestionError(Exception):
    """Malformed or inconsistent input data."""


class BatchError(Exception):
    """A batching mode cannot be produced from the given pack."""


@dataclass
class DataPack:
    """Left/right corpora plus a labeled relation table; one train/valid/test split.

    Corpus values are whatever stage of processing the pack is at: raw text
    after ingestion, token/index sequences or count vectors after a pipeline
    pass. Relations always resolve into both corpora.
    """

    left: Dict[str, object]
    right: Dict[str, object]
    relations: List[Relation]
    split: str = "train"

    def __post_init__(self):
        if not self.relations:
            raise IngestionError(f"pack ({self.split}): needs at least one relation")
        missing = []
        for lid, rid, label in self.relations:
            if label < 0:
                raise IngestionError(f"pack ({self.split}): negative label for ({lid}, {rid})")
            if lid not in self.left:
                missing.append(lid)
            if rid not in self.right:
                missing.append(rid)
        if missing:
            raise IngestionError(
                f"pack ({self.split}): relation ids missing from corpora: "
                + ", ".join(sorted(set(missing))[:10])
            )

    def map_texts(self, fn) -> "DataPack":
        """New pack with every corpus entry replaced by fn(entry)."""
        return DataPack(
            left={k: fn(v) for k, v in self.left.items()},
            right={k: fn(v) for k, v in self.right.items()},
            relations=list(self.relations),
            split=self.split,
        )

    def by_left(self) -> Dict[str, List[Relation]]:
        groups: Dict[str, List[Relation]] = {}
        for rel in self.relations:
            groups.setdefault(rel[0], []).append(rel)
        return groups


@dataclass
class Batch:
    """One unit of training data in a specific supervision mode.

    pointwise: items are (left_id, right_id, label);
    pairwise:  items are (left_id, positive_right_id, negative_right_id);
    listwise:  items hold one (left_id, [right_ids], [labels]) group.
    """

    mode: str
    items: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)


def load_corpus(path) -> Dict[str, str]:
    """Read "id<TAB>text" lines into an id -> text map, text kept verbatim."""
    out: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2 or not parts[0]:
                raise IngestionError(f"{path}: line {lineno}: expected 'id<TAB>text'")
            doc_id, text = parts
            if doc_id in out:
                raise IngestionError(f"{path}: line {lineno}: duplicate id {doc_id!r}")
            out[doc_id] = text
    return out


def load_relations(path) -> List[Relation]:
    """Read "label<TAB>left<TAB>right" lines; labels must be non-negative ints."""
    rels: List[Relation] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise IngestionError(
                    f"{path}: line {lineno}: expected 'label<TAB>left<TAB>right'"
                )
            try:
                label = int(parts[0])
            except ValueError:
                raise IngestionError(
                    f"{path}: line {lineno}: label {parts[0]!r} is not an integer"
                ) from None
            if label < 0:
                raise IngestionError(f"{path}: line {lineno}: negative label {label}")
            rels.append((parts[1], parts[2], label))
    if not rels:
        raise IngestionError(f"{path}: no relations (packs need at least one)")
    return rels


def build_pack(corpus_left_path, corpus_right_path, relations_path, split: str = "train") -> DataPack:
    return DataPack(
        left=load_corpus(corpus_left_path),
        right=load_corpus(corpus_right_path),
        relations=load_relations(relations_path),
        split=split,
    )


def _chunk(items: list, batch_size: int, mode: str) -> Iterator[Batch]:
    for start in range(0, len(items), batch_size):
        yield Batch(mode=mode, items=items[start : start + batch_size])


def pointwise_batches(pack: DataPack, batch_size: int, seed: int) -> List[Batch]:
    """Seeded shuffle of the relations, chunked; the last batch may be short."""
    if batch_size < 1:
        raise BatchError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(seed)
    items = list(pack.relations)
    rng.shuffle(items)
    return list(_chunk(items, batch_size, "pointwise"))


def pairwise_batches(
    pack: DataPack, num_neg_per_pos: int, batch_size: int, seed: int
) -> List[Batch]:
    """Label-ordered pairs per left id, with per-positive negative sampling.

    For every relation that outranks at least one sibling, up to
    `num_neg_per_pos` lower-labeled siblings are drawn without replacement
    (all of them if fewer exist).
    """
    if num_neg_per_pos < 1:
        raise BatchError(f"num_neg_per_pos must be >= 1, got {num_neg_per_pos}")
    if batch_size < 1:
        raise BatchError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(seed)
    pairs: List[Tuple[str, str, str]] = []
    for lid, rels in pack.by_left().items():
        for rid_pos, label_pos in [(r, lab) for _, r, lab in rels]:
            lower = [r for _, r, lab in rels if lab < label_pos]
            if not lower:
                continue
            if len(lower) > num_neg_per_pos:
                chosen = rng.choice(len(lower), size=num_neg_per_pos, replace=False)
                sampled = [lower[i] for i in sorted(chosen)]
            else:
                sampled = lower
            pairs.extend((lid, rid_pos, rid_neg) for rid_neg in sampled)
    if not pairs:
        raise BatchError("no trainable pairs: no left id has two distinct labels")
    rng.shuffle(pairs)
    return list(_chunk(pairs, batch_size, "pairwise"))


def listwise_batches(pack: DataPack, seed: int | None = None) -> List[Batch]:
    """One group per left id holding all its relations.

    With a seed the group order is shuffled (training); without, groups come
    in ascending left-id order (stable evaluation order).
    """
    groups = pack.by_left()
    if seed is None:
        order = sorted(groups)
    else:
        order = list(groups)
        np.random.default_rng(seed).shuffle(order)
    batches = []
    for lid in order:
        rels = groups[lid]
        batches.append(
            Batch(
                mode="listwise",
                items=[(lid, [r for _, r, _ in rels], [lab for _, _, lab in rels])],
            )
        )
    return batches


def load_embeddings(
    path, vocab_index: Dict[str, int], size: int, dimension: int, seed: int
) -> np.ndarray:
    """Build a [size, dimension] embedding matrix for an index map.

    Vectors present in the file are copied; everything else is initialized
    uniformly in [-0.2, 0.2] from a seeded generator. Row 0 (padding) is
    zeroed last. `path=None` skips the file and seeds every row.
    """
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.2, 0.2, size=(size, dimension))
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if lineno == 1 and len(parts) == 2:
                    try:
                        int(parts[0]), int(parts[1])
                        continue  # header "count dim"
                    except ValueError:
                        pass
                token, values = parts[0], parts[1:]
                if len(values) != dimension:
                    raise IngestionError(
                        f"{path}: line {lineno}: token {token!r} has "
                        f"{len(values)} values, expected {dimension}"
                    )
                idx = vocab_index.get(token)
                if idx is None:
                    continue
                try:
                    matrix[idx] = [float(v) for v in values]
                except ValueError:
                    raise IngestionError(
                        f"{path}: line {lineno}: non-numeric value for token {token!r}"
                    ) from None
    if not np.all(np.isfinite(matrix)):
        raise IngestionError(f"{path}: embedding matrix contains non-finite values")
    matrix[0] = 0.0
    return matrix


class IdfTable:
    """Smoothed inverse document frequency per term index.

    idf(t) = ln((N+1)/(df(t)+1)) + 1 over the right corpus; terms never seen
    fall back to the df=0 value ln(N+1)+1.
    """

    def __init__(self, values: Dict[int, float], default: float):
        self.values = dict(values)
        self.default = default

    def __getitem__(self, term_index: int) -> float:
        return self.values.get(term_index, self.default)

    def get(self, term_index: int) -> float:
        return self[term_index]

    def as_vector(self, size: int) -> np.ndarray:
        return np.array([self[i] for i in range(size)], dtype=np.float64)


def idf_weights(pack: DataPack) -> IdfTable:
    """IDF over the pack's right corpus (entries must be index sequences)."""
    if not pack.right:
        raise IngestionError("idf_weights: right corpus is empty")
    n_docs = len(pack.right)
    df: Dict[int, int] = {}
    for seq in pack.right.values():
        for t in set(int(v) for v in seq):
            df[t] = df.get(t, 0) + 1
    values = {t: math.log((n_docs + 1) / (d + 1)) + 1.0 for t, d in df.items()}
    return IdfTable(values, default=math.log(n_docs + 1) + 1.0)
