"""Synthetic matching corpus: label 1 iff query and document share 2+ words.

Output is deterministic for a given seed, byte for byte: ids are zero-padded,
rows are written in id order, and all randomness flows from one generator.
"""

from __future__ import annotations

import string
from pathlib import Path
from typing import Dict, List

import numpy as np

__all__ = ["generate_toy_dataset"]

_VOCAB_SIZE = 150
_QUERY_WORDS = (3, 5)  # inclusive range
_DOC_WORDS = (8, 14)
_POSITIVE_SHARE = 0.25
# Queries cycle through this split assignment by index (7:2:1).
_SPLIT_PATTERN = (
    "train", "train", "train", "train", "train", "train", "train",
    "valid", "valid", "test",
)


def _make_vocab(rng: np.random.Generator) -> List[str]:
    letters = np.array(list(string.ascii_lowercase))
    words = []
    seen = set()
    while len(words) < _VOCAB_SIZE:
        length = int(rng.integers(4, 8))
        word = "".join(rng.choice(letters, size=length))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def generate_toy_dataset(out_dir, n_queries: int, docs_per_query: int, seed: int) -> Dict[str, Path]:
    """Write corpus/relations TSVs under out_dir; returns the file paths."""
    if n_queries < 1 or docs_per_query < 1:
        raise ValueError("gen_toy: need at least one query and one document per query")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    vocab = _make_vocab(rng)

    queries: Dict[str, List[str]] = {}
    docs: Dict[str, List[str]] = {}
    relations: Dict[str, List[tuple]] = {"train": [], "valid": [], "test": []}

    n_pos = max(1, round(_POSITIVE_SHARE * docs_per_query))
    for qi in range(n_queries):
        qid = f"q{qi:04d}"
        q_count = int(rng.integers(_QUERY_WORDS[0], _QUERY_WORDS[1] + 1))
        q_words = list(rng.choice(vocab, size=q_count, replace=False))
        queries[qid] = q_words
        others = [w for w in vocab if w not in q_words]
        overlaps = [int(rng.integers(2, min(4, q_count) + 1)) for _ in range(n_pos)]
        overlaps += [int(rng.integers(0, 2)) for _ in range(docs_per_query - n_pos)]
        rng.shuffle(overlaps)
        split = _SPLIT_PATTERN[qi % len(_SPLIT_PATTERN)]
        for dj, overlap in enumerate(overlaps):
            did = f"d{qi:04d}_{dj:03d}"
            length = int(rng.integers(_DOC_WORDS[0], _DOC_WORDS[1] + 1))
            shared = list(rng.choice(q_words, size=overlap, replace=False)) if overlap else []
            fillers = list(rng.choice(others, size=length - overlap, replace=False))
            words = shared + fillers
            rng.shuffle(words)
            docs[did] = words
            label = 1 if len(set(words) & set(q_words)) >= 2 else 0
            relations[split].append((label, qid, did))

    paths = {
        "corpus_left": out / "corpus_left.tsv",
        "corpus_right": out / "corpus_right.tsv",
        "relations_train": out / "relations_train.tsv",
        "relations_valid": out / "relations_valid.tsv",
        "relations_test": out / "relations_test.tsv",
    }
    with open(paths["corpus_left"], "w", encoding="utf-8", newline="\n") as fh:
        for qid in sorted(queries):
            fh.write(f"{qid}\t{' '.join(queries[qid])}\n")
    with open(paths["corpus_right"], "w", encoding="utf-8", newline="\n") as fh:
        for did in sorted(docs):
            fh.write(f"{did}\t{' '.join(docs[did])}\n")
    for split in ("train", "valid", "test"):
        rows = relations[split]
        if not rows:
            # Tiny datasets may not reach every split; empty relation files
            # would fail ingestion, so skip them.
            del paths[f"relations_{split}"]
            continue
        with open(paths[f"relations_{split}"], "w", encoding="utf-8", newline="\n") as fh:
            for label, qid, did in sorted(rows, key=lambda r: (r[1], r[2])):
                fh.write(f"{label}\t{qid}\t{did}\n")
    return paths
