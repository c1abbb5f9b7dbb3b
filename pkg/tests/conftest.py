import numpy as np
import pytest

from textmatch import toygen
from textmatch.dataset import build_pack


@pytest.fixture(scope="session")
def toy_paths(tmp_path_factory):
    """Small synthetic dataset shared by integration-style tests."""
    out = tmp_path_factory.mktemp("toy")
    return toygen.generate_toy_dataset(out, n_queries=20, docs_per_query=10, seed=11)


@pytest.fixture(scope="session")
def toy_packs(toy_paths):
    return {
        split: build_pack(
            toy_paths["corpus_left"],
            toy_paths["corpus_right"],
            toy_paths[f"relations_{split}"],
            split,
        )
        for split in ("train", "valid", "test")
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
