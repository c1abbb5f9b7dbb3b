"""Interaction model: Gaussian kernel pooling over the cosine matching matrix."""

from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np

from .. import autodiff as ad
from .base import Explanation, MatchingModel, ModelContext, ConfigError
from .layers import KernelBank, default_kernel_bank, kernel_pooling, matching_matrix
from ..text_pipeline import PAD_INDEX


def _strip_padding(seq) -> List[int]:
    return [int(t) for t in seq if int(t) != PAD_INDEX]


class KnrmModel(MatchingModel):
    """Kernel-pooled interaction features through a tanh linear head.

    The cosine matrix of frozen, row-normalized embeddings is pooled by a
    Gaussian kernel bank into one feature per kernel; the trained head is
    score = tanh(w . phi + b). The head starts at zero so the tanh begins in
    its linear regime.
    """

    @classmethod
    def fresh(cls, hyper_params: Dict, context: ModelContext, rng: np.random.Generator) -> "KnrmModel":
        if context.embeddings is None:
            raise ConfigError("knrm: context must provide embeddings")
        n_kernels = int(hyper_params["kernels"])
        params = {
            "combine_w": ad.Parameter("combine_w", np.zeros((n_kernels, 1))),
            "combine_b": ad.Parameter("combine_b", np.zeros((1, 1))),
            "embeddings": ad.Parameter("embeddings", context.embeddings, trainable=False),
        }
        return cls(hyper_params, params)

    @property
    def bank(self) -> KernelBank:
        return default_kernel_bank(
            int(self.hyper_params["kernels"]),
            float(self.hyper_params["sigma"]),
            float(self.hyper_params["exact_sigma"]),
        )

    def interaction_matrix(self, query_ids: Sequence[int], doc_ids: Sequence[int]) -> np.ndarray:
        emb = self.params["embeddings"].value
        q = _strip_padding(query_ids)
        d = _strip_padding(doc_ids)
        return matching_matrix(emb[q], emb[d], mode="cosine")

    def pair_features(self, left_processed, right_processed) -> np.ndarray:
        """Pooled kernel features; an empty side yields the zero vector."""
        q = _strip_padding(left_processed)
        d = _strip_padding(right_processed)
        if not q or not d:
            return np.zeros(len(self.bank))
        return kernel_pooling(self.interaction_matrix(q, d), self.bank)

    def batch_score_node(self, features: Sequence) -> ad.Node:
        phi = ad.constant(np.stack(features))
        ones = ad.constant(np.ones((phi.value.shape[0], 1)))
        return ad.tanh(
            ad.add(
                ad.matmul(phi, self.params["combine_w"]),
                ad.matmul(ones, self.params["combine_b"]),
            )
        )

    def explain(self, left_processed, right_processed) -> Explanation:
        matrix = self.interaction_matrix(left_processed, right_processed)
        return Explanation(
            family="interaction",
            score=self.score(left_processed, right_processed),
            matrix=[[float(v) for v in row] for row in matrix],
            weights=[float(w) for w in self.params["combine_w"].value[:, 0]],
        )
