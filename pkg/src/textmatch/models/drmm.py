"""Interaction model: per-term matching histograms with idf-gated aggregation."""

from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np

from .. import autodiff as ad
from .base import Explanation, MatchingModel, ModelContext, ConfigError, glorot
from .layers import matching_histogram, matching_matrix
from ..text_pipeline import PAD_INDEX

# Cosine of identical embedding rows lands within an ulp of 1; snap so exact
# term matches hit the histogram's exact-match bin.
_EXACT_SNAP = 1e-9


def _strip_padding(seq) -> List[int]:
    return [int(t) for t in seq if int(t) != PAD_INDEX]


class DrmmModel(MatchingModel):
    """Histogram the cosine row of each query term, feed-forward each row to a
    per-term signal, and combine with a softmax gate over idf-scaled terms.

    Embeddings and idf are frozen inputs (histogram counting is not
    differentiable through them); training fits the feed-forward stack and the
    gate weight.
    """

    @classmethod
    def fresh(cls, hyper_params: Dict, context: ModelContext, rng: np.random.Generator) -> "DrmmModel":
        if context.embeddings is None or context.idf is None:
            raise ConfigError("drmm: context must provide embeddings and idf weights")
        bins = int(hyper_params["bins"])
        hidden = int(hyper_params["ffn_hidden"])
        params = {
            "ffn_w1": ad.Parameter("ffn_w1", glorot(rng, bins, hidden)),
            "ffn_b1": ad.Parameter("ffn_b1", np.zeros((1, hidden))),
            "ffn_w2": ad.Parameter("ffn_w2", glorot(rng, hidden, 1)),
            "ffn_b2": ad.Parameter("ffn_b2", np.zeros((1, 1))),
            "gate_w": ad.Parameter("gate_w", np.ones((1, 1))),
            "embeddings": ad.Parameter("embeddings", context.embeddings, trainable=False),
            "idf": ad.Parameter("idf", np.asarray(context.idf, dtype=np.float64), trainable=False),
        }
        return cls(hyper_params, params)

    def interaction_matrix(self, query_ids: Sequence[int], doc_ids: Sequence[int]) -> np.ndarray:
        emb = self.params["embeddings"].value
        q = _strip_padding(query_ids)
        d = _strip_padding(doc_ids)
        m = matching_matrix(emb[q], emb[d], mode="cosine")
        m[np.abs(m - 1.0) <= _EXACT_SNAP] = 1.0
        m[np.abs(m + 1.0) <= _EXACT_SNAP] = -1.0
        return m

    def pair_features(self, left_processed, right_processed):
        """(histograms [L, bins], idf row [1, L]) for the unpadded query terms."""
        q = _strip_padding(left_processed)
        bins = int(self.hyper_params["bins"])
        mode = str(self.hyper_params["hist_mode"])
        if not q:
            return np.zeros((0, bins)), np.zeros((1, 0))
        m = self.interaction_matrix(left_processed, right_processed)
        hist = np.stack([matching_histogram(m[i], bins, mode) for i in range(len(q))])
        idf_row = self.params["idf"].value[np.asarray(q)][None, :]
        return hist, idf_row

    def _pair_node(self, hist: np.ndarray, idf_row: np.ndarray) -> ad.Node:
        n_terms = hist.shape[0]
        if n_terms == 0:
            # Degenerate input: nothing to gate over.
            return ad.constant([[0.0]])
        ones_col = ad.constant(np.ones((n_terms, 1)))
        h = ad.tanh(
            ad.add(
                ad.matmul(ad.constant(hist), self.params["ffn_w1"]),
                ad.matmul(ones_col, self.params["ffn_b1"]),
            )
        )
        z = ad.tanh(
            ad.add(
                ad.matmul(h, self.params["ffn_w2"]),
                ad.matmul(ones_col, self.params["ffn_b2"]),
            )
        )
        gate = self.gate_node(idf_row)
        return ad.matmul(gate, z)

    def gate_node(self, idf_row: np.ndarray) -> ad.Node:
        ones_row = ad.constant(np.ones((1, idf_row.shape[1])))
        logits = ad.mul(ad.constant(idf_row), ad.matmul(self.params["gate_w"], ones_row))
        return ad.softmax_rows(logits)

    def batch_score_node(self, features: Sequence) -> ad.Node:
        scores = [self._pair_node(hist, idf_row) for hist, idf_row in features]
        if len(scores) == 1:
            return scores[0]
        return ad.concat_axis(scores, axis=0)

    def explain(self, left_processed, right_processed) -> Explanation:
        _, idf_row = self.pair_features(left_processed, right_processed)
        matrix = self.interaction_matrix(left_processed, right_processed)
        gates = (
            self.gate_node(idf_row).value[0]
            if idf_row.shape[1]
            else np.zeros(0)
        )
        return Explanation(
            family="interaction",
            score=self.score(left_processed, right_processed),
            matrix=[[float(v) for v in row] for row in matrix],
            weights=[float(g) for g in gates],
        )
