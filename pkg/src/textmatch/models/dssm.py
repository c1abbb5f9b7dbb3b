"""Representation model: shared bag-of-trigrams towers compared by cosine."""

from __future__ import annotations

from typing import Dict, Sequence

import numpy as np

from .. import autodiff as ad
from .base import Explanation, MatchingModel, ModelContext, ConfigError, affine, glorot


class DssmModel(MatchingModel):
    """Two weight-shared dense towers over trigram count vectors.

    Each side's count vector runs through three tanh layers to a
    representation; the score is the cosine of the two representations, so
    identical inputs always score 1.
    """

    @classmethod
    def fresh(cls, hyper_params: Dict, context: ModelContext, rng: np.random.Generator) -> "DssmModel":
        if context.input_dim is None or context.input_dim < 1:
            raise ConfigError("dssm: context must provide the trigram count width")
        v = context.input_dim
        widths = [
            int(hyper_params["hidden1"]),
            int(hyper_params["hidden2"]),
            int(hyper_params["repr_dim"]),
        ]
        params: Dict[str, ad.Parameter] = {}
        fan_in = v
        for i, width in enumerate(widths, start=1):
            params[f"tower_w{i}"] = ad.Parameter(f"tower_w{i}", glorot(rng, fan_in, width))
            params[f"tower_b{i}"] = ad.Parameter(f"tower_b{i}", np.zeros((1, width)))
            fan_in = width
        return cls(hyper_params, params)

    def _tower(self, counts: ad.Node) -> ad.Node:
        h = counts
        for i in (1, 2, 3):
            h = ad.tanh(affine(h, self.params[f"tower_w{i}"], self.params[f"tower_b{i}"]))
        return h

    def pair_features(self, left_processed, right_processed):
        left = np.asarray(left_processed, dtype=np.float64)
        right = np.asarray(right_processed, dtype=np.float64)
        width = self.params["tower_w1"].value.shape[0]
        if left.shape != (width,) or right.shape != (width,):
            raise ConfigError(
                f"dssm: expected count vectors of width {width}, got "
                f"{left.shape} and {right.shape}"
            )
        return left, right

    def batch_score_node(self, features: Sequence) -> ad.Node:
        lefts = ad.constant(np.stack([f[0] for f in features]))
        rights = ad.constant(np.stack([f[1] for f in features]))
        left_repr = ad.l2_normalize_rows(self._tower(lefts))
        right_repr = ad.l2_normalize_rows(self._tower(rights))
        return ad.sum_axis(ad.mul(left_repr, right_repr), axis=1, keepdims=True)

    def representations(self, left_processed, right_processed):
        left, right = self.pair_features(left_processed, right_processed)
        lv = self._tower(ad.constant(left[None, :])).value[0]
        rv = self._tower(ad.constant(right[None, :])).value[0]
        return lv, rv

    def explain(self, left_processed, right_processed) -> Explanation:
        lv, rv = self.representations(left_processed, right_processed)
        return Explanation(
            family="representation",
            score=self.score(left_processed, right_processed),
            left_vector=[float(x) for x in lv],
            right_vector=[float(x) for x in rv],
        )
