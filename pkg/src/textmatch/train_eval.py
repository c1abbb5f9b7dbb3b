"""Ranking losses, optimizers, the training loop, and evaluation metrics.

Losses build autodiff nodes so the training loop can differentiate them;
metrics are plain functions over ranked label lists. Ranking ties are always
broken by right-id ascending so every metric value is reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .dataset import (
    Batch,
    DataPack,
    listwise_batches,
    pairwise_batches,
    pointwise_batches,
)

__all__ = [
    "TrainingError",
    "pointwise_loss",
    "pairwise_hinge",
    "listwise_softmax_ce",
    "optimizer_step",
    "TrainConfig",
    "EpochEvent",
    "TrainResult",
    "train",
    "rank",
    "precision_at_k",
    "average_precision",
    "mean_average_precision",
    "ndcg_at_k",
    "mrr",
    "parse_metric",
    "METRIC_NAMES",
    "evaluate",
]

# Probability floor used inside cross-entropy style losses before any log.
_LOG_FLOOR = 1e-10


class TrainingError(Exception):
    """Loss/optimizer misuse or a diverged training run."""


def _as_column(values) -> ad.Node:
    if isinstance(values, ad.Node):
        node = values
        if node.value.ndim != 2 or node.value.shape[1] != 1:
            raise TrainingError(
                f"expected a [n, 1] score column, got shape {node.value.shape}"
            )
        return node
    arr = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    return ad.constant(arr)


def pointwise_loss(predictions, labels, kind: str = "mse") -> ad.Node:
    """Mean squared error or binary cross entropy over raw scores.

    bce passes scores through a sigmoid and clamps probabilities away from
    0 and 1 before the logs; its labels must be 0 or 1.
    """
    preds = _as_column(predictions)
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    if y.shape[0] != preds.value.shape[0]:
        raise TrainingError(
            f"pointwise_loss: {preds.value.shape[0]} predictions vs {y.shape[0]} labels"
        )
    if kind == "mse":
        diff = ad.sub(preds, ad.constant(y))
        return ad.mean_axis(ad.mul(diff, diff))
    if kind == "bce":
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise TrainingError("pointwise_loss: bce labels must be 0 or 1")
        p = ad.sigmoid(preds)
        one_minus = ad.sub(ad.constant(np.ones_like(y)), p)
        pos_term = ad.mul(ad.constant(y), ad.log(ad.clamp_min(p, _LOG_FLOOR)))
        neg_term = ad.mul(
            ad.constant(1.0 - y), ad.log(ad.clamp_min(one_minus, _LOG_FLOOR))
        )
        return ad.scale(ad.mean_axis(ad.add(pos_term, neg_term)), -1.0)
    raise TrainingError(f"pointwise_loss: unknown kind {kind!r}")


def pairwise_hinge(pos_scores, neg_scores, margin: float = 1.0) -> ad.Node:
    """mean(max(0, margin - positive + negative)) over score pairs."""
    if margin <= 0:
        raise TrainingError(f"pairwise_hinge: margin must be > 0, got {margin}")
    pos = _as_column(pos_scores)
    neg = _as_column(neg_scores)
    if pos.value.shape != neg.value.shape:
        raise TrainingError(
            f"pairwise_hinge: {pos.value.shape[0]} positives vs "
            f"{neg.value.shape[0]} negatives"
        )
    margin_col = ad.constant(np.full_like(pos.value, float(margin)))
    return ad.mean_axis(ad.relu(ad.add(ad.sub(margin_col, pos), neg)))


def listwise_softmax_ce(
    group_scores: Sequence, group_labels: Sequence[Sequence[float]]
) -> ad.Node:
    """Cross entropy between label-proportional targets and score softmaxes.

    Each group supplies a score column and its labels; groups whose labels
    are all zero are skipped. Raises if every group is degenerate.
    """
    if len(group_scores) != len(group_labels):
        raise TrainingError("listwise_softmax_ce: score/label group counts differ")
    terms = []
    for scores, labels in zip(group_scores, group_labels):
        col = _as_column(scores)
        y = np.asarray(labels, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != col.value.shape[0]:
            raise TrainingError(
                f"listwise_softmax_ce: group of {col.value.shape[0]} scores vs "
                f"{y.shape} labels"
            )
        if col.value.shape[0] < 2:
            raise TrainingError("listwise_softmax_ce: groups need at least 2 entries")
        if np.any(y < 0):
            raise TrainingError("listwise_softmax_ce: labels must be non-negative")
        total = y.sum()
        if total == 0:
            continue
        target = ad.constant((y / total)[None, :])
        log_probs = ad.log(ad.clamp_min(ad.softmax_rows(ad.transpose(col)), _LOG_FLOOR))
        cross = ad.sum_axis(ad.mul(target, log_probs), axis=1, keepdims=True)  # [1, 1]
        terms.append(ad.scale(cross, -1.0))
    if not terms:
        raise TrainingError("listwise_softmax_ce: all groups degenerate (labels all zero)")
    return ad.mean_axis(ad.concat_axis(terms, axis=0))


def optimizer_step(
    params: Mapping[str, ad.Parameter],
    grads: Mapping[str, np.ndarray],
    state: dict,
    kind: str = "sgd",
    lr: float = 0.01,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> dict:
    """Apply one in-place update; returns the (mutated) optimizer state."""
    if lr <= 0:
        raise TrainingError(f"optimizer_step: lr must be > 0, got {lr}")
    if kind not in ("sgd", "adam"):
        raise TrainingError(f"optimizer_step: unknown kind {kind!r}")
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.value.shape:
            raise TrainingError(
                f"optimizer_step: gradient shape {g.shape} does not match "
                f"parameter {name!r} {p.value.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"optimizer_step: non-finite gradient for parameter {name!r}")
        if kind == "sgd":
            p.assign(p.value - lr * g)
            continue
        st = state.setdefault(name, {"t": 0, "m": np.zeros_like(g), "v": np.zeros_like(g)})
        st["t"] += 1
        st["m"] = beta1 * st["m"] + (1 - beta1) * g
        st["v"] = beta2 * st["v"] + (1 - beta2) * g * g
        m_hat = st["m"] / (1 - beta1 ** st["t"])
        v_hat = st["v"] / (1 - beta2 ** st["t"])
        p.assign(p.value - lr * m_hat / (np.sqrt(v_hat) + eps))
    return state


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

_LOSS_MODES = {
    "pairwise_hinge": "pairwise",
    "pointwise_mse": "pointwise",
    "pointwise_bce": "pointwise",
    "listwise_ce": "listwise",
}


@dataclass
class TrainConfig:
    loss: str = "pairwise_hinge"
    optimizer: str = "adam"
    learning_rate: float = 0.01
    margin: float = 1.0
    epochs: int = 10
    batch_size: int = 32
    num_neg_per_pos: int = 1
    seed: int = 0
    metrics: Tuple[str, ...] = ("ndcg@10", "map")

    def __post_init__(self):
        if self.epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise TrainingError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.loss not in _LOSS_MODES:
            raise TrainingError(
                f"unknown loss {self.loss!r} (known: {', '.join(sorted(_LOSS_MODES))})"
            )
        for name in self.metrics:
            parse_metric(name)

    @property
    def batch_mode(self) -> str:
        return _LOSS_MODES[self.loss]

    @classmethod
    def from_hyper_params(cls, hp: Mapping, seed: int, metrics: Sequence[str] | None = None) -> "TrainConfig":
        return cls(
            loss=str(hp["loss"]),
            optimizer=str(hp["optimizer"]),
            learning_rate=float(hp["learning_rate"]),
            margin=float(hp["margin"]),
            epochs=int(hp["epochs"]),
            batch_size=int(hp["batch_size"]),
            num_neg_per_pos=int(hp["num_neg_per_pos"]),
            seed=seed,
            metrics=tuple(metrics) if metrics else cls.metrics,
        )


@dataclass
class EpochEvent:
    epoch: int
    loss: float
    metrics: Dict[str, float]
    seconds: float

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "loss": self.loss,
            "metrics": self.metrics,
            "seconds": self.seconds,
        }


@dataclass
class TrainResult:
    model: object
    history: List[EpochEvent]
    status: str  # "done" | "failed"
    error: str | None = None


class _FeatureCache:
    """Memoizes model pair features per (left id, right id) within one pack."""

    def __init__(self, model, pack: DataPack):
        self.model = model
        self.pack = pack
        self.store: dict = {}

    def get(self, lid: str, rid: str):
        key = (lid, rid)
        feats = self.store.get(key)
        if feats is None:
            feats = self.model.pair_features(self.pack.left[lid], self.pack.right[rid])
            self.store[key] = feats
        return feats


def _batches_for(pack: DataPack, config: TrainConfig, epoch: int) -> List[Batch]:
    seed = [config.seed, epoch]
    if config.batch_mode == "pairwise":
        return pairwise_batches(pack, config.num_neg_per_pos, config.batch_size, seed)
    if config.batch_mode == "pointwise":
        return pointwise_batches(pack, config.batch_size, seed)
    return listwise_batches(pack, seed=seed)


def _batch_loss(model, batch: Batch, cache: _FeatureCache, config: TrainConfig) -> ad.Node | None:
    if batch.mode == "pairwise":
        pos = model.batch_score_node([cache.get(l, rp) for l, rp, _ in batch.items])
        neg = model.batch_score_node([cache.get(l, rn) for l, _, rn in batch.items])
        return pairwise_hinge(pos, neg, config.margin)
    if batch.mode == "pointwise":
        preds = model.batch_score_node([cache.get(l, r) for l, r, _ in batch.items])
        labels = [label for _, _, label in batch.items]
        return pointwise_loss(preds, labels, kind=config.loss.removeprefix("pointwise_"))
    lid, rids, labels = batch.items[0]
    if len(rids) < 2 or not any(labels):
        return None  # nothing to learn from this group
    scores = model.batch_score_node([cache.get(lid, r) for r in rids])
    return listwise_softmax_ce([scores], [labels])


def train(
    model,
    train_pack: DataPack,
    valid_pack: DataPack,
    config: TrainConfig,
    event_sink: Callable[[EpochEvent], None] | None = None,
) -> TrainResult:
    """Run the configured epochs, emitting one EpochEvent per epoch.

    Per epoch: seeded shuffle, forward/backward/step per batch, then metric
    evaluation on the validation pack. A non-finite loss or gradient halts
    with status "failed" and the history collected so far.
    """
    history: List[EpochEvent] = []
    train_cache = _FeatureCache(model, train_pack)
    valid_cache = _FeatureCache(model, valid_pack)
    opt_state: dict = {}
    for epoch in range(1, config.epochs + 1):
        started = time.monotonic()
        total_loss = 0.0
        total_items = 0
        try:
            batches = _batches_for(train_pack, config, epoch)
        except Exception as exc:
            return TrainResult(model, history, "failed", str(exc))
        for batch in batches:
            try:
                loss = _batch_loss(model, batch, train_cache, config)
            except (ad.GraphError, TrainingError) as exc:
                return TrainResult(model, history, "failed", str(exc))
            if loss is None:
                continue
            loss_value = float(loss.value)
            if not np.isfinite(loss_value):
                return TrainResult(
                    model, history, "failed",
                    f"training loss became non-finite at epoch {epoch}",
                )
            total_loss += loss_value * len(batch)
            total_items += len(batch)
            grads = ad.backward(loss, model.trainable_params.values())
            try:
                optimizer_step(
                    model.trainable_params, grads, opt_state,
                    kind=config.optimizer, lr=config.learning_rate,
                )
            except TrainingError as exc:
                return TrainResult(model, history, "failed", str(exc))
        if total_items == 0:
            return TrainResult(model, history, "failed", "no trainable batches in pack")
        metric_values = evaluate(model, valid_pack, config.metrics, _cache=valid_cache)
        event = EpochEvent(
            epoch=epoch,
            loss=total_loss / total_items,
            metrics=metric_values,
            seconds=time.monotonic() - started,
        )
        history.append(event)
        if event_sink is not None:
            event_sink(event)
    return TrainResult(model, history, "done")


# ---------------------------------------------------------------------------
# Ranking and metrics
# ---------------------------------------------------------------------------


def rank(scores: Mapping[str, float]) -> List[str]:
    """Ids ordered by descending score, ties broken by id ascending."""
    return [rid for rid, _ in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def precision_at_k(labels: Sequence[int], k: int) -> float:
    """Fraction of the top k that is relevant (label > 0); denominator is k."""
    if k < 1:
        raise ValueError(f"precision_at_k: k must be >= 1, got {k}")
    top = labels[: min(k, len(labels))]
    return sum(1 for lab in top if lab > 0) / k


def average_precision(labels: Sequence[int]) -> float:
    relevant = sum(1 for lab in labels if lab > 0)
    if relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for i, lab in enumerate(labels, start=1):
        if lab > 0:
            hits += 1
            total += hits / i
    return total / relevant


def mean_average_precision(label_lists: Iterable[Sequence[int]]) -> float:
    lists = list(label_lists)
    if not lists:
        return 0.0
    return sum(average_precision(labels) for labels in lists) / len(lists)


def _dcg(labels: Sequence[float], k: int) -> float:
    return sum(
        (2.0 ** lab - 1.0) / np.log2(i + 1)
        for i, lab in enumerate(labels[:k], start=1)
    )


def ndcg_at_k(labels: Sequence[float], k: int) -> float:
    """Graded-gain NDCG; an all-zero list scores 0 (zero ideal gain)."""
    if k < 1:
        raise ValueError(f"ndcg_at_k: k must be >= 1, got {k}")
    ideal = _dcg(sorted(labels, reverse=True), k)
    if ideal == 0.0:
        return 0.0
    return _dcg(labels, k) / ideal


def mrr(label_lists: Iterable[Sequence[int]]) -> float:
    """Mean reciprocal rank of the first relevant item, 0 when none exists."""
    lists = list(label_lists)
    if not lists:
        return 0.0
    total = 0.0
    for labels in lists:
        for i, lab in enumerate(labels, start=1):
            if lab > 0:
                total += 1.0 / i
                break
    return total / len(lists)


METRIC_NAMES = ("precision@k", "map", "ndcg@k", "mrr")


def parse_metric(name: str) -> Callable[[List[List[int]]], float]:
    """Resolve a metric name like "ndcg@10" into a per-query-lists function."""
    lowered = name.strip().lower()
    if lowered == "map":
        return mean_average_precision
    if lowered == "mrr":
        return mrr
    if "@" in lowered:
        head, _, tail = lowered.partition("@")
        try:
            k = int(tail)
        except ValueError:
            k = 0
        if k >= 1 and head in ("ndcg", "precision", "p"):
            if head == "ndcg":
                return lambda lists: (
                    sum(ndcg_at_k(labels, k) for labels in lists) / len(lists)
                    if lists
                    else 0.0
                )
            return lambda lists: (
                sum(precision_at_k(labels, k) for labels in lists) / len(lists)
                if lists
                else 0.0
            )
    raise ValueError(
        f"unknown metric {name!r}; valid: {', '.join(METRIC_NAMES)} "
        "(k a positive integer)"
    )


def evaluate(
    model,
    pack: DataPack,
    metrics: Sequence[str],
    _cache: "_FeatureCache | None" = None,
) -> Dict[str, float]:
    """Score every relation, rank per left id, and average each metric."""
    if not metrics:
        raise ValueError("evaluate: metrics list must be non-empty")
    fns = {name: parse_metric(name) for name in metrics}
    cache = _cache if _cache is not None else _FeatureCache(model, pack)
    label_lists: List[List[int]] = []
    for batch in listwise_batches(pack):
        lid, rids, labels = batch.items[0]
        scores = model.batch_score_node([cache.get(lid, r) for r in rids]).value[:, 0]
        by_id = {rid: float(s) for rid, s in zip(rids, scores)}
        label_by_id = {rid: lab for rid, lab in zip(rids, labels)}
        label_lists.append([label_by_id[rid] for rid in rank(by_id)])
    return {name: float(fn(label_lists)) for name, fn in fns.items()}
