"""Matching-specific layers: similarity matrices, histograms, kernel pooling.

The matrix/histogram/pooling functions are plain numpy feature transforms
(the counting/pooling stages feed models as fixed inputs); `attention` is a
differentiable composite over autodiff nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .. import autodiff as ad

__all__ = [
    "LayerError",
    "matching_matrix",
    "matching_histogram",
    "attention",
    "KernelBank",
    "default_kernel_bank",
    "kernel_pooling",
]

# Kernel sums are floored before the log, keeping features finite when no
# document term falls near a kernel center.
KERNEL_LOG_FLOOR = 1e-10


class LayerError(Exception):
    """Invalid layer configuration or operands."""


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    out = np.zeros_like(x)
    nonzero = norms[:, 0] > 0
    out[nonzero] = x[nonzero] / norms[nonzero]
    return out


def matching_matrix(
    left: np.ndarray | None,
    right: np.ndarray | None,
    mode: str = "dot",
    left_ids: Sequence[int] | None = None,
    right_ids: Sequence[int] | None = None,
) -> np.ndarray:
    """Word-by-word similarity grid between two vector sequences.

    Modes: "dot" product, "cosine" (0 wherever either vector is all-zero),
    or "indicator" (1 iff the token ids match; vectors may be omitted).
    """
    if mode == "indicator":
        if left_ids is None or right_ids is None:
            raise LayerError("matching_matrix: indicator mode requires token ids")
        li = np.asarray(left_ids)
        ri = np.asarray(right_ids)
        return (li[:, None] == ri[None, :]).astype(np.float64)
    if left is None or right is None:
        raise LayerError(f"matching_matrix: {mode} mode requires vectors")
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[1]:
        raise LayerError(
            f"matching_matrix: dimension mismatch, {left.shape} vs {right.shape}"
        )
    if mode == "dot":
        return left @ right.T
    if mode == "cosine":
        return _normalize_rows(left) @ _normalize_rows(right).T
    raise LayerError(f"matching_matrix: unknown mode {mode!r}")


def matching_histogram(row: Sequence[float], bin_count: int, mode: str = "lch") -> np.ndarray:
    """Bucket one similarity row into `bin_count` bins over [-1, 1].

    The first bin_count-1 bins are equal-width intervals covering [-1, 1);
    the last bin holds exact matches {1}. Values are clipped to [-1, 1]
    first. Modes: "ch" raw counts, "nh" counts normalized by row length
    (an empty row yields all zeros), "lch" ln(1 + count).
    """
    if bin_count < 2:
        raise LayerError(f"matching_histogram: bin_count must be >= 2, got {bin_count}")
    mode = mode.lower()
    if mode not in ("ch", "nh", "lch"):
        raise LayerError(f"matching_histogram: unknown mode {mode!r}")
    counts = np.zeros(bin_count, dtype=np.float64)
    values = np.clip(np.asarray(row, dtype=np.float64), -1.0, 1.0)
    interior = bin_count - 1
    for v in values:
        if v >= 1.0:
            counts[bin_count - 1] += 1.0
        else:
            counts[min(int((v + 1.0) / 2.0 * interior), interior - 1)] += 1.0
    if mode == "ch":
        return counts
    if mode == "nh":
        return counts / len(values) if len(values) else counts
    return np.log1p(counts)


def attention(x, y, w) -> ad.Node:
    """General attention between two sequences: softmax(X W Yt) Y.

    Differentiable in all three operands; x is [n, d], y is [m, d], and w is
    a [d, d] parameter. Each output row is a convex combination of y's rows.
    """
    x = x if isinstance(x, ad.Node) else ad.constant(x)
    y = y if isinstance(y, ad.Node) else ad.constant(y)
    w = w if isinstance(w, ad.Node) else ad.constant(w)
    scores = ad.matmul(ad.matmul(x, w), ad.transpose(y))
    return ad.matmul(ad.softmax_rows(scores), y)


@dataclass(frozen=True)
class KernelBank:
    """Gaussian kernel centers/widths; mus non-decreasing, sigmas positive."""

    kernels: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        mus = [mu for mu, _ in self.kernels]
        if any(s <= 0 for _, s in self.kernels):
            raise LayerError("KernelBank: sigmas must be strictly positive")
        if any(b < a for a, b in zip(mus, mus[1:])):
            raise LayerError("KernelBank: mus must be non-decreasing")
        if any(not -1.0 <= mu <= 1.0 for mu in mus):
            raise LayerError("KernelBank: mus must lie in [-1, 1]")

    def __len__(self) -> int:
        return len(self.kernels)


def default_kernel_bank(n_kernels: int = 11, sigma: float = 0.1, exact_sigma: float = 0.001) -> KernelBank:
    """n_kernels-1 evenly spaced soft kernels plus one exact-match kernel at 1."""
    if n_kernels < 2:
        raise LayerError(f"default_kernel_bank: need >= 2 kernels, got {n_kernels}")
    soft = n_kernels - 1
    mus = [-1.0 + (2 * i + 1) / soft for i in range(soft)]
    return KernelBank(tuple((mu, sigma) for mu in mus) + ((1.0, exact_sigma),))


def kernel_pooling(matrix: np.ndarray, bank: KernelBank) -> np.ndarray:
    """Log-summed Gaussian kernel activations over a similarity matrix.

    Per kernel k: phi_k = sum_i ln(max(sum_j exp(-(M_ij - mu_k)^2 / (2 sigma_k^2)),
    1e-10)). Row and column order do not matter (pure sums).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise LayerError(f"kernel_pooling: matrix must be non-empty 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LayerError("kernel_pooling: matrix contains non-finite values")
    features = np.empty(len(bank), dtype=np.float64)
    for k, (mu, sig) in enumerate(bank.kernels):
        per_row = np.exp(-((m - mu) ** 2) / (2.0 * sig * sig)).sum(axis=1)
        features[k] = np.log(np.maximum(per_row, KERNEL_LOG_FLOOR)).sum()
    return features
