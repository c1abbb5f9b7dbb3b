"""Dense double-precision tensors with reverse-mode automatic differentiation.

Graphs are built define-by-run: calling a primitive on nodes computes the
value eagerly and records the adjoint closures needed for the backward pass.
A "graph" in the public API is therefore a callable that maps a dict of
named input nodes to an output node; `evaluate` and `grad_check` both take
graphs in that form.

Values are numpy float64 arrays (row-major). Once a node is produced its
value must not be mutated; sharing across threads is read-only safe.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

__all__ = [
    "GraphError",
    "ShapeError",
    "DomainError",
    "Node",
    "Parameter",
    "constant",
    "PRIMITIVES",
    "add",
    "sub",
    "mul",
    "matmul",
    "gather_rows",
    "tanh",
    "relu",
    "sigmoid",
    "exp",
    "log",
    "softmax_rows",
    "sum_axis",
    "mean_axis",
    "concat_axis",
    "scale",
    "clamp_min",
    "l2_normalize_rows",
    "transpose",
    "evaluate",
    "backward",
    "grad_check",
    "GradCheckResult",
]


class GraphError(Exception):
    """Base error for graph construction and evaluation failures."""


class ShapeError(GraphError):
    """Operand shapes incompatible with a primitive's signature."""


class DomainError(GraphError):
    """Input outside a primitive's numeric domain (e.g. log of non-positive)."""


# The closed primitive catalog. Every entry has a registered adjoint; the
# acceptance gradient suite iterates this set.
PRIMITIVES = frozenset(
    {
        "add",
        "sub",
        "mul",
        "matmul",
        "gather_rows",
        "tanh",
        "relu",
        "sigmoid",
        "exp",
        "log",
        "softmax_rows",
        "sum_axis",
        "mean_axis",
        "concat_axis",
        "scale",
        "clamp_min",
        "l2_normalize_rows",
        "transpose",
    }
)

# Floor applied to softmax outputs so rows stay strictly positive even when
# exp underflows for extreme logit gaps.
_SOFTMAX_FLOOR = 1e-300
# Norm floor for l2_normalize_rows; keeps all-zero rows finite.
_NORM_FLOOR = 1e-12


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Node:
    """One vertex of the computation graph: a value plus adjoint closures."""

    __slots__ = ("value", "op", "parents", "_vjps", "grad")

    def __init__(
        self,
        value: np.ndarray,
        op: str,
        parents: Tuple["Node", ...] = (),
        vjps: Tuple[Callable[[np.ndarray], np.ndarray], ...] = (),
    ):
        self.value = value
        self.op = op
        self.parents = parents
        self._vjps = vjps
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.value.shape})"


class Parameter(Node):
    """Named leaf node. Names must be unique within a model."""

    __slots__ = ("name", "trainable")

    def __init__(self, name: str, value, trainable: bool = True):
        super().__init__(_as_array(value), "parameter")
        self.name = name
        self.trainable = trainable

    def assign(self, value: np.ndarray) -> None:
        value = _as_array(value)
        if value.shape != self.value.shape:
            raise ShapeError(
                f"parameter {self.name!r}: cannot assign shape {value.shape} "
                f"over {self.value.shape}"
            )
        self.value = value

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def constant(value) -> Node:
    """Wrap an array-like as a leaf node with no gradient."""
    return Node(_as_array(value), "constant")


def _as_node(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _check_same_shape(op: str, a: Node, b: Node) -> None:
    if a.value.shape != b.value.shape:
        raise ShapeError(
            f"{op}: shape mismatch, expected identical shapes but got "
            f"{a.value.shape} vs {b.value.shape}"
        )


def _check_2d(op: str, x: Node) -> None:
    if x.value.ndim != 2:
        raise ShapeError(f"{op}: expected a 2-D operand, got shape {x.value.shape}")


def add(a, b) -> Node:
    """Elementwise sum; shapes must match exactly (no broadcasting)."""
    a, b = _as_node(a), _as_node(b)
    _check_same_shape("add", a, b)
    return Node(a.value + b.value, "add", (a, b), (lambda g: g, lambda g: g))


def sub(a, b) -> Node:
    """Elementwise difference; shapes must match exactly."""
    a, b = _as_node(a), _as_node(b)
    _check_same_shape("sub", a, b)
    return Node(a.value - b.value, "sub", (a, b), (lambda g: g, lambda g: -g))


def mul(a, b) -> Node:
    """Elementwise (Hadamard) product; shapes must match exactly."""
    a, b = _as_node(a), _as_node(b)
    _check_same_shape("mul", a, b)
    av, bv = a.value, b.value
    return Node(av * bv, "mul", (a, b), (lambda g: g * bv, lambda g: g * av))


def matmul(a, b) -> Node:
    """2-D matrix product."""
    a, b = _as_node(a), _as_node(b)
    _check_2d("matmul", a)
    _check_2d("matmul", b)
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(
            f"matmul: inner dimensions differ, {a.value.shape} vs {b.value.shape}"
        )
    av, bv = a.value, b.value
    return Node(
        av @ bv,
        "matmul",
        (a, b),
        (lambda g: g @ bv.T, lambda g: av.T @ g),
    )


def gather_rows(table, ids) -> Node:
    """Select rows of a 2-D table by integer id; adjoint scatters back."""
    table = _as_node(table)
    _check_2d("gather_rows", table)
    idx = np.asarray(ids, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError(f"gather_rows: ids must be 1-D, got shape {idx.shape}")
    n_rows = table.value.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise DomainError(
            f"gather_rows: id out of range for table with {n_rows} rows"
        )

    def vjp(g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(table.value)
        np.add.at(out, idx, g)
        return out

    return Node(table.value[idx], "gather_rows", (table,), (vjp,))


def tanh(x) -> Node:
    x = _as_node(x)
    t = np.tanh(x.value)
    return Node(t, "tanh", (x,), (lambda g: g * (1.0 - t * t),))


def relu(x) -> Node:
    """max(0, x); subgradient at 0 is 0."""
    x = _as_node(x)
    mask = x.value > 0
    return Node(np.where(mask, x.value, 0.0), "relu", (x,), (lambda g: g * mask,))


def sigmoid(x) -> Node:
    x = _as_node(x)
    v = x.value
    s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    return Node(s, "sigmoid", (x,), (lambda g: g * s * (1.0 - s),))


def exp(x) -> Node:
    x = _as_node(x)
    e = np.exp(x.value)
    return Node(e, "exp", (x,), (lambda g: g * e,))


def log(x) -> Node:
    """Natural log; raises DomainError on non-positive input."""
    x = _as_node(x)
    if x.value.size and x.value.min() <= 0.0:
        raise DomainError(
            f"log: domain violation in {x.op} node, min value {x.value.min():g} <= 0"
        )
    v = x.value
    return Node(np.log(v), "log", (x,), (lambda g: g / v,))


def softmax_rows(x) -> Node:
    """Row-wise softmax with max subtraction; rows sum to 1, strictly positive."""
    x = _as_node(x)
    _check_2d("softmax_rows", x)
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)
    s = np.maximum(s, _SOFTMAX_FLOOR)

    def vjp(g: np.ndarray) -> np.ndarray:
        inner = (g * s).sum(axis=1, keepdims=True)
        return s * (g - inner)

    return Node(s, "softmax_rows", (x,), (vjp,))


def _reduce(x, axis, keepdims, mean: bool) -> Node:
    x = _as_node(x)
    shape = x.value.shape
    if axis is not None and not (-x.value.ndim <= axis < x.value.ndim):
        raise ShapeError(f"reduce: axis {axis} out of range for shape {shape}")
    count = x.value.size if axis is None else shape[axis]
    if count == 0:
        raise ShapeError(f"reduce: cannot reduce empty axis of shape {shape}")
    val = x.value.sum(axis=axis, keepdims=keepdims)
    if mean:
        val = val / count

    def vjp(g: np.ndarray) -> np.ndarray:
        if axis is None:
            out = np.broadcast_to(g, shape).copy()
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            out = np.broadcast_to(gg, shape).copy()
        return out / count if mean else out

    return Node(np.asarray(val), "mean_axis" if mean else "sum_axis", (x,), (vjp,))


def sum_axis(x, axis: int | None = None, keepdims: bool = False) -> Node:
    """Sum along one axis (or all, axis=None)."""
    return _reduce(x, axis, keepdims, mean=False)


def mean_axis(x, axis: int | None = None, keepdims: bool = False) -> Node:
    """Arithmetic mean along one axis (or all, axis=None)."""
    return _reduce(x, axis, keepdims, mean=True)


def concat_axis(nodes: Sequence, axis: int) -> Node:
    """Concatenate nodes along an axis; other extents must match."""
    parts = [_as_node(n) for n in nodes]
    if not parts:
        raise ShapeError("concat_axis: need at least one operand")
    base = list(parts[0].value.shape)
    for p in parts[1:]:
        other = list(p.value.shape)
        if len(other) != len(base) or any(
            o != b for d, (o, b) in enumerate(zip(other, base)) if d != axis
        ):
            raise ShapeError(
                f"concat_axis: incompatible shapes {parts[0].value.shape} vs "
                f"{p.value.shape} along axis {axis}"
            )
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i: int):
        def vjp(g: np.ndarray) -> np.ndarray:
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(sl)]

        return vjp

    value = np.concatenate([p.value for p in parts], axis=axis)
    return Node(value, "concat_axis", tuple(parts), tuple(make_vjp(i) for i in range(len(parts))))


def scale(x, c: float) -> Node:
    """Multiply by a python scalar constant (the only allowed broadcast)."""
    x = _as_node(x)
    c = float(c)
    return Node(c * x.value, "scale", (x,), (lambda g: c * g,))


def clamp_min(x, c: float) -> Node:
    """max(x, c) elementwise; subgradient at the kink is 0."""
    x = _as_node(x)
    c = float(c)
    mask = x.value > c
    return Node(np.maximum(x.value, c), "clamp_min", (x,), (lambda g: g * mask,))


def l2_normalize_rows(x) -> Node:
    """Scale each row to unit L2 norm; norms below 1e-12 are clamped."""
    x = _as_node(x)
    _check_2d("l2_normalize_rows", x)
    norms = np.maximum(np.linalg.norm(x.value, axis=1, keepdims=True), _NORM_FLOOR)
    y = x.value / norms

    def vjp(g: np.ndarray) -> np.ndarray:
        inner = (g * y).sum(axis=1, keepdims=True)
        return (g - y * inner) / norms

    return Node(y, "l2_normalize_rows", (x,), (vjp,))


def transpose(x) -> Node:
    """2-D transpose."""
    x = _as_node(x)
    _check_2d("transpose", x)
    return Node(x.value.T.copy(), "transpose", (x,), (lambda g: g.T,))


# ---------------------------------------------------------------------------
# Evaluation and reverse pass
# ---------------------------------------------------------------------------


def evaluate(graph: Callable, bindings: Mapping[str, np.ndarray]):
    """Run a graph builder on named inputs and return the output value(s).

    `graph` receives a dict mapping each binding name to a constant node and
    may return a node, a sequence of nodes, or a dict of nodes. Deterministic:
    identical bindings produce bit-identical outputs.
    """
    inputs = {name: constant(v) for name, v in bindings.items()}
    out = graph(inputs)
    if isinstance(out, Node):
        return out.value
    if isinstance(out, dict):
        return {k: v.value for k, v in out.items()}
    return [v.value for v in out]


def _topo_order(output: Node) -> List[Node]:
    # Iterative post-order; graphs can be deeper than the recursion limit.
    order: List[Node] = []
    seen = set()
    stack: List[Tuple[Node, bool]] = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(output: Node, parameters: Iterable[Parameter] | None = None) -> Dict[str, np.ndarray]:
    """Gradient of a scalar output with respect to parameters.

    Returns a map parameter-name -> gradient array (same shape as the
    parameter). Parameters in `parameters` that the output does not reach get
    zero gradients. Each visited node's `.grad` is populated as a side effect.
    """
    if output.value.size != 1:
        raise ShapeError(
            f"backward: output must be scalar, got shape {output.value.shape}"
        )
    order = _topo_order(output)
    grads: Dict[int, np.ndarray] = {id(output): np.ones_like(output.value)}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        node.grad = g
        for parent, vjp in zip(node.parents, node._vjps):
            contribution = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contribution
            else:
                grads[key] = contribution

    result: Dict[str, np.ndarray] = {}
    if parameters is not None:
        for p in parameters:
            result[p.name] = grads.get(id(p), np.zeros_like(p.value))
            p.grad = result[p.name]
    else:
        for node in order:
            if isinstance(node, Parameter):
                result[node.name] = grads.get(id(node), np.zeros_like(node.value))
    return result


class GradCheckResult:
    """Outcome of a finite-difference check.

    `max_rel_error` is max over checked coordinates of
    |analytic - central| / max(1, |analytic|). Coordinates where the two
    one-sided differences disagree (a kink at the evaluation point, e.g.
    clamp_min exactly at its threshold) are excluded from the maximum and
    reported in `excluded` as (input name, flat index) pairs. `checked`
    counts the coordinates that actually entered the maximum.
    """

    def __init__(self, max_rel_error: float, excluded: List[Tuple[str, int]], checked: int):
        self.max_rel_error = max_rel_error
        self.excluded = excluded
        self.checked = checked

    def __float__(self) -> float:
        return self.max_rel_error

    def __repr__(self) -> str:
        return (
            f"GradCheckResult(max_rel_error={self.max_rel_error:.3e}, "
            f"checked={self.checked}, excluded={len(self.excluded)})"
        )


# One-sided forward/backward differences disagreeing by more than this
# (relative) marks a kink: O(1) disagreement at kinks vs O(h) when smooth.
_KINK_TOL = 1e-3


def grad_check(
    graph: Callable,
    point: Mapping[str, np.ndarray],
    step: float = 1e-5,
    coordinate_limit: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """Compare reverse-mode gradients of a scalar graph to central differences.

    `graph` maps a dict of named nodes to a scalar node. When
    `coordinate_limit` is set, at most that many coordinates per input are
    checked (sampled with `rng`), which bounds runtime on large tensors.
    """
    if step <= 0:
        raise ValueError("grad_check: step must be positive")
    point = {name: _as_array(v) for name, v in point.items()}
    params = {name: Parameter(name, v) for name, v in point.items()}
    out = graph(dict(params))
    if out.value.size != 1:
        raise ShapeError("grad_check: graph must be scalar-valued")
    f0 = float(out.value.item())
    analytic = backward(out, params.values())

    def f_at(name: str, flat_idx: int, delta: float) -> float:
        moved = {k: v for k, v in point.items()}
        arr = moved[name].copy()
        arr.flat[flat_idx] += delta
        moved[name] = arr
        nodes = {k: constant(v) if k != name else Parameter(k, v) for k, v in moved.items()}
        return float(graph(nodes).value.item())

    max_rel = 0.0
    excluded: List[Tuple[str, int]] = []
    checked = 0
    for name, arr in point.items():
        indices = np.arange(arr.size)
        if coordinate_limit is not None and arr.size > coordinate_limit:
            gen = rng if rng is not None else np.random.default_rng(0)
            indices = gen.choice(arr.size, size=coordinate_limit, replace=False)
        for flat_idx in indices:
            fp = f_at(name, int(flat_idx), step)
            fm = f_at(name, int(flat_idx), -step)
            d_plus = (fp - f0) / step
            d_minus = (f0 - fm) / step
            if abs(d_plus - d_minus) > _KINK_TOL * max(1.0, abs(d_plus), abs(d_minus)):
                excluded.append((name, int(flat_idx)))
                continue
            central = (fp - fm) / (2.0 * step)
            a = float(analytic[name].flat[flat_idx])
            rel = abs(a - central) / max(1.0, abs(a))
            checked += 1
            if rel > max_rel:
                max_rel = rel
    return GradCheckResult(max_rel, excluded, checked)
