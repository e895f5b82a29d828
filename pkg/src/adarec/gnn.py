"""Embedding propagation, per-node depth pooling, scoring, and pairwise ranking updates.

Propagation is transform-free symmetric-normalized neighbor averaging, so a
node's layer-n vector is a linear function of the learnable layer-0 table.
Gradients of the ranking loss are computed analytically through pooling and
all propagation layers back to layer 0 (float64 throughout), which the
finite-difference checks in the test suite verify.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import Graph, NodeId

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class PoolingMode(str, enum.Enum):
    SUM = "sum"
    CONCAT = "concat"


@dataclass
class PoolingSpec:
    """Layer-combination rule: weighted sum or zero-padded concatenation.

    ``weights`` has one entry per layer 0..n_max. In sum mode the weights are
    renormalized over the layers a chosen depth actually uses, keeping the
    output scale comparable across depths. In concat mode the output always
    has (n_max+1)*dim entries; blocks beyond the chosen depth are zero.
    """

    mode: PoolingMode
    weights: np.ndarray

    def __post_init__(self):
        self.mode = PoolingMode(self.mode)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1 or len(self.weights) < 2:
            raise ValueError("weights must be a 1-D array with one entry per layer")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def n_max(self) -> int:
        return len(self.weights) - 1

    @staticmethod
    def uniform(n_max: int, mode: PoolingMode = PoolingMode.SUM) -> "PoolingSpec":
        return PoolingSpec(mode, np.ones(n_max + 1, dtype=np.float64))

    def normalized(self, action: int) -> np.ndarray:
        w = self.weights[: action + 1]
        total = w.sum()
        if total <= 0:
            raise ValueError("pooling weights over the used layers must sum to > 0")
        return w / total

    def out_dim(self, dim: int) -> int:
        return dim if self.mode is PoolingMode.SUM else (self.n_max + 1) * dim


class GnnParams:
    """Learnable layer-0 embedding table with Adam state."""

    def __init__(self, n_nodes: int, dim: int = 64, n_max: int = 4,
                 lr: float = 1e-3, l2: float = 1e-5, seed: int = 0,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(seed)
        self.dim = int(dim)
        self.n_max = int(n_max)
        self.lr = float(lr)
        self.l2 = float(l2)
        self.layer0 = rng.normal(0.0, 0.1, size=(n_nodes, dim))
        self.adam_m = np.zeros_like(self.layer0)
        self.adam_v = np.zeros_like(self.layer0)
        self.adam_t = 0

    def apply_adam(self, grad: np.ndarray) -> None:
        self.adam_t += 1
        self.adam_m = ADAM_BETA1 * self.adam_m + (1 - ADAM_BETA1) * grad
        self.adam_v = ADAM_BETA2 * self.adam_v + (1 - ADAM_BETA2) * grad * grad
        m_hat = self.adam_m / (1 - ADAM_BETA1 ** self.adam_t)
        v_hat = self.adam_v / (1 - ADAM_BETA2 ** self.adam_t)
        self.layer0 -= self.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


class EmbeddingTable:
    """All layer embeddings 0..n_max for one propagation pass; layer 0 is a copy."""

    def __init__(self, layers: list[np.ndarray], graph: Graph):
        self.layers = layers
        self.graph = graph

    @property
    def dim(self) -> int:
        return self.layers[0].shape[1]

    @property
    def n_max(self) -> int:
        return len(self.layers) - 1


def propagate(graph: Graph, params: GnnParams) -> EmbeddingTable:
    """Fill layers 1..n_max by repeated normalized neighbor averaging.

    Isolated nodes keep zero vectors at every layer beyond 0. Deterministic:
    identical inputs give bit-identical layers.
    """
    norm = graph.normalized_adjacency
    layers = [params.layer0.copy()]
    for _ in range(params.n_max):
        layers.append(norm @ layers[-1])
    return EmbeddingTable(layers, graph)


def pool(table: EmbeddingTable, node: NodeId, action: int, pooling: PoolingSpec) -> np.ndarray:
    """Final embedding of ``node`` using layers 0..action under the pooling rule."""
    if not 1 <= action <= table.n_max:
        raise ValueError(f"action {action} outside 1..{table.n_max}")
    g = table.graph.gid(node)
    if pooling.mode is PoolingMode.SUM:
        w = pooling.normalized(action)
        acc = w[0] * table.layers[0][g]
        for n in range(1, action + 1):
            acc = acc + w[n] * table.layers[n][g]
        return acc
    d = table.dim
    out = np.zeros((table.n_max + 1) * d)
    for n in range(action + 1):
        out[n * d:(n + 1) * d] = table.layers[n][g]
    return out


def pooled_by_action(table: EmbeddingTable, pooling: PoolingSpec) -> np.ndarray:
    """Pooled vectors for every node at every depth, shape [n_max, n_nodes, out_dim].

    Index [a-1] holds depth a. Accumulation order matches :func:`pool`, so the
    rows are bit-identical to per-node pooling.
    """
    n_nodes, d = table.layers[0].shape
    out = np.zeros((table.n_max, n_nodes, pooling.out_dim(d)))
    for action in range(1, table.n_max + 1):
        if pooling.mode is PoolingMode.SUM:
            w = pooling.normalized(action)
            acc = w[0] * table.layers[0]
            for n in range(1, action + 1):
                acc = acc + w[n] * table.layers[n]
            out[action - 1] = acc
        else:
            for n in range(action + 1):
                out[action - 1][:, n * d:(n + 1) * d] = table.layers[n]
    return out


def score(e_u: np.ndarray, e_v: np.ndarray) -> float:
    """Dot-product matching score; rejects mismatched dimensions."""
    if e_u.shape != e_v.shape or e_u.ndim != 1:
        raise ValueError(f"score needs equal-length vectors, got {e_u.shape} and {e_v.shape}")
    return float(np.dot(e_u, e_v))


def _pair_arrays(graph: Graph, pairs) -> tuple[np.ndarray, ...]:
    a_gid = np.array([graph.gid(a[0]) for a, _ in pairs], dtype=np.int64)
    a_act = np.array([a[1] for a, _ in pairs], dtype=np.int64)
    b_gid = np.array([graph.gid(b[0]) for _, b in pairs], dtype=np.int64)
    b_act = np.array([b[1] for _, b in pairs], dtype=np.int64)
    return a_gid, a_act, b_gid, b_act


def _scatter_pool_grad(grads: list[np.ndarray], gids, acts, g_pooled,
                       pooling: PoolingSpec, dim: int) -> None:
    n_max = len(grads) - 1
    for action in range(1, n_max + 1):
        mask = acts == action
        if not mask.any():
            continue
        rows = gids[mask]
        gp = g_pooled[mask]
        if pooling.mode is PoolingMode.SUM:
            w = pooling.normalized(action)
            for n in range(action + 1):
                np.add.at(grads[n], rows, w[n] * gp)
        else:
            for n in range(action + 1):
                np.add.at(grads[n], rows, gp[:, n * dim:(n + 1) * dim])


def bpr_gradients(params: GnnParams, table: EmbeddingTable, pooling: PoolingSpec,
                  pos_pairs, neg_pairs) -> tuple[float, np.ndarray]:
    """Ranking loss and its exact gradient with respect to the layer-0 table.

    ``pos_pairs`` holds ((anchor, action), (positive, action)) and
    ``neg_pairs`` the aligned ((anchor, action), (negative, action)); the
    anchors must match entrywise. The loss adds an L2 penalty of
    0.5*l2*||row||^2 on each unique participating layer-0 row. The table must
    come from a propagation of the current ``params.layer0``.
    """
    if len(pos_pairs) != len(neg_pairs):
        raise ValueError("positive and negative pair lists must be aligned")
    graph = table.graph
    a_gid, a_act, p_gid, p_act = _pair_arrays(graph, pos_pairs)
    a2_gid, a2_act, n_gid, n_act = _pair_arrays(graph, neg_pairs)
    if not (np.array_equal(a_gid, a2_gid) and np.array_equal(a_act, a2_act)):
        raise ValueError("anchor entries differ between positive and negative pairs")
    for acts in (a_act, p_act, n_act):
        if np.any((acts < 1) | (acts > table.n_max)):
            raise ValueError(f"action outside 1..{table.n_max}")

    pooled = pooled_by_action(table, pooling)
    e_a = pooled[a_act - 1, a_gid]
    e_p = pooled[p_act - 1, p_gid]
    e_n = pooled[n_act - 1, n_gid]
    diff = np.einsum("ij,ij->i", e_a, e_p) - np.einsum("ij,ij->i", e_a, e_n)
    loss = float(np.logaddexp(0.0, -diff).sum())

    g_diff = expit(diff) - 1.0
    g_a = g_diff[:, None] * (e_p - e_n)
    g_p = g_diff[:, None] * e_a
    g_n = -g_diff[:, None] * e_a

    per_layer = [np.zeros_like(layer) for layer in table.layers]
    dim = table.dim
    _scatter_pool_grad(per_layer, a_gid, a_act, g_a, pooling, dim)
    _scatter_pool_grad(per_layer, p_gid, p_act, g_p, pooling, dim)
    _scatter_pool_grad(per_layer, n_gid, n_act, g_n, pooling, dim)

    # reverse through propagation; the normalized adjacency is symmetric
    norm = graph.normalized_adjacency
    grad = per_layer[-1]
    for n in range(len(per_layer) - 2, -1, -1):
        grad = norm @ grad + per_layer[n]

    rows = np.unique(np.concatenate([a_gid, p_gid, n_gid]))
    loss += float(0.5 * params.l2 * np.sum(params.layer0[rows] ** 2))
    grad[rows] += params.l2 * params.layer0[rows]
    return loss, grad


def bpr_step(params: GnnParams, table: EmbeddingTable, pooling: PoolingSpec,
             pos_pairs, neg_pairs) -> float:
    """One Adam update of layer 0 from aligned positive/negative ranking pairs.

    Anchors may mix user and item nodes (user anchors paired with items and
    vice versa). Returns the pre-update loss; an empty pair list is a no-op
    returning 0. Mutates ``params``: callers must serialize writers.
    """
    if len(pos_pairs) == 0 and len(neg_pairs) == 0:
        return 0.0
    loss, grad = bpr_gradients(params, table, pooling, pos_pairs, neg_pairs)
    params.apply_adam(grad)
    return loss
