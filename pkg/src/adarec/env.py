"""Trajectory environment: state transitions, tuple lists, and reward computation.

States are user or item nodes; an action is a hop count. The next state is
drawn uniformly from the same-kind nodes within action hops. Rewards compare
the state's pooled embedding against mean-pooled positive and negative
evidence gathered from the opposite side's trajectory, normalized over all
depth choices.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .gnn import EmbeddingTable, PoolingSpec, pool, score
from .graph import Graph, InteractionSet, Kind, NodeId

DENOMINATOR_GUARD = 1e-8


@dataclass
class TupleList:
    """Ordered (state, action) pairs visited on one side of a trajectory."""

    side: Kind
    entries: list[tuple[NodeId, int]] = field(default_factory=list)

    def record(self, state: NodeId, action: int) -> None:
        if state.kind != self.side:
            raise ValueError(f"cannot record a {state.kind.name} state on the "
                             f"{self.side.name} list")
        self.entries.append((state, int(action)))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class EvidenceGap(enum.Enum):
    """Why a reward had to be skipped for a state."""

    NO_POSITIVES = "no_positives"
    NO_NEGATIVES = "no_negatives"


@dataclass
class RewardContext:
    """Evidence split for one state: positives, the remaining pool, sampled negatives."""

    positives: list[tuple[NodeId, int]]
    negative_pool: list[tuple[NodeId, int]]
    negatives: list[tuple[NodeId, int]]


@dataclass
class RewardCounters:
    computed: int = 0
    skipped_no_positives: int = 0
    skipped_no_negatives: int = 0
    guard_zero: int = 0


def next_state(state: NodeId, action: int, graph: Graph,
               rng: np.random.Generator) -> NodeId:
    """Uniform draw from same-kind nodes within ``action`` hops (state included).

    An isolated node transitions to itself.
    """
    candidates = graph.same_kind_within(state, action)
    pick = int(candidates[rng.integers(len(candidates))])
    return NodeId(state.kind, pick)


def build_reward_context(state: NodeId, tuple_list: TupleList,
                         interactions: InteractionSet, rng: np.random.Generator,
                         negative_mode: str = "tuple",
                         n_actions: int | None = None) -> RewardContext | EvidenceGap:
    """Partition the opposite-side tuple list into evidence for ``state``.

    Positives are entries whose state interacted with ``state``; the rest form
    the negative pool. Exactly |positives| negatives are drawn from the pool,
    with replacement only when the pool is smaller. Duplicate states in the
    list stay distinct entries. Returns an :class:`EvidenceGap` instead of a
    context when either side is empty; callers skip the reward then.

    ``negative_mode="random"`` replaces pool sampling with uniform
    non-interacted opposite-side nodes at uniform random depths (the random
    negative sampling ablation); ``n_actions`` is required in that mode.
    """
    if state.kind == tuple_list.side:
        raise ValueError("tuple list must come from the opposite side")
    pos_index = interactions.item_set_of(state.index) if state.kind == Kind.USER \
        else interactions.user_set_of(state.index)
    positives = [e for e in tuple_list.entries if e[0].index in pos_index]
    negative_pool = [e for e in tuple_list.entries if e[0].index not in pos_index]
    if not positives:
        return EvidenceGap.NO_POSITIVES

    if negative_mode == "tuple":
        if not negative_pool:
            return EvidenceGap.NO_NEGATIVES
        replace = len(negative_pool) < len(positives)
        idx = rng.choice(len(negative_pool), size=len(positives), replace=replace)
        negatives = [negative_pool[i] for i in idx]
    elif negative_mode == "random":
        if n_actions is None:
            raise ValueError("random negative mode needs n_actions")
        opposite_kind = tuple_list.side
        n_opposite = interactions.n_items if opposite_kind == Kind.ITEM \
            else interactions.n_users
        if len(pos_index) >= n_opposite:
            return EvidenceGap.NO_NEGATIVES
        negatives = []
        while len(negatives) < len(positives):
            cand = int(rng.integers(n_opposite))
            if cand in pos_index:
                continue
            negatives.append((NodeId(opposite_kind, cand),
                              int(rng.integers(1, n_actions + 1))))
    else:
        raise ValueError(f"unknown negative mode {negative_mode!r}")
    return RewardContext(positives, negative_pool, negatives)


def reward(state: NodeId, action: int, ctx: RewardContext, table: EmbeddingTable,
           pooling: PoolingSpec, pooled: np.ndarray | None = None,
           counters: RewardCounters | None = None) -> float:
    """Normalized score margin of the state against its evidence means.

    The numerator is score(state at its action, positive mean) minus
    score(state, negative mean); the denominator repeats both scores summed
    over every possible depth of the state. Returns 0 when the denominator
    magnitude falls under the guard (counted on ``counters``). Positive
    rescaling of all embeddings leaves the value unchanged.

    ``pooled`` may pass the precomputed :func:`~adarec.gnn.pooled_by_action`
    array; results are identical with or without it.
    """
    if not ctx.positives or not ctx.negatives:
        raise ValueError("reward needs non-empty positive and negative evidence")

    def pooled_vec(node: NodeId, act: int) -> np.ndarray:
        if pooled is not None:
            return pooled[act - 1, table.graph.gid(node)]
        return pool(table, node, act, pooling)

    e_state = pooled_vec(state, action)
    e_pos = np.mean(np.stack([pooled_vec(n, a) for n, a in ctx.positives]), axis=0)
    e_neg = np.mean(np.stack([pooled_vec(n, a) for n, a in ctx.negatives]), axis=0)
    numerator = score(e_state, e_pos) - score(e_state, e_neg)
    denominator = 0.0
    for c in range(1, table.n_max + 1):
        e_c = pooled_vec(state, c)
        denominator += score(e_c, e_pos)
    for c in range(1, table.n_max + 1):
        e_c = pooled_vec(state, c)
        denominator -= score(e_c, e_neg)
    if abs(denominator) < DENOMINATOR_GUARD:
        if counters is not None:
            counters.guard_zero += 1
        return 0.0
    if counters is not None:
        counters.computed += 1
    return numerator / denominator
