"""Seeded synthetic interaction datasets for desk-scale experiments.

The planted-depth dataset mixes two community styles so no single aggregation
depth fits every node. Shallow communities are dense user-item blocks wired to
their ring neighbors through bridge users, so deep aggregation leaks foreign
preference mass into them. Deep communities are isolated block chains
(users1 - items1 - users2 - items2 - users3 - items3) where first-block users
also hold a few interactions in the far item block; evidence for those far
items sits several hops away, so deeper aggregation is needed to rank them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import InteractionSet


@dataclass
class SyntheticData:
    interactions: InteractionSet
    user_labels: list[str]
    item_labels: list[str]


def planted_depth_dataset(seed: int = 0, n_shallow: int = 10, n_deep: int = 10,
                          shallow_users: int = 25, shallow_items: int = 25,
                          shallow_picks: int = 8, bridge_users: int = 4,
                          bridge_picks: int = 4, deep_block_users: int = 8,
                          deep_block_items: int = 8, deep_near_picks: int = 6,
                          deep_far_picks: int = 2) -> SyntheticData:
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, int]] = []
    user_labels: list[str] = []
    item_labels: list[str] = []

    def new_users(n: int, label: str) -> np.ndarray:
        start = len(user_labels)
        user_labels.extend([label] * n)
        return np.arange(start, start + n)

    def new_items(n: int, label: str) -> np.ndarray:
        start = len(item_labels)
        item_labels.extend([label] * n)
        return np.arange(start, start + n)

    def pick(users: np.ndarray, items: np.ndarray, per_user: int) -> None:
        for u in users:
            chosen = rng.choice(items, size=min(per_user, len(items)), replace=False)
            pairs.extend((int(u), int(v)) for v in chosen)

    shallow_user_blocks = []
    shallow_item_blocks = []
    for c in range(n_shallow):
        us = new_users(shallow_users, f"shallow{c}")
        vs = new_items(shallow_items, f"shallow{c}")
        shallow_user_blocks.append(us)
        shallow_item_blocks.append(vs)
        pick(us, vs, shallow_picks)
    for c in range(n_shallow):
        # ring bridges: a few users also consume in the next community
        nxt = shallow_item_blocks[(c + 1) % n_shallow]
        bridges = rng.choice(shallow_user_blocks[c], size=bridge_users, replace=False)
        pick(bridges, nxt, bridge_picks)

    for c in range(n_deep):
        b1 = new_users(deep_block_users, f"deep{c}")
        b2 = new_users(deep_block_users, f"deep{c}")
        b3 = new_users(deep_block_users, f"deep{c}")
        j1 = new_items(deep_block_items, f"deep{c}")
        j2 = new_items(deep_block_items, f"deep{c}")
        j3 = new_items(deep_block_items, f"deep{c}")
        pick(b1, j1, deep_near_picks)
        pick(b1, j3, deep_far_picks)
        pick(b2, j1, deep_near_picks // 2 + 1)
        pick(b2, j2, deep_near_picks // 2 + 1)
        pick(b3, j2, deep_near_picks // 2 + 1)
        pick(b3, j3, deep_near_picks // 2 + 1)

    interactions = InteractionSet(pairs, len(user_labels), len(item_labels))
    return SyntheticData(interactions, user_labels, item_labels)


def connected_bipartite(n_users: int, n_items: int, n_edges: int,
                        seed: int = 0) -> InteractionSet:
    """Connected random bipartite graph with roughly ``n_edges`` interactions.

    A chain over alternating users and items guarantees connectivity; the
    remaining edges are uniform random pairs. Used for wall-time scaling runs.
    """
    if n_edges < n_users + n_items - 1:
        raise ValueError("too few edges for a connected graph")
    rng = np.random.default_rng(seed)
    pairs: set[tuple[int, int]] = set()
    for u in range(n_users):
        pairs.add((u, u % n_items))
    for v in range(n_items):
        pairs.add((rng.integers(n_users), v))
    while len(pairs) < n_edges:
        pairs.add((int(rng.integers(n_users)), int(rng.integers(n_items))))
    return InteractionSet(pairs, n_users, n_items)


def write_labels(data: SyntheticData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("side,index,community\n")
        for i, lab in enumerate(data.user_labels):
            fh.write(f"user,{i},{lab}\n")
        for i, lab in enumerate(data.item_labels):
            fh.write(f"item,{i},{lab}\n")
