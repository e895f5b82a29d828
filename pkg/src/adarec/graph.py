"""Interaction and knowledge-graph storage: loading, k-core filtering, splits, k-hop access.

Node ids are dense per kind. A :class:`Graph` fuses the user-item bipartite
graph with optional knowledge-graph triples into one undirected adjacency over
a global index (users first, then items, then entities). Instances are
immutable after construction and safe for concurrent reads.
"""
from __future__ import annotations

import enum
from collections import defaultdict, deque
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import sparse


class Kind(enum.IntEnum):
    USER = 0
    ITEM = 1
    ENTITY = 2


class NodeId(NamedTuple):
    kind: Kind
    index: int


class LineFormatError(ValueError):
    """Unparseable input line; the message names the file and 1-based line number."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no


class CoreFilterError(ValueError):
    """Iterative k-core filtering removed every interaction."""


class InteractionSet:
    """Deduplicated user-item pairs with adjacency lists on both sides.

    ``user_original[dense_id]`` / ``item_original[dense_id]`` recover the ids
    found in the source file (identity arrays when built in memory).
    """

    def __init__(self, pairs: Iterable[tuple[int, int]], n_users: int, n_items: int,
                 user_original: np.ndarray | None = None,
                 item_original: np.ndarray | None = None):
        uniq = sorted({(int(u), int(v)) for u, v in pairs})
        for u, v in uniq:
            if not (0 <= u < n_users and 0 <= v < n_items):
                raise ValueError(f"pair ({u}, {v}) outside dense id range "
                                 f"({n_users} users, {n_items} items)")
        self.n_users = int(n_users)
        self.n_items = int(n_items)
        self.pair_array = np.array(uniq, dtype=np.int64).reshape(len(uniq), 2)
        by_user: list[list[int]] = [[] for _ in range(n_users)]
        by_item: list[list[int]] = [[] for _ in range(n_items)]
        for u, v in uniq:
            by_user[u].append(v)
            by_item[v].append(u)
        self.user_items = [np.array(vs, dtype=np.int64) for vs in by_user]
        self.item_users = [np.array(us, dtype=np.int64) for us in by_item]
        self._user_sets = [set(vs) for vs in by_user]
        self._item_sets = [set(us) for us in by_item]
        self.user_original = (np.arange(n_users, dtype=np.int64)
                              if user_original is None else np.asarray(user_original, dtype=np.int64))
        self.item_original = (np.arange(n_items, dtype=np.int64)
                              if item_original is None else np.asarray(item_original, dtype=np.int64))

    @property
    def n_pairs(self) -> int:
        return len(self.pair_array)

    def items_of(self, user: int) -> np.ndarray:
        return self.user_items[user]

    def users_of(self, item: int) -> np.ndarray:
        return self.item_users[item]

    def item_set_of(self, user: int) -> set[int]:
        return self._user_sets[user]

    def user_set_of(self, item: int) -> set[int]:
        return self._item_sets[item]

    def has(self, user: int, item: int) -> bool:
        return item in self._user_sets[user]

    def neighbors_of(self, node: NodeId) -> np.ndarray:
        """Interaction partners of a user or item node, as dense indices."""
        if node.kind == Kind.USER:
            return self.user_items[node.index]
        if node.kind == Kind.ITEM:
            return self.item_users[node.index]
        raise ValueError("entities have no interactions")

    def user_degrees(self) -> np.ndarray:
        return np.array([len(vs) for vs in self.user_items], dtype=np.int64)

    def as_pairs(self) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in self.pair_array]


class DataSplit(NamedTuple):
    train: InteractionSet
    validation: InteractionSet
    test: InteractionSet


class KgTriple(NamedTuple):
    head: NodeId
    relation: int
    tail: NodeId


class KgData(NamedTuple):
    triples: list[KgTriple]
    n_relations: int
    n_entities: int
    entity_original: np.ndarray
    relation_original: np.ndarray


def _parse_int_tokens(tokens: Sequence[str], path, line_no: int) -> list[int]:
    try:
        ids = [int(t) for t in tokens]
    except ValueError:
        raise LineFormatError(path, line_no, "non-integer token") from None
    if any(i < 0 for i in ids):
        raise LineFormatError(path, line_no, "negative id")
    return ids


def load_interactions(path, core: int) -> InteractionSet:
    """Parse an adjacency-list interaction file and apply iterative k-core filtering.

    Each line is ``user_id item_id item_id ...`` with whitespace-separated
    non-negative integers. Users and items with fewer than ``core``
    interactions are dropped repeatedly until a fixpoint; surviving ids are
    re-densified to 0..n-1 in ascending original-id order, with the original
    ids kept on the returned set.
    """
    if core < 1:
        raise ValueError("core must be a positive integer")
    pairs: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens:
                continue
            ids = _parse_int_tokens(tokens, path, line_no)
            u = ids[0]
            pairs.extend((u, v) for v in ids[1:])
    user_items, item_users = _core_filter(pairs, core)
    if not user_items:
        raise CoreFilterError("graph emptied by core filter")
    users = sorted(user_items)
    items = sorted(item_users)
    u_dense = {u: i for i, u in enumerate(users)}
    v_dense = {v: i for i, v in enumerate(items)}
    dense_pairs = [(u_dense[u], v_dense[v]) for u in users for v in sorted(user_items[u])]
    return InteractionSet(dense_pairs, len(users), len(items),
                          user_original=np.array(users, dtype=np.int64),
                          item_original=np.array(items, dtype=np.int64))


def _core_filter(pairs, core):
    user_items: dict[int, set[int]] = defaultdict(set)
    item_users: dict[int, set[int]] = defaultdict(set)
    for u, v in pairs:
        user_items[u].add(v)
        item_users[v].add(u)
    queue: deque[tuple[int, int]] = deque()
    for u in sorted(user_items):
        if len(user_items[u]) < core:
            queue.append((0, u))
    for v in sorted(item_users):
        if len(item_users[v]) < core:
            queue.append((1, v))
    while queue:
        side, x = queue.popleft()
        table, other = (user_items, item_users) if side == 0 else (item_users, user_items)
        if x not in table:
            continue
        for y in table.pop(x):
            peers = other[y]
            peers.discard(x)
            if len(peers) < core:
                queue.append((1 - side, y))
    # drop emptied leftovers so both tables only hold surviving nodes
    for table in (user_items, item_users):
        for x in [x for x, peers in table.items() if not peers]:
            del table[x]
    return user_items, item_users


def load_kg(path, n_items: int, declared_entities: int | None = None) -> KgData:
    """Parse ``head relation tail`` triples; node ids below ``n_items`` are items.

    Ids at or above ``n_items`` denote entities (offset by ``n_items``), the
    overlap convention of the file format. Entity and relation vocabularies
    are re-densified to 0..n-1; original ids are retained. When
    ``declared_entities`` is given, any entity id beyond it is rejected.
    """
    raw: list[tuple[int, int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 3:
                raise LineFormatError(path, line_no, "expected `head relation tail`")
            h, r, t = _parse_int_tokens(tokens, path, line_no)
            for g in (h, t):
                if declared_entities is not None and g >= n_items + declared_entities:
                    raise ValueError(
                        f"{path}:{line_no}: dangling entity id {g - n_items} "
                        f"exceeds declared entity count {declared_entities}")
            raw.append((h, r, t))
    entity_raw = sorted({g - n_items for h, _, t in raw for g in (h, t) if g >= n_items})
    relation_raw = sorted({r for _, r, _ in raw})
    e_dense = {e: i for i, e in enumerate(entity_raw)}
    r_dense = {r: i for i, r in enumerate(relation_raw)}

    def node(g: int) -> NodeId:
        if g < n_items:
            return NodeId(Kind.ITEM, g)
        return NodeId(Kind.ENTITY, e_dense[g - n_items])

    triples = [KgTriple(node(h), r_dense[r], node(t)) for h, r, t in raw]
    return KgData(triples, len(relation_raw), len(entity_raw),
                  np.array(entity_raw, dtype=np.int64),
                  np.array(relation_raw, dtype=np.int64))


def split(interactions: InteractionSet, train_frac: float, val_frac_of_train: float,
          seed: int) -> DataSplit:
    """Per-user random split into train, validation, and test sets.

    Each user's train pool takes floor(train_frac * n) interactions with a
    minimum of one; the remainder goes to test. Validation is carved out of
    the train pool as floor(val_frac_of_train * pool), bumped to one when the
    pool has at least two. A user with a single interaction keeps it in train
    and appears in neither validation nor test. Deterministic under the seed.
    """
    if not (0.0 < train_frac < 1.0 and 0.0 < val_frac_of_train < 1.0):
        raise ValueError("fractions must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_pairs: list[tuple[int, int]] = []
    val_pairs: list[tuple[int, int]] = []
    test_pairs: list[tuple[int, int]] = []
    for u in range(interactions.n_users):
        items = interactions.items_of(u)
        n = len(items)
        if n == 0:
            continue
        perm = rng.permutation(n)
        if n == 1:
            train_pairs.append((u, int(items[0])))
            continue
        n_pool = max(1, int(np.floor(train_frac * n)))
        pool = items[perm[:n_pool]]
        test = items[perm[n_pool:]]
        n_val = int(np.floor(val_frac_of_train * n_pool))
        if n_val == 0 and n_pool >= 2:
            n_val = 1
        val = pool[:n_val]
        train = pool[n_val:]
        train_pairs.extend((u, int(v)) for v in train)
        val_pairs.extend((u, int(v)) for v in val)
        test_pairs.extend((u, int(v)) for v in test)
    nu, ni = interactions.n_users, interactions.n_items
    uo, io = interactions.user_original, interactions.item_original
    return DataSplit(
        InteractionSet(train_pairs, nu, ni, uo, io),
        InteractionSet(val_pairs, nu, ni, uo, io),
        InteractionSet(test_pairs, nu, ni, uo, io),
    )


class Graph:
    """Fused interaction and KG graph over a global node index with k-hop access.

    Adjacency is undirected and relation-agnostic; relation ids stay available
    on ``kg.triples``. The same-kind k-hop candidate index covers hop counts
    1..max_hops for user and item nodes and is built eagerly when the node
    count is at or below ``khop_threshold``; above it, lookups fall back to a
    breadth-first search per call. Both paths return identical sets.
    """

    def __init__(self, interactions: InteractionSet, kg: KgData | None = None,
                 max_hops: int = 4, khop_threshold: int = 100_000):
        if max_hops < 1:
            raise ValueError("max_hops must be at least 1")
        self.interactions = interactions
        self.kg = kg
        self.n_users = interactions.n_users
        self.n_items = interactions.n_items
        self.n_entities = kg.n_entities if kg is not None else 0
        self.n_nodes = self.n_users + self.n_items + self.n_entities
        self.max_hops = int(max_hops)
        self._offsets = (0, self.n_users, self.n_users + self.n_items)
        edges = {(int(u), self._offsets[1] + int(v)) for u, v in interactions.pair_array}
        if kg is not None:
            for h, _, t in kg.triples:
                a, b = self.gid(h), self.gid(t)
                if a != b:
                    edges.add((min(a, b), max(a, b)))
        self._indptr, self._indices = _build_csr(edges, self.n_nodes)
        self._khop = self._build_khop_index() if self.n_nodes <= khop_threshold else None

    def gid(self, node: NodeId) -> int:
        lo, hi = self.kind_range(node.kind)
        g = lo + node.index
        if not (lo <= g < hi):
            raise ValueError(f"{node} outside loaded graph")
        return g

    def node_of(self, gid: int) -> NodeId:
        for kind in (Kind.ENTITY, Kind.ITEM, Kind.USER):
            lo = self._offsets[kind]
            if gid >= lo:
                return NodeId(kind, gid - lo)
        raise ValueError(f"bad global id {gid}")

    def kind_range(self, kind: Kind) -> tuple[int, int]:
        counts = (self.n_users, self.n_items, self.n_entities)
        lo = self._offsets[kind]
        return lo, lo + counts[kind]

    def neighbors(self, gid: int) -> np.ndarray:
        return self._indices[self._indptr[gid]:self._indptr[gid + 1]]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        data = np.ones(len(self._indices), dtype=np.float64)
        return sparse.csr_matrix((data, self._indices, self._indptr),
                                 shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def normalized_adjacency(self) -> sparse.csr_matrix:
        """Symmetric degree-normalized adjacency; isolated nodes keep zero rows."""
        deg = np.diff(self._indptr).astype(np.float64)
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        rows = np.repeat(np.arange(self.n_nodes), np.diff(self._indptr))
        data = inv_sqrt[rows] * inv_sqrt[self._indices]
        return sparse.csr_matrix((data, self._indices, self._indptr),
                                 shape=(self.n_nodes, self.n_nodes))

    @property
    def has_khop_index(self) -> bool:
        return self._khop is not None

    def _bfs_depths(self, start: int, max_depth: int) -> dict[int, int]:
        depths = {start: 0}
        frontier = [start]
        for depth in range(1, max_depth + 1):
            nxt = []
            for g in frontier:
                for nb in self._indices[self._indptr[g]:self._indptr[g + 1]]:
                    nb = int(nb)
                    if nb not in depths:
                        depths[nb] = depth
                        nxt.append(nb)
            frontier = nxt
            if not frontier:
                break
        return depths

    def _build_khop_index(self):
        n_ui = self.n_users + self.n_items
        index = [[None] * n_ui for _ in range(self.max_hops)]
        for gid in range(n_ui):
            kind = Kind.USER if gid < self.n_users else Kind.ITEM
            lo, hi = self.kind_range(kind)
            depths = self._bfs_depths(gid, self.max_hops)
            same = sorted((g, d) for g, d in depths.items() if lo <= g < hi)
            for k in range(1, self.max_hops + 1):
                index[k - 1][gid] = np.array([g - lo for g, d in same if d <= k],
                                             dtype=np.int64)
        return index

    def same_kind_within(self, node: NodeId, k: int) -> np.ndarray:
        """Sorted same-kind node indices within k hops of ``node`` (itself included).

        Served from the precomputed index when built, by BFS otherwise; the
        returned array must not be mutated.
        """
        if not 1 <= k <= self.max_hops:
            raise ValueError(f"hop count {k} outside 1..{self.max_hops}")
        if node.kind == Kind.ENTITY:
            raise ValueError("candidate sets are defined for users and items only")
        gid = self.gid(node)
        if self._khop is not None:
            return self._khop[k - 1][gid]
        lo, hi = self.kind_range(node.kind)
        depths = self._bfs_depths(gid, k)
        return np.array(sorted(g - lo for g in depths if lo <= g < hi), dtype=np.int64)


def _build_csr(edges: set[tuple[int, int]], n_nodes: int):
    both = np.empty((2 * len(edges), 2), dtype=np.int64)
    if edges:
        arr = np.array(sorted(edges), dtype=np.int64)
        both[: len(edges)] = arr
        both[len(edges):, 0] = arr[:, 1]
        both[len(edges):, 1] = arr[:, 0]
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n_nodes)
    indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return indptr, both[:, 1].copy()


def khop_subgraph(graph: Graph, center: NodeId, k: int) -> set[NodeId]:
    """All nodes within graph distance k of ``center``, center included."""
    if not 1 <= k <= graph.max_hops:
        raise ValueError(f"hop count {k} outside 1..{graph.max_hops}")
    depths = graph._bfs_depths(graph.gid(center), k)
    return {graph.node_of(g) for g in depths}


def write_interaction_file(interactions: InteractionSet, path) -> None:
    """Write the adjacency-list text format with dense ids; empty users are skipped."""
    with open(path, "w", encoding="utf-8") as fh:
        for u in range(interactions.n_users):
            items = interactions.items_of(u)
            if len(items) == 0:
                continue
            fh.write(" ".join([str(u)] + [str(int(v)) for v in items]) + "\n")


def read_interaction_file(path, n_users: int, n_items: int) -> InteractionSet:
    """Read an adjacency-list file whose ids are already dense (no filtering)."""
    pairs: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens:
                continue
            ids = _parse_int_tokens(tokens, path, line_no)
            u = ids[0]
            if u >= n_users or any(v >= n_items for v in ids[1:]):
                raise LineFormatError(path, line_no, "id outside declared range")
            pairs.extend((u, v) for v in ids[1:])
    return InteractionSet(pairs, n_users, n_items)


def write_id_map(original: np.ndarray, path) -> None:
    """Write `original_id dense_id` pairs, one per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for dense, orig in enumerate(original):
            fh.write(f"{int(orig)} {dense}\n")
