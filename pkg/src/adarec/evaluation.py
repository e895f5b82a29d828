"""Top-K ranking evaluation and the reporting helpers behind the CLI.

Every model variant (adaptive or fixed depth) is scored through the same code
path; only the per-node depth assignment differs. Candidate items are all
items a user did not interact with in the training split, score ties break by
ascending item id, and metrics average over users with a non-empty relevance
set.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .gnn import EmbeddingTable, PoolingSpec, pooled_by_action
from .graph import DataSplit, Kind

_EVAL_CHUNK = 1024


@dataclass
class ActionAssignment:
    """Chosen aggregation depth per user and per item (values in 1..n_actions)."""

    user_actions: np.ndarray
    item_actions: np.ndarray


@dataclass
class RankingResult:
    k: int
    user_ids: np.ndarray
    ndcg: np.ndarray
    recall: np.ndarray
    top_items: np.ndarray
    mean_ndcg: float
    mean_recall: float
    n_excluded: int


@dataclass
class SparsityGroup:
    max_count_exclusive: int
    n_users: int
    interaction_mass: int
    mean_ndcg: float


@dataclass
class SparsityGroups:
    groups: list[SparsityGroup]
    merged: bool = False


def _dcg(hit_ranks: np.ndarray) -> float:
    # ranks are 1-based; gain 1 per hit, discount 1/log2(rank+1)
    return float(np.sum(1.0 / np.log2(hit_ranks + 1.0)))


def _ideal_dcg(n_relevant: int, k: int) -> float:
    n = min(n_relevant, k)
    return float(np.sum(1.0 / np.log2(np.arange(1, n + 1) + 1.0)))


def evaluate(assignment: ActionAssignment, table: EmbeddingTable,
             pooling: PoolingSpec, data: DataSplit, k: int = 20,
             relevance: str = "test") -> RankingResult:
    """Rank every non-train item per user and compute nDCG@k and Recall@k.

    ``relevance`` selects the split whose interactions count as hits ("test"
    or "validation"). Users with an empty relevance set are excluded from the
    averages and counted in ``n_excluded``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if relevance not in ("test", "validation"):
        raise ValueError("relevance must be 'test' or 'validation'")
    rel_set = data.test if relevance == "test" else data.validation
    graph = table.graph
    pooled = pooled_by_action(table, pooling)
    u_lo, _ = graph.kind_range(Kind.USER)
    i_lo, _ = graph.kind_range(Kind.ITEM)
    n_users, n_items = graph.n_users, graph.n_items
    user_vecs = pooled[assignment.user_actions - 1,
                       np.arange(n_users) + u_lo]
    item_vecs = pooled[assignment.item_actions - 1,
                       np.arange(n_items) + i_lo]

    user_ids: list[int] = []
    ndcgs: list[float] = []
    recalls: list[float] = []
    tops: list[np.ndarray] = []
    n_excluded = 0
    k_eff = min(k, n_items)
    for lo in range(0, n_users, _EVAL_CHUNK):
        hi = min(lo + _EVAL_CHUNK, n_users)
        scores = user_vecs[lo:hi] @ item_vecs.T
        for u in range(lo, hi):
            relevant = rel_set.item_set_of(u)
            if not relevant:
                n_excluded += 1
                continue
            row = scores[u - lo].copy()
            row[data.train.items_of(u)] = -np.inf
            order = np.argsort(-row, kind="stable")[:k_eff]
            hit_mask = np.fromiter((int(i) in relevant for i in order),
                                   dtype=bool, count=len(order))
            hit_ranks = np.nonzero(hit_mask)[0] + 1
            dcg = _dcg(hit_ranks)
            idcg = _ideal_dcg(len(relevant), k)
            user_ids.append(u)
            ndcgs.append(dcg / idcg if idcg > 0 else 0.0)
            recalls.append(len(hit_ranks) / len(relevant))
            tops.append(order.astype(np.int64))
    ndcg_arr = np.array(ndcgs)
    recall_arr = np.array(recalls)
    return RankingResult(
        k=k,
        user_ids=np.array(user_ids, dtype=np.int64),
        ndcg=ndcg_arr,
        recall=recall_arr,
        top_items=np.stack(tops) if tops else np.zeros((0, k_eff), dtype=np.int64),
        mean_ndcg=float(ndcg_arr.mean()) if len(ndcg_arr) else float("nan"),
        mean_recall=float(recall_arr.mean()) if len(recall_arr) else float("nan"),
        n_excluded=n_excluded,
    )


def sparsity_report(result: RankingResult, data: DataSplit,
                    n_groups: int = 4) -> SparsityGroups:
    """Group evaluated users by train interaction count into ~equal-mass groups.

    Thresholds are count boundaries chosen so cumulative interaction mass
    splits into roughly equal parts; a group never splits users with the same
    count. Fewer distinct counts than groups leads to merged groups, flagged
    on the result.
    """
    counts = np.array([len(data.train.items_of(int(u))) for u in result.user_ids],
                      dtype=np.int64)
    total = int(counts.sum())
    distinct = np.unique(counts)
    merged = len(distinct) < n_groups
    groups: list[SparsityGroup] = []
    mass_per_count = {int(c): int(counts[counts == c].sum()) for c in distinct}
    target = total / n_groups
    cum = 0
    current: list[int] = []
    boundary_idx = 1
    for c in distinct:
        current.append(int(c))
        cum += mass_per_count[int(c)]
        remaining_counts = len(distinct) - int(np.searchsorted(distinct, c)) - 1
        remaining_groups = n_groups - len(groups) - 1
        if (cum >= target * boundary_idx and len(groups) < n_groups - 1
                and remaining_counts >= remaining_groups):
            groups.append(_close_group(current, counts, result.ndcg))
            boundary_idx += 1
            current = []
    if current:
        groups.append(_close_group(current, counts, result.ndcg))
    return SparsityGroups(groups, merged=merged or len(groups) < n_groups)


def _close_group(count_values: list[int], counts: np.ndarray,
                 ndcg: np.ndarray) -> SparsityGroup:
    mask = np.isin(counts, count_values)
    return SparsityGroup(
        max_count_exclusive=max(count_values) + 1,
        n_users=int(mask.sum()),
        interaction_mass=int(counts[mask].sum()),
        mean_ndcg=float(ndcg[mask].mean()) if mask.any() else float("nan"),
    )


def action_distribution_report(assignment: ActionAssignment) -> dict[str, np.ndarray]:
    """Percentage of nodes per chosen depth, per side; each side sums to 100."""
    out = {}
    for side, actions in (("user", assignment.user_actions),
                          ("item", assignment.item_actions)):
        n_actions = int(actions.max())
        counts = np.bincount(actions, minlength=n_actions + 1)[1:]
        out[side] = 100.0 * counts / counts.sum()
    return out


def reward_curve_export(history_path, window: int = 10) -> list[dict[str, float]]:
    """Per-epoch reward series with trailing moving-average trend columns.

    Reads a training history CSV and returns rows with raw user/item rewards
    plus window means that ignore epochs without computed rewards. A window
    of 1 reproduces the raw series.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    epochs: list[int] = []
    user_raw: list[float] = []
    item_raw: list[float] = []
    with open(history_path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            epochs.append(int(row["epoch"]))
            user_raw.append(float(row["user_reward"]) if row["user_reward"] else float("nan"))
            item_raw.append(float(row["item_reward"]) if row["item_reward"] else float("nan"))

    def trend(series: list[float], i: int) -> float:
        lo = max(0, i - window + 1)
        vals = [v for v in series[lo:i + 1] if not math.isnan(v)]
        return float(np.mean(vals)) if vals else float("nan")

    rows = []
    for i, ep in enumerate(epochs):
        rows.append({
            "epoch": ep,
            "user_reward": user_raw[i],
            "user_trend": trend(user_raw, i),
            "item_reward": item_raw[i],
            "item_trend": trend(item_raw, i),
        })
    return rows


def reward_curve_csv(rows: list[dict[str, float]]) -> str:
    lines = ["epoch,user_reward,user_trend,item_reward,item_trend"]
    for r in rows:
        lines.append(",".join([
            str(r["epoch"]),
            repr(float(r["user_reward"])),
            repr(float(r["user_trend"])),
            repr(float(r["item_reward"])),
            repr(float(r["item_trend"])),
        ]))
    return "\n".join(lines) + "\n"
