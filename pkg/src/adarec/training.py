"""Training orchestration: the dual-policy epoch loop, baselines, and checkpoints.

One epoch rolls out trajectories on both sides, updates each Q-network from
its replay memory, syncs targets on schedule, co-trains the embedding table
from tuple-list evidence pairs, and re-propagates. Everything is seeded and
single-threaded: identical config, seed, and data give byte-identical metric
CSVs and checkpoints.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arrayio
from .dqn import (EncoderMode, QNetwork, ReplayMemory, StateEncoder, Transition,
                  dqn_update, make_target, sync_target)
from .env import (EvidenceGap, RewardCounters, TupleList, build_reward_context,
                  next_state, reward)
from .evaluation import ActionAssignment, RankingResult, evaluate
from .gnn import (EmbeddingTable, GnnParams, PoolingMode, PoolingSpec, bpr_step,
                  pooled_by_action, propagate)
from .graph import DataSplit, Graph, Kind, NodeId

logger = logging.getLogger(__name__)

HISTORY_HEADER = "epoch,eps,user_reward,item_reward,td_loss_u,td_loss_v,bpr_loss,val_ndcg,val_recall"


@dataclass
class TrainConfig:
    """All knobs of a run; defaults follow the adaptive-depth recipe.

    ``epochs=None`` resolves to 1000 when a knowledge graph is fused and 400
    otherwise. ``share_dqn`` collapses the two Q-stacks into one (ablation),
    and ``negative_mode="random"`` swaps tuple-list negatives for uniform
    random ones (ablation).
    """

    epochs: int | None = None
    trajectories: int = 10
    trajectory_len: int = 20
    warmup_steps: int = 5
    replay_batch: int = 32
    replay_capacity: int = 10_000
    target_sync: int = 10
    discount: float = 0.98
    dqn_lr_user: float = 1e-3
    dqn_lr_item: float = 1e-3
    hidden: int = 64
    n_actions: int = 4
    dim: int = 64
    gnn_lr: float = 1e-3
    l2: float = 1e-5
    pooling: str = "sum"
    encoder: str = "initial"
    probe_action: int | None = None
    seed: int = 0
    patience: int = 10
    val_stride: int = 1
    eval_k: int = 20
    khop_threshold: int = 100_000
    share_dqn: bool = False
    negative_mode: str = "tuple"
    baseline_batch: int = 1024
    trajectory_log: str = ""

    def __post_init__(self):
        if not 0 <= self.warmup_steps < self.trajectory_len:
            raise ValueError("warmup_steps must satisfy 0 <= warmup < trajectory_len")
        if self.n_actions < 1:
            raise ValueError("n_actions must be at least 1")
        for name in ("dqn_lr_user", "dqn_lr_item", "gnn_lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.probe_action is not None and not 1 <= self.probe_action <= self.n_actions:
            raise ValueError("probe_action outside 1..n_actions")
        PoolingMode(self.pooling)
        EncoderMode(self.encoder)
        if self.negative_mode not in ("tuple", "random"):
            raise ValueError("negative_mode must be 'tuple' or 'random'")

    def resolved_epochs(self, has_kg: bool) -> int:
        if self.epochs is not None:
            return self.epochs
        return 1000 if has_kg else 400

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """Parse a `key=value` text file (# starts a comment)."""
        values: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{line_no}: expected key=value")
                key, val = (part.strip() for part in line.split("=", 1))
                values[key] = val
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict[str, str]) -> "TrainConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, val in values.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(val, fields[key].type)
        return cls(**kwargs)

    def replaced(self, **kwargs) -> "TrainConfig":
        return dataclasses.replace(self, **kwargs)


def _coerce(val: str, type_str: str):
    if type_str == "bool":
        low = val.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {val!r}")
    if type_str == "int":
        return int(val)
    if type_str == "float":
        return float(val)
    if type_str == "int | None":
        return None if val.lower() in ("", "none") else int(val)
    return val


def epsilon(epoch: int, total: int) -> float:
    """Linear exploration schedule: 1 at the start, 0 once ``epoch`` reaches ``total``."""
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= epoch <= total:
        raise ValueError("epoch outside 0..total")
    return 1.0 - epoch / total


@dataclass
class EpochStats:
    epoch: int
    eps: float
    user_reward: float
    item_reward: float
    td_loss_u: float
    td_loss_v: float
    bpr_loss: float
    n_user_rewards: int = 0
    n_item_rewards: int = 0
    skipped_user: int = 0
    skipped_item: int = 0
    guard_zero: int = 0
    val_ndcg: float | None = None
    val_recall: float | None = None


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def history_to_csv(rows: list[EpochStats]) -> str:
    lines = [HISTORY_HEADER]
    for st in rows:
        lines.append(",".join([
            str(st.epoch), _fmt(st.eps), _fmt(st.user_reward), _fmt(st.item_reward),
            _fmt(st.td_loss_u), _fmt(st.td_loss_v), _fmt(st.bpr_loss),
            _fmt(st.val_ndcg), _fmt(st.val_recall),
        ]))
    return "\n".join(lines) + "\n"


def assignment_to_csv(assignment: ActionAssignment) -> str:
    lines = ["side,index,action"]
    for i, a in enumerate(assignment.user_actions):
        lines.append(f"user,{i},{int(a)}")
    for i, a in enumerate(assignment.item_actions):
        lines.append(f"item,{i},{int(a)}")
    return "\n".join(lines) + "\n"


def greedy_assignment(q_user: QNetwork, q_item: QNetwork, encoder: StateEncoder,
                      graph: Graph) -> ActionAssignment:
    """Depth per node as the argmax of its Q-values (ties to the lowest depth)."""
    users = [NodeId(Kind.USER, i) for i in range(graph.n_users)]
    items = [NodeId(Kind.ITEM, i) for i in range(graph.n_items)]
    user_actions = np.argmax(q_user.forward(encoder.encode_many(users)), axis=1) + 1
    item_actions = np.argmax(q_item.forward(encoder.encode_many(items)), axis=1) + 1
    return ActionAssignment(user_actions.astype(np.int64), item_actions.astype(np.int64))


@dataclass
class RestoredModel:
    """Everything needed to evaluate a checkpoint: embeddings, nets, assignment."""

    params: GnnParams
    table: EmbeddingTable
    pooling: PoolingSpec
    q_user: QNetwork | None
    q_item: QNetwork | None
    assignment: ActionAssignment
    epoch: int


@dataclass
class TrainResult:
    config: TrainConfig
    history: list[EpochStats]
    best_epoch: int
    best_val_ndcg: float
    checkpoint: bytes
    fixed_depth: int | None = None

    def history_csv(self) -> str:
        return history_to_csv(self.history)

    def restore(self, graph: Graph) -> RestoredModel:
        return restore_checkpoint(self.checkpoint, graph)


class AdaptiveTrainer:
    """Dual-policy training over a fused graph and its train/validation split.

    The epoch order is: rollouts, per-side Q updates, target syncs when due,
    then one co-training step of the embeddings followed by re-propagation.
    Rewards inside an epoch read the epoch-start embeddings.
    """

    def __init__(self, graph: Graph, data: DataSplit, config: TrainConfig):
        if graph.max_hops < config.n_actions:
            raise ValueError("graph max_hops smaller than the action count")
        self.graph = graph
        self.split = data
        self.cfg = config
        self.total_epochs = config.resolved_epochs(graph.kg is not None
                                                   and len(graph.kg.triples) > 0)
        seeds = np.random.SeedSequence(config.seed).spawn(6)
        self.params = GnnParams(graph.n_nodes, config.dim, config.n_actions,
                                lr=config.gnn_lr, l2=config.l2,
                                rng=np.random.default_rng(seeds[0]))
        self.pooling = PoolingSpec.uniform(config.n_actions, PoolingMode(config.pooling))
        self.table = propagate(graph, self.params)
        self.pooled = pooled_by_action(self.table, self.pooling)
        self.encoder = StateEncoder(EncoderMode(config.encoder), self.table,
                                    self.pooling, config.probe_action)
        self.q_user = QNetwork(self.encoder.dim, config.n_actions, config.hidden,
                               config.dqn_lr_user, rng=np.random.default_rng(seeds[1]))
        self.target_user = make_target(self.q_user)
        self.mem_user = ReplayMemory(config.replay_capacity, seed=seeds[3])
        if config.share_dqn:
            self.q_item = self.q_user
            self.target_item = self.target_user
            self.mem_item = self.mem_user
        else:
            self.q_item = QNetwork(self.encoder.dim, config.n_actions, config.hidden,
                                   config.dqn_lr_item, rng=np.random.default_rng(seeds[2]))
            self.target_item = make_target(self.q_item)
            self.mem_item = ReplayMemory(config.replay_capacity, seed=seeds[4])
        self.rng = np.random.default_rng(seeds[5])
        self.start_users = np.array(
            [u for u in range(graph.n_users) if len(data.train.items_of(u)) > 0],
            dtype=np.int64)
        if len(self.start_users) == 0:
            raise ValueError("training split has no interactions")

    def _refresh_embeddings(self) -> None:
        self.table = propagate(self.graph, self.params)
        self.pooled = pooled_by_action(self.table, self.pooling)
        self.encoder.rebind(self.table)

    def run_epoch(self, epoch: int) -> EpochStats:
        cfg = self.cfg
        eps = epsilon(epoch, self.total_epochs)
        counters = RewardCounters()
        user_rewards: list[float] = []
        item_rewards: list[float] = []
        skipped_u = skipped_v = 0
        rollouts: list[tuple[TupleList, TupleList]] = []
        log_rows: list[str] = []

        for _ in range(cfg.trajectories):
            start = self.start_users[self.rng.integers(len(self.start_users))]
            s_u = NodeId(Kind.USER, int(start))
            start_items = self.split.train.items_of(s_u.index)
            s_v = NodeId(Kind.ITEM, int(start_items[self.rng.integers(len(start_items))]))
            l_u = TupleList(Kind.USER)
            l_v = TupleList(Kind.ITEM)
            for t in range(cfg.trajectory_len + 1):
                a_u = self._select(self.q_user, s_u, eps)
                a_v = self._select(self.q_item, s_v, eps)

                l_u.record(s_u, a_u)
                s_u_next = next_state(s_u, a_u, self.graph, self.rng)
                r_u = None
                if t >= cfg.warmup_steps:
                    ctx = build_reward_context(s_u, l_v, self.split.train, self.rng,
                                               cfg.negative_mode, cfg.n_actions)
                    if isinstance(ctx, EvidenceGap):
                        skipped_u += 1
                    else:
                        r_u = reward(s_u, a_u, ctx, self.table, self.pooling,
                                     pooled=self.pooled, counters=counters)
                        self.mem_user.push(Transition(s_u, a_u, r_u, s_u_next))
                        user_rewards.append(r_u)
                if cfg.trajectory_log:
                    log_rows.append(self._log_row(t, "user", s_u, a_u, r_u))
                s_u = s_u_next

                l_v.record(s_v, a_v)
                s_v_next = next_state(s_v, a_v, self.graph, self.rng)
                r_v = None
                if t >= cfg.warmup_steps:
                    ctx = build_reward_context(s_v, l_u, self.split.train, self.rng,
                                               cfg.negative_mode, cfg.n_actions)
                    if isinstance(ctx, EvidenceGap):
                        skipped_v += 1
                    else:
                        r_v = reward(s_v, a_v, ctx, self.table, self.pooling,
                                     pooled=self.pooled, counters=counters)
                        self.mem_item.push(Transition(s_v, a_v, r_v, s_v_next))
                        item_rewards.append(r_v)
                if cfg.trajectory_log:
                    log_rows.append(self._log_row(t, "item", s_v, a_v, r_v))
                s_v = s_v_next
            rollouts.append((l_u, l_v))

        td_u = td_v = float("nan")
        if len(self.mem_user):
            batch = self.mem_user.sample(cfg.replay_batch)
            td_u = dqn_update(self.q_user, self.target_user, batch,
                              cfg.discount, self.encoder)
        else:
            logger.info("epoch %d: user replay memory empty, update skipped", epoch)
        if len(self.mem_item):
            batch = self.mem_item.sample(cfg.replay_batch)
            td_v = dqn_update(self.q_item, self.target_item, batch,
                              cfg.discount, self.encoder)
        else:
            logger.info("epoch %d: item replay memory empty, update skipped", epoch)

        if epoch % cfg.target_sync == 0:
            sync_target(self.q_user, self.target_user)
            sync_target(self.q_item, self.target_item)

        pos_pairs: list = []
        neg_pairs: list = []
        for l_u, l_v in rollouts:
            self._collect_pairs(l_u, l_v, pos_pairs, neg_pairs)
            self._collect_pairs(l_v, l_u, pos_pairs, neg_pairs)
        bpr_loss = bpr_step(self.params, self.table, self.pooling, pos_pairs, neg_pairs)
        self._refresh_embeddings()

        if cfg.trajectory_log and log_rows:
            with open(cfg.trajectory_log, "a", encoding="utf-8") as fh:
                fh.write("\n".join(log_rows) + "\n")

        return EpochStats(
            epoch=epoch, eps=eps,
            user_reward=float(np.mean(user_rewards)) if user_rewards else float("nan"),
            item_reward=float(np.mean(item_rewards)) if item_rewards else float("nan"),
            td_loss_u=td_u, td_loss_v=td_v, bpr_loss=bpr_loss,
            n_user_rewards=len(user_rewards), n_item_rewards=len(item_rewards),
            skipped_user=skipped_u, skipped_item=skipped_v,
            guard_zero=counters.guard_zero,
        )

    def _select(self, net: QNetwork, state: NodeId, eps: float) -> int:
        from .dqn import select_action
        return select_action(net, self.encoder, state, eps, self.rng)

    def _log_row(self, t: int, side: str, state: NodeId, action: int, r) -> str:
        reward_txt = "" if r is None else repr(float(r))
        return f"{t} {side} {state.index} {action} {reward_txt}"

    def _collect_pairs(self, anchors: TupleList, evidence: TupleList,
                       pos_pairs: list, neg_pairs: list) -> None:
        for entry in anchors.entries:
            ctx = build_reward_context(entry[0], evidence, self.split.train, self.rng,
                                       self.cfg.negative_mode, self.cfg.n_actions)
            if isinstance(ctx, EvidenceGap):
                continue
            for p_entry, n_entry in zip(ctx.positives, ctx.negatives):
                pos_pairs.append((entry, p_entry))
                neg_pairs.append((entry, n_entry))

    def assign_actions(self) -> ActionAssignment:
        return greedy_assignment(self.q_user, self.q_item, self.encoder, self.graph)

    def validate(self) -> tuple[float, float]:
        if self.split.validation.n_pairs == 0:
            return float("nan"), float("nan")
        result = evaluate(self.assign_actions(), self.table, self.pooling,
                          self.split, k=self.cfg.eval_k, relevance="validation")
        return result.mean_ndcg, result.mean_recall

    def _check_finite(self, epoch: int) -> None:
        bad = []
        if not np.isfinite(self.params.layer0).all():
            bad.append("layer0")
        for label, net in (("user", self.q_user), ("item", self.q_item)):
            if not all(np.isfinite(a).all() for a in net.parameters().values()):
                bad.append(f"q_{label}")
        if bad:
            raise RuntimeError(f"non-finite parameters after epoch {epoch}: {', '.join(bad)}")

    def checkpoint_bytes(self, epoch: int) -> bytes:
        meta = {
            "format": 1,
            "kind": "adaptive",
            "epoch": epoch,
            "config": dataclasses.asdict(self.cfg),
            "adam_t": self.params.adam_t,
            "rng": {
                "env": self.rng.bit_generator.state,
                "mem_user": self.mem_user.rng.bit_generator.state,
                "mem_item": self.mem_item.rng.bit_generator.state,
            },
        }
        arrays = {
            "layer0": self.params.layer0,
            "adam_m": self.params.adam_m,
            "adam_v": self.params.adam_v,
        }
        for prefix, net in (("qu", self.q_user), ("qut", self.target_user),
                            ("qv", self.q_item), ("qvt", self.target_item)):
            for name, arr in net.parameters().items():
                arrays[f"{prefix}_{name}"] = arr
        return arrayio.dump_bytes(meta, arrays)

    def train(self, out_dir=None) -> TrainResult:
        """Run the epoch loop with validation early stopping; emit artifacts.

        Any non-finite parameter aborts with a diagnostic. When ``out_dir`` is
        given, history.csv, checkpoint.bin, and assignment.csv are written.
        """
        cfg = self.cfg
        history: list[EpochStats] = []
        best_ndcg = -math.inf
        best_epoch = -1
        best_blob: bytes | None = None
        strikes = 0
        for z in range(self.total_epochs):
            stats = self.run_epoch(z)
            self._check_finite(z)
            stop = False
            if z % cfg.val_stride == 0 or z == self.total_epochs - 1:
                ndcg, recall = self.validate()
                stats.val_ndcg, stats.val_recall = ndcg, recall
                if not math.isnan(ndcg):
                    if ndcg > best_ndcg:
                        best_ndcg = ndcg
                        best_epoch = z
                        best_blob = self.checkpoint_bytes(z)
                        strikes = 0
                    else:
                        strikes += 1
                        stop = strikes >= cfg.patience
            history.append(stats)
            if stop:
                logger.info("early stop at epoch %d (best %d)", z, best_epoch)
                break
        if best_blob is None:
            best_epoch = history[-1].epoch if history else 0
            best_blob = self.checkpoint_bytes(best_epoch)
            best_ndcg = float("nan")
        result = TrainResult(cfg, history, best_epoch, best_ndcg, best_blob)
        if out_dir is not None:
            write_artifacts(result, self.graph, out_dir)
        return result


def write_artifacts(result: TrainResult, graph: Graph, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "history.csv").write_text(result.history_csv(), encoding="utf-8")
    (out / "checkpoint.bin").write_bytes(result.checkpoint)
    model = result.restore(graph)
    (out / "assignment.csv").write_text(assignment_to_csv(model.assignment),
                                        encoding="utf-8")


def restore_checkpoint(blob: bytes, graph: Graph) -> RestoredModel:
    """Rebuild embeddings, Q-networks, and the greedy assignment from a checkpoint."""
    meta, arrays = arrayio.load_bytes(blob)
    cfg = TrainConfig(**meta["config"])
    params = GnnParams(graph.n_nodes, cfg.dim, cfg.n_actions,
                       lr=cfg.gnn_lr, l2=cfg.l2, seed=0)
    params.layer0 = arrays["layer0"].copy()
    params.adam_m = arrays["adam_m"].copy()
    params.adam_v = arrays["adam_v"].copy()
    params.adam_t = meta["adam_t"]
    pooling = PoolingSpec.uniform(cfg.n_actions, PoolingMode(cfg.pooling))
    table = propagate(graph, params)
    if meta["kind"] == "baseline":
        depth = int(meta["fixed_depth"])
        assignment = ActionAssignment(
            np.full(graph.n_users, depth, dtype=np.int64),
            np.full(graph.n_items, depth, dtype=np.int64))
        return RestoredModel(params, table, pooling, None, None, assignment,
                             meta["epoch"])
    encoder = StateEncoder(EncoderMode(cfg.encoder), table, pooling, cfg.probe_action)

    def load_net(prefix: str, lr: float) -> QNetwork:
        net = QNetwork(encoder.dim, cfg.n_actions, cfg.hidden, lr, seed=0)
        for name in ("w1", "b1", "w2", "b2"):
            net.parameters()[name][...] = arrays[f"{prefix}_{name}"]
        return net

    q_user = load_net("qu", cfg.dqn_lr_user)
    q_item = q_user if cfg.share_dqn else load_net("qv", cfg.dqn_lr_item)
    assignment = greedy_assignment(q_user, q_item, encoder, graph)
    return RestoredModel(params, table, pooling, q_user, q_item, assignment,
                         meta["epoch"])


def train_fixed_depth(graph: Graph, data: DataSplit, config: TrainConfig,
                      depth: int) -> TrainResult:
    """Train the same embedding model with every node forced to one depth.

    Standard pairwise ranking with uniform random negatives over the training
    interactions, minibatched by ``config.baseline_batch`` (0 means one full
    batch per epoch). Validation early stopping matches the adaptive loop.
    """
    cfg = config
    if not 1 <= depth <= cfg.n_actions:
        raise ValueError(f"depth {depth} outside 1..{cfg.n_actions}")
    total = cfg.resolved_epochs(graph.kg is not None and len(graph.kg.triples) > 0)
    seeds = np.random.SeedSequence(cfg.seed).spawn(6)
    params = GnnParams(graph.n_nodes, cfg.dim, cfg.n_actions, lr=cfg.gnn_lr,
                       l2=cfg.l2, rng=np.random.default_rng(seeds[0]))
    pooling = PoolingSpec.uniform(cfg.n_actions, PoolingMode(cfg.pooling))
    rng = np.random.default_rng(seeds[5])
    pairs = data.train.pair_array
    if len(pairs) == 0:
        raise ValueError("training split has no interactions")
    assignment = ActionAssignment(np.full(graph.n_users, depth, dtype=np.int64),
                                  np.full(graph.n_items, depth, dtype=np.int64))
    batch_size = cfg.baseline_batch if cfg.baseline_batch > 0 else len(pairs)

    history: list[EpochStats] = []
    best_ndcg = -math.inf
    best_epoch = -1
    best_blob: bytes | None = None
    strikes = 0

    def snapshot(epoch: int) -> bytes:
        meta = {
            "format": 1, "kind": "baseline", "epoch": epoch,
            "config": dataclasses.asdict(cfg), "adam_t": params.adam_t,
            "fixed_depth": depth,
            "rng": {"env": rng.bit_generator.state},
        }
        return arrayio.dump_bytes(meta, {"layer0": params.layer0,
                                         "adam_m": params.adam_m,
                                         "adam_v": params.adam_v})

    for z in range(total):
        perm = rng.permutation(len(pairs))
        losses = []
        for lo in range(0, len(pairs), batch_size):
            batch = pairs[perm[lo:lo + batch_size]]
            pos_pairs = []
            neg_pairs = []
            for u, v in batch:
                u, v = int(u), int(v)
                seen = data.train.item_set_of(u)
                while True:
                    neg = int(rng.integers(graph.n_items))
                    if neg not in seen:
                        break
                anchor = (NodeId(Kind.USER, u), depth)
                pos_pairs.append((anchor, (NodeId(Kind.ITEM, v), depth)))
                neg_pairs.append((anchor, (NodeId(Kind.ITEM, neg), depth)))
            table = propagate(graph, params)
            losses.append(bpr_step(params, table, pooling, pos_pairs, neg_pairs))
        if not np.isfinite(params.layer0).all():
            raise RuntimeError(f"non-finite parameters after epoch {z}")
        stats = EpochStats(epoch=z, eps=0.0, user_reward=float("nan"),
                           item_reward=float("nan"), td_loss_u=float("nan"),
                           td_loss_v=float("nan"), bpr_loss=float(np.mean(losses)))
        stop = False
        if z % cfg.val_stride == 0 or z == total - 1:
            if data.validation.n_pairs > 0:
                table = propagate(graph, params)
                res = evaluate(assignment, table, pooling, data,
                               k=cfg.eval_k, relevance="validation")
                stats.val_ndcg, stats.val_recall = res.mean_ndcg, res.mean_recall
                if res.mean_ndcg > best_ndcg:
                    best_ndcg = res.mean_ndcg
                    best_epoch = z
                    best_blob = snapshot(z)
                    strikes = 0
                else:
                    strikes += 1
                    stop = strikes >= cfg.patience
        history.append(stats)
        if stop:
            break
    if best_blob is None:
        best_epoch = history[-1].epoch if history else 0
        best_blob = snapshot(best_epoch)
        best_ndcg = float("nan")
    return TrainResult(cfg, history, best_epoch, best_ndcg, best_blob,
                       fixed_depth=depth)


def baseline_fixed_depth(graph: Graph, data: DataSplit, depth: int,
                         config: TrainConfig) -> tuple[RankingResult, TrainResult]:
    """Train a fixed-depth control arm and evaluate it on the test split."""
    result = train_fixed_depth(graph, data, config, depth)
    model = result.restore(graph)
    ranking = evaluate(model.assignment, model.table, model.pooling, data,
                       k=config.eval_k, relevance="test")
    return ranking, result


def train(graph: Graph, data: DataSplit, config: TrainConfig,
          out_dir=None) -> TrainResult:
    """Convenience wrapper: build an :class:`AdaptiveTrainer` and run it."""
    return AdaptiveTrainer(graph, data, config).train(out_dir=out_dir)
