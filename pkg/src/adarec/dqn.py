"""Q-networks over graph nodes: replay memory, target copies, and SGD updates.

Two fully separate stacks (one per side) are constructed by the trainer; this
module has no notion of sides. Networks are small one-hidden-layer ReLU MLPs
in float64 with handwritten forward and backward passes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gnn import EmbeddingTable, PoolingSpec, pool
from .graph import NodeId


@dataclass(frozen=True)
class Transition:
    state: NodeId
    action: int
    reward: float
    next_state: NodeId

    def __post_init__(self):
        if self.state.kind != self.next_state.kind:
            raise ValueError("state and next_state must share a kind")


class ReplayMemory:
    """Fixed-capacity FIFO ring buffer with seeded uniform sampling."""

    def __init__(self, capacity: int = 10_000, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._buf: list[Transition] = []
        self._pos = 0
        self.rng = np.random.default_rng(seed)

    def push(self, transition: Transition) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(transition)
        else:
            self._buf[self._pos] = transition
            self._pos = (self._pos + 1) % self.capacity

    def sample(self, batch_size: int) -> list[Transition]:
        """Uniform sample; without replacement once the buffer holds enough."""
        if not self._buf:
            raise ValueError("cannot sample from an empty memory")
        replace = len(self._buf) < batch_size
        idx = self.rng.choice(len(self._buf), size=batch_size, replace=replace)
        return [self._buf[i] for i in idx]

    def __len__(self) -> int:
        return len(self._buf)


class EncoderMode(str, enum.Enum):
    INITIAL = "initial"
    POOLED = "pooled"


class StateEncoder:
    """Maps a node to the feature vector the Q-networks consume.

    The default reads the node's layer-0 embedding, which is independent of
    any depth choice. The pooled variant reads the final embedding at a fixed
    probe depth instead. Either way the features are detached copies: Q-net
    gradients never reach the embedding table.
    """

    def __init__(self, mode: EncoderMode, table: EmbeddingTable,
                 pooling: PoolingSpec | None = None, probe_action: int | None = None):
        self.mode = EncoderMode(mode)
        if self.mode is EncoderMode.POOLED:
            if pooling is None:
                raise ValueError("pooled encoding needs a PoolingSpec")
            self.probe_action = probe_action if probe_action is not None else table.n_max
        else:
            self.probe_action = None
        self.pooling = pooling
        self.table = table

    def rebind(self, table: EmbeddingTable) -> None:
        self.table = table

    @property
    def dim(self) -> int:
        if self.mode is EncoderMode.INITIAL:
            return self.table.dim
        return self.pooling.out_dim(self.table.dim)

    def encode(self, node: NodeId) -> np.ndarray:
        if self.mode is EncoderMode.INITIAL:
            return self.table.layers[0][self.table.graph.gid(node)].copy()
        return pool(self.table, node, self.probe_action, self.pooling)

    def encode_many(self, nodes) -> np.ndarray:
        return np.stack([self.encode(n) for n in nodes])


class QNetwork:
    """One-hidden-layer ReLU MLP from a state encoding to one value per depth."""

    def __init__(self, input_dim: int, n_actions: int, hidden: int = 64,
                 lr: float = 1e-3, seed: int = 0, rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(seed)
        self.n_actions = int(n_actions)
        self.lr = float(lr)
        self.w1 = rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(hidden, input_dim))
        self.b1 = np.zeros(hidden)
        self.w2 = rng.normal(0.0, np.sqrt(1.0 / hidden), size=(n_actions, hidden))
        self.b2 = np.zeros(n_actions)

    def forward(self, x: np.ndarray) -> np.ndarray:
        _, _, q = self._forward_cached(x)
        return q

    def _forward_cached(self, x: np.ndarray):
        z1 = x @ self.w1.T + self.b1
        h = np.maximum(z1, 0.0)
        q = h @ self.w2.T + self.b2
        return z1, h, q

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def clone(self) -> "QNetwork":
        other = QNetwork.__new__(QNetwork)
        other.n_actions = self.n_actions
        other.lr = self.lr
        other.w1 = self.w1.copy()
        other.b1 = self.b1.copy()
        other.w2 = self.w2.copy()
        other.b2 = self.b2.copy()
        return other


def make_target(net: QNetwork) -> QNetwork:
    """Frozen copy used for bootstrap targets; update it only via sync_target."""
    return net.clone()


def sync_target(net: QNetwork, target: QNetwork) -> None:
    """Copy live parameters into the target in place (bit-identical afterwards)."""
    for name, arr in net.parameters().items():
        target.parameters()[name][...] = arr


def q_values(net: QNetwork, encoder: StateEncoder, state: NodeId) -> np.ndarray:
    """Deterministic forward pass for one state; no side effects."""
    return net.forward(encoder.encode(state)[None, :])[0]


def select_action(net: QNetwork, encoder: StateEncoder, state: NodeId,
                  epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy depth choice in 1..n_actions; greedy ties break to the lowest."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(1, net.n_actions + 1))
    return int(np.argmax(q_values(net, encoder, state))) + 1


def td_loss_and_grads(net: QNetwork, target: QNetwork, batch: list[Transition],
                      gamma: float, encoder: StateEncoder):
    """Summed squared TD error over the batch and its gradients for the live net.

    Targets are r + gamma * max_a Q_target(next state); the target network is
    read-only here (no terminal states: every transition bootstraps).
    """
    x = encoder.encode_many([t.state for t in batch])
    x_next = encoder.encode_many([t.next_state for t in batch])
    rewards = np.array([t.reward for t in batch])
    acts = np.array([t.action - 1 for t in batch])
    z1, h, q = net._forward_cached(x)
    q_next = target.forward(x_next)
    y = rewards + gamma * q_next.max(axis=1)
    rows = np.arange(len(batch))
    err = q[rows, acts] - y
    loss = float(np.sum(err ** 2))
    dq = np.zeros_like(q)
    dq[rows, acts] = 2.0 * err
    dh = dq @ net.w2
    dz1 = dh * (z1 > 0)
    grads = {
        "w2": dq.T @ h,
        "b2": dq.sum(axis=0),
        "w1": dz1.T @ x,
        "b1": dz1.sum(axis=0),
    }
    return loss, grads


def dqn_update(net: QNetwork, target: QNetwork, batch: list[Transition],
               gamma: float, encoder: StateEncoder) -> float:
    """One SGD step on the summed TD loss; returns the pre-update mean squared error.

    The target network is never written. An empty batch is a no-op returning 0.
    """
    if not batch:
        return 0.0
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    loss, grads = td_loss_and_grads(net, target, batch, gamma, encoder)
    params = net.parameters()
    for name, grad in grads.items():
        params[name] -= net.lr * grad
    return loss / len(batch)
