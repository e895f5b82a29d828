"""Adaptive per-node aggregation depth for graph recommenders via dual Q-learning."""

from .dqn import (EncoderMode, QNetwork, ReplayMemory, StateEncoder, Transition,
                  dqn_update, make_target, q_values, select_action, sync_target)
from .env import (EvidenceGap, RewardContext, RewardCounters, TupleList,
                  build_reward_context, next_state, reward)
from .evaluation import (ActionAssignment, RankingResult, SparsityGroups,
                         action_distribution_report, evaluate,
                         reward_curve_export, sparsity_report)
from .gnn import (EmbeddingTable, GnnParams, PoolingMode, PoolingSpec,
                  bpr_gradients, bpr_step, pool, pooled_by_action, propagate,
                  score)
from .graph import (CoreFilterError, DataSplit, Graph, InteractionSet, KgData,
                    KgTriple, Kind, LineFormatError, NodeId, khop_subgraph,
                    load_interactions, load_kg, read_interaction_file, split,
                    write_interaction_file)
from .training import (AdaptiveTrainer, EpochStats, TrainConfig, TrainResult,
                       baseline_fixed_depth, epsilon, greedy_assignment,
                       restore_checkpoint, train, train_fixed_depth)

__version__ = "0.1.0"
