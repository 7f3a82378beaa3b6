"""Graph neural network embeddings that keep track of graph distances.

Graph utilities, hash-vector node features, a small reverse-mode autodiff
engine, GCN/SAGE/GIN encoders, the combined task + distance objective,
evaluation metrics and an experiment harness, all on numpy and scipy.
"""

from .errors import (
    ConfigError,
    DataError,
    IGNNError,
    ParameterError,
    TrainingError,
    UndefinedMetricError,
    UsageError,
)
from .graph import UNREACHABLE, DistanceMatrix, Graph, PairBatch, Partition, bfs_apsp, generate_communities
from .hashfeat import HashConfig, augment_features, hash_matrix, hash_vector, murmur3_32
from .metrics import MetricsRecord, auc_roc, distance_similarity_kt, empirical_distortion, kendall_tau_b
from .models import ModelConfig, ModelWeights, embed, forward, init_weights
from .objective import LossConfig, bce_loss, combined_loss, mse_distance_loss

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "IGNNError",
    "ParameterError",
    "TrainingError",
    "UndefinedMetricError",
    "UsageError",
    "UNREACHABLE",
    "DistanceMatrix",
    "Graph",
    "PairBatch",
    "Partition",
    "bfs_apsp",
    "generate_communities",
    "HashConfig",
    "augment_features",
    "hash_matrix",
    "hash_vector",
    "murmur3_32",
    "MetricsRecord",
    "auc_roc",
    "distance_similarity_kt",
    "empirical_distortion",
    "kendall_tau_b",
    "ModelConfig",
    "ModelWeights",
    "embed",
    "forward",
    "init_weights",
    "LossConfig",
    "bce_loss",
    "combined_loss",
    "mse_distance_loss",
]
