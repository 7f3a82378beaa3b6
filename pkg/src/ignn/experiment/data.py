"""Dataset preparation: splits, fixed evaluation pairs and per-epoch pair streams."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..graph import (
    DistanceMatrix,
    Graph,
    PairBatch,
    Partition,
    bfs_apsp,
    community_pairs,
    generate_communities,
    load_edge_list,
    load_features,
    load_labels,
    make_pair_batch,
    sample_cross_community_pairs,
    sample_negative_pairs,
    split_edges,
)
from ..hashfeat import augment_features
from .config import DataConfig

log = logging.getLogger(__name__)

# independent random streams, keyed together with the run seed and epoch
STREAM_SPLIT = 1
STREAM_EVAL_NEG = 2
STREAM_TRAIN_NEG = 3
STREAM_DIST = 4
STREAM_KT = 5


@dataclass
class Dataset:
    name: str
    graph: Graph
    partition: Partition | None = None
    features: np.ndarray | None = None


def load_dataset(cfg: DataConfig) -> Dataset:
    """Generate Communities or read ``edges.txt`` / ``labels.txt`` / ``features.csv`` from ``data_dir``."""
    if cfg.data_dir is not None:
        return load_dataset_dir(cfg.data_dir, name=cfg.dataset)
    if cfg.dataset != "communities":
        raise ConfigError(f"dataset {cfg.dataset!r} needs data.data_dir")
    g, part = generate_communities(cfg.num_cliques, cfg.clique_size, cfg.inter_prob, cfg.seed)
    return Dataset("communities", g, part)


def load_dataset_dir(path: str | Path, name: str | None = None) -> Dataset:
    path = Path(path)
    g = load_edge_list(path / "edges.txt")
    part = load_labels(path / "labels.txt", g.num_nodes) if (path / "labels.txt").exists() else None
    if part is not None and len(part) != g.num_nodes:
        raise ConfigError("labels do not cover the graph")
    x = load_features(path / "features.csv", g.num_nodes) if (path / "features.csv").exists() else None
    return Dataset(name or path.name, g, part, x)


@dataclass
class PreparedData:
    """Everything one training run needs, fixed for a (dataset, task, split seed)."""

    dataset: Dataset
    task: str
    seed: int
    train_graph: Graph
    dm_train: DistanceMatrix
    dm_eval: DistanceMatrix
    train_pos: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    negative_ratio: float = 1.0
    _inputs: dict = field(default_factory=dict, repr=False)

    @property
    def num_nodes(self) -> int:
        return self.dataset.graph.num_nodes

    def base_features(self) -> np.ndarray:
        if self.dataset.features is not None:
            return self.dataset.features
        return np.eye(self.num_nodes)

    def inputs(self, use_hash: bool, hash_dim: int | None = None) -> np.ndarray:
        """Input features, optionally extended by hash columns.

        ``hash_dim=None`` uses as many hash columns as there are input features.
        """
        base = self.base_features()
        if not use_hash:
            return base
        n = hash_dim or base.shape[1]
        if n not in self._inputs:
            self._inputs[n] = augment_features(base, n, [str(i) for i in range(self.num_nodes)])
        return self._inputs[n]

    def _eval_exclude(self) -> np.ndarray:
        return np.concatenate([self.val_neg, self.test_neg])

    def task_batch(self, epoch: int) -> PairBatch:
        """Training pairs for ``epoch``: all training positives plus freshly drawn negatives."""
        count = int(round(self.negative_ratio * len(self.train_pos)))
        seed = [self.seed, STREAM_TRAIN_NEG, epoch]
        if self.task == "link":
            neg = sample_negative_pairs(self.dataset.graph, count, seed, exclude=self._eval_exclude())
        else:
            neg = sample_cross_community_pairs(self.dataset.partition, count, seed, exclude=self._eval_exclude())
        return make_pair_batch(self.task, self.train_pos, neg, self.dm_train, self.dataset.partition)

    def eval_batch(self, split: str) -> PairBatch:
        pos, neg = (self.val_pos, self.val_neg) if split == "val" else (self.test_pos, self.test_neg)
        return make_pair_batch(self.task, pos, neg, self.dm_eval, self.dataset.partition)

    def default_mse_budget(self) -> int:
        n = self.num_nodes
        if n <= 500:
            return n * (n - 1) // 2
        return 4 * self.train_graph.num_edges


def prepare(
    dataset: Dataset,
    task: str,
    seed: int,
    train_frac: float = 0.8,
    val_frac: float = 0.1,
    negative_ratio: float = 1.0,
) -> PreparedData:
    g = dataset.graph
    dm_full = bfs_apsp(g)
    if task == "link":
        train_graph, val_pos, test_pos = split_edges(g, train_frac, val_frac, [seed, STREAM_SPLIT])
        dm_train = bfs_apsp(train_graph)
        train_pos = train_graph.edges
        n_eval = len(val_pos) + len(test_pos)
        neg = sample_negative_pairs(g, n_eval, [seed, STREAM_EVAL_NEG])
    elif task == "pairwise":
        if dataset.partition is None:
            raise ConfigError("pairwise task needs node labels")
        same = community_pairs(dataset.partition)
        rng = np.random.default_rng([seed, STREAM_SPLIT])
        same = same[rng.permutation(len(same))]
        n_train = int(round(train_frac * len(same)))
        n_val = int(round(val_frac * len(same)))
        train_pos, val_pos, test_pos = same[:n_train], same[n_train : n_train + n_val], same[n_train + n_val :]
        # community labels are the target here, so all edges stay available to message passing
        train_graph, dm_train = g, dm_full
        n_eval = len(val_pos) + len(test_pos)
        neg = sample_cross_community_pairs(dataset.partition, n_eval, [seed, STREAM_EVAL_NEG])
    else:
        raise ConfigError(f"unknown task {task!r}")
    return PreparedData(
        dataset=dataset,
        task=task,
        seed=seed,
        train_graph=train_graph,
        dm_train=dm_train,
        dm_eval=dm_full,
        train_pos=np.asarray(train_pos),
        val_pos=val_pos,
        val_neg=neg[: len(val_pos)],
        test_pos=test_pos,
        test_neg=neg[len(val_pos) :],
        negative_ratio=negative_ratio,
    )


