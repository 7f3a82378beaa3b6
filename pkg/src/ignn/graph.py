"""Graphs, shortest-path distances, data loading and pair preparation.

Nodes are integers ``0 .. N-1``. Graphs are undirected and simple; edges are
kept canonically as ``(u, v)`` with ``u < v`` and adjacency is held in
compressed row form.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DataError, ParameterError

log = logging.getLogger(__name__)

UNREACHABLE = -1



def _as_pairs(pairs) -> np.ndarray:
    if pairs is None:
        return np.empty((0, 2), dtype=np.int64)
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError(f"expected an array of node pairs, got shape {arr.shape}")
    return arr


def _canonical(pairs: np.ndarray) -> np.ndarray:
    return np.sort(pairs, axis=1)


def pair_keys(pairs: np.ndarray, n: int) -> np.ndarray:
    """Encode unordered pairs as ``min * n + max`` integers."""
    pairs = _canonical(_as_pairs(pairs))
    return pairs[:, 0] * n + pairs[:, 1]


class Graph:
    """Immutable undirected simple graph in CSR form."""

    __slots__ = ("num_nodes", "edges", "indptr", "indices")

    def __init__(self, num_nodes: int, edges=None):
        if num_nodes < 0:
            raise ParameterError("num_nodes must be non-negative")
        e = _as_pairs(edges)
        if len(e):
            if e.min() < 0 or e.max() >= num_nodes:
                raise DataError(f"edge endpoint outside [0, {num_nodes})")
            if np.any(e[:, 0] == e[:, 1]):
                raise DataError("self-loops are not allowed")
            e = np.unique(_canonical(e), axis=0)
        self.num_nodes = int(num_nodes)
        self.edges = e
        self.edges.setflags(write=False)

        both = np.concatenate([e, e[:, ::-1]]) if len(e) else e
        order = np.lexsort((both[:, 1], both[:, 0])) if len(e) else np.empty(0, dtype=np.int64)
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=num_nodes) if len(e) else np.zeros(num_nodes, np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.indices = both[:, 1].astype(np.int64) if len(e) else np.empty(0, dtype=np.int64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def edge_keys(self) -> np.ndarray:
        """Sorted ``u * N + v`` keys of all edges."""
        return self.edges[:, 0] * self.num_nodes + self.edges[:, 1]

    def adjacency_matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices))
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.num_nodes, self.num_nodes))

    def relabel(self, perm: np.ndarray) -> "Graph":
        """Return the graph with node ``u`` renamed to ``perm[u]``."""
        perm = np.asarray(perm)
        return Graph(self.num_nodes, perm[self.edges] if len(self.edges) else None)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.num_nodes == other.num_nodes
            and np.array_equal(self.edges, other.edges)
        )

    def __repr__(self) -> str:
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


class DistanceMatrix:
    """All-pairs hop counts; ``UNREACHABLE`` marks disconnected pairs."""

    __slots__ = ("dist",)

    def __init__(self, dist: np.ndarray):
        dist = np.asarray(dist, dtype=np.int32)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ParameterError("distance table must be square")
        self.dist = dist
        self.dist.setflags(write=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __getitem__(self, idx):
        return self.dist[idx]

    def lookup(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return self.dist[np.asarray(i), np.asarray(j)]


@dataclass(frozen=True, eq=False)
class Partition:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ParameterError("partition labels must be one-dimensional")
        if len(labels) and labels.min() < 0:
            raise DataError("community ids must be non-negative")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def num_communities(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def same(self, i, j) -> np.ndarray:
        return self.labels[np.asarray(i)] == self.labels[np.asarray(j)]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class PairBatch:
    """Node pairs with task labels ``y`` and graph distances ``d_g``."""

    i: np.ndarray
    j: np.ndarray
    y: np.ndarray
    d_g: np.ndarray

    def __post_init__(self):
        if not (len(self.i) == len(self.j) == len(self.y) == len(self.d_g)):
            raise ParameterError("pair batch fields have different lengths")
        if np.any(np.asarray(self.i) == np.asarray(self.j)):
            raise ParameterError("pair batch contains i == j")

    def __len__(self) -> int:
        return len(self.i)

    def pairs(self) -> np.ndarray:
        return np.stack([self.i, self.j], axis=1)

    def as_tuples(self) -> list[tuple[int, int, int, int]]:
        return [tuple(int(v) for v in row) for row in zip(self.i, self.j, self.y, self.d_g)]


# ---------------------------------------------------------------------------
# generation and loading


def generate_communities(
    num_cliques: int, clique_size: int, inter_prob: float, seed: int
) -> tuple[Graph, Partition]:
    """Ring of cliques with random extra inter-clique edges.

    Clique ``c`` owns nodes ``c*clique_size .. (c+1)*clique_size - 1``. Node 0 of
    each clique is bridged to node 0 of the next clique around the ring. Then,
    independently for every unordered clique pair, one extra edge between
    uniformly chosen members is added with probability ``inter_prob``.
    """
    if num_cliques < 2 or clique_size < 2:
        raise ParameterError("need at least 2 cliques of size at least 2")
    if not 0.0 <= inter_prob <= 1.0:
        raise ParameterError(f"inter_prob must lie in [0, 1], got {inter_prob}")
    k = clique_size
    rng = np.random.default_rng(seed)

    a, b = np.triu_indices(k, 1)
    intra = np.concatenate([np.stack([a + c * k, b + c * k], axis=1) for c in range(num_cliques)])
    cs = np.arange(num_cliques)
    ring = np.stack([cs * k, ((cs + 1) % num_cliques) * k], axis=1)

    extra = []
    for c1 in range(num_cliques):
        for c2 in range(c1 + 1, num_cliques):
            if rng.random() < inter_prob:
                u, v = rng.integers(0, k, size=2)
                extra.append((c1 * k + u, c2 * k + v))
    parts = [intra, ring]
    if extra:
        parts.append(np.asarray(extra, dtype=np.int64))
    g = Graph(num_cliques * k, np.concatenate(parts))
    return g, Partition(np.repeat(np.arange(num_cliques), k))


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _int_pair(line: str, lineno: int, path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise DataError(f"{path}:{lineno}: expected two integers, got {line!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise DataError(f"{path}:{lineno}: expected two integers, got {line!r}") from None
    if a < 0 or b < 0:
        raise DataError(f"{path}:{lineno}: negative id")
    return a, b


def load_edge_list(path: str | Path, num_nodes: int | None = None) -> Graph:
    """Read a whitespace separated ``u v`` edge list (``#`` starts a comment)."""
    edges = []
    for lineno, line in _data_lines(path):
        u, v = _int_pair(line, lineno, path)
        if u == v:
            raise DataError(f"{path}:{lineno}: self-loop on node {u}")
        edges.append((u, v))
    n = 1 + max(max(e) for e in edges) if edges else 0
    if num_nodes is not None:
        if num_nodes < n:
            raise DataError(f"{path}: node id {n - 1} exceeds num_nodes={num_nodes}")
        n = num_nodes
    return Graph(n, edges)


def load_labels(path: str | Path, num_nodes: int) -> Partition:
    labels = np.full(num_nodes, -1, dtype=np.int64)
    for lineno, line in _data_lines(path):
        node, lab = _int_pair(line, lineno, path)
        if node >= num_nodes:
            raise DataError(f"{path}:{lineno}: node {node} not in graph of {num_nodes} nodes")
        if labels[node] != -1:
            raise DataError(f"{path}:{lineno}: duplicate label for node {node}")
        labels[node] = lab
    missing = np.flatnonzero(labels < 0)
    if len(missing):
        raise DataError(f"{path}: no label for node(s) {missing[:10].tolist()}")
    return Partition(labels)


def load_features(path: str | Path, n: int) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value") from None
            if len(rows[-1]) != len(rows[0]):
                raise DataError(f"{path}:{lineno}: ragged row ({len(rows[-1])} != {len(rows[0])} columns)")
    if not rows:
        raise DataError(f"{path}: empty feature file")
    if len(rows) != n:
        raise DataError(f"{path}: {len(rows)} feature rows for {n} nodes")
    return np.asarray(rows, dtype=np.float64)


def write_edge_list(g: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {g.num_nodes} nodes, {g.num_edges} edges\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def write_labels(p: Partition, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for node, lab in enumerate(p.labels):
            fh.write(f"{node} {lab}\n")


# ---------------------------------------------------------------------------
# distances


def bfs_apsp(g: Graph) -> DistanceMatrix:
    """Exact hop counts from every source.

    Runs a level-synchronous breadth-first search for all sources at once:
    row ``s`` of the frontier matrix is the BFS frontier of source ``s``.
    """
    n = g.num_nodes
    dist = np.full((n, n), UNREACHABLE, dtype=np.int32)
    if n == 0:
        return DistanceMatrix(dist)
    adj = g.adjacency_matrix()
    np.fill_diagonal(dist, 0)
    frontier = np.eye(n, dtype=np.float64)
    visited = np.eye(n, dtype=bool)
    level = 0
    while True:
        level += 1
        # adj is symmetric, so (frontier @ adj) == (adj @ frontier.T).T
        reached = (adj @ frontier.T).T > 0
        reached &= ~visited
        if not reached.any():
            break
        dist[reached] = level
        visited |= reached
        frontier = reached.astype(np.float64)
    return DistanceMatrix(dist)


# ---------------------------------------------------------------------------
# splits and sampling


def split_edges(
    g: Graph, train_frac: float = 0.8, val_frac: float = 0.1, seed: int = 0
) -> tuple[Graph, np.ndarray, np.ndarray]:
    """Shuffle edges and cut them into train / validation / test prefixes."""
    if not (train_frac > 0 and val_frac > 0 and train_frac + val_frac < 1):
        raise ParameterError(
            f"need train_frac > 0, val_frac > 0 and train_frac + val_frac < 1 (got {train_frac}, {val_frac})"
        )
    rng = np.random.default_rng(seed)
    e = g.edges[rng.permutation(g.num_edges)]
    n_train = int(round(train_frac * len(e)))
    n_val = int(round(val_frac * len(e)))
    train = Graph(g.num_nodes, e[:n_train])
    isolated = int(np.sum(train.degrees == 0))
    if isolated:
        log.info("edge split left %d isolated node(s) in the training graph", isolated)
    return train, e[n_train : n_train + n_val].copy(), e[n_train + n_val :].copy()


def _sample_pairs(
    n: int,
    count: int,
    rng: np.random.Generator,
    forbidden_keys: np.ndarray,
    accept: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Rejection-sample ``count`` distinct unordered pairs, in draw order."""
    forbidden_keys = np.unique(forbidden_keys)
    out = np.empty(0, dtype=np.int64)
    while len(out) < count:
        need = count - len(out)
        m = max(64, 2 * need)
        i = rng.integers(0, n, size=m)
        j = rng.integers(0, n, size=m)
        keep = i != j
        lo, hi = np.minimum(i, j)[keep], np.maximum(i, j)[keep]
        if accept is not None:
            ok = accept(lo, hi)
            lo, hi = lo[ok], hi[ok]
        keys = lo * n + hi
        keys = keys[~np.isin(keys, forbidden_keys)]
        keys = keys[~np.isin(keys, out)]
        _, first = np.unique(keys, return_index=True)
        out = np.concatenate([out, keys[np.sort(first)][:need]])
    return np.stack([out // n, out % n], axis=1)


def sample_negative_pairs(g: Graph, count: int, seed, exclude=None) -> np.ndarray:
    """Uniform non-edges of ``g`` that are also absent from ``exclude``."""
    n = g.num_nodes
    excl = np.unique(pair_keys(exclude, n)) if exclude is not None else np.empty(0, np.int64)
    forbidden = np.union1d(g.edge_keys(), excl)
    available = n * (n - 1) // 2 - len(forbidden)
    if count < 0 or count > available:
        raise ParameterError(f"cannot sample {count} negative pairs; only {available} available")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    rng = np.random.default_rng(seed)
    if count > available // 2:
        # dense regime: enumerate and choose without replacement
        iu, ju = np.triu_indices(n, 1)
        keys = iu * n + ju
        keys = keys[~np.isin(keys, forbidden)]
        keys = keys[rng.permutation(len(keys))[:count]]
        return np.stack([keys // n, keys % n], axis=1)
    return _sample_pairs(n, count, rng, forbidden)


def community_pairs(partition: Partition) -> np.ndarray:
    """All unordered same-community pairs."""
    labels = partition.labels
    out = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        a, b = np.triu_indices(len(members), 1)
        out.append(np.stack([members[a], members[b]], axis=1))
    return np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)


def sample_cross_community_pairs(partition: Partition, count: int, seed, exclude=None) -> np.ndarray:
    """Uniform pairs whose endpoints lie in different communities."""
    labels = partition.labels
    n = len(labels)
    sizes = np.bincount(labels)
    cross = (n * n - int(np.sum(sizes.astype(np.int64) ** 2))) // 2
    excl = np.unique(pair_keys(exclude, n)) if exclude is not None else np.empty(0, np.int64)
    if len(excl):
        lo, hi = excl // n, excl % n
        excl = excl[labels[lo] != labels[hi]]
    available = cross - len(excl)
    if count < 0 or count > available:
        raise ParameterError(f"cannot sample {count} cross-community pairs; only {available} available")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    rng = np.random.default_rng(seed)
    return _sample_pairs(n, count, rng, excl, accept=lambda a, b: labels[a] != labels[b])


def make_pair_batch(
    task: str,
    positives,
    negatives,
    dm: DistanceMatrix,
    partition: Partition | None = None,
) -> PairBatch:
    """Label pairs for ``task`` ("link" or "pairwise") and attach graph distances."""
    pos, neg = _as_pairs(positives), _as_pairs(negatives)
    pairs = np.concatenate([pos, neg])
    if task == "link":
        y = np.concatenate([np.ones(len(pos), np.int64), np.zeros(len(neg), np.int64)])
    elif task == "pairwise":
        if partition is None:
            raise ParameterError("pairwise task requires a partition")
        y = partition.same(pairs[:, 0], pairs[:, 1]).astype(np.int64)
        if not (y[: len(pos)].all() and not y[len(pos) :].any()):
            raise ParameterError("pairwise positives must be same-community and negatives cross-community")
    else:
        raise ParameterError(f"unknown task {task!r}")
    d_g = dm.lookup(pairs[:, 0], pairs[:, 1]).astype(np.int64)
    return PairBatch(pairs[:, 0].copy(), pairs[:, 1].copy(), y, d_g)

