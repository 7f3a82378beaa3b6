"""Evaluation metrics: AUC-ROC, Kendall's tau-b and empirical distortion."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .errors import ParameterError, UndefinedMetricError
from .graph import UNREACHABLE, DistanceMatrix

KT_EXACT_MAX_NODES = 1500
KT_SAMPLED_PAIRS = 1_000_000


@dataclass
class MetricsRecord:
    auc: float
    kendall_tau: float
    distortion: float | None  # None when undefined or infinite
    P: int
    Q: int
    T: int
    U: int
    dataset: str = ""
    model: str = ""
    variant: str = ""
    task: str = ""
    seed: int = 0
    epochs_run: int = 0
    wall_time: float = 0.0

    def __post_init__(self):
        den = (self.P + self.Q + self.T) * (self.P + self.Q + self.U)
        if den > 0 and not math.isclose(self.kendall_tau, (self.P - self.Q) / math.sqrt(den), abs_tol=1e-12):
            raise ParameterError("kendall_tau is inconsistent with the pair counts")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsRecord":
        return cls(**d)


def auc_roc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ParameterError("scores and labels must be 1-D and equally long")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)  # average ranks for ties
    # rank sums are exact in float64 (multiples of 1/2) for any realistic size
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _tied_pairs(*cols: np.ndarray) -> int:
    _, counts = np.unique(np.stack(cols, axis=1), axis=0, return_counts=True)
    counts = counts.astype(np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def _strict_inversions(b: np.ndarray) -> int:
    """Number of ``i < j`` with ``b[i] > b[j]``.

    Bottom-up merge counting, vectorised per level: at width ``w`` every
    element in a right half counts the elements of its left half that are
    strictly larger, found with one global ``searchsorted`` over
    block-offset keys.
    """
    n = len(b)
    r = rankdata(b, method="dense").astype(np.int64)  # 1..n_distinct
    span = int(r.max()) + 2
    idx = np.arange(n)
    total = 0
    w = 1
    while w < n:
        block = idx // (2 * w)
        is_left = (idx % (2 * w)) < w
        left_keys = np.sort(block[is_left] * span + r[is_left])
        rb, rr = block[~is_left], r[~is_left]
        hi = np.searchsorted(left_keys, rb * span + span - 1, side="right")
        lo = np.searchsorted(left_keys, rb * span + rr, side="right")
        total += int(np.sum(hi - lo))
        w *= 2
    return total


def kendall_tau_b(a, b) -> tuple[float, int, int, int, int]:
    """Tie-adjusted Kendall rank correlation.

    Returns ``(tau, P, Q, T, U)`` where ``P``/``Q`` count concordant and
    discordant pairs and ``T``/``U`` count pairs tied only in ``a``/only in
    ``b``. Runs in ``O(n log^2 n)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("kendall_tau_b needs two 1-D sequences of equal length")
    n = len(a)
    if n < 2:
        raise ParameterError("kendall_tau_b needs at least two observations")
    n0 = n * (n - 1) // 2
    ties_a = _tied_pairs(a)
    ties_b = _tied_pairs(b)
    ties_ab = _tied_pairs(a, b)
    order = np.lexsort((b, a))
    q = _strict_inversions(b[order])
    t = ties_a - ties_ab
    u = ties_b - ties_ab
    p = n0 - ties_a - ties_b + ties_ab - q
    den = (p + q + t) * (p + q + u)
    if den == 0:
        raise UndefinedMetricError("Kendall's tau-b is undefined: one sequence is constant")
    return (p - q) / math.sqrt(den), p, q, t, u


def _eval_pairs(dm: DistanceMatrix, budget: int | None, seed: int) -> tuple[np.ndarray, np.ndarray]:
    n = dm.n
    if budget is None:
        budget = n * (n - 1) // 2 if n <= KT_EXACT_MAX_NODES else KT_SAMPLED_PAIRS
    total = n * (n - 1) // 2
    if budget >= total:
        i, j = np.triu_indices(n, 1)
    else:
        rng = np.random.default_rng(seed)
        keys = rng.choice(total, size=budget, replace=False)
        i, j = _triu_from_linear(keys, n)
    return i, j


def _triu_from_linear(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # row r starts at offset r*n - r*(r+1)/2 in the flattened strict upper triangle
    k = np.asarray(k, dtype=np.int64)
    r = np.arange(n, dtype=np.int64)
    starts = r * n - r * (r + 1) // 2
    i = np.searchsorted(starts, k, side="right") - 1
    j = k - starts[i] + i + 1
    return i, j


def distance_similarity_kt(
    z: np.ndarray, dm: DistanceMatrix, pair_budget: int | None = None, seed: int = 0
) -> tuple[float, int, int, int, int]:
    """Kendall's tau-b between graph distance and negated cosine similarity.

    Only pairs with a finite distance take part. A perfect distance-preserving
    embedding (similarity strictly decreasing in distance) scores 1.
    """
    z = np.asarray(z, dtype=np.float64)
    i, j = _eval_pairs(dm, pair_budget, seed)
    d = dm.lookup(i, j)
    keep = d != UNREACHABLE
    i, j, d = i[keep], j[keep], d[keep]
    if len(d) < 2:
        raise UndefinedMetricError("fewer than two finite-distance pairs")
    cos = np.einsum("ij,ij->i", z[i], z[j])
    return kendall_tau_b(d.astype(np.float64), -cos)


def empirical_distortion(z: np.ndarray, dm: DistanceMatrix) -> tuple[float, float]:
    """``(alpha, r)`` with ``r = min rho`` and ``alpha = max rho / min rho``.

    ``rho = |z_i - z_j| / d_G(i, j)`` over all pairs at finite positive graph
    distance. If some such pair has coincident embeddings, ``alpha`` is
    ``inf`` and ``r`` is 0.
    """
    z = np.asarray(z, dtype=np.float64)
    n = dm.n
    lo, hi = math.inf, 0.0
    found = False
    rows = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        d = dm[start:stop].astype(np.float64)
        e = cdist(z[start:stop], z)
        # strict upper triangle only
        mask = (np.arange(n)[None, :] > np.arange(start, stop)[:, None]) & (d > 0)
        if not mask.any():
            continue
        found = True
        rho = e[mask] / d[mask]
        lo = min(lo, float(rho.min()))
        hi = max(hi, float(rho.max()))
    if not found:
        raise UndefinedMetricError("no node pairs at finite positive distance")
    if lo == 0.0:
        return math.inf, 0.0
    return max(1.0, hi / lo), lo
