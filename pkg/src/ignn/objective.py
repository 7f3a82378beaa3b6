"""Task loss, graph-distance loss and their weighted combination.

Both losses are sums over node pairs. The distance loss maps hop count ``d``
to a target ``1 - 1/d**alpha`` for the rescaled dissimilarity
``(1 - <z_i, z_j>) / 2``; unreachable pairs get target 1, i.e. antipodal
embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ParameterError, UsageError
from .graph import UNREACHABLE, DistanceMatrix, PairBatch


@dataclass(frozen=True)
class LossConfig:
    lambda_bce: float = 1.0
    lambda_mse: float = 0.0
    alpha: float = 1.0
    mse_pair_budget: int | None = None  # None: 4 x |train edges|, or every pair when N <= 500

    def __post_init__(self):
        if self.lambda_bce < 0 or self.lambda_mse < 0:
            raise ParameterError("loss weights must be non-negative")
        if self.lambda_bce == 0 and self.lambda_mse == 0:
            raise ParameterError("lambda_bce and lambda_mse cannot both be zero")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.mse_pair_budget is not None and self.mse_pair_budget < 1:
            raise ParameterError("mse_pair_budget must be >= 1")


def distance_target(d_g: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """``1 - 1/d**alpha`` with unreachable pairs mapped to 1."""
    d = np.asarray(d_g, dtype=np.float64)
    if np.any(d == 0):
        raise UsageError("distance loss is undefined for pairs at distance 0 (i == j)")
    inv = np.where(d == UNREACHABLE, 0.0, np.abs(d) ** -alpha)
    return 1.0 - inv


def bce_loss(z: ad.Tensor, batch: PairBatch) -> ad.Tensor:
    """Summed binary cross-entropy of ``sigmoid(<z_i, z_j>)`` against ``batch.y``."""
    if len(batch) == 0:
        raise ParameterError("empty pair batch")
    y = np.asarray(batch.y, dtype=np.float64)[:, None]
    p = ad.sigmoid(ad.row_pair_inner(z, batch.i, batch.j))
    log_p = ad.log(p)
    log_q = ad.log(ad.shift(ad.scale(p, -1.0), 1.0))
    ll = ad.add(ad.hadamard(log_p, ad.Tensor(y)), ad.hadamard(log_q, ad.Tensor(1.0 - y)))
    return ad.scale(ad.total(ll), -1.0)


def mse_distance_loss(z: ad.Tensor, batch: PairBatch, alpha: float = 1.0) -> ad.Tensor:
    if len(batch) == 0:
        raise ParameterError("empty pair batch")
    target = distance_target(batch.d_g, alpha)[:, None]
    s = ad.row_pair_inner(z, batch.i, batch.j)
    # (1 - s)/2 - target
    resid = ad.shift(ad.scale(s, -0.5), 0.5)
    resid = ad.sub(resid, ad.Tensor(target))
    return ad.total(ad.square(resid))


def combined_loss(
    z: ad.Tensor, batch_task: PairBatch | None, batch_dist: PairBatch | None, cfg: LossConfig
) -> ad.Tensor:
    """``lambda_bce * L_bce + lambda_mse * L_mse``; a zero-weighted term is not built at all."""
    terms = []
    if cfg.lambda_bce != 0:
        if batch_task is None:
            raise ParameterError("lambda_bce > 0 needs a task batch")
        terms.append(ad.scale(bce_loss(z, batch_task), cfg.lambda_bce))
    if cfg.lambda_mse != 0:
        if batch_dist is None:
            raise ParameterError("lambda_mse > 0 needs a distance batch")
        terms.append(ad.scale(mse_distance_loss(z, batch_dist, cfg.alpha), cfg.lambda_mse))
    return terms[0] if len(terms) == 1 else ad.add(terms[0], terms[1])


def sample_distance_pairs(dm: DistanceMatrix, budget: int, seed, epoch: int = 0) -> PairBatch:
    """Uniform unordered pairs ``i != j`` with their hop counts.

    Returns every pair (in ``triu`` order) when ``budget >= N(N-1)/2``;
    otherwise draws ``budget`` distinct pairs from a stream keyed by
    ``(seed, epoch)``; ``seed`` may be an int or a sequence of ints.
    """
    if budget < 1:
        raise ParameterError("pair budget must be >= 1")
    n = dm.n
    total = n * (n - 1) // 2
    if total == 0:
        raise ParameterError("need at least two nodes")
    if budget >= total:
        i, j = np.triu_indices(n, 1)
    else:
        rng = np.random.default_rng([*np.atleast_1d(seed).tolist(), epoch])
        keys = _sample_triu_keys(n, budget, rng)
        i, j = keys // n, keys % n
    d = dm.lookup(i, j).astype(np.int64)
    return PairBatch(i.astype(np.int64), j.astype(np.int64), np.zeros(len(i), np.int64), d)


def _sample_triu_keys(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(0, dtype=np.int64)
    while len(out) < count:
        m = 2 * (count - len(out)) + 16
        a = rng.integers(0, n, size=m)
        b = rng.integers(0, n, size=m)
        ok = a != b
        keys = np.minimum(a, b)[ok] * n + np.maximum(a, b)[ok]
        keys = keys[~np.isin(keys, out)]
        _, first = np.unique(keys, return_index=True)
        out = np.concatenate([out, keys[np.sort(first)][: count - len(out)]])
    return out
