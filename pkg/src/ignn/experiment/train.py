"""Full-batch training with Adam, early stopping on a validation score, and evaluation."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..autodiff import LOG_CLAMP
from ..errors import TrainingError, UndefinedMetricError, UsageError
from ..graph import UNREACHABLE
from ..metrics import MetricsRecord, auc_roc, distance_similarity_kt, empirical_distortion, kendall_tau_b
from ..objective import combined_loss, sample_distance_pairs
from ..models import ModelWeights, build_adjacency, embed, forward, init_weights
from .config import TrainConfig
from .data import STREAM_DIST, STREAM_KT, PreparedData

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, weights: dict[str, np.ndarray]) -> "AdamState":
        return cls({k: np.zeros_like(w) for k, w in weights.items()}, {k: np.zeros_like(w) for k, w in weights.items()})


def adam_step(
    weights: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    t = state.t + 1
    new_w, new_m, new_v = {}, {}, {}
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for k, w in weights.items():
        g = grads[k]
        if g.shape != w.shape:
            raise UsageError(f"gradient for {k!r} has shape {g.shape}, weight has {w.shape}")
        m = beta1 * state.m[k] + (1.0 - beta1) * g
        v = beta2 * state.v[k] + (1.0 - beta2) * g * g
        new_w[k] = w - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        new_m[k], new_v[k] = m, v
    return new_w, AdamState(new_m, new_v, t)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_auc: float
    val_loss: float
    val_kt: float
    distortion: float


@dataclass
class TrainHistory:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    mse_budget: int = 0
    negatives: str = "resampled per epoch"

    @property
    def losses(self) -> list[float]:
        return [e.loss for e in self.epochs]

    @property
    def best(self) -> EpochRecord:
        return self.epochs[self.best_epoch - 1]

    def to_rows(self) -> list[dict]:
        return [vars(e).copy() for e in self.epochs]


def _val_scores(z: np.ndarray, data: PreparedData) -> tuple[float, float]:
    """Validation AUC and mean validation BCE."""
    batch = data.eval_batch("val")
    s = np.einsum("ij,ij->i", z[batch.i], z[batch.j])
    p = 1.0 / (1.0 + np.exp(-s))
    bce = -np.mean(batch.y * np.log(np.maximum(p, LOG_CLAMP)) + (1 - batch.y) * np.log(np.maximum(1 - p, LOG_CLAMP)))
    return auc_roc(s, batch.y), float(bce)


def _safe(fn, *args) -> float:
    try:
        out = fn(*args)
    except UndefinedMetricError:
        return math.nan
    return out[0] if isinstance(out, tuple) else out


def _monitor_pairs(data: PreparedData, budget: int, seed: int):
    """Fixed finite-distance pairs for tracking Kendall's tau during training."""
    pairs = sample_distance_pairs(data.dm_eval, budget, [seed, STREAM_KT])
    keep = pairs.d_g != UNREACHABLE
    return pairs.i[keep], pairs.j[keep], pairs.d_g[keep].astype(np.float64)


def _monitor_kt(z: np.ndarray, pairs) -> float:
    i, j, d = pairs
    return _safe(kendall_tau_b, d, -np.einsum("ij,ij->i", z[i], z[j])) if len(d) >= 2 else math.nan


def _improved(record: "EpochRecord", best: "EpochRecord | None", select_on: str) -> bool:
    if best is None:
        return True
    if select_on == "val_auc":
        return record.val_auc > best.val_auc
    return record.val_loss < best.val_loss


def train(cfg: TrainConfig, data: PreparedData, *, on_epoch=None) -> tuple[ModelWeights, TrainHistory]:
    """Train ``cfg.model`` on ``data``; returns the best-validation weights.

    Each epoch runs one forward/backward pass over the whole graph. The task
    batch uses every training positive and freshly sampled negatives; the
    distance batch is drawn per epoch from the training-graph distances
    (every pair on small graphs). The monitored validation score is
    ``cfg.select_on``: mean task BCE (lower is better) or AUC. Training stops
    once it has not improved for more than ``cfg.patience`` consecutive
    epochs.
    """
    loss_cfg = cfg.effective_loss
    x = data.inputs(cfg.uses_hash, cfg.hash_dim)
    adj = build_adjacency(cfg.model.arch, data.train_graph)
    weights = init_weights(cfg.model, x.shape[1]).params
    state = AdamState.zeros_like(weights)
    budget = loss_cfg.mse_pair_budget or data.default_mse_budget()

    history = TrainHistory(mse_budget=budget if loss_cfg.lambda_mse else 0)
    monitor = _monitor_pairs(data, cfg.kt_monitor_pairs, cfg.seed)
    best, best_weights, stale = None, None, 0
    for epoch in range(1, cfg.max_epochs + 1):
        tape = ad.Tape()
        params = {k: tape.variable(w, name=k) for k, w in weights.items()}
        z = forward(cfg.model, params, adj, x)
        task_batch = data.task_batch(epoch) if loss_cfg.lambda_bce else None
        dist_batch = (
            sample_distance_pairs(data.dm_train, budget, [cfg.seed, STREAM_DIST], epoch)
            if loss_cfg.lambda_mse
            else None
        )
        loss = combined_loss(z, task_batch, dist_batch, loss_cfg)
        loss_value = loss.item()
        if not math.isfinite(loss_value):
            raise TrainingError(f"non-finite loss {loss_value} at epoch {epoch}", epoch=epoch)
        grads = tape.backward(loss).by_name()
        weights, state = adam_step(weights, grads, state, cfg.learning_rate)

        zn, raw = embed(cfg.model, ModelWeights(weights), adj, x)
        val_auc, val_loss = _val_scores(zn, data)
        val_kt = _monitor_kt(zn, monitor)
        alpha = _safe(empirical_distortion, raw, data.dm_eval)
        record = EpochRecord(epoch, loss_value, val_auc, val_loss, val_kt, alpha)
        history.epochs.append(record)
        if on_epoch is not None:
            on_epoch(record)

        if _improved(record, best, cfg.select_on):
            best, best_weights, stale = record, weights, 0
            history.best_epoch = epoch
        else:
            stale += 1
            if stale > cfg.patience:
                break
    log.info(
        "%s/%s trained %d epochs, best epoch %d (val AUC %.4f, val loss %.4f)",
        cfg.model.arch, cfg.variant, len(history.epochs), history.best_epoch, best.val_auc, best.val_loss,
    )
    return ModelWeights({k: v.copy() for k, v in best_weights.items()}), history


def evaluate(
    weights: ModelWeights,
    cfg: TrainConfig,
    data: PreparedData,
    split: str = "test",
    epochs_run: int = 0,
    wall_time: float = 0.0,
) -> MetricsRecord:
    """Test-split AUC, distance/similarity Kendall's tau over all node pairs, and distortion."""
    x = data.inputs(cfg.uses_hash, cfg.hash_dim)
    adj = build_adjacency(cfg.model.arch, data.train_graph)
    z, raw = embed(cfg.model, weights, adj, x)
    batch = data.eval_batch(split)
    auc = auc_roc(np.einsum("ij,ij->i", z[batch.i], z[batch.j]), batch.y)
    tau, p, q, t, u = distance_similarity_kt(z, data.dm_eval, None, [cfg.seed, STREAM_KT])
    try:
        alpha, _ = empirical_distortion(raw, data.dm_eval)
    except UndefinedMetricError:
        alpha = math.inf
    return MetricsRecord(
        auc=auc,
        kendall_tau=tau,
        distortion=alpha if math.isfinite(alpha) else None,
        P=p,
        Q=q,
        T=t,
        U=u,
        dataset=data.dataset.name,
        model=cfg.model.arch,
        variant=cfg.variant,
        task=cfg.task,
        seed=cfg.seed,
        epochs_run=epochs_run,
        wall_time=wall_time,
    )


def run(cfg: TrainConfig, data: PreparedData) -> tuple[ModelWeights, TrainHistory, MetricsRecord]:
    """Train then evaluate on the test split."""
    start = time.perf_counter()
    weights, history = train(cfg, data)
    elapsed = time.perf_counter() - start
    record = evaluate(weights, cfg, data, epochs_run=len(history.epochs), wall_time=elapsed)
    return weights, history, record
