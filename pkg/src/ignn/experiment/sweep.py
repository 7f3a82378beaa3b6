"""Hyperparameter grids, per-cell result files and the four-variant summary."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from ..errors import ConfigError, IGNNError
from ..metrics import MetricsRecord
from .config import VARIANTS, DataConfig, TrainConfig, _read_ini, apply_overrides, config_from_parser, normalize_key
from .data import Dataset, PreparedData, load_dataset, prepare
from .train import run

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "dataset",
    "task",
    "model",
    "variant",
    "lr",
    "lambda_bce",
    "lambda_mse",
    "seed",
    "auc",
    "kendall_tau",
    "distortion",
    "epochs_run",
    "wall_time_s",
)
DEFAULT_SEEDS = (0, 1, 2)
SEED_AXES = ("seed", "seeds", "train.seed")


@dataclass
class CellResult:
    """One finished grid cell: the config it ran, its test record and the selected validation scores."""

    key: str
    config: TrainConfig
    record: MetricsRecord
    val_auc: float
    val_loss: float
    best_epoch: int

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "config": self.config.to_dict(),
            "metrics": self.record.to_dict(),
            "val_auc": self.val_auc,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CellResult":
        return cls(
            d["key"],
            TrainConfig.from_dict(d["config"]),
            MetricsRecord.from_dict(d["metrics"]),
            d["val_auc"],
            d["val_loss"],
            d["best_epoch"],
        )

    def csv_row(self) -> dict:
        r, c = self.record, self.config
        return {
            "dataset": r.dataset,
            "task": r.task,
            "model": r.model,
            "variant": r.variant,
            "lr": c.learning_rate,
            "lambda_bce": c.effective_loss.lambda_bce,
            "lambda_mse": c.effective_loss.lambda_mse,
            "seed": r.seed,
            "auc": r.auc,
            "kendall_tau": r.kendall_tau,
            "distortion": "" if r.distortion is None else r.distortion,
            "epochs_run": r.epochs_run,
            "wall_time_s": r.wall_time,
        }


@dataclass
class SweepResult:
    cells: list[CellResult]
    best: dict[tuple[str, str], dict] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)


def cell_key(cfg: TrainConfig) -> str:
    """Stable identifier of a cell; the output directory does not take part."""
    d = cfg.to_dict()
    d.pop("out_dir", None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(blob).hexdigest()[:16]


def expand_grid(base: TrainConfig, axes: dict[str, list], seeds=DEFAULT_SEEDS) -> tuple[list[TrainConfig], list[dict]]:
    """Cartesian product of ``axes`` (``section.key -> values``) times ``seeds``.

    Returns the valid configs in grid order and the rejected cells with their reasons.
    """
    seeds = list(seeds)
    if not seeds or any(len(v) == 0 for v in axes.values()):
        raise ConfigError("empty sweep grid")
    names = list(axes)
    out, skipped = [], []
    for combo in itertools.product(*(axes[n] for n in names)):
        settings = dict(zip(names, combo))
        for seed in seeds:
            try:
                cfg = apply_overrides(base, settings).with_seed(int(seed))
            except IGNNError as exc:
                log.warning("skipping invalid cell %s seed=%s: %s", settings, seed, exc)
                skipped.append({**settings, "seed": seed, "reason": str(exc)})
                continue
            out.append(cfg)
    if not out:
        raise ConfigError("sweep grid has no valid cell")
    return out, skipped


@lru_cache(maxsize=4)
def _dataset(data_cfg: DataConfig) -> Dataset:
    return load_dataset(data_cfg)


@lru_cache(maxsize=16)
def _prepared(data_cfg: DataConfig, task: str, seed: int, train_frac: float, val_frac: float, ratio: float) -> PreparedData:
    return prepare(_dataset(data_cfg), task, seed, train_frac, val_frac, ratio)


def prepared_for(cfg: TrainConfig) -> PreparedData:
    """Data bundle for ``cfg``, shared between cells with the same data and split settings."""
    return _prepared(cfg.data, cfg.task, cfg.seed, cfg.train_frac, cfg.val_frac, cfg.negative_ratio)


def run_cell(cfg: TrainConfig) -> CellResult:
    _, history, record = run(cfg, prepared_for(cfg))
    best = history.best
    return CellResult(cell_key(cfg), cfg, record, best.val_auc, best.val_loss, history.best_epoch)


def _write_json_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(json.dumps(payload, indent=1))
    os.replace(tmp, path)


def _run_and_store(cfg: TrainConfig, cells_dir: str | None) -> CellResult:
    result = run_cell(cfg)
    if cells_dir is not None:
        _write_json_atomic(Path(cells_dir) / f"{result.key}.json", result.to_dict())
    return result


def _validation_score(cell: CellResult) -> float:
    """Larger is better, following the cell's own selection monitor."""
    if cell.config.select_on == "val_auc":
        return cell.val_auc
    return -cell.val_loss


def _hyper_key(cfg: TrainConfig) -> str:
    d = cfg.to_dict()
    for k in ("seed", "out_dir"):
        d.pop(k)
    d["model"].pop("seed")
    return json.dumps(d, sort_keys=True)


def select_best(cells: list[CellResult]) -> dict[tuple[str, str], dict]:
    """Per (model, variant): the hyperparameter setting with the best seed-averaged validation score.

    The reported metrics are the seed means of that setting's test records.
    """
    groups: dict[tuple[str, str], dict[str, list[CellResult]]] = {}
    for c in cells:
        groups.setdefault((c.config.model.arch, c.config.variant), {}).setdefault(_hyper_key(c.config), []).append(c)
    best = {}
    for mv, settings in groups.items():
        # grid order breaks ties
        members = max(settings.values(), key=lambda cs: statistics.fmean(_validation_score(c) for c in cs))
        cfg = members[0].config
        best[mv] = {
            "model": mv[0],
            "variant": mv[1],
            "lr": cfg.learning_rate,
            "lambda_bce": cfg.effective_loss.lambda_bce,
            "lambda_mse": cfg.effective_loss.lambda_mse,
            "seeds": [c.config.seed for c in members],
            "auc": statistics.fmean(c.record.auc for c in members),
            "kendall_tau": statistics.fmean(c.record.kendall_tau for c in members),
        }
    return best


def sweep(
    base: TrainConfig,
    axes: dict[str, list],
    seeds=DEFAULT_SEEDS,
    *,
    cells_dir: str | Path | None = None,
    workers: int = 1,
) -> SweepResult:
    """Run every cell of the grid, reusing cell files already present in ``cells_dir``."""
    configs, skipped = expand_grid(base, axes, seeds)
    done: dict[str, CellResult] = {}
    if cells_dir is not None:
        cells_dir = Path(cells_dir)
        cells_dir.mkdir(parents=True, exist_ok=True)
        for cfg in configs:
            path = cells_dir / f"{cell_key(cfg)}.json"
            if path.exists():
                done[cell_key(cfg)] = CellResult.from_dict(json.loads(path.read_text()))
    todo = [c for c in configs if cell_key(c) not in done]
    log.info("sweep: %d cells, %d already done, %d skipped", len(configs), len(done), len(skipped))
    target = None if cells_dir is None else str(cells_dir)
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_and_store, todo, itertools.repeat(target)):
                done[res.key] = res
    else:
        for cfg in todo:
            res = _run_and_store(cfg, target)
            done[res.key] = res
    cells = [done[cell_key(c)] for c in configs]
    return SweepResult(cells, select_best(cells), skipped)


def write_csv(path: str | Path, cells: list[CellResult]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for c in cells:
            w.writerow(c.csv_row())
    os.replace(tmp, path)


def _split_list(raw: str) -> list[str]:
    return [v.strip() for v in raw.split(",") if v.strip()]


def load_sweep(path: str | Path) -> tuple[TrainConfig, dict[str, list], list[int], int]:
    """Read a config file with an extra ``[sweep]`` section.

    Each ``[sweep]`` key names a config field (``learning_rate``,
    ``loss.lambda_mse``, ``model.arch``, ...) with a comma-separated list of
    values. ``seeds`` lists run seeds and ``workers`` sets the process count.
    """
    parser = _read_ini(path, extra_sections=("sweep",))
    base = config_from_parser(parser)
    axes: dict[str, list] = {}
    seeds, workers = list(DEFAULT_SEEDS), 1
    if parser.has_section("sweep"):
        for key, raw in parser.items("sweep"):
            if key in SEED_AXES:
                seeds = [int(s) for s in _split_list(raw)]
            elif key == "workers":
                workers = int(raw)
            else:
                normalize_key(key)
                axes[key] = _split_list(raw)
    return base, axes, seeds, workers


# -- four-variant summary -----------------------------------------------------

SUMMARY_METRICS = ("auc", "kendall_tau")


@dataclass
class VariantSummary:
    variant: str
    n: int
    mean: dict[str, float]
    std: dict[str, float]
    records: list[MetricsRecord]

    def format_row(self, label: str) -> str:
        cells = [f"{self.mean[m]:.3f} ± {self.std[m]:.3f}" for m in SUMMARY_METRICS]
        return f"{label:<12} " + "  ".join(f"{c:>15}" for c in cells)


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def run_variant_suite(
    dataset: DataConfig | str,
    arch: str,
    seeds=DEFAULT_SEEDS,
    base_cfg: TrainConfig | None = None,
    variants=VARIANTS,
) -> list[VariantSummary]:
    """Train base / hash / mse / both for every seed; mean and sample std per metric.

    ``base_cfg`` supplies everything except the architecture, variant and
    seed. Variants with the distance loss use its ``lambda_mse``, or 1.0 when
    that is zero.
    """
    base_cfg = base_cfg or TrainConfig()
    data_cfg = DataConfig(dataset=dataset) if isinstance(dataset, str) else dataset
    base_cfg = apply_overrides(base_cfg, {"data." + k: v for k, v in vars(data_cfg).items()} | {"model.arch": arch})
    order = [v for v in VARIANTS if v in variants]
    out = []
    for variant in order:
        lam = base_cfg.loss.lambda_mse or (1.0 if variant in ("mse", "both") else 0.0)
        cfg_v = apply_overrides(base_cfg, {"variant": variant, "loss.lambda_mse": lam})
        records = []
        for seed in seeds:
            cfg = cfg_v.with_seed(int(seed))
            records.append(run_cell(cfg).record)
        mean, std = {}, {}
        for m in SUMMARY_METRICS:
            mean[m], std[m] = _mean_std([getattr(r, m) for r in records])
        out.append(VariantSummary(variant, len(records), mean, std, records))
    return out


VARIANT_LABELS = {"base": "{arch}", "hash": "+ Hash", "mse": "+ MSE", "both": "+ Both"}


def format_suite(arch: str, rows: list[VariantSummary]) -> str:
    header = f"{'':<12} {'AUC':>15}  {'KT':>15}"
    lines = [header]
    for r in rows:
        lines.append(r.format_row(VARIANT_LABELS[r.variant].format(arch=arch)))
    n = rows[0].n if rows else 0
    lines.append(f"(mean ± sample std over {n} seed{'s' if n != 1 else ''})")
    return "\n".join(lines)
