"""Training loop, data preparation, sweeps and result persistence."""

from .config import DataConfig, TrainConfig, apply_overrides, load_config
from .data import Dataset, PreparedData, load_dataset, prepare
from .sweep import SweepResult, format_suite, run_variant_suite, sweep
from .train import AdamState, EpochRecord, TrainHistory, adam_step, evaluate, run, train

__all__ = [
    "DataConfig",
    "TrainConfig",
    "apply_overrides",
    "load_config",
    "Dataset",
    "PreparedData",
    "load_dataset",
    "prepare",
    "SweepResult",
    "format_suite",
    "run_variant_suite",
    "sweep",
    "AdamState",
    "EpochRecord",
    "TrainHistory",
    "adam_step",
    "evaluate",
    "run",
    "train",
]
