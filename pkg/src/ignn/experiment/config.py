"""Training configuration and its INI-style file format.

Example::

    [data]
    dataset = communities
    num_cliques = 20
    clique_size = 20
    inter_prob = 0.01

    [model]
    arch = GCN

    [loss]
    lambda_bce = 1.0
    lambda_mse = 1.0

    [train]
    variant = both
    task = link
    learning_rate = 0.01
    seed = 0

Overrides use ``section.key=value`` (``[train]`` keys may omit the section).
Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
import types
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError, IGNNError
from ..models import ModelConfig
from ..objective import LossConfig

VARIANTS = ("base", "hash", "mse", "both")
TASKS = ("link", "pairwise")
SELECT_ON = ("val_loss", "val_auc")


@dataclass(frozen=True)
class DataConfig:
    dataset: str = "communities"
    data_dir: str | None = None  # directory with edges.txt [labels.txt] [features.csv]
    num_cliques: int = 20
    clique_size: int = 20
    inter_prob: float = 0.01
    seed: int = 0


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataConfig = field(default_factory=DataConfig)
    variant: str = "base"
    task: str = "link"
    learning_rate: float = 0.01
    max_epochs: int = 2000
    patience: int = 100
    seed: int = 0
    hash_dim: int | None = None  # None: same as the input feature dimension
    train_frac: float = 0.8
    val_frac: float = 0.1
    negative_ratio: float = 1.0
    kt_monitor_pairs: int = 4096
    select_on: str = "val_auc"  # or "val_loss"
    out_dir: str = "runs"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_epochs < 1 or self.patience < 0:
            raise ConfigError("max_epochs must be >= 1 and patience >= 0")
        if self.hash_dim is not None and self.hash_dim < 1:
            raise ConfigError("hash_dim must be >= 1")
        if self.select_on not in SELECT_ON:
            raise ConfigError(f"select_on must be one of {SELECT_ON}, got {self.select_on!r}")
        if self.negative_ratio <= 0:
            raise ConfigError("negative_ratio must be positive")
        if self.uses_mse and self.loss.lambda_mse == 0:
            raise ConfigError(f"variant {self.variant!r} needs lambda_mse > 0")
        if not self.uses_mse and self.loss.lambda_bce == 0:
            raise ConfigError(f"variant {self.variant!r} trains on the task loss alone and needs lambda_bce > 0")

    @property
    def uses_hash(self) -> bool:
        return self.variant in ("hash", "both")

    @property
    def uses_mse(self) -> bool:
        return self.variant in ("mse", "both")

    @property
    def effective_loss(self) -> LossConfig:
        """The loss actually optimised: variants without the distance term ignore ``lambda_mse``."""
        return self.loss if self.uses_mse else replace(self.loss, lambda_mse=0.0)

    def with_seed(self, seed: int) -> "TrainConfig":
        """Same config with both the run seed and the weight-init seed set to ``seed``."""
        return replace(self, seed=seed, model=replace(self.model, seed=seed))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        sub = {"model": ModelConfig, "loss": LossConfig, "data": DataConfig}
        for key, typ in sub.items():
            if key in d:
                d[key] = typ(**d[key])
        return cls(**d)


SECTIONS = {"model": ModelConfig, "loss": LossConfig, "data": DataConfig}


def _field_types(cls) -> dict[str, object]:
    return typing.get_type_hints(cls)


def _convert(raw: str, typ, where: str):
    raw = raw.strip()
    args = typing.get_args(typ)
    if typing.get_origin(typ) in (typing.Union, types.UnionType):
        if raw.lower() in ("none", "null", ""):
            if type(None) in args:
                return None
        typ = next(a for a in args if a is not type(None))
    try:
        if typ is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from None


def _split_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
    else:
        section, name = "train", key
    return section.strip(), name.strip()


def normalize_key(key: str) -> tuple[str, str]:
    """Validate a ``section.key`` name and return ``(section, key)``."""
    section, name = _split_key(key)
    if section == "train":
        allowed = {f.name for f in fields(TrainConfig)} - set(SECTIONS)
    elif section in SECTIONS:
        allowed = {f.name for f in fields(SECTIONS[section])}
    else:
        raise ConfigError(f"unknown config section {section!r}")
    if name not in allowed:
        raise ConfigError(f"unknown key {name!r} in section [{section}]")
    return section, name


def parse_value(key: str, raw: str):
    section, name = normalize_key(key)
    cls = TrainConfig if section == "train" else SECTIONS[section]
    return _convert(raw, _field_types(cls)[name], f"{section}.{name}")


def apply_overrides(cfg: TrainConfig, overrides: dict[str, object]) -> TrainConfig:
    """Return ``cfg`` with ``{"section.key": value}`` replacements applied.

    String values are parsed according to the field type.
    """
    top: dict[str, object] = {}
    nested: dict[str, dict[str, object]] = {s: {} for s in SECTIONS}
    for key, value in overrides.items():
        section, name = normalize_key(key)
        if isinstance(value, str):
            value = parse_value(key, value)
        (top if section == "train" else nested[section])[name] = value
    try:
        for section, vals in nested.items():
            if vals:
                top[section] = replace(getattr(cfg, section), **vals)
        return replace(cfg, **top)
    except ConfigError:
        raise
    except IGNNError as exc:
        raise ConfigError(str(exc)) from exc


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = text.split("=", 1)
    normalize_key(key.strip())
    return key.strip(), value.strip()


def _read_ini(path: str | Path, extra_sections: tuple[str, ...] = ()) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in SECTIONS and section != "train" and section not in extra_sections:
            raise ConfigError(f"{path}: unknown section [{section}]")
    return parser


def config_from_parser(parser: configparser.ConfigParser, overrides=()) -> TrainConfig:
    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in SECTIONS and section != "train":
            continue
        for key, raw in parser.items(section):
            values[f"{section}.{key}"] = raw
    for key, raw in overrides:
        values[key] = raw
    return apply_overrides(TrainConfig(), values)


def load_config(path: str | Path, overrides=()) -> TrainConfig:
    """Read a training config file; ``overrides`` is a sequence of ``(key, raw_value)``."""
    return config_from_parser(_read_ini(path), overrides)
