"""GCN, GraphSAGE and GIN encoders built on :mod:`ignn.autodiff`.

All three follow the same template: ``K`` rounds of neighbourhood aggregation
followed by a learned combination, ReLU between rounds and a linear last
round. Output rows are L2-normalised so inner products are cosine
similarities.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .errors import DataError, ParameterError, UsageError
from .graph import Graph

ARCHITECTURES = ("GCN", "SAGE", "GIN")

CHECKPOINT_FORMAT = "ignn-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    arch: str = "GCN"
    num_layers: int = 3
    hidden_dim: int = 32
    output_dim: int = 32
    gin_epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        arch = self.arch.upper()
        if arch not in ARCHITECTURES:
            raise ParameterError(f"unknown architecture {self.arch!r}; expected one of {ARCHITECTURES}")
        object.__setattr__(self, "arch", arch)
        if self.num_layers < 1:
            raise ParameterError("num_layers must be >= 1")
        if self.hidden_dim < 1 or self.output_dim < 1:
            raise ParameterError("layer dimensions must be >= 1")


@dataclass
class ModelWeights:
    """Named parameter arrays in creation order."""

    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def names(self) -> list[str]:
        return list(self.params)

    def copy(self) -> "ModelWeights":
        return ModelWeights({k: v.copy() for k, v in self.params.items()})

    def on_tape(self, tape: ad.Tape) -> dict[str, ad.Tensor]:
        return {k: tape.variable(v, name=k) for k, v in self.params.items()}

    def as_tensors(self) -> dict[str, ad.Tensor]:
        return {k: ad.Tensor(v, name=k) for k, v in self.params.items()}


# ---------------------------------------------------------------------------
# aggregation operators


def build_gcn_adjacency(g: Graph) -> sp.csr_matrix:
    """Symmetrically normalised adjacency with self-loops, D^-1/2 (A + I) D^-1/2."""
    a = g.adjacency_matrix() + sp.identity(g.num_nodes, format="csr")
    d = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    return sp.csr_matrix(inv_sqrt @ a @ inv_sqrt)


def build_mean_adjacency(g: Graph) -> sp.csr_matrix:
    a = g.adjacency_matrix()
    d = g.degrees.astype(np.float64)
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    return sp.csr_matrix(sp.diags(inv) @ a)


def build_sum_adjacency(g: Graph) -> sp.csr_matrix:
    return g.adjacency_matrix()


def build_adjacency(arch: str, g: Graph) -> sp.csr_matrix:
    arch = arch.upper()
    if arch == "GCN":
        return build_gcn_adjacency(g)
    if arch == "SAGE":
        return build_mean_adjacency(g)
    if arch == "GIN":
        return build_sum_adjacency(g)
    raise ParameterError(f"unknown architecture {arch!r}")


# ---------------------------------------------------------------------------
# weights


def layer_dims(cfg: ModelConfig, input_dim: int) -> list[tuple[int, int]]:
    dims = [input_dim] + [cfg.hidden_dim] * (cfg.num_layers - 1) + [cfg.output_dim]
    return list(zip(dims[:-1], dims[1:]))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def weight_shapes(cfg: ModelConfig, input_dim: int) -> dict[str, tuple[int, int]]:
    shapes = {}
    for k, (d_in, d_out) in enumerate(layer_dims(cfg, input_dim)):
        if cfg.arch == "GCN":
            shapes[f"W{k}"], shapes[f"b{k}"] = (d_in, d_out), (1, d_out)
        elif cfg.arch == "SAGE":
            shapes[f"W{k}"], shapes[f"b{k}"] = (2 * d_in, d_out), (1, d_out)
        else:
            shapes[f"W{k}a"], shapes[f"b{k}a"] = (d_in, cfg.hidden_dim), (1, cfg.hidden_dim)
            shapes[f"W{k}b"], shapes[f"b{k}b"] = (cfg.hidden_dim, d_out), (1, d_out)
    return shapes


def init_weights(cfg: ModelConfig, input_dim: int) -> ModelWeights:
    """Glorot-uniform weight matrices and zero biases, reproducible from ``cfg.seed``."""
    if input_dim < 1:
        raise ParameterError("input_dim must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    p = {}
    for name, shape in weight_shapes(cfg, input_dim).items():
        p[name] = _glorot(rng, *shape) if name.startswith("W") else np.zeros(shape)
    return ModelWeights(p)


def _check_shapes(cfg: ModelConfig, w, input_dim: int) -> None:
    expected = weight_shapes(cfg, input_dim)
    got = {k: tuple(v.shape) for k, v in w.items()}
    if got != expected:
        raise UsageError(f"weight shapes {got} do not match config/input dimension (expected {expected})")


# ---------------------------------------------------------------------------
# forward pass


def forward(
    cfg: ModelConfig,
    w: ModelWeights | dict[str, ad.Tensor],
    adj: sp.spmatrix,
    x,
    *,
    normalize: bool = True,
) -> ad.Tensor:
    """Node embeddings, ``N x output_dim``.

    ``w`` is either plain :class:`ModelWeights` (inference) or a mapping of
    tape variables as returned by :meth:`ModelWeights.on_tape` (training).
    ``adj`` must be the operator matching ``cfg.arch`` (see
    :func:`build_adjacency`). With ``normalize=False`` the last layer's raw
    output is returned.
    """
    params = w.as_tensors() if isinstance(w, ModelWeights) else w
    h = x if isinstance(x, ad.Tensor) else ad.Tensor(x)
    if h.shape[0] != adj.shape[0]:
        raise UsageError(f"{h.shape[0]} feature rows for a {adj.shape[0]}-node graph")
    _check_shapes(cfg, {k: t.value for k, t in params.items()}, h.shape[1])

    last = cfg.num_layers - 1
    for k in range(cfg.num_layers):
        if cfg.arch == "GCN":
            h = ad.add(ad.matmul(ad.spmm(adj, h), params[f"W{k}"]), params[f"b{k}"])
        elif cfg.arch == "SAGE":
            h = ad.add(ad.matmul(ad.concat_cols(h, ad.spmm(adj, h)), params[f"W{k}"]), params[f"b{k}"])
        else:
            pooled = ad.add(ad.scale(h, 1.0 + cfg.gin_epsilon), ad.spmm(adj, h))
            inner = ad.relu(ad.add(ad.matmul(pooled, params[f"W{k}a"]), params[f"b{k}a"]))
            h = ad.add(ad.matmul(inner, params[f"W{k}b"]), params[f"b{k}b"])
        if k < last:
            h = ad.relu(h)
    return ad.l2_normalize_rows(h) if normalize else h


def embed(cfg: ModelConfig, w: ModelWeights, adj: sp.spmatrix, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(normalised, raw) embeddings as arrays, without recording gradients."""
    raw = forward(cfg, w, adj, x, normalize=False)
    return ad.l2_normalize_rows(raw).value, raw.value


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | Path, cfg: ModelConfig, w: ModelWeights, extra: dict | None = None) -> None:
    """Write a JSON checkpoint.

    Layout::

        {"format": "ignn-checkpoint", "version": 1,
         "model": {ModelConfig fields},
         "tensors": {name: {"shape": [rows, cols], "data": [row-major floats]}},
         "extra": {...}}

    Floats are written with ``repr`` precision, so a round trip is exact.
    The file is written to a temporary name first and renamed into place.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model": asdict(cfg),
        "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in w.params.items()},
        "extra": extra or {},
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, ModelWeights, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not an {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    cfg = ModelConfig(**doc["model"])
    params = {}
    for k, t in doc["tensors"].items():
        params[k] = np.asarray(t["data"], dtype=np.float64).reshape(t["shape"])
    return cfg, ModelWeights(params), doc.get("extra", {})
