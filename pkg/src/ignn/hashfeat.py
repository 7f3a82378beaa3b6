"""Deterministic hash-vector node features.

Each node identifier ``b`` is turned into ``n`` pseudo-random components
``H(b|0), H(b|1), ..., H(b|n-1)`` where ``H`` is 32-bit MurmurHash3 read as a
signed integer and divided by ``2**31 - 1``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ParameterError

_C1 = 0xCC9E2D51
_C2 = 0x1B873593
_MASK = 0xFFFFFFFF

NORMALIZER = float(2**31 - 1)


def _fmix32(h: int) -> int:
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _MASK
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _MASK
    h ^= h >> 16
    return h


def murmur3_32(data: bytes, seed: int = 0) -> int:
    """MurmurHash3 x86_32 of ``data``; returns an unsigned 32-bit integer."""
    data = bytes(data)
    length = len(data)
    h = seed & _MASK
    nblocks = length // 4

    for k in struct.unpack_from(f"<{nblocks}I", data):
        k = (k * _C1) & _MASK
        k = ((k << 15) | (k >> 17)) & _MASK
        k = (k * _C2) & _MASK
        h ^= k
        h = ((h << 13) | (h >> 19)) & _MASK
        h = (h * 5 + 0xE6546B64) & _MASK

    tail = data[nblocks * 4 :]
    k = 0
    if len(tail) == 3:
        k ^= tail[2] << 16
    if len(tail) >= 2:
        k ^= tail[1] << 8
    if len(tail) >= 1:
        k ^= tail[0]
        k = (k * _C1) & _MASK
        k = ((k << 15) | (k >> 17)) & _MASK
        k = (k * _C2) & _MASK
        h ^= k

    h ^= length
    return _fmix32(h)


def to_signed32(h: int) -> int:
    return h - (1 << 32) if h & 0x80000000 else h


@dataclass(frozen=True)
class HashConfig:
    n: int
    m: int = 32
    separator: bytes = b"|"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"hash dimension n must be >= 1, got {self.n}")
        if self.m != 32:
            raise ParameterError("only 32-bit hash output is supported")


@lru_cache(maxsize=65536)
def _hash_ints(node_id: str, n: int, separator: bytes) -> tuple[int, ...]:
    prefix = node_id.encode("utf-8") + separator
    return tuple(to_signed32(murmur3_32(prefix + str(i).encode("ascii"), 0)) for i in range(n))


def hash_vector(node_id: str, cfg: HashConfig | int) -> np.ndarray:
    """Length-``n`` hash vector for ``node_id``, components in ``[-1.0000000005, 1]``."""
    if isinstance(cfg, int):
        cfg = HashConfig(cfg)
    node_id = str(node_id)
    if not node_id:
        raise ParameterError("node id must be a non-empty string")
    return np.asarray(_hash_ints(node_id, cfg.n, cfg.separator), dtype=np.float64) / NORMALIZER


def hash_matrix(ids: Sequence[str], cfg: HashConfig | int) -> np.ndarray:
    if isinstance(cfg, int):
        cfg = HashConfig(cfg)
    if len(ids) == 0:
        return np.empty((0, cfg.n))
    return np.stack([hash_vector(i, cfg) for i in ids])


def augment_features(x: np.ndarray, cfg: HashConfig | int, ids: Sequence[str] | None = None) -> np.ndarray:
    """Append hash-vector columns to ``x``; ``ids`` default to ``"0" .. "N-1"``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError("feature matrix must be 2-D")
    if ids is None:
        ids = [str(i) for i in range(x.shape[0])]
    if len(ids) != x.shape[0]:
        raise ParameterError(f"{len(ids)} ids for {x.shape[0]} feature rows")
    return np.concatenate([x, hash_matrix(ids, cfg)], axis=1)
