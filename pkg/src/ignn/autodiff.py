"""A small reverse-mode autodiff engine over dense 2-D float64 arrays.

Every tensor is a matrix. Operations whose inputs live on a :class:`Tape`
append their result to that tape together with a closure mapping the output
gradient to input gradients; :meth:`Tape.backward` sweeps the tape in reverse.
Tensors without a tape simply carry values, which is how inference runs.

    tape = Tape()
    w = tape.variable(np.ones((2, 2)))
    loss = total(matmul(w, x))
    grads = tape.backward(loss)
    grads[w]
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import UsageError

LOG_CLAMP = 1e-12
NORM_EPS = 1e-12

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    __slots__ = ("value", "tape", "parents", "backward_fn", "requires_grad", "name", "__weakref__")

    def __init__(self, value, tape: "Tape | None" = None, parents=(), backward_fn=None, requires_grad=False, name=None):
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        if value.ndim != 2:
            raise UsageError(f"tensors are 2-D, got shape {value.shape}")
        self.value = value
        self.tape = tape
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        if self.value.shape != (1, 1):
            raise UsageError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.value[0, 0])

    def numpy(self) -> np.ndarray:
        return self.value

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, grad={self.requires_grad})"

    # operator sugar for the common cases
    def __add__(self, other):
        return add(self, _wrap(other))

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return hadamard(self, _wrap(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Ordered record of operations; parents always precede children."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.variables: list[Tensor] = []

    def variable(self, value, name: str | None = None) -> Tensor:
        t = Tensor(np.array(value, dtype=np.float64), tape=self, requires_grad=True, name=name)
        self.nodes.append(t)
        self.variables.append(t)
        return t

    def constant(self, value, name: str | None = None) -> Tensor:
        return Tensor(value, tape=self, name=name)

    def backward(self, loss: Tensor) -> "Gradients":
        """Gradients of a 1x1 ``loss`` with respect to every variable on the tape."""
        if loss.shape != (1, 1):
            raise UsageError(f"backward() needs a scalar (1x1) loss, got shape {loss.shape}")
        if loss.tape is not self:
            raise UsageError("loss was not recorded on this tape")
        grads: dict[int, np.ndarray] = {}
        if loss.requires_grad:
            grads[id(loss)] = np.ones((1, 1))
            try:
                stop = next(k for k in range(len(self.nodes) - 1, -1, -1) if self.nodes[k] is loss)
            except StopIteration:
                raise UsageError("loss is not on the tape") from None
            for node in reversed(self.nodes[: stop + 1]):
                g = grads.get(id(node))
                if g is None or node.backward_fn is None:
                    continue
                for parent, pg in zip(node.parents, node.backward_fn(g)):
                    if pg is None or not parent.requires_grad:
                        continue
                    key = id(parent)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
        return Gradients({v: grads.get(id(v), np.zeros_like(v.value)) for v in self.variables})


class Gradients(dict):
    """Mapping from variable tensors to gradient arrays (identity-keyed)."""

    def by_name(self) -> dict[str, np.ndarray]:
        return {t.name: g for t, g in self.items()}


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(value: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    tape = None
    for p in parents:
        if p.tape is not None:
            if tape is not None and p.tape is not tape:
                raise UsageError("operands are recorded on different tapes")
            tape = p.tape
    needs = any(p.requires_grad for p in parents)
    out = Tensor(value, tape=tape, parents=parents if needs else (), backward_fn=backward_fn if needs else None,
                 requires_grad=needs)
    if tape is not None and needs:
        tape.nodes.append(out)
    return out


def _check_same(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise UsageError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise UsageError(f"matmul: inner dimensions differ {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return _record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def spmm(s: sp.spmatrix, x: Tensor) -> Tensor:
    """Sparse (constant) times dense."""
    if s.shape[1] != x.shape[0]:
        raise UsageError(f"spmm: shape mismatch {s.shape} @ {x.shape}")
    s = sp.csr_matrix(s)
    st = s.T.tocsr()
    return _record(np.asarray(s @ x.value), (x,), lambda g: (np.asarray(st @ g),))


# ---------------------------------------------------------------------------
# elementwise


def add(a: Tensor, b: Tensor) -> Tensor:
    """Sum of equal shapes, or ``a`` plus a broadcast 1xC row vector ``b``."""
    if a.shape == b.shape:
        return _record(a.value + b.value, (a, b), lambda g: (g, g))
    if b.shape == (1, a.shape[1]):
        return _record(a.value + b.value, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
    raise UsageError(f"add: cannot combine shapes {a.shape} and {b.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "sub")
    return _record(a.value - b.value, (a, b), lambda g: (g, -g))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "hadamard")
    av, bv = a.value, b.value
    return _record(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _record(a.value * c, (a,), lambda g: (g * c,))


def shift(a: Tensor, c: float) -> Tensor:
    """``a + c`` for a scalar constant ``c``."""
    c = float(c)
    return _record(a.value + c, (a,), lambda g: (g,))


def square(a: Tensor) -> Tensor:
    av = a.value
    return _record(av * av, (a,), lambda g: (2.0 * av * g,))


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return _record(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a: Tensor) -> Tensor:
    v = a.value
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return _record(out, (a,), lambda g: (g * out * (1.0 - out),))


def log(a: Tensor, clamp: float = LOG_CLAMP) -> Tensor:
    """Natural log of ``max(a, clamp)``; zero gradient where clamped."""
    v = a.value
    live = v > clamp
    safe = np.where(live, v, clamp)
    return _record(np.log(safe), (a,), lambda g: (np.where(live, g / safe, 0.0),))


def total(a: Tensor) -> Tensor:
    """Sum of all entries as a 1x1 tensor."""
    shape = a.shape
    return _record(np.array([[a.value.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),))


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[0] != b.shape[0]:
        raise UsageError(f"concat_cols: row counts differ {a.shape} vs {b.shape}")
    k = a.shape[1]
    return _record(np.concatenate([a.value, b.value], axis=1), (a, b), lambda g: (g[:, :k], g[:, k:]))


def l2_normalize_rows(a: Tensor, eps: float = NORM_EPS) -> Tensor:
    """Rows divided by ``sqrt(|row|^2 + eps)``."""
    v = a.value
    norm = np.sqrt(np.sum(v * v, axis=1, keepdims=True) + eps)
    out = v / norm

    def back(g):
        # (I - x̂ x̂ᵀ) g / |x|, row by row
        return ((g - out * np.sum(out * g, axis=1, keepdims=True)) / norm,)

    return _record(out, (a,), back)


def row_pair_inner(z: Tensor, i: np.ndarray, j: np.ndarray) -> Tensor:
    """Column vector of ``<z_i, z_j>`` for each index pair."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    if i.shape != j.shape or i.ndim != 1:
        raise UsageError("row_pair_inner: index arrays must be 1-D and equally long")
    zv = z.value
    n = zv.shape[0]
    zi, zj = zv[i], zv[j]
    out = np.einsum("ij,ij->i", zi, zj)[:, None]

    def back(g):
        # scatter-add through a sparse pair matrix: dz = (W + Wᵀ) z with W[i,j] = g
        w = sp.csr_matrix((g[:, 0], (i, j)), shape=(n, n))
        return (np.asarray((w + w.T) @ zv),)

    return _record(out, (z,), back)
