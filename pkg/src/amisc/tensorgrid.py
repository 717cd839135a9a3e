"""Tensor-product Clenshaw-Curtis grids, interpolants and their means.

Grid points are stored as an ``(M, d)`` array (one row per point) in
lexicographic order with dimension 0 varying slowest, i.e. the C-order of
``values.reshape(m_0, ..., m_{d-1}, n_qoi)``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from amisc.errors import NotReadyError
from amisc.rules import UnivariateRule, cc_growth, cc_rule

MultiIndex = tuple  # tuple of non-negative ints


def as_index(entries) -> MultiIndex:
    idx = tuple(int(e) for e in entries)
    if not idx:
        raise ValueError("multi-indices must have at least one entry")
    if min(idx) < 0:
        raise ValueError(f"multi-index entries must be non-negative: {idx}")
    return idx


def index_leq(u, v) -> bool:
    """Componentwise partial order ``u <= v``."""
    return all(a <= b for a, b in zip(u, v))


def tensor_size(beta) -> int:
    return int(np.prod([cc_growth(b) for b in beta]))


def cartesian(arrays) -> np.ndarray:
    """Rows of the Cartesian product, first array varying slowest.

    Built with repeat/tile rather than ``meshgrid``, which is limited to 32
    dimensions.
    """
    arrays = [np.asarray(a) for a in arrays]
    sizes = [len(a) for a in arrays]
    total = int(np.prod(sizes))
    out = np.empty((total, len(arrays)), dtype=np.result_type(*arrays))
    inner = total
    for k, a in enumerate(arrays):
        inner //= sizes[k]
        out[:, k] = np.tile(np.repeat(a, inner), total // (inner * sizes[k]))
    return out


@functools.lru_cache(maxsize=4096)
def _cached_points(beta: tuple):
    pts = cartesian([cc_rule(b).nodes for b in beta])
    keys = cartesian([cc_rule(b).keys for b in beta])
    pts.setflags(write=False)
    keys.setflags(write=False)
    return pts, keys


def tensor_points(beta) -> np.ndarray:
    """Cartesian product of the per-dimension nodes, shape ``(M, d)``."""
    return _cached_points(as_index(beta))[0]


def tensor_point_keys(beta) -> np.ndarray:
    """Integer node identities matching :func:`tensor_points` row by row."""
    return _cached_points(as_index(beta))[1]


def tensor_weights(beta) -> np.ndarray:
    w = np.ones(1)
    for b in beta:
        w = np.outer(w, cc_rule(b).quad_weights).ravel()
    return w


@dataclass(eq=False)
class TensorComponent:
    """One tensor-product interpolant ``f_{alpha, beta}``.

    ``alpha`` may be empty for single-model use.  ``values`` has shape
    ``(M, n_qoi)`` and stays ``None`` until the model has been sampled.
    """

    alpha: tuple
    beta: tuple
    values: np.ndarray | None = None
    rules: tuple = field(init=False)

    def __post_init__(self):
        self.alpha = tuple(int(a) for a in self.alpha)
        self.beta = as_index(self.beta)
        self.rules = tuple(cc_rule(b) for b in self.beta)
        if self.values is not None:
            self.set_values(self.values)

    @property
    def points(self) -> np.ndarray:
        return tensor_points(self.beta)

    @property
    def keys(self) -> np.ndarray:
        return tensor_point_keys(self.beta)

    @property
    def size(self) -> int:
        return tensor_size(self.beta)

    @property
    def n_qoi(self) -> int:
        self._check_ready()
        return self.values.shape[1]

    def set_values(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.size:
            raise ValueError(f"expected {self.size} rows of values, got {values.shape[0]}")
        values.setflags(write=False)
        self.values = values

    def _check_ready(self):
        if self.values is None:
            raise NotReadyError(f"component alpha={self.alpha} beta={self.beta} has no values")

    def value_tensor(self) -> np.ndarray:
        self._check_ready()
        shape = tuple(r.node_count for r in self.rules) + (self.values.shape[1],)
        return self.values.reshape(shape)


def contract_basis(tensor: np.ndarray, bases) -> np.ndarray:
    """Contract the leading axes of ``tensor`` with per-point basis matrices.

    ``tensor`` has shape ``(m_0, ..., m_{d-1}, q)`` and ``bases[i]`` has
    shape ``(N, m_i)``.  Returns ``(N, q)``.
    """
    out = np.tensordot(bases[0], tensor, axes=(1, 0))
    for b in bases[1:]:
        out = np.einsum("nj,nj...->n...", b, out)
    return out


def _as_points(z, d: int) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != d:
        raise ValueError(f"points must have {d} coordinates, got {z.shape[1]}")
    return z, single


def tensor_eval(component: TensorComponent, z) -> np.ndarray:
    """Evaluate the interpolant at one point ``(d,)`` or many ``(N, d)``."""
    tensor = component.value_tensor()
    z, single = _as_points(z, len(component.beta))
    bases = [rule.basis(z[:, i]) for i, rule in enumerate(component.rules)]
    out = contract_basis(tensor, bases)
    return out[0] if single else out


def tensor_mean(component: TensorComponent) -> np.ndarray:
    component._check_ready()
    return tensor_weights(component.beta) @ component.values


__all__ = [
    "MultiIndex",
    "TensorComponent",
    "UnivariateRule",
    "as_index",
    "cartesian",
    "contract_basis",
    "index_leq",
    "tensor_eval",
    "tensor_mean",
    "tensor_point_keys",
    "tensor_points",
    "tensor_size",
    "tensor_weights",
]
