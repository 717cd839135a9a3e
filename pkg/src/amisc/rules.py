"""Nested Clenshaw-Curtis rules on [-1, 1] and univariate Lagrange bases.

Nodes of level ``l >= 1`` are ``cos(k*pi/(m-1))`` for ``k = 0..m-1`` with
``m = 2**l + 1`` (ordered from +1 down to -1); level 0 is the midpoint.
Quadrature weights integrate against the uniform *probability* density
``1/2`` on ``[-1, 1]``, so they sum to one.

Every node also carries an integer ``key`` that identifies it across levels:
node ``k`` of level ``l`` is the angle ``k / 2**l`` (in units of pi), stored
as ``k * 2**(KEY_LEVEL - l)``.  Keys make sparse-grid deduplication exact.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from amisc.errors import InvalidRuleError

KEY_LEVEL = 30


def cc_growth(level: int) -> int:
    """Number of nodes of the level-``level`` Clenshaw-Curtis rule."""
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    return 1 if level == 0 else 2**level + 1


def cc_nodes(level: int) -> np.ndarray:
    m = cc_growth(level)
    if m == 1:
        return np.zeros(1)
    nodes = np.cos(np.arange(m) * np.pi / (m - 1))
    # cos is only approximately odd-symmetric in floating point
    nodes[m // 2] = 0.0
    return nodes


def cc_node_keys(level: int) -> np.ndarray:
    """Level-independent integer identities of the nodes of ``level``."""
    if level > KEY_LEVEL:
        raise ValueError(f"levels above {KEY_LEVEL} are not supported")
    if level == 0:
        return np.array([2 ** (KEY_LEVEL - 1)], dtype=np.int64)
    return np.arange(cc_growth(level), dtype=np.int64) * 2 ** (KEY_LEVEL - level)


def cc_new_node_positions(level: int) -> np.ndarray:
    """Positions (within level ``level``) of nodes absent from ``level - 1``."""
    if level == 0:
        return np.array([0])
    if level == 1:
        return np.array([0, 2])
    return np.arange(1, cc_growth(level), 2)


def cc_quadrature_weights(level: int) -> np.ndarray:
    """Clenshaw-Curtis weights for the uniform probability density on [-1, 1].

    Uses the closed-form cosine series for the Lebesgue weights and halves
    them.
    """
    m = cc_growth(level)
    if m == 1:
        return np.ones(1)
    n = m - 1
    k = np.arange(m)
    j = np.arange(1, n // 2 + 1)
    b = np.where(j == n // 2, 1.0, 2.0)
    series = (b / (4.0 * j**2 - 1.0))[None, :] * np.cos(2.0 * np.outer(k, j) * np.pi / n)
    c = np.where((k == 0) | (k == n), 1.0, 2.0)
    w = c / n * (1.0 - series.sum(axis=1))
    return 0.5 * w


def barycentric_weights(nodes) -> np.ndarray:
    """Barycentric weights scaled so the largest has magnitude one.

    The products are accumulated in log space; the raw weights of a
    1025-point rule overflow double precision.
    """
    x = np.asarray(nodes, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise InvalidRuleError("interpolation nodes must be pairwise distinct")
    log_mag = -np.log(np.abs(diff)).sum(axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    return sign * np.exp(log_mag - log_mag.max())


def lagrange_basis_matrix(nodes, x, weights=None) -> np.ndarray:
    """Values of every Lagrange basis polynomial at every point of ``x``.

    Returns an array of shape ``(len(x), len(nodes))`` evaluated with the
    second (true) barycentric formula.  Rows for points that coincide with a
    node are exact unit vectors.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if weights is None:
        weights = barycentric_weights(nodes)
    if len(nodes) == 1:
        return np.ones((len(x), 1))
    diff = x[:, None] - nodes[None, :]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        basis = terms / terms.sum(axis=1, keepdims=True)
    # exact hits, and points so close to a node that 1/diff overflows
    hit_row = np.flatnonzero(~np.isfinite(terms).all(axis=1))
    hit_col = np.argmin(np.abs(diff[hit_row]), axis=1)
    basis[hit_row] = 0.0
    basis[hit_row, hit_col] = 1.0
    return basis


def lagrange_basis_eval(nodes, j: int, x: float) -> float:
    """Value at ``x`` of the Lagrange polynomial that is one at ``nodes[j]``.

    ``j`` is zero-based.
    """
    nodes = np.asarray(nodes, dtype=float)
    if not 0 <= j < len(nodes):
        raise IndexError(f"basis index {j} out of range for {len(nodes)} nodes")
    return float(lagrange_basis_matrix(nodes, [x])[0, j])


@dataclass(frozen=True, eq=False)
class UnivariateRule:
    level: int
    nodes: np.ndarray
    quad_weights: np.ndarray
    bary_weights: np.ndarray
    keys: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def basis(self, x) -> np.ndarray:
        return lagrange_basis_matrix(self.nodes, x, self.bary_weights)


@functools.lru_cache(maxsize=None)
def cc_rule(level: int) -> UnivariateRule:
    nodes = cc_nodes(level)
    rule = UnivariateRule(
        level=level,
        nodes=nodes,
        quad_weights=cc_quadrature_weights(level),
        bary_weights=barycentric_weights(nodes),
        keys=cc_node_keys(level),
    )
    for arr in (rule.nodes, rule.quad_weights, rule.bary_weights, rule.keys):
        arr.setflags(write=False)
    return rule
