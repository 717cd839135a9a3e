"""Downward-closed index sets, combination coefficients and sparse grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from amisc.errors import IndexSetError, NotReadyError
from amisc.rules import cc_new_node_positions, cc_rule
from amisc.tensorgrid import TensorComponent, cartesian, as_index, tensor_eval, tensor_mean


def _as_set(indices: Iterable) -> set:
    out = {as_index(i) for i in indices}
    if len({len(i) for i in out}) > 1:
        raise IndexSetError("all indices in a set must have the same length")
    return out


def backward_neighbors(idx):
    for k, v in enumerate(idx):
        if v > 0:
            yield idx[:k] + (v - 1,) + idx[k + 1:]


def is_downward_closed(indices: Iterable) -> bool:
    index_set = _as_set(indices)
    return all(nb in index_set for idx in index_set for nb in backward_neighbors(idx))


def _upward_offsets(idx, index_set):
    """Yield ``(offset_l1, idx + j)`` for binary ``j`` with ``idx + j`` in the set.

    Walks subsets of dimensions in increasing order and prunes as soon as a
    member is missing, which is valid because the set is downward closed.
    """
    stack = [(idx, 0, 0)]
    while stack:
        current, first_dim, norm = stack.pop()
        yield norm, current
        for k in range(first_dim, len(idx)):
            if current[k] != idx[k]:
                continue
            up = current[:k] + (current[k] + 1,) + current[k + 1:]
            if up in index_set:
                stack.append((up, k + 1, norm + 1))


def combination_coefficients(indices: Iterable) -> dict:
    """Combination-technique coefficient of every member of a downward-closed set.

    ``c_b = sum over binary j of (-1)**|j|_1 * [b + j in I]``.  Zero
    coefficients are kept so the result is keyed by the full set.
    """
    index_set = _as_set(indices)
    if not index_set:
        raise IndexSetError("index set is empty")
    if not is_downward_closed(index_set):
        raise IndexSetError("index set is not downward closed")
    coeffs = {}
    for idx in sorted(index_set):
        coeffs[idx] = sum((-1) ** norm for norm, _ in _upward_offsets(idx, index_set))
    return coeffs


def isotropic_index_set(level: int, dim: int) -> set:
    """Total-degree set ``{b : |b|_1 <= level}`` in ``dim`` dimensions."""
    if level < 0 or dim < 1:
        raise ValueError("need level >= 0 and dim >= 1")
    out = set()

    def build(prefix, remaining):
        if len(prefix) == dim:
            out.add(tuple(prefix))
            return
        for v in range(remaining + 1):
            build(prefix + [v], remaining - v)

    build([], level)
    return out


@dataclass
class SparseGrid:
    """Union of tensor grids.

    ``points``/``keys`` hold one row per unique point, grouped by the index
    that first introduces it (indices visited in sorted order); ``diff`` maps
    each index to the row numbers of its new points.
    """

    points: np.ndarray
    keys: np.ndarray
    diff: dict

    def __len__(self):
        return len(self.points)


def diff_positions(beta) -> list[np.ndarray]:
    """Per-dimension node positions of the points new to tensor grid ``beta``."""
    return [cc_new_node_positions(b) for b in beta]


def sparse_points(indices: Iterable) -> SparseGrid:
    index_set = _as_set(indices)
    if not is_downward_closed(index_set):
        raise IndexSetError("index set is not downward closed")
    blocks, key_blocks, diff = [], [], {}
    start = 0
    for beta in sorted(index_set):
        rules = [cc_rule(b) for b in beta]
        positions = diff_positions(beta)
        flat = cartesian(positions).T
        pts = np.stack([r.nodes[p] for r, p in zip(rules, flat)], axis=1)
        keys = np.stack([r.keys[p] for r, p in zip(rules, flat)], axis=1)
        blocks.append(pts)
        key_blocks.append(keys)
        diff[beta] = np.arange(start, start + len(pts))
        start += len(pts)
    dim = len(next(iter(index_set)))
    points = np.concatenate(blocks) if blocks else np.zeros((0, dim))
    keys = np.concatenate(key_blocks) if key_blocks else np.zeros((0, dim), dtype=np.int64)
    return SparseGrid(points=points, keys=keys, diff=diff)


def _active_components(coefficients: Mapping, components: Mapping):
    for idx, c in coefficients.items():
        if c == 0:
            continue
        comp = components.get(idx)
        if comp is None or comp.values is None:
            raise NotReadyError(f"no populated component for index {idx}")
        yield c, comp


def sparse_eval(coefficients: Mapping, components: Mapping, z) -> np.ndarray:
    """``sum_b c_b * f_b(z)`` over the indices with non-zero coefficient."""
    total = None
    for c, comp in _active_components(coefficients, components):
        term = c * tensor_eval(comp, z)
        total = term if total is None else total + term
    if total is None:
        raise NotReadyError("all combination coefficients are zero")
    return total


def sparse_mean(coefficients: Mapping, components: Mapping) -> np.ndarray:
    total = None
    for c, comp in _active_components(coefficients, components):
        term = c * tensor_mean(comp)
        total = term if total is None else total + term
    if total is None:
        raise NotReadyError("all combination coefficients are zero")
    return total


def build_components(indices: Iterable, fn) -> dict:
    """Tensor components over ``indices`` sampling ``fn(points) -> (M, q)``."""
    out = {}
    for beta in sorted(_as_set(indices)):
        comp = TensorComponent(alpha=(), beta=beta)
        comp.set_values(fn(comp.points))
        out[beta] = comp
    return out


def format_index_set(indices: Iterable, coefficients: Mapping | None = None) -> str:
    """One index per line, space-separated; ``\\t<coefficient>`` when given."""
    lines = []
    for idx in sorted(_as_set(indices)):
        line = " ".join(str(v) for v in idx)
        if coefficients is not None and idx in coefficients:
            line += f"\t{coefficients[idx]}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_index_set(text: str) -> tuple[set, dict]:
    indices, coeffs = set(), {}
    for raw in text.splitlines():
        if not raw.strip():
            continue
        head, _, tail = raw.partition("\t")
        idx = as_index(head.split())
        indices.add(idx)
        if tail.strip():
            coeffs[idx] = int(tail)
    return indices, coeffs


__all__ = [
    "SparseGrid",
    "backward_neighbors",
    "build_components",
    "combination_coefficients",
    "diff_positions",
    "format_index_set",
    "is_downward_closed",
    "isotropic_index_set",
    "parse_index_set",
    "sparse_eval",
    "sparse_mean",
    "sparse_points",
]
