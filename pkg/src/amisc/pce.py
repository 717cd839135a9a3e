"""Lagrange-to-orthonormal (Legendre) change of basis, moments and Sobol indices.

Each univariate Lagrange basis of a Clenshaw-Curtis rule is expanded in the
orthonormal Legendre family ``phi_k = sqrt(2k+1) P_k``.  A tensor component
then becomes a PCE through one small matrix product per dimension, and a
combination of components becomes a PCE by linearity.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.polynomial import legendre

from amisc.errors import UndefinedIndicesError
from amisc.rules import UnivariateRule, cc_rule, lagrange_basis_matrix
from amisc.tensorgrid import TensorComponent, cartesian


class LegendreFamily:
    """Orthonormal polynomials for the uniform probability density on [-1, 1]."""

    name = "legendre"

    def basis_matrix(self, x, n: int) -> np.ndarray:
        """Values of ``phi_0 .. phi_{n-1}`` at ``x``, shape ``(len(x), n)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vander = legendre.legvander(x, n - 1)
        return vander * np.sqrt(2.0 * np.arange(n) + 1.0)

    def quadrature(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        x, w = legendre.leggauss(n)
        return x, 0.5 * w


LEGENDRE = LegendreFamily()


def univariate_transform(rule: UnivariateRule, family=LEGENDRE) -> np.ndarray:
    """Matrix ``nu`` with ``l_j(x) = sum_k nu[j, k] * phi_k(x)``.

    Entries are the projections ``int l_j phi_k dw`` computed with an
    ``m + 1`` point Gauss rule, exact for the degree ``2m - 2`` integrands.
    """
    m = rule.node_count
    x, w = family.quadrature(m + 1)
    lag = lagrange_basis_matrix(rule.nodes, x, rule.bary_weights)
    phi = family.basis_matrix(x, m)
    return lag.T @ (w[:, None] * phi)


@functools.lru_cache(maxsize=None)
def _legendre_transform(level: int) -> np.ndarray:
    nu = univariate_transform(cc_rule(level))
    nu.setflags(write=False)
    return nu


@dataclass
class PceExpansion:
    """Sparse expansion ``sum_l eta_l phi_l``.

    ``indices`` is an ``(N, d)`` integer array of distinct multi-indices in
    lexicographic order and ``coefficients`` an ``(N, n_qoi)`` array.
    """

    indices: np.ndarray
    coefficients: np.ndarray
    family: object = LEGENDRE

    @property
    def dim(self) -> int:
        return self.indices.shape[1]

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        z = np.atleast_2d(z)
        basis = np.ones((len(z), len(self.indices)))
        for i in range(self.dim):
            deg = self.indices[:, i]
            table = self.family.basis_matrix(z[:, i], int(deg.max()) + 1)
            basis *= table[:, deg]
        out = basis @ self.coefficients
        return out[0] if single else out

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in row): c for row, c in zip(self.indices, self.coefficients)}


def aggregate(indices: np.ndarray, coefficients: np.ndarray) -> PceExpansion:
    """Sum coefficients that share a multi-index."""
    uniq, inverse = np.unique(indices, axis=0, return_inverse=True)
    summed = np.zeros((len(uniq), coefficients.shape[1]))
    np.add.at(summed, inverse.ravel(), coefficients)
    return PceExpansion(indices=uniq, coefficients=summed)


def tensor_to_pce(component: TensorComponent) -> PceExpansion:
    """Exact Legendre expansion of a tensor interpolant on ``{l <= m(beta) - 1}``."""
    eta = component.value_tensor()
    for axis, level in enumerate(component.beta):
        nu = _legendre_transform(level)
        eta = np.moveaxis(np.tensordot(eta, nu, axes=(axis, 0)), -1, axis)
    indices = cartesian([np.arange(r.node_count) for r in component.rules])
    return PceExpansion(indices=indices, coefficients=eta.reshape(len(indices), -1))


def combine_pce(coefficients: Mapping, components: Mapping) -> PceExpansion:
    """PCE of ``sum_k c_k f_k`` over components with non-zero coefficient."""
    idx_blocks, coef_blocks = [], []
    for key in sorted(coefficients):
        c = coefficients[key]
        if c == 0:
            continue
        pce = tensor_to_pce(components[key])
        idx_blocks.append(pce.indices)
        coef_blocks.append(c * pce.coefficients)
    if not idx_blocks:
        raise ValueError("no components with non-zero coefficient")
    return aggregate(np.concatenate(idx_blocks), np.concatenate(coef_blocks))


def surrogate_to_pce(surrogate) -> PceExpansion:
    """PCE of any object exposing ``coefficients`` and ``components`` mappings."""
    return combine_pce(surrogate.coefficients, surrogate.components)


def pce_mean_var(expansion: PceExpansion) -> tuple[np.ndarray, np.ndarray]:
    is_zero = ~expansion.indices.any(axis=1)
    mean = expansion.coefficients[is_zero].sum(axis=0)
    var = (expansion.coefficients[~is_zero] ** 2).sum(axis=0)
    return mean, var


def negligible_variance(expansion: PceExpansion, variance) -> np.ndarray:
    """Per-QoI mask of variances indistinguishable from rounding noise."""
    scale = np.abs(expansion.coefficients).max(axis=0) if len(expansion.coefficients) else 0.0
    noise = (64.0 * np.finfo(float).eps * scale) ** 2 * max(len(expansion.indices), 1)
    return np.asarray(variance) <= noise


def subset_variances(expansion: PceExpansion) -> dict:
    """Unnormalized variance of every variable subset present in the expansion.

    Keys are sorted tuples of zero-based variable positions.
    """
    support = expansion.indices > 0
    energy = expansion.coefficients**2
    out: dict = {}
    rows = support.any(axis=1)
    for mask, e in zip(support[rows], energy[rows]):
        key = tuple(np.flatnonzero(mask).tolist())
        out[key] = out[key] + e if key in out else e.copy()
    return dict(sorted(out.items()))


def sobol_indices(expansion: PceExpansion, subsets=None, rel_threshold: float = 1e-6) -> dict:
    """Normalized Sobol indices ``Var_u / Var`` per QoI.

    By default every singleton and pair is reported, plus any other subset
    whose variance exceeds ``rel_threshold`` times the total for some QoI.
    """
    _, total = pce_mean_var(expansion)
    if np.any(negligible_variance(expansion, total)):
        raise UndefinedIndicesError("Sobol indices are undefined for a QoI with zero variance")
    partial = subset_variances(expansion)
    zeros = np.zeros_like(total)
    if subsets is None:
        d = expansion.dim
        wanted = [(i,) for i in range(d)] + list(itertools.combinations(range(d), 2))
        wanted += [u for u, v in partial.items() if len(u) > 2 and np.any(v > rel_threshold * total)]
    else:
        wanted = [tuple(sorted(int(i) for i in u)) for u in subsets]
    return {u: partial.get(u, zeros) / total for u in wanted}


class PceAccumulator:
    """Mutable PCE keyed by multi-index, for cheap incremental moment updates."""

    def __init__(self, n_qoi: int):
        self.n_qoi = n_qoi
        self._rows: dict = {}
        self._coef = np.zeros((16, n_qoi))

    def _row(self, key) -> int:
        row = self._rows.get(key)
        if row is None:
            row = len(self._rows)
            if row == len(self._coef):
                self._coef = np.concatenate([self._coef, np.zeros_like(self._coef)])
            self._rows[key] = row
        return row

    def add(self, expansion: PceExpansion, scale: float = 1.0) -> None:
        for key, c in zip(map(tuple, expansion.indices.tolist()), expansion.coefficients):
            row = self._row(key)
            self._coef[row] += scale * c

    @property
    def coefficients(self) -> np.ndarray:
        return self._coef[: len(self._rows)]

    def _zero_row(self):
        for key, row in self._rows.items():
            if not any(key):
                return row
        return None

    def mean(self) -> np.ndarray:
        row = self._zero_row()
        return np.zeros(self.n_qoi) if row is None else self._coef[row].copy()

    def variance(self) -> np.ndarray:
        coef = self.coefficients
        keep = np.ones(len(coef), dtype=bool)
        row = self._zero_row()
        if row is not None:
            keep[row] = False
        return (coef[keep] ** 2).sum(axis=0)

    def moments_after(self, delta: PceExpansion) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance if ``delta`` were added, without mutating."""
        mean = self.mean()
        var = self.variance()
        for key, c in zip(map(tuple, delta.indices.tolist()), delta.coefficients):
            row = self._rows.get(key)
            old = self._coef[row] if row is not None else 0.0
            if any(key):
                var = var + (old + c) ** 2 - old**2
            else:
                mean = mean + c
        return mean, var

    def to_expansion(self) -> PceExpansion:
        keys = list(self._rows)
        order = sorted(range(len(keys)), key=keys.__getitem__)
        indices = np.array([keys[i] for i in order], dtype=np.int64)
        return PceExpansion(indices=indices, coefficients=self.coefficients[order].copy())
