"""Transient advection-diffusion on the unit square with a random diffusivity.

    u_t + u_x1 + u_x2 - div(k grad u) = (1.5 + cos(2 pi t)) cos(x1),   u = 0 on the boundary

solved to ``T = 1`` from ``u = 0`` with backward Euler and centered second
order finite differences on a uniform grid.  ``alpha = (a1, a2, a3)`` sets
``h1 = h0 2**-a1``, ``h2 = h0 2**-a2`` and ``dt = dt0 2**-a3``.  The QoI is
a Gaussian-weighted integral of the final solution around ``x_star``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from amisc.errors import ModelEvaluationError
from amisc.models.base import ModelEnsemble

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class AdvectionDiffusionConfig:
    n_kle: int = 10
    correlation_length: float = 0.5
    h0: float = 0.25
    dt0: float = 0.25
    max_level: int = 6
    x_star: tuple = (0.3, 0.5)
    sigma: float = 0.16
    final_time: float = 1.0

    def __post_init__(self):
        if self.n_kle < 1:
            raise ValueError("n_kle must be at least 1")
        for name in ("correlation_length", "h0", "dt0", "sigma", "final_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_level < 1:
            raise ValueError("max_level must be at least 1")


def kle_eigenvalues(config: AdvectionDiffusionConfig) -> np.ndarray:
    """Scalings of terms ``k = 1..n_kle``; entry 0 is the ``z_1`` term."""
    lc = config.correlation_length
    lp = max(1.0, 2.0 * lc)
    length = lc / lp
    k = np.arange(1, config.n_kle + 1)
    lam = np.sqrt(np.sqrt(np.pi * length)) * np.exp(-((k // 2) * np.pi * length) ** 2 / 4.0)
    lam[0] = np.sqrt(np.sqrt(np.pi * length) / 2.0)
    return lam


def kle_diffusivity(x, z, config: AdvectionDiffusionConfig) -> np.ndarray:
    """Diffusivity at points ``x`` (``(2,)`` or ``(N, 2)``) for physical ``z``.

    The field varies with ``x1`` only.
    """
    x = np.asarray(x, dtype=float)
    x1 = x[..., 0]
    return _diffusivity_x1(x1, np.asarray(z, dtype=float), config)


def _diffusivity_x1(x1, z, config):
    lc = config.correlation_length
    lp = max(1.0, 2.0 * lc)
    lam = kle_eigenvalues(config)
    exponent = 1.0 + lam[0] * z[0] + np.zeros_like(x1)
    for k in range(2, config.n_kle + 1):
        arg = (k // 2) * np.pi * x1 / lp
        mode = np.sin(arg) if k % 2 == 0 else np.cos(arg)
        exponent = exponent + lam[k - 1] * mode * z[k - 1]
    return 0.5 + np.exp(exponent)


def forcing(x1, t):
    return (1.5 + np.cos(2.0 * np.pi * t)) * np.cos(x1)


def _tridiag(n, lower, diag, upper):
    return sp.diags([lower, diag, upper], [-1, 0, 1], shape=(n, n), format="csr")


def solve_qoi(alpha, z_phys, config: AdvectionDiffusionConfig) -> float:
    """QoI of one solve at discretization ``alpha`` and physical inputs ``z_phys``."""
    a1, a2, a3 = (int(a) for a in alpha)
    n1 = round(1.0 / (config.h0 * 2.0**-a1))
    n2 = round(1.0 / (config.h0 * 2.0**-a2))
    h1, h2 = 1.0 / n1, 1.0 / n2
    dt = config.dt0 * 2.0**-a3
    n_steps = round(config.final_time / dt)
    x1 = np.arange(1, n1) * h1
    x2 = np.arange(1, n2) * h2
    m1, m2 = n1 - 1, n2 - 1

    k_face = _diffusivity_x1((np.arange(n1) + 0.5) * h1, z_phys, config)
    k_node = _diffusivity_x1(x1, z_phys, config)

    diff1 = _tridiag(m1, -k_face[1:-1], k_face[:-1] + k_face[1:], -k_face[1:-1]) / h1**2
    lap2 = _tridiag(m2, -np.ones(m2 - 1), 2.0 * np.ones(m2), -np.ones(m2 - 1)) / h2**2
    adv1 = _tridiag(m1, -np.ones(m1 - 1), np.zeros(m1), np.ones(m1 - 1)) / (2.0 * h1)
    adv2 = _tridiag(m2, -np.ones(m2 - 1), np.zeros(m2), np.ones(m2 - 1)) / (2.0 * h2)
    eye1, eye2 = sp.identity(m1, format="csr"), sp.identity(m2, format="csr")
    operator = (
        sp.kron(diff1, eye2)
        + sp.kron(sp.diags(k_node), lap2)
        + sp.kron(adv1, eye2)
        + sp.kron(eye1, adv2)
    )
    system = (sp.identity(m1 * m2) / dt + operator).tocsc()
    lu = splu(system)

    spatial = np.repeat(np.cos(x1), m2)
    u = np.zeros(m1 * m2)
    for step in range(1, n_steps + 1):
        rhs = u / dt + (1.5 + np.cos(2.0 * np.pi * step * dt)) * spatial
        u = lu.solve(rhs)

    xs, ys = np.meshgrid(x1, x2, indexing="ij")
    sq = (xs - config.x_star[0]) ** 2 + (ys - config.x_star[1]) ** 2
    kernel = np.exp(-sq / config.sigma**2) / (2.0 * np.pi * config.sigma**2)
    # boundary rows of the trapezoid rule vanish because u = 0 there
    return float(h1 * h2 * np.dot(u, kernel.ravel()))


def advection_cost(alpha) -> float:
    """Raw work ``2**(a1+2) * 2**(a2+2) * 2**(a3+2)``."""
    return float(2.0 ** sum(int(a) + 2 for a in alpha))


def advection_diffusion_ensemble(config: AdvectionDiffusionConfig | None = None,
                                 top_level: int | None = None) -> ModelEnsemble:
    """Ensemble over ``alpha in {0..top_level}**3``.

    ``top_level`` defaults to ``config.max_level``.  The truth model used as
    ``reference`` is always ``(max_level,)*3``, so a smaller ``top_level``
    leaves a discretization-error floor.  Costs are normalized so the top
    model has unit work.
    """
    config = config or AdvectionDiffusionConfig()
    top = config.max_level if top_level is None else int(top_level)
    if not 0 <= top <= config.max_level:
        raise ValueError(f"top_level must lie in [0, {config.max_level}]")
    top_cost = advection_cost((top,) * 3)
    truth = (config.max_level,) * 3
    ranges = [(-SQRT3, SQRT3)] * config.n_kle

    ensemble = ModelEnsemble(
        name="advection_diffusion",
        n_alpha=3,
        n_z=config.n_kle,
        n_qoi=1,
        bounds=(top,) * 3,
        evaluate=None,
        cost=lambda alpha: advection_cost(alpha) / top_cost,
        variable_ranges=ranges,
    )

    def evaluate(alpha, z):
        value = solve_qoi(alpha, ensemble.to_physical(z), config)
        if not math.isfinite(value):
            raise ModelEvaluationError(alpha, z, "non-finite QoI")
        return np.array([value])

    ensemble.evaluate = evaluate
    ensemble.reference = lambda z: evaluate(truth, z)
    ensemble.info.update(config=config, truth_alpha=truth)
    return ensemble
