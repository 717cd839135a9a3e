"""Analytic test ensembles."""
from __future__ import annotations

import numpy as np

from amisc.models.base import ModelEnsemble, single_model

DEFAULT_EPS = (1 / 5, 1 / 10, 1 / 20)
DEFAULT_LADDER_COSTS = (1.0, 2.0, 4.0)


def cosine_ladder(eps=DEFAULT_EPS, costs=None) -> ModelEnsemble:
    """Shifted cosines ``cos(pi/2 (z + 4/5 + eps[a]))`` converging to ``eps = 0``.

    Costs default to doubling per level, starting at one.
    """
    eps = tuple(float(e) for e in eps)
    if not eps or min(eps) < 0 or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ValueError(f"eps must be non-negative and strictly decreasing, got {eps}")
    if costs is None:
        costs = tuple(2.0**k for k in range(len(eps)))
    costs = tuple(float(c) for c in costs)
    if len(costs) != len(eps) or any(a >= b for a, b in zip(costs, costs[1:])):
        raise ValueError("costs must be strictly increasing, one per level")

    def evaluate(alpha, z):
        return np.array([np.cos(0.5 * np.pi * (z[0] + 0.8 + eps[alpha[0]]))])

    def exact(z):
        return np.array([np.cos(0.5 * np.pi * (z[0] + 0.8))])

    return ModelEnsemble(
        name="cosine_ladder",
        n_alpha=1,
        n_z=1,
        n_qoi=1,
        bounds=(len(eps) - 1,),
        evaluate=evaluate,
        cost=lambda alpha: costs[alpha[0]],
        reference=exact,
    )


def cosine_2d() -> ModelEnsemble:
    """``cos(2 pi z_1) cos(pi z_2)`` on ``[-1, 1]**2``, single fidelity."""
    return single_model(
        "cosine_2d",
        lambda z: np.array([np.cos(2 * np.pi * z[0]) * np.cos(np.pi * z[1])]),
        n_z=2,
    )
