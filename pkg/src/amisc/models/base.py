"""Model ensembles: a family of discretizations ``alpha`` of one QoI map."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from amisc.errors import ModelEvaluationError


@dataclass
class ModelEnsemble:
    """Oracle ``(alpha, z) -> QoI`` with per-alpha work.

    ``z`` lives on the reference cube ``[-1, 1]**n_z``; ``variable_ranges``
    gives the affine image of each coordinate in physical units.  ``bounds``
    holds the largest admissible level of each alpha dimension.
    ``reference``, when set, is the exact (or truth-model) QoI map used for
    validation errors.
    """

    name: str
    n_alpha: int
    n_z: int
    n_qoi: int
    bounds: tuple
    evaluate: Callable
    cost: Callable
    variable_ranges: Sequence = field(default_factory=list)
    reference: Callable | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bounds = tuple(int(b) for b in self.bounds)
        if len(self.bounds) != self.n_alpha:
            raise ValueError("one bound per alpha dimension is required")
        if not self.variable_ranges:
            self.variable_ranges = [(-1.0, 1.0)] * self.n_z

    def to_physical(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        lo = np.array([r[0] for r in self.variable_ranges])
        hi = np.array([r[1] for r in self.variable_ranges])
        return lo + 0.5 * (z + 1.0) * (hi - lo)

    def evaluate_many(self, alpha, points) -> np.ndarray:
        """Evaluate at each row of ``points``; failures carry ``(alpha, z)``."""
        out = np.empty((len(points), self.n_qoi))
        for row, z in enumerate(points):
            try:
                value = np.asarray(self.evaluate(tuple(alpha), z), dtype=float).reshape(-1)
            except ModelEvaluationError:
                raise
            except Exception as exc:  # noqa: BLE001 - re-raised with context
                raise ModelEvaluationError(alpha, z, repr(exc)) from exc
            if value.shape != (self.n_qoi,) or not np.all(np.isfinite(value)):
                raise ModelEvaluationError(alpha, z, f"non-finite or mis-shaped output {value}")
            out[row] = value
        return out


def single_model(name: str, fn: Callable, n_z: int, n_qoi: int = 1, reference=True) -> ModelEnsemble:
    """Wrap ``fn(z) -> QoI`` as a one-model ensemble (one alpha dimension fixed at 0)."""
    return ModelEnsemble(
        name=name,
        n_alpha=1,
        n_z=n_z,
        n_qoi=n_qoi,
        bounds=(0,),
        evaluate=lambda alpha, z: fn(z),
        cost=lambda alpha: 1.0,
        reference=(lambda z: fn(z)) if reference else None,
    )
