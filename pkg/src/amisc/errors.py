"""Exception types shared across the package."""


class InvalidRuleError(ValueError):
    """Interpolation nodes are not pairwise distinct."""


class NotReadyError(RuntimeError):
    """A tensor component (or surrogate) was used before its values were set."""


class IndexSetError(ValueError):
    """An index set violates downward-closedness or admissibility."""


class UndefinedIndicesError(ValueError):
    """Sobol indices requested for a QoI with zero variance."""


class DegenerateSampleError(ValueError):
    """Samples without spread were passed to a density estimator."""


class ModelEvaluationError(RuntimeError):
    """A model failed at a specific (alpha, z) pair."""

    def __init__(self, alpha, z, reason):
        self.alpha = tuple(int(a) for a in alpha)
        self.z = tuple(float(v) for v in z)
        self.reason = reason
        super().__init__(f"model evaluation failed at alpha={self.alpha}, z={self.z}: {reason}")
