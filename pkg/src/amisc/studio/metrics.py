"""Validation error, kernel density and power-mean aggregation."""
from __future__ import annotations

import numpy as np

from amisc.errors import DegenerateSampleError


def relative_linf_error(reference, approximation) -> np.ndarray:
    """``max |f - S| / (max f - min f)`` over the samples, per QoI column."""
    f = np.asarray(reference, dtype=float)
    s = np.asarray(approximation, dtype=float)
    if f.shape != s.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {s.shape}")
    if f.ndim == 1:
        f, s = f[:, None], s[:, None]
    if len(f) < 2:
        raise ValueError("at least two samples are required")
    spread = f.max(axis=0) - f.min(axis=0)
    if np.any(spread <= 0.0):
        raise ZeroDivisionError(
            f"reference values have zero range for QoI {np.flatnonzero(spread <= 0).tolist()}"
        )
    return np.abs(f - s).max(axis=0) / spread


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    return 1.06 * x.std(ddof=1) * len(x) ** (-0.2)


def kde_density(samples, eval_points, block_elements: int = 2**22) -> np.ndarray:
    """Gaussian kernel density estimate with Silverman's bandwidth."""
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 2 or not x.std() > 0.0:
        raise DegenerateSampleError("kernel density needs at least two distinct samples")
    bw = silverman_bandwidth(x)
    pts = np.atleast_1d(np.asarray(eval_points, dtype=float))
    out = np.empty(len(pts))
    norm = 1.0 / (len(x) * bw * np.sqrt(2.0 * np.pi))
    chunk = max(1, block_elements // len(x))
    for start in range(0, len(pts), chunk):
        u = (pts[start:start + chunk, None] - x[None, :]) / bw
        out[start:start + chunk] = norm * np.exp(-0.5 * u * u).sum(axis=1)
    return out


def pn_aggregate(values, p: float = 10.0) -> float:
    """Power mean ``(mean c_i**p)**(1/p)``, a smooth stand-in for ``max``."""
    c = np.asarray(values, dtype=float).ravel()
    if c.size == 0:
        raise ValueError("values must be non-empty")
    if np.any(c < 0):
        raise ValueError("values must be non-negative")
    if p < 1:
        raise ValueError("p must be at least 1")
    peak = c.max()
    if peak == 0.0:
        return 0.0
    # scale by the maximum so large p does not overflow
    return float(peak * np.mean((c / peak) ** p) ** (1.0 / p))
