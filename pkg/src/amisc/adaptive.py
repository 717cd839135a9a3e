"""Greedy adaptive multi-index stochastic collocation.

A combined index is the tuple ``a + beta``: ``a`` is a zero-based position
in a :class:`FidelitySpace` (mapped to the model's ``alpha``) and ``beta``
holds the stochastic levels.  Admissibility and coefficients are computed on
the concatenation.

Each candidate in the active set is fully built (model evaluated at its new
points) when it is scored, so reported work includes active-set evaluations.
Indicators are computed once, when a candidate enters the active set.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from amisc.combi import backward_neighbors, sparse_eval
from amisc.errors import IndexSetError
from amisc.pce import PceAccumulator, PceExpansion, aggregate, combine_pce, tensor_to_pce
from amisc.tensorgrid import TensorComponent, tensor_point_keys

NORMALIZATION_FLOOR = 1e-12


@dataclass(frozen=True)
class FidelitySpace:
    """Zero-based fidelity coordinates ``a`` with ``0 <= a <= upper`` and a map to model alphas."""

    upper: tuple
    to_model: Callable

    @classmethod
    def box(cls, lower, upper) -> "FidelitySpace":
        lower = tuple(int(v) for v in lower)
        upper = tuple(int(v) for v in upper)
        if len(lower) != len(upper) or any(lo > hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"invalid fidelity box {lower}..{upper}")
        return cls(
            upper=tuple(hi - lo for lo, hi in zip(lower, upper)),
            to_model=lambda a: tuple(lo + v for lo, v in zip(lower, a)),
        )

    @classmethod
    def chain(cls, alphas: Sequence) -> "FidelitySpace":
        """One scalar fidelity dimension walking the given model sequence."""
        alphas = [tuple(int(v) for v in a) for a in alphas]
        return cls(upper=(len(alphas) - 1,), to_model=lambda a: alphas[a[0]])

    @property
    def n_dims(self) -> int:
        return len(self.upper)


def multilevel_model_set(k: int, n_alpha: int) -> list:
    """Diagonal hierarchy ``[(0,..,0), (1,..,1), ..., (k-1,..,k-1)]``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [(j,) * n_alpha for j in range(k)]


@dataclass
class RefinementRecord:
    index: tuple
    delta_e_mean: np.ndarray
    delta_e_var: np.ndarray
    delta_w: float
    gamma: float = 0.0

    def error_estimate(self) -> float:
        return self.gamma * self.delta_w


def indicator_gamma(record: RefinementRecord, kappa: float) -> float:
    """Worst case over QoI of ``(kappa dE_mean + (1 - kappa) dE_var) / dW``."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    if record.delta_w <= 0:
        raise ValueError("delta_w must be positive")
    per_qoi = (kappa * np.asarray(record.delta_e_mean) + (1.0 - kappa) * np.asarray(record.delta_e_var))
    return float(np.max(per_qoi) / record.delta_w)


def coefficient_increments(accepted, new_idx) -> dict:
    """Changes to the coefficients when ``new_idx`` joins ``accepted``.

    Every member ``k`` with ``new_idx - k`` binary gains ``(-1)**|new_idx - k|``;
    ``new_idx`` itself gets ``+1``.  Members are found by stepping down from
    ``new_idx`` rather than scanning the whole set.
    """
    out = {}
    stack = [(tuple(new_idx), 0, 0)]
    while stack:
        current, first_dim, norm = stack.pop()
        out[current] = (-1) ** norm
        for k in range(first_dim, len(current)):
            if current[k] == 0:
                continue
            down = current[:k] + (current[k] - 1,) + current[k + 1:]
            if down in accepted:
                stack.append((down, k + 1, norm + 1))
    return dict(sorted(out.items()))


def check_admissible(accepted, idx) -> None:
    idx = tuple(idx)
    if idx in accepted:
        raise IndexSetError(f"{idx} is already accepted")
    missing = [nb for nb in backward_neighbors(idx) if nb not in accepted]
    if missing:
        raise IndexSetError(f"{idx} is not admissible; missing backward neighbors {missing}")


def update_coefficients(coefficients: dict, accepted, new_idx) -> dict:
    """Coefficients of ``accepted | {new_idx}`` from those of ``accepted``."""
    check_admissible(accepted, new_idx)
    out = dict(coefficients)
    for k, inc in coefficient_increments(accepted, new_idx).items():
        out[k] = out.get(k, 0) + inc
    return out


def refine_neighbors(accepted, idx, upper: Sequence) -> list:
    """Admissible forward neighbors of ``idx`` inside ``0 <= . <= upper``."""
    out = []
    for k in range(len(idx)):
        if idx[k] >= upper[k]:
            continue
        fwd = idx[:k] + (idx[k] + 1,) + idx[k + 1:]
        if fwd not in accepted and all(nb in accepted for nb in backward_neighbors(fwd)):
            out.append(fwd)
    return out


@dataclass
class SurrogateState:
    """Accepted/active sets, coefficients, components and evaluation caches.

    Keys of ``components`` are whatever the driver uses as an index (``beta``
    for single fidelity, ``a + beta`` for multi-index); ``split`` recovers the
    model alpha and beta of a key.
    """

    n_qoi: int
    split: Callable
    accepted: set = field(default_factory=set)
    active: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)
    work_total: float = 0.0
    evaluations: dict = field(default_factory=dict)
    normalization: np.ndarray | None = None
    pce: PceAccumulator = None
    _pce_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.pce is None:
            self.pce = PceAccumulator(self.n_qoi)

    def component_pce(self, key) -> PceExpansion:
        if key not in self._pce_cache:
            self._pce_cache[key] = tensor_to_pce(self.components[key])
        return self._pce_cache[key]

    def evaluate(self, z) -> np.ndarray:
        return sparse_eval(self.coefficients, self.components, z)

    def mean(self) -> np.ndarray:
        return self.pce.mean()

    def variance(self) -> np.ndarray:
        return self.pce.variance()

    def to_pce(self) -> PceExpansion:
        return combine_pce(self.coefficients, self.components)

    def evaluated_pairs(self) -> int:
        return sum(len(v) for v in self.evaluations.values())


# the public name used throughout: a surrogate is its state
MiscSurrogate = SurrogateState


def new_point_mask(state: SurrogateState, alpha, beta) -> np.ndarray:
    cache = state.evaluations.get(tuple(alpha), {})
    keys = tensor_point_keys(beta)
    return np.array([tuple(row) not in cache for row in keys.tolist()], dtype=bool)


def delta_work(ensemble, state: SurrogateState, key) -> float:
    """``W_alpha`` times the number of points of ``key``'s grid not yet run on model ``alpha``."""
    alpha, beta = state.split(key)
    return float(ensemble.cost(alpha)) * int(new_point_mask(state, alpha, beta).sum())


def build_component(ensemble, state: SurrogateState, key) -> tuple[TensorComponent, float]:
    """Evaluate the model at the new points of ``key`` and assemble its component.

    The evaluation cache is only updated once every new point succeeded.
    """
    alpha, beta = state.split(key)
    comp = TensorComponent(alpha=alpha, beta=beta)
    keys = [tuple(row) for row in tensor_point_keys(beta).tolist()]
    cache = state.evaluations.get(alpha, {})
    new_rows = [row for row, k in enumerate(keys) if k not in cache]
    fresh = ensemble.evaluate_many(alpha, comp.points[new_rows]) if new_rows else None
    cache = state.evaluations.setdefault(alpha, cache)
    for j, row in enumerate(new_rows):
        cache[keys[row]] = fresh[j]
    comp.set_values(np.array([cache[k] for k in keys]))
    dw = float(ensemble.cost(alpha)) * len(new_rows)
    state.work_total += dw
    return comp, dw


def delta_error_indicators(state: SurrogateState, key, trial_component: TensorComponent):
    """Relative change in mean and variance if ``key`` joined the accepted set.

    Both are normalized per QoI by the magnitude (squared for the variance)
    of the first model value at the coarsest center.
    """
    increments = coefficient_increments(state.accepted, key)
    blocks_i, blocks_c = [], []
    for k, inc in increments.items():
        pce = tensor_to_pce(trial_component) if k == key else state.component_pce(k)
        blocks_i.append(pce.indices)
        blocks_c.append(inc * pce.coefficients)
    delta = aggregate(np.concatenate(blocks_i), np.concatenate(blocks_c))
    mean_new, var_new = state.pce.moments_after(delta)
    norm = state.normalization
    de_mean = np.abs(mean_new - state.pce.mean()) / norm
    de_var = np.abs(var_new - state.pce.variance()) / norm**2
    return de_mean, de_var


def _normalization(values: np.ndarray) -> np.ndarray:
    mag = np.abs(np.asarray(values, dtype=float))
    return np.where(mag < NORMALIZATION_FLOOR, 1.0, mag)


@dataclass
class TraceRow:
    step: int
    alpha: tuple
    beta: tuple
    gamma: float
    delta_w: float
    work: float
    mean: np.ndarray
    variance: np.ndarray

    @property
    def index_label(self) -> str:
        return ";".join(str(v) for v in self.alpha + self.beta)


def fmt(x) -> str:
    return f"{float(x):.17g}"


def trace_to_csv(rows: Sequence[TraceRow], n_qoi: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["step", "index", "gamma", "delta_w", "work"]
    header += [f"mean_{q}" for q in range(n_qoi)] + [f"variance_{q}" for q in range(n_qoi)]
    writer.writerow(header)
    for r in rows:
        writer.writerow(
            [r.step, r.index_label, fmt(r.gamma), fmt(r.delta_w), fmt(r.work)]
            + [fmt(v) for v in r.mean]
            + [fmt(v) for v in r.variance]
        )
    return buf.getvalue()


class _GreedyDriver:
    """Shared loop of the multi-index and single-fidelity drivers.

    Subclasses define how keys split into (alpha, beta), the root key and the
    per-dimension upper bounds used by :func:`refine_neighbors`.
    """

    def __init__(self, ensemble, kappa, tau, w_max, max_iter, callback):
        if not 0.0 <= kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
        if tau is None and w_max is None and max_iter is None:
            raise ValueError("at least one of tau, w_max, max_iter is required")
        self.ensemble = ensemble
        self.kappa = float(kappa)
        self.tau = tau
        self.w_max = w_max
        self.max_iter = max_iter
        self.callback = callback
        self.state = SurrogateState(n_qoi=ensemble.n_qoi, split=self.split)
        self.trace: list[TraceRow] = []
        self.steps = 0
        self._pending = [self.root()]
        self._pending_step = None

    # subclasses
    def split(self, key):
        raise NotImplementedError

    def root(self):
        raise NotImplementedError

    def upper(self):
        raise NotImplementedError

    def _score_pending(self):
        while self._pending:
            key = self._pending[0]
            comp, dw = build_component(self.ensemble, self.state, key)
            self.state.components[key] = comp
            if self.state.normalization is None:
                self.state.normalization = _normalization(comp.values[0])
            de_mean, de_var = delta_error_indicators(self.state, key, comp)
            record = RefinementRecord(index=key, delta_e_mean=de_mean, delta_e_var=de_var, delta_w=dw)
            record.gamma = indicator_gamma(record, self.kappa)
            self.state.active[key] = record
            self._pending.pop(0)
        if self._pending_step is not None:
            self._record(*self._pending_step)
            self._pending_step = None

    def global_error(self) -> float:
        return float(sum(self.state.active[k].error_estimate() for k in sorted(self.state.active)))

    def finished(self) -> bool:
        if self._pending:
            return False
        if not self.state.active:
            return True
        if self.max_iter is not None and self.steps >= self.max_iter:
            return True
        if self.w_max is not None and self.state.work_total >= self.w_max:
            return True
        if self.tau is not None and self.global_error() <= self.tau:
            return True
        return False

    def step(self) -> TraceRow | None:
        self._score_pending()
        if self.finished():
            return None
        active = self.state.active
        best = min(active, key=lambda k: (-active[k].gamma, k))
        record = active.pop(best)
        self.state.coefficients = update_coefficients(self.state.coefficients, self.state.accepted, best)
        for k, inc in coefficient_increments(self.state.accepted, best).items():
            self.state.pce.add(self.state.component_pce(k), inc)
        self.state.accepted.add(best)
        self.steps += 1
        self._pending = refine_neighbors(self.state.accepted, best, self.upper())
        self._pending_step = (best, record)
        self._score_pending()
        return self.trace[-1]

    def _record(self, key, record):
        alpha, beta = self.split(key)
        row = TraceRow(
            step=self.steps,
            alpha=alpha,
            beta=beta,
            gamma=record.gamma,
            delta_w=record.delta_w,
            work=self.state.work_total,
            mean=self.state.mean(),
            variance=self.state.variance(),
        )
        self.trace.append(row)
        if self.callback is not None:
            self.callback(self.state, row)

    def run(self):
        while self.step() is not None:
            pass
        return self.state, self.trace


def _stochastic_upper(max_level, n_z) -> tuple:
    if np.isscalar(max_level):
        return (int(max_level),) * n_z
    max_level = tuple(int(v) for v in max_level)
    if len(max_level) != n_z:
        raise ValueError("one max stochastic level per variable is required")
    return max_level


class AdaptiveMisc(_GreedyDriver):
    def __init__(self, ensemble, kappa=0.5, tau=None, w_max=None, space: FidelitySpace | None = None,
                 max_level=8, max_iter=None, callback=None):
        self.space = space or FidelitySpace.box((0,) * ensemble.n_alpha, ensemble.bounds)
        self.beta_upper = _stochastic_upper(max_level, ensemble.n_z)
        super().__init__(ensemble, kappa, tau, w_max, max_iter, callback)

    def split(self, key):
        n = self.space.n_dims
        return tuple(self.space.to_model(key[:n])), tuple(key[n:])

    def root(self):
        return (0,) * (self.space.n_dims + self.ensemble.n_z)

    def upper(self):
        return tuple(self.space.upper) + self.beta_upper


class AdaptiveSparseGrid(_GreedyDriver):
    """Dimension-adaptive sparse grid of one fixed model ``alpha``."""

    def __init__(self, ensemble, alpha, kappa=0.5, tau=None, w_max=None, max_level=8,
                 max_iter=None, callback=None):
        self.alpha = tuple(int(a) for a in alpha)
        self.beta_upper = _stochastic_upper(max_level, ensemble.n_z)
        super().__init__(ensemble, kappa, tau, w_max, max_iter, callback)

    def split(self, key):
        return self.alpha, tuple(key)

    def root(self):
        return (0,) * self.ensemble.n_z

    def upper(self):
        return self.beta_upper


def amisc_run(ensemble, kappa=0.5, tau=None, w_max=None, bounds=None, *, space=None,
              max_level=8, max_iter=None, callback=None):
    """Run the greedy multi-index loop; returns ``(surrogate, trace)``.

    ``bounds`` gives the largest alpha per dimension (defaults to the
    ensemble's); ``space`` replaces the box entirely, e.g. with a
    multi-level chain.
    """
    if space is None and bounds is not None:
        space = FidelitySpace.box((0,) * ensemble.n_alpha, bounds)
    driver = AdaptiveMisc(ensemble, kappa, tau, w_max, space=space, max_level=max_level,
                          max_iter=max_iter, callback=callback)
    return driver.run()


def adaptive_sparse_grid(ensemble, alpha, kappa=0.5, tau=None, w_max=None, max_level=8,
                         max_iter=None, callback=None):
    driver = AdaptiveSparseGrid(ensemble, alpha, kappa, tau, w_max, max_level=max_level,
                                max_iter=max_iter, callback=callback)
    return driver.run()


def allocation_profile(state: SurrogateState, ensemble) -> dict:
    """Per model alpha: unique stochastic points used by the accepted set and work fraction."""
    if not state.accepted:
        raise ValueError("surrogate has no accepted indices")
    points: dict = {}
    for key in sorted(state.accepted):
        alpha, beta = state.split(key)
        points.setdefault(alpha, set()).update(map(tuple, tensor_point_keys(beta).tolist()))
    work = {a: len(p) * float(ensemble.cost(a)) for a, p in points.items()}
    total = sum(work.values())
    return {a: (len(points[a]), work[a] / total) for a in sorted(points)}
