"""Study configuration, convergence studies and CSV reports."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from amisc.adaptive import (
    AdaptiveMisc,
    AdaptiveSparseGrid,
    FidelitySpace,
    allocation_profile,
    fmt,
    multilevel_model_set,
    trace_to_csv,
)
from amisc.models import (
    AdvectionDiffusionConfig,
    advection_diffusion_ensemble,
    cosine_2d,
    cosine_ladder,
)
from amisc.pce import negligible_variance, subset_variances, surrogate_to_pce
from amisc.studio.metrics import kde_density, relative_linf_error

log = logging.getLogger(__name__)

STRATEGIES = ("single", "multilevel", "multiindex")


@dataclass
class StudyConfig:
    """One study.  Loaded from JSON; every field may be given there.

    ``top_level`` caps the model hierarchy (advection-diffusion only; it
    defaults to the model's ``max_level``, which is also the truth level).
    """

    model: str = "cosine_ladder"
    model_config: dict = field(default_factory=dict)
    strategy: str = "multiindex"
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    kappa: float = 0.5
    tau: float | None = None
    w_max: float | None = None
    max_iter: int | None = None
    max_level: int = 8
    top_level: int | None = None
    n_validation: int = 1000
    seed: int = 0
    out: str = "results"
    checkpoint_ratio: float = 1.25
    n_density: int = 100_000
    n_density_grid: int = 200

    def __post_init__(self):
        if self.n_validation < 1:
            raise ValueError("n_validation must be at least 1")
        if self.tau is None and self.w_max is None:
            raise ValueError("set tau, w_max or both")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if any(s not in STRATEGIES for s in self.strategies):
            raise ValueError(f"strategies must be drawn from {STRATEGIES}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if self.checkpoint_ratio <= 1.0:
            raise ValueError("checkpoint_ratio must exceed 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "StudyConfig":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def replace(self, **changes) -> "StudyConfig":
        return dataclasses.replace(self, **changes)


def build_ensemble(config: StudyConfig):
    if config.model == "cosine_ladder":
        return cosine_ladder(**config.model_config)
    if config.model == "cosine_2d":
        return cosine_2d()
    if config.model == "advection_diffusion":
        model_cfg = dict(config.model_config)
        if "x_star" in model_cfg:
            model_cfg["x_star"] = tuple(model_cfg["x_star"])
        return advection_diffusion_ensemble(AdvectionDiffusionConfig(**model_cfg), config.top_level)
    raise ValueError(f"unknown model {config.model!r}")


def make_driver(config: StudyConfig, ensemble, strategy: str, callback=None):
    common = dict(kappa=config.kappa, tau=config.tau, w_max=config.w_max,
                  max_level=config.max_level, max_iter=config.max_iter, callback=callback)
    if strategy == "single":
        return AdaptiveSparseGrid(ensemble, ensemble.bounds, **common)
    if strategy == "multiindex":
        return AdaptiveMisc(ensemble, **common)
    if strategy == "multilevel":
        top = max(ensemble.bounds)
        space = FidelitySpace.chain(multilevel_model_set(top + 1, ensemble.n_alpha))
        return AdaptiveMisc(ensemble, space=space, **common)
    raise ValueError(f"unknown strategy {strategy!r}")


def validation_set(config: StudyConfig, ensemble) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return rng.uniform(-1.0, 1.0, size=(config.n_validation, ensemble.n_z))


def _cache_key(config: StudyConfig, ensemble) -> str:
    payload = json.dumps(
        {
            "model": config.model,
            "model_config": config.model_config,
            "truth": ensemble.info.get("truth_alpha"),
            "seed": config.seed,
            "n": config.n_validation,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def reference_values(config: StudyConfig, ensemble, points, cache_dir=None) -> np.ndarray:
    """Truth-model QoI at the validation points, cached on disk when ``cache_dir`` is set."""
    if ensemble.reference is None:
        raise ValueError(f"model {ensemble.name} has no reference map")
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"reference_{config.model}_{_cache_key(config, ensemble)}.npy"
        if path.exists():
            return np.load(path)
    values = np.array([np.asarray(ensemble.reference(z), dtype=float).reshape(-1) for z in points])
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, values)
    return values


@dataclass
class ErrorReport:
    strategy: str
    rows: list
    allocation: dict
    trace_csv: str

    def final_error(self) -> np.ndarray:
        return self.rows[-1]["error"]

    def work_to_reach(self, target: float, qoi: int = 0) -> float | None:
        """First checkpointed work at which the error is at or below ``target``."""
        for row in self.rows:
            if row["error"][qoi] <= target:
                return row["work"]
        return None


CONVERGENCE_HEADER = ["strategy", "step", "work", "evaluations"]


def _convergence_line(strategy, row):
    return [strategy, row["step"], fmt(row["work"]), row["evaluations"]] + [
        fmt(e) for e in row["error"]
    ]


def convergence_study(config: StudyConfig, strategy: str | None = None, *, points=None,
                      reference=None, cache_dir=None, stream=None) -> ErrorReport:
    """Run one strategy and sample the validation error on a geometric work schedule.

    ``stream`` (a csv writer) receives each checkpoint row as soon as it is
    computed so a failed run leaves a partial trace behind.
    """
    strategy = strategy or config.strategy
    ensemble = build_ensemble(config)
    if points is None:
        points = validation_set(config, ensemble)
    if reference is None:
        reference = reference_values(config, ensemble, points, cache_dir)
    rows = []
    next_work = [0.0]

    def checkpoint(state, trace_row, force=False):
        if not force and trace_row.work < next_work[0]:
            return
        next_work[0] = trace_row.work * config.checkpoint_ratio
        error = relative_linf_error(reference, state.evaluate(points))
        row = {"step": trace_row.step, "work": trace_row.work,
               "evaluations": state.evaluated_pairs(), "error": error}
        rows.append(row)
        if stream is not None:
            stream.writerow(_convergence_line(strategy, row))

    driver = make_driver(config, ensemble, strategy, callback=checkpoint)
    state, trace = driver.run()
    if trace and (not rows or rows[-1]["step"] != trace[-1].step):
        checkpoint(state, trace[-1], force=True)
    return ErrorReport(
        strategy=strategy,
        rows=rows,
        allocation=allocation_profile(state, ensemble),
        trace_csv=trace_to_csv(trace, ensemble.n_qoi),
    )


def write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def allocation_rows(allocation: dict):
    return [[";".join(map(str, a)), count, fmt(frac)] for a, (count, frac) in allocation.items()]


def run_study(config: StudyConfig, strategy: str | None = None) -> ErrorReport:
    """``run`` subcommand: trace, convergence and allocation CSVs in ``config.out``."""
    strategy = strategy or config.strategy
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    ensemble = build_ensemble(config)
    header = CONVERGENCE_HEADER + [f"error_{q}" for q in range(ensemble.n_qoi)]
    with (out / f"{strategy}_convergence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)

        class _Flushing:
            def writerow(self, row):
                writer.writerow(row)
                fh.flush()

        report = convergence_study(config, strategy, cache_dir=out / "cache", stream=_Flushing())
    (out / f"{strategy}_trace.csv").write_text(report.trace_csv)
    write_rows(out / f"{strategy}_allocation.csv", ["alpha", "points", "work_fraction"],
               allocation_rows(report.allocation))
    return report


def compare_study(config: StudyConfig) -> dict:
    """``compare`` subcommand: every strategy in ``config.strategies``, merged."""
    out = Path(config.out)
    ensemble = build_ensemble(config)
    points = validation_set(config, ensemble)
    reference = reference_values(config, ensemble, points, out / "cache")
    reports = {}
    merged = []
    for strategy in config.strategies:
        log.info("running %s", strategy)
        report = convergence_study(config, strategy, points=points, reference=reference)
        reports[strategy] = report
        merged += [_convergence_line(strategy, r) for r in report.rows]
    header = CONVERGENCE_HEADER + [f"error_{q}" for q in range(ensemble.n_qoi)]
    write_rows(out / "compare.csv", header, merged)
    return reports


def build_surrogate(config: StudyConfig):
    ensemble = build_ensemble(config)
    state, _ = make_driver(config, ensemble, config.strategy).run()
    return ensemble, state


def sobol_table(expansion, coverage: float = 0.999) -> tuple[list, list]:
    """Subsets whose indices make up the first ``coverage`` of each QoI's variance.

    Returns ``(rows, warnings)``; rows are ``(subset, indices)`` sorted by
    the largest index across QoI, descending.
    """
    partial = subset_variances(expansion)
    if not partial:
        return [], ["zero variance for every QoI"]
    subsets = list(partial)
    energy = np.array([partial[u] for u in subsets])
    total = energy.sum(axis=0)
    live = ~negligible_variance(expansion, total)
    if not live.any():
        return [], ["zero variance for every QoI"]
    warnings = [f"zero variance for QoI {q}" for q in np.flatnonzero(~live)]
    keep = set()
    share = np.zeros_like(energy)
    share[:, live] = energy[:, live] / total[live]
    for q in np.flatnonzero(live):
        order = sorted(range(len(subsets)), key=lambda i: (-share[i, q], subsets[i]))
        acc = 0.0
        for i in order:
            keep.add(i)
            acc += share[i, q]
            if acc >= coverage:
                break
    rows = [(subsets[i], share[i]) for i in keep]
    rows.sort(key=lambda r: (-float(r[1].max()), r[0]))
    return rows, warnings


def sobol_report(config: StudyConfig, state=None) -> Path:
    """``sobol`` subcommand: ``sobol.csv`` with one row per reported subset."""
    if state is None:
        _, state = build_surrogate(config)
    expansion = surrogate_to_pce(state)
    rows, warnings = sobol_table(expansion)
    n_qoi = expansion.coefficients.shape[1]
    lines = [[";".join(map(str, u))] + [fmt(v) for v in s] for u, s in rows]
    if warnings and not rows:
        lines = [["warning", w] for w in warnings]
    elif warnings:
        log.warning("; ".join(warnings))
    path = Path(config.out) / "sobol.csv"
    write_rows(path, ["subset"] + [f"index_{q}" for q in range(n_qoi)], lines)
    return path


def density_report(config: StudyConfig, state=None) -> Path:
    """``density`` subcommand: KDE of each QoI from surrogate samples."""
    if state is None:
        _, state = build_surrogate(config)
    n_z = len(state.split(next(iter(state.accepted)))[1])
    rng = np.random.default_rng(config.seed + 1)
    samples = rng.uniform(-1.0, 1.0, size=(config.n_density, n_z))
    values = np.concatenate(
        [state.evaluate(samples[i:i + 10_000]) for i in range(0, len(samples), 10_000)]
    )
    lines = []
    for q in range(values.shape[1]):
        v = values[:, q]
        pad = 3.0 * v.std()
        grid = np.linspace(v.min() - pad, v.max() + pad, config.n_density_grid)
        try:
            dens = kde_density(v, grid)
        except ValueError as exc:
            lines.append([q, "warning", str(exc)])
            continue
        lines += [[q, fmt(x), fmt(d)] for x, d in zip(grid, dens)]
    path = Path(config.out) / "density.csv"
    write_rows(path, ["qoi", "x", "density"], lines)
    return path


__all__ = [
    "ErrorReport",
    "StudyConfig",
    "build_ensemble",
    "build_surrogate",
    "compare_study",
    "convergence_study",
    "density_report",
    "make_driver",
    "reference_values",
    "run_study",
    "sobol_report",
    "sobol_table",
    "validation_set",
]
