from amisc.studio.metrics import kde_density, pn_aggregate, relative_linf_error, silverman_bandwidth
from amisc.studio.study import (
    ErrorReport,
    StudyConfig,
    compare_study,
    convergence_study,
    density_report,
    run_study,
    sobol_report,
)

__all__ = [
    "ErrorReport",
    "StudyConfig",
    "compare_study",
    "convergence_study",
    "density_report",
    "kde_density",
    "pn_aggregate",
    "relative_linf_error",
    "run_study",
    "silverman_bandwidth",
    "sobol_report",
]
