"""
fmboot: fast moving-average bootstrap for dependent data.

Moment indicators are smoothed with a kernel, the smoothed indicators are
resampled as if they were i.i.d., and confidence intervals and regions are
obtained by inverting studentized statistics against the bootstrap
quantiles. The package also contains a GEL estimation layer and an
ACD(1,1) Monte Carlo harness.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BandwidthWarning,
    ConfigError,
    DegenerateVarianceError,
    DomainViolation,
    FMBError,
)
from .kernels import KernelSpec, get_kernel  # noqa: E402
from .numerics import Rng  # noqa: E402
from .smoothing import MomentSeries, SmoothedSeries, smooth_series  # noqa: E402
from .hac import LongRunCov, lr_cov_lagform, lr_cov_smoothed, lr_scalar  # noqa: E402
from .statistics import (  # noqa: E402
    BootstrapDraws,
    bootstrap_quantile,
    q_star,
    q_star_draws,
    q_stat,
    s_star,
    s_star_draws,
    s_stat,
)
from .inference import (  # noqa: E402
    ConfidenceCurvePoints,
    ConfidenceInterval,
    confidence_curve,
    confidence_distribution,
    confidence_region,
    invert_one_sided,
    invert_two_sided,
)
from .gel import GelEstimate, GelProblem, RhoFamily, outer_beta  # noqa: E402
from .acd import ACDParams, acd_moments, simulate_acd, summary_stats  # noqa: E402

__all__ = [
    "__version__",
    "ACDParams",
    "BandwidthWarning",
    "BootstrapDraws",
    "ConfidenceCurvePoints",
    "ConfidenceInterval",
    "ConfigError",
    "DegenerateVarianceError",
    "DomainViolation",
    "FMBError",
    "GelEstimate",
    "GelProblem",
    "KernelSpec",
    "LongRunCov",
    "MomentSeries",
    "RhoFamily",
    "Rng",
    "SmoothedSeries",
    "acd_moments",
    "bootstrap_quantile",
    "confidence_curve",
    "confidence_distribution",
    "confidence_region",
    "get_kernel",
    "invert_one_sided",
    "invert_two_sided",
    "lr_cov_lagform",
    "lr_cov_smoothed",
    "lr_scalar",
    "outer_beta",
    "q_star",
    "q_star_draws",
    "q_stat",
    "s_star",
    "s_star_draws",
    "s_stat",
    "simulate_acd",
    "smooth_series",
    "summary_stats",
]
