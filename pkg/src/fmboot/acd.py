"""
ACD(1,1) durations: simulation, conditional-mean recursion, moment
conditions and descriptive statistics.

    x_l = eps_l m_l,  m_l = omega + beta1 x_{l-1} + beta2 m_{l-1},  eps ~ Exp(1)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .exceptions import ConfigError, DegenerateVarianceError, DomainViolation
from .gel import GelProblem
from .kernels import get_kernel
from .numerics import Rng

__all__ = [
    "ACDParams",
    "simulate_acd",
    "acd_recursion",
    "acd_moments",
    "acd_moments_free",
    "acd_jacobian",
    "acd_problem",
    "summary_stats",
    "read_series_csv",
    "write_series_csv",
    "omega_from_mean",
]


@dataclass(frozen=True)
class ACDParams:
    omega: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainViolation("omega must be positive")
        if self.beta1 < 0 or self.beta2 < 0:
            raise DomainViolation("beta1 and beta2 must be non-negative")
        if not self.beta1 + self.beta2 < 1:
            raise DomainViolation("stationarity needs beta1 + beta2 < 1")

    @property
    def persistence(self) -> float:
        return self.beta1 + self.beta2

    @property
    def mean(self) -> float:
        return self.omega / (1.0 - self.persistence)


def simulate_acd(params: ACDParams, N: int, burn_in: int = 500, rng: Rng | None = None,
                 seed: int = 0, stream_id: int = 0) -> np.ndarray:
    """Simulate ``N`` durations after discarding ``burn_in`` draws.

    The recursion starts from the unconditional mean ``omega / (1 - b1 - b2)``.
    """
    if N < 2:
        raise DomainViolation("N must be at least 2")
    if burn_in < 0:
        raise DomainViolation("burn_in must be non-negative")
    rng = Rng(seed, stream_id) if rng is None else rng
    n = N + burn_in
    eps = rng.exponential(size=n)
    w, b1, b2 = params.omega, params.beta1, params.beta2
    x = np.empty(n)
    m = params.mean
    x_prev = m
    for i in range(n):
        if i:
            m = w + b1 * x_prev + b2 * m
        x_prev = eps[i] * m
        x[i] = x_prev
    return x[burn_in:]


def _check_data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise DomainViolation("need at least two observations")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainViolation("durations must be positive and finite")
    return x


def _check_beta(omega, b1, b2):
    # moments stay defined slightly outside the closed quadrant, which
    # finite differences at the box edge rely on
    if not omega > 0 or b1 < -1e-3 or b2 < -1e-3 or not b1 + b2 < 1:
        raise DomainViolation(
            f"parameters outside the stationary region: omega={omega}, beta1={b1}, beta2={b2}")


def acd_recursion(data, params):
    """Conditional means and their derivatives along the sample.

    Parameters
    ----------
    data : array_like
        Positive durations ``x_1..x_N``.
    params : ACDParams or (omega, beta1, beta2)

    Returns
    -------
    m, dm_dbeta1, dm_dbeta2, dm_domega : ndarray
        Each of length ``N``. The derivative recursions start from the
        derivatives of the unconditional mean.
    """
    x = _check_data(data)
    if isinstance(params, ACDParams):
        w, b1, b2 = params.omega, params.beta1, params.beta2
    else:
        w, b1, b2 = (float(v) for v in params)
    _check_beta(w, b1, b2)
    s = 1.0 - b1 - b2
    a = [1.0, -b2]
    # m_l = b2 m_{l-1} + (w + b1 x_{l-1}), seeded at m_1 = w / s
    m = np.empty_like(x)
    m[0] = w / s
    if x.size > 1:
        drive = w + b1 * x[:-1]
        m[1:], _ = signal.lfilter([1.0], a, drive, zi=[b2 * m[0]])
    d1 = np.empty_like(x)
    d1[0] = w / s**2
    d2 = np.empty_like(x)
    d2[0] = w / s**2
    dw = np.empty_like(x)
    dw[0] = 1.0 / s
    if x.size > 1:
        d1[1:], _ = signal.lfilter([1.0], a, x[:-1], zi=[b2 * d1[0]])
        d2[1:], _ = signal.lfilter([1.0], a, m[:-1], zi=[b2 * d2[0]])
        dw[1:], _ = signal.lfilter([1.0], a, np.ones(x.size - 1), zi=[b2 * dw[0]])
    return m, d1, d2, dw


def acd_moments(data, beta, omega: float = 1.0) -> np.ndarray:
    """N x 3 moment indicators at ``beta = (beta1, beta2)`` with ``omega`` fixed.

    ``g1 = (x - m) / m^2 * dm/dbeta1``, ``g2`` likewise for ``beta2`` and
    ``g3 = x - omega / (1 - beta1 - beta2)``.
    """
    b1, b2 = (float(v) for v in np.asarray(beta, dtype=float).ravel())
    x = _check_data(data)
    m, d1, d2, _ = acd_recursion(x, (omega, b1, b2))
    u = (x - m) / m**2
    return np.column_stack([u * d1, u * d2, x - omega / (1.0 - b1 - b2)])


def acd_jacobian(data, beta, omega: float = 1.0) -> np.ndarray:
    """N x 3 x 2 derivatives of :func:`acd_moments` with respect to ``beta``.

    Uses the second-derivative recursions of the conditional mean, seeded
    like the first-derivative ones at the unconditional mean.
    """
    b1, b2 = (float(v) for v in np.asarray(beta, dtype=float).ravel())
    x = _check_data(data)
    m, d1, d2, _ = acd_recursion(x, (omega, b1, b2))
    s = 1.0 - b1 - b2
    a = [1.0, -b2]
    seed = 2.0 * omega / s**3
    d11 = seed * b2 ** np.arange(x.size)
    d12 = np.empty_like(x)
    d22 = np.empty_like(x)
    d12[0] = d22[0] = seed
    if x.size > 1:
        d12[1:], _ = signal.lfilter([1.0], a, d1[:-1], zi=[b2 * seed])
        d22[1:], _ = signal.lfilter([1.0], a, 2.0 * d2[:-1], zi=[b2 * seed])
    u = (x - m) / m**2
    du = (m - 2.0 * x) / m**3
    J = np.empty((x.size, 3, 2))
    J[:, 0, 0] = du * d1 * d1 + u * d11
    J[:, 0, 1] = du * d2 * d1 + u * d12
    J[:, 1, 0] = du * d1 * d2 + u * d12
    J[:, 1, 1] = du * d2 * d2 + u * d22
    J[:, 2, :] = -omega / s**2
    return J


def acd_moments_free(data, theta) -> np.ndarray:
    """N x 4 moment indicators at ``theta = (omega, beta1, beta2)``.

    Adds the score-like condition for ``omega`` in front of the three
    conditions of :func:`acd_moments`.
    """
    w, b1, b2 = (float(v) for v in np.asarray(theta, dtype=float).ravel())
    x = _check_data(data)
    m, d1, d2, dw = acd_recursion(x, (w, b1, b2))
    u = (x - m) / m**2
    return np.column_stack([u * dw, u * d1, u * d2, x - w / (1.0 - b1 - b2)])


def omega_from_mean(data, beta1: float, beta2: float) -> float:
    """Moment estimate ``(1 - beta1 - beta2) * mean(x)`` of ``omega``."""
    return (1.0 - beta1 - beta2) * float(np.mean(_check_data(data)))


def acd_problem(rho: str = "ET", kernel: str = "bessel_qs", bandwidth: float = 3.0,
                omega: float = 1.0, free_omega: bool = False, box=None) -> GelProblem:
    """GEL problem for the ACD(1,1) moment conditions.

    With ``free_omega`` the parameter is ``(omega, beta1, beta2)`` and four
    moment conditions are used; otherwise ``omega`` is held fixed.
    """
    spec = get_kernel(kernel)
    if free_omega:
        if box is None:
            box = ([1e-3, 0.0, 0.0], [1e3, 0.999, 0.999])
        return GelProblem(lambda d, th: acd_moments_free(d, th), 3, 4, rho, spec, bandwidth, box)
    if box is None:
        box = ([0.0, 0.0], [0.999, 0.999])
    return GelProblem(lambda d, b: acd_moments(d, b, omega), 2, 3, rho, spec, bandwidth, box,
                      jacobian_fn=lambda d, b: acd_jacobian(d, b, omega))


# ---------------------------------------------------------------------------
# descriptive statistics

SUMMARY_FIELDS = ("n", "min", "max", "median", "mean", "iqr", "sd", "skewness", "excess_kurtosis")


def summary_stats(series) -> dict:
    """Descriptive statistics of a series.

    Quantiles use linear interpolation (type 7), ``sd`` the ``N - 1``
    denominator, and skewness / excess kurtosis the biased moment ratios
    ``m3 / m2^{3/2}`` and ``m4 / m2^2 - 3``.

    Raises
    ------
    DomainViolation
        Fewer than two observations.
    DegenerateVarianceError
        Constant series (the moment ratios are undefined).
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise DomainViolation("need at least two observations")
    if not np.all(np.isfinite(x)):
        raise DomainViolation("series contains non-finite values")
    q25, q50, q75 = np.percentile(x, [25, 50, 75])
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d**2))
    if m2 <= 0 or m2 <= (1e-14 * max(1.0, abs(mean))) ** 2:
        raise DegenerateVarianceError("constant series: skewness and kurtosis undefined")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return {
        "n": int(x.size),
        "min": float(x.min()),
        "max": float(x.max()),
        "median": float(q50),
        "mean": mean,
        "iqr": float(q75 - q25),
        "sd": float(math.sqrt(np.sum(d**2) / (x.size - 1))),
        "skewness": m3 / m2**1.5,
        "excess_kurtosis": m4 / m2**2 - 3.0,
    }


def read_series_csv(path) -> np.ndarray:
    """Read a single numeric column; a non-numeric first row is a header."""
    path = Path(path)
    values = []
    with path.open(newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            if len(row) != 1:
                raise ConfigError(f"{path}: expected one column, found {len(row)} on line {i + 1}")
            try:
                values.append(float(row[0]))
            except ValueError:
                if i == 0 and not values:
                    continue
                raise ConfigError(f"{path}: non-numeric value {row[0]!r} on line {i + 1}") from None
    if not values:
        raise ConfigError(f"{path}: no data")
    return np.asarray(values)


def write_series_csv(path, series, header: str = "x") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([header])
        for v in np.asarray(series, dtype=float).ravel():
            w.writerow([repr(float(v))])
