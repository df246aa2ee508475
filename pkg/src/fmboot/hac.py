"""
Long-run covariance estimation.

Two estimators are provided. :func:`lr_cov_smoothed` is the automatic form
built from the smoothed indicators and is positive semi-definite by
construction. :func:`lr_cov_lagform` is the classical weighted sum of sample
lag covariances with the Riemann-sum induced kernel as weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateVarianceError
from .kernels import KernelSpec, kappa_hat, kernel_weights
from .numerics import pseudo_inverse
from .smoothing import SmoothedSeries, as_moment_series

__all__ = [
    "LongRunCov",
    "kappa_constants",
    "lr_cov_smoothed",
    "lr_scalar",
    "lag_cov",
    "lr_cov_lagform",
]


@dataclass(frozen=True)
class LongRunCov:
    omega: np.ndarray
    rank: int
    inverse: np.ndarray
    spec: KernelSpec
    bandwidth: float


def kappa_constants(spec: KernelSpec, bandwidth: float, T: int, use_kappa_hat: bool = False):
    """Return ``(kappa1, kappa2)``, analytic or their discrete estimates."""
    if use_kappa_hat:
        return kappa_hat(spec, 1, bandwidth, T), kappa_hat(spec, 2, bandwidth, T)
    return spec.kappa1, spec.kappa2


def _omega_factor(sm: SmoothedSeries, use_kappa_hat: bool) -> float:
    k1, k2 = kappa_constants(sm.spec, sm.bandwidth, sm.T, use_kappa_hat)
    # values = B^e * (unscaled sum); the estimator is written for e = -1
    return k1**2 * sm.bandwidth ** (-1.0 - 2.0 * sm.scale_exponent) / (k2 * sm.T)


def lr_cov_smoothed(sm: SmoothedSeries, center: bool = True, use_kappa_hat: bool = False,
                    rank_tol: float = 1e-10) -> LongRunCov:
    """Automatic PSD long-run covariance from smoothed indicators.

    ``kappa1^2 B / (kappa2 T) * sum_t (g_t - gbar)(g_t - gbar)'`` for the
    ``B^{-1}`` scaling (the ``B^{-1/2}`` scaling drops the leading ``B``).
    """
    g = sm.values
    if center:
        g = g - g.mean(axis=0)
    omega = _omega_factor(sm, use_kappa_hat) * (g.T @ g)
    omega = 0.5 * (omega + omega.T)
    inv, rank = pseudo_inverse(omega, rank_tol)
    return LongRunCov(omega, rank, inv, sm.spec, sm.bandwidth)


def lr_scalar(sm: SmoothedSeries, use_kappa_hat: bool = False) -> float:
    """Long-run variance ``kappa1^2 (T kappa2)^{-1} sum_t psi_{T,t}^2`` (uncentred).

    Expects a single-column series under the ``B^{-1/2}`` scaling; the
    ``B^{-1}`` scaling is converted first.
    """
    if sm.r != 1:
        raise ValueError("lr_scalar needs a single-column series")
    psi = sm.values[:, 0] * sm.bandwidth ** (-0.5 - sm.scale_exponent)
    k1, k2 = kappa_constants(sm.spec, sm.bandwidth, sm.T, use_kappa_hat)
    val = k1**2 * float(psi @ psi) / (sm.T * k2)
    if not val > 0:
        raise DegenerateVarianceError("long-run variance is zero")
    return val


def lag_cov(raw, s: int) -> np.ndarray:
    """Sample lag-``s`` covariance ``T^{-1} sum_t g_t g_{t+s}'``."""
    g = as_moment_series(raw).values
    T = g.shape[0]
    s = int(s)
    if abs(s) >= T:
        raise ValueError("|s| must be below T")
    if s >= 0:
        return g[: T - s].T @ g[s:] / T
    return g[-s:].T @ g[: T + s] / T


def lr_cov_lagform(raw, spec: KernelSpec, bandwidth: float) -> np.ndarray:
    """``kappa1^2 sum_{|s|<T} k*_T(s / B) Gamma_s`` with Riemann-sum weights."""
    g = as_moment_series(raw).values
    T, r = g.shape
    # autocorrelation of the weight vector gives k*_T(s / B) for every lag
    w = kernel_weights(spec, bandwidth, T - 1)
    L = (w.size - 1) // 2
    star = np.correlate(w, w, mode="full") / (spec.kappa2 * bandwidth)
    smax = min(T - 1, 2 * L)
    omega = np.zeros((r, r))
    for s in range(-smax, smax + 1):
        ws = star[2 * L + s]
        if ws != 0.0:
            omega += ws * lag_cov(g, s)
    omega *= spec.kappa1**2
    return 0.5 * (omega + omega.T)
