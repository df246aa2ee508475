"""
Kernel smoothing of moment-indicator series.

The smoothed indicator at time ``t`` is

    B^e * sum_{s = t-T}^{t-1} k(s / B) * raw[t - s]

with ``e = -1/2`` for the scalar pipeline and ``e = -1`` for the GEL
pipeline. The two are related by an exact factor ``sqrt(B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import signal

from .exceptions import ConfigError, PropagationError
from .kernels import KernelSpec, check_bandwidth, kernel_weights

__all__ = [
    "MomentSeries",
    "SmoothedSeries",
    "as_moment_series",
    "smooth_series",
    "smoothing_matrix",
    "taper_weights",
]

_MATRIX_MAX_T = 1500


@dataclass(frozen=True)
class MomentSeries:
    """T x r matrix of raw moment indicators, one row per time index."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ConfigError("moment series must be a T x r matrix")
        if v.shape[0] < 1:
            raise ConfigError("moment series must have at least one row")
        if not np.all(np.isfinite(v)):
            bad = int(np.argwhere(~np.isfinite(v))[0, 0])
            raise PropagationError(f"non-finite moment indicator at row {bad}", row=bad)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SmoothedSeries:
    """Kernel-smoothed indicators together with the settings that made them."""

    values: np.ndarray
    spec: KernelSpec
    bandwidth: float
    scale_exponent: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]

    def pool(self) -> np.ndarray:
        """The rows ``B^{1/2} g_{T,t}`` that the bootstrap resamples."""
        # B^{1/2} times the B^{-1}-scaled series, whichever scaling is stored
        return self.values * self.bandwidth ** (-0.5 - self.scale_exponent)

    def rescaled(self, scale_exponent: float) -> "SmoothedSeries":
        """Same series under the other scaling convention (a pure multiply)."""
        factor = self.bandwidth ** (scale_exponent - self.scale_exponent)
        return SmoothedSeries(self.values * factor, self.spec, self.bandwidth, scale_exponent, self.meta)


def as_moment_series(raw) -> MomentSeries:
    return raw if isinstance(raw, MomentSeries) else MomentSeries(raw)


@lru_cache(maxsize=64)
def _matrix_cached(spec, bandwidth, T):
    w = kernel_weights(spec, bandwidth, T - 1)
    L = (w.size - 1) // 2
    i = np.arange(T)
    d = i[:, None] - i[None, :]
    m = np.where(np.abs(d) <= L, w[np.clip(d + L, 0, 2 * L)], 0.0)
    m.setflags(write=False)
    return m


def smoothing_matrix(spec: KernelSpec, bandwidth: float, T: int) -> np.ndarray:
    """T x T matrix ``W`` with ``W[t, j] = k((t - j) / B)`` (unscaled)."""
    return _matrix_cached(spec, float(bandwidth), int(T))


def _convolve(raw, spec, bandwidth, full_support):
    T = raw.shape[0]
    if not full_support and T <= _MATRIX_MAX_T:
        return smoothing_matrix(spec, bandwidth, T) @ raw
    w = kernel_weights(spec, bandwidth, T - 1)
    L = (w.size - 1) // 2
    out = signal.convolve(raw, w[:, None], mode="full")
    return out if full_support else out[L:L + T]


def smooth_series(raw, spec: KernelSpec, bandwidth: float, scale_exponent: float = -1.0,
                  *, full_support: bool = False, warn: bool = True) -> SmoothedSeries:
    """Convolve a raw moment series with the kernel.

    Parameters
    ----------
    raw : MomentSeries or array_like
        T x r (or length-T) raw indicators.
    spec : KernelSpec
    bandwidth : float
        Bandwidth ``B > 0``.
    scale_exponent : {-0.5, -1.0}
        Power of ``B`` applied to the weighted sum.
    full_support : bool
        Also return rows for times outside ``1..T`` where the convolution
        is non-zero (zero-extension of the raw series). The resulting array
        has ``T + 2L`` rows. Only used to check algebraic identities.
    warn : bool
        Emit :class:`BandwidthWarning` when ``B`` is outside the
        ``(T^{1/4}, T^{1/2})`` window.
    """
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    if scale_exponent not in (-0.5, -1.0):
        raise ConfigError("scale_exponent must be -1/2 or -1")
    ms = as_moment_series(raw)
    if warn:
        check_bandwidth(bandwidth, ms.T)
    vals = _convolve(ms.values, spec, bandwidth, full_support) * bandwidth**scale_exponent
    if not np.all(np.isfinite(vals)):
        bad = int(np.argwhere(~np.isfinite(vals))[0, 0])
        raise PropagationError(f"non-finite smoothed value at row {bad}", row=bad)
    return SmoothedSeries(vals, spec, float(bandwidth), float(scale_exponent))


def taper_weights(T: int, spec: KernelSpec, bandwidth: float) -> np.ndarray:
    """Tapering window ``w(t) = B^{-1/2} sum_{s=1-t}^{T-t} k(s / B)``.

    With these weights ``T^{1/2} * mean(smoothed) = T^{-1/2} sum_t w(t) raw[t]``
    for the ``-1/2`` scaling.
    """
    w = kernel_weights(spec, bandwidth, T - 1)
    L = (w.size - 1) // 2
    cs = np.concatenate([[0.0], np.cumsum(w)])
    t = np.arange(1, T + 1)
    lo = np.clip(1 - t + L, 0, 2 * L + 1)
    hi = np.clip(T - t + L + 1, 0, 2 * L + 1)
    return (cs[hi] - cs[lo]) / np.sqrt(bandwidth)
