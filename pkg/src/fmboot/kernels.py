"""
Smoothing kernels and their induced (self-convolution) kernels.

Three families are supported, selected by name:

``"truncated"``
    ``k(x) = 1{|x| <= 1}``; induces the Bartlett kernel on ``[-2, 2]``.
``"bartlett"``
    ``k(x) = (1 - |x|)+``; induces the Parzen kernel.
``"bessel_qs"``
    ``k(x) = sqrt(5 pi / 8) J1(6 pi x / 5) / x``; induces the Quadratic
    Spectral kernel.

All discrete sums over the Bessel kernel are truncated at ``|x| <= cutoff``
(40 by default), since the kernel has unbounded support.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .exceptions import BandwidthWarning, ConfigError
from .numerics import bessel_j1

__all__ = [
    "KernelSpec",
    "get_kernel",
    "eval_kernel",
    "eval_induced",
    "self_convolution",
    "qs_kernel",
    "kernel_weights",
    "induced_riemann",
    "kappa_hat",
    "check_bandwidth",
    "KERNEL_NAMES",
]

KERNEL_NAMES = ("truncated", "bartlett", "bessel_qs")
_QS_SCALE = 6.0 * math.pi / 5.0
_QS_AMP = math.sqrt(5.0 * math.pi / 8.0)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family with its normalizing constants.

    ``kappa1`` and ``kappa2`` are the integrals of ``k`` and ``k**2``;
    ``char_exponent`` is the characteristic exponent ``q`` of the induced
    kernel. ``cutoff`` bounds ``|x|`` in every discrete sum.
    """

    family: str
    kappa1: float
    kappa2: float
    char_exponent: int
    cutoff: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_NAMES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.kappa2 <= 0:
            raise ConfigError("kappa2 must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa1 / self.kappa2

    @property
    def compact(self) -> bool:
        return self.family != "bessel_qs"


def get_kernel(name: str, cutoff: float | None = None) -> KernelSpec:
    """Look up a kernel by its configuration name."""
    name = name.lower()
    if name == "truncated":
        return KernelSpec("truncated", 2.0, 2.0, 1, 1.0)
    if name == "bartlett":
        return KernelSpec("bartlett", 1.0, 2.0 / 3.0, 2, 1.0)
    if name in ("bessel_qs", "qs"):
        return KernelSpec(
            "bessel_qs",
            math.sqrt(5.0 * math.pi / 2.0),
            2.0 * math.pi,
            2,
            40.0 if cutoff is None else float(cutoff),
        )
    raise ConfigError(f"unknown kernel {name!r}; expected one of {KERNEL_NAMES}")


def eval_kernel(spec: KernelSpec, x):
    """Evaluate ``k(x)`` exactly (no truncation for the Bessel family)."""
    xa = np.asarray(x, dtype=float)
    ax = np.abs(xa)
    if spec.family == "truncated":
        out = (ax <= 1.0).astype(float)
    elif spec.family == "bartlett":
        out = np.clip(1.0 - ax, 0.0, None)
    else:
        nz = ax > 0
        safe = np.where(nz, xa, 1.0)
        out = np.where(nz, _QS_AMP * bessel_j1(_QS_SCALE * safe) / safe, _QS_AMP * 0.6 * math.pi)
    if xa.ndim == 0:
        return float(out)
    return out


def _truncated_eval(spec, x):
    x = np.asarray(x, dtype=float)
    vals = eval_kernel(spec, x)
    if spec.family == "bessel_qs":
        vals = np.where(np.abs(x) <= spec.cutoff, vals, 0.0)
    return vals


def qs_kernel(x):
    """Analytic Quadratic Spectral kernel (reference form from the HAC literature)."""
    x = np.asarray(x, dtype=float)
    z = _QS_SCALE * x
    nz = np.abs(x) > 1e-4
    zs = np.where(nz, z, 1.0)
    xs = np.where(nz, x, 1.0)
    val = 25.0 / (12.0 * math.pi**2 * xs**2) * (np.sin(zs) / zs - np.cos(zs))
    # series near zero: 1 - z^2/10 + z^4/280
    small = 1.0 - z**2 / 10.0 + z**4 / 280.0
    out = np.where(nz, val, small)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# induced kernels


def _closed_induced(spec, a):
    ax = np.abs(np.asarray(a, dtype=float))
    if spec.family == "truncated":
        return np.clip(1.0 - ax / 2.0, 0.0, None)
    h = ax / 2.0
    inner = 1.0 - 6.0 * h**2 + 6.0 * h**3
    outer = 2.0 * (1.0 - h) ** 3
    return np.where(ax <= 1.0, inner, np.where(ax <= 2.0, outer, 0.0))


# Sampling step and half-width for the band-limited Bessel self-convolution.
# k_J has Fourier support |lambda| <= 6 pi / 5, so the trapezoid sum over a
# grid with step < 0.83 is exact; the only error is the truncation at _QS_HALF.
_QS_STEP = 0.01
_QS_HALF = 2000.0
_QS_AMAX = 1000.0


@lru_cache(maxsize=1)
def _qs_induced_spline():
    spec = get_kernel("bessel_qs")
    n = int(round(_QS_HALF / _QS_STEP))
    b = np.arange(-n, n + 1) * _QS_STEP
    f = eval_kernel(spec, b)
    m = int(round(_QS_AMAX / _QS_STEP))
    size = 1 << int(math.ceil(math.log2(2 * f.size)))
    ff = np.fft.rfft(f, size)
    corr = np.fft.irfft(ff * np.conj(ff), size)[: m + 1]
    vals = corr * _QS_STEP / spec.kappa2
    a = np.arange(m + 1) * _QS_STEP
    return CubicSpline(a, vals)


def self_convolution(spec: KernelSpec, a):
    """Numeric self-convolution ``kappa2^{-1} int k(b - a) k(b) db``.

    Compact kernels use adaptive quadrature split at the kernel breakpoints.
    The Bessel kernel uses the exact band-limited trapezoid sum, cached on a
    grid and interpolated by a cubic spline.
    """
    aa = np.asarray(a, dtype=float)
    if spec.family == "bessel_qs":
        ax = np.abs(aa)
        out = np.where(ax <= _QS_AMAX, _qs_induced_spline()(np.minimum(ax, _QS_AMAX)), 0.0)
        return float(out) if aa.ndim == 0 else out

    def one(av):
        lo, hi = max(-1.0, av - 1.0), min(1.0, av + 1.0)
        if lo >= hi:
            return 0.0
        pts = sorted({p for p in (av, 0.0) if lo < p < hi})
        val, _ = integrate.quad(
            lambda b: eval_kernel(spec, b - av) * eval_kernel(spec, b),
            lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-13, limit=200,
        )
        return val / spec.kappa2

    out = np.vectorize(one, otypes=[float])(aa)
    return float(out) if aa.ndim == 0 else out


def eval_induced(spec: KernelSpec, a):
    """Induced kernel ``k*(a)``; closed forms for compact families."""
    if spec.family == "bessel_qs":
        return self_convolution(spec, a)
    out = _closed_induced(spec, a)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# finite-sample quantities


def kernel_weights(spec: KernelSpec, bandwidth: float, max_lag: int) -> np.ndarray:
    """Weights ``k(s / B)`` for ``s = -L, ..., L`` with ``L <= max_lag``.

    ``L`` is the largest lag inside the (truncated) support, so the returned
    array has odd length ``2 L + 1`` and is centred on ``s = 0``.
    """
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    reach = int(math.floor(spec.cutoff * bandwidth + 1e-12))
    lag = max(0, min(int(max_lag), reach))
    return _weights_cached(spec, float(bandwidth), lag)


@lru_cache(maxsize=256)
def _weights_cached(spec, bandwidth, lag):
    s = np.arange(-lag, lag + 1, dtype=float)
    w = _truncated_eval(spec, s / bandwidth)
    w.setflags(write=False)
    return w


def induced_riemann(spec: KernelSpec, s: int, bandwidth: float, T: int) -> float:
    """Riemann-sum approximation ``k*_T(s / B)`` of the induced kernel."""
    s = int(s)
    lo = max(1 - T, 1 - T + s)
    hi = min(T - 1, T - 1 + s)
    if lo > hi:
        return 0.0
    t = np.arange(lo, hi + 1, dtype=float)
    vals = _truncated_eval(spec, (t - s) / bandwidth) * _truncated_eval(spec, t / bandwidth)
    return float(np.sum(vals) / (spec.kappa2 * bandwidth))


def kappa_hat(spec: KernelSpec, j: int, bandwidth: float, T: int) -> float:
    """Discrete estimate ``B^{-1} sum_{|s| < T} k(s / B)^j`` of ``kappa_j``."""
    if j not in (1, 2):
        raise ConfigError("j must be 1 or 2")
    if bandwidth <= 0 or T < 2:
        raise ConfigError("need bandwidth > 0 and T >= 2")
    w = kernel_weights(spec, bandwidth, T - 1)
    return float(np.sum(w**j) / bandwidth)


def check_bandwidth(bandwidth: float, T: int, stacklevel: int = 3) -> bool:
    """Warn when ``B`` falls outside ``(T^{1/4}, T^{1/2})``.

    Returns True when the bandwidth lies inside the window.
    """
    lo, hi = T**0.25, T**0.5
    if lo < bandwidth < hi:
        return True
    warnings.warn(
        f"bandwidth {bandwidth:g} outside ({lo:.3g}, {hi:.3g}) for T={T}; "
        "higher-order accuracy needs T^(1/4) << B << T^(1/2)",
        BandwidthWarning,
        stacklevel=stacklevel,
    )
    return False
