"""
Test statistics and the i.i.d. resampling engine.

``S`` is the studentized smoothed mean for a scalar estimating function and
``Q`` its quadratic-form analogue for a vector of moment conditions. Their
bootstrap versions resample the smoothed indicators evaluated at the
estimate, so no re-estimation happens inside the bootstrap loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DegenerateVarianceError, DomainViolation
from .hac import lr_cov_smoothed, lr_scalar
from .kernels import KernelSpec
from .numerics import Rng, pseudo_inverse
from .smoothing import SmoothedSeries, smooth_series

__all__ = [
    "BootstrapDraws",
    "s_stat",
    "ScalarStatistic",
    "resample_smoothed",
    "s_star",
    "q_stat",
    "q_star",
    "q_star_from",
    "s_star_draws",
    "q_star_draws",
    "bootstrap_quantile",
]

# cap on R * T * r floats materialised per chunk of bootstrap replicates
_CHUNK_FLOATS = 2_000_000


@dataclass
class BootstrapDraws:
    """Bootstrap replicates of ``S*`` or ``Q*`` plus the stream that made them."""

    replicates: np.ndarray
    kind: str
    seed: int | None = None
    stream_id: int | None = None
    ranks: np.ndarray | None = None
    _sorted: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.replicates = np.asarray(self.replicates, dtype=float).ravel()
        if self.replicates.size < 1:
            raise ValueError("need at least one replicate")
        if not np.all(np.isfinite(self.replicates)):
            raise ValueError("bootstrap replicates must be finite")
        if self.kind not in ("S", "Q"):
            raise ValueError("kind must be 'S' or 'Q'")

    @property
    def R(self) -> int:
        return self.replicates.size

    @property
    def sorted(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.replicates)
        return self._sorted


def bootstrap_quantile(draws: BootstrapDraws, p: float) -> float:
    """Type-1 empirical quantile: the ``ceil(p R)``-th order statistic."""
    if not 0.0 < p < 1.0:
        raise DomainViolation(f"p must lie in (0, 1), got {p}")
    R = draws.R
    k = max(1, math.ceil(p * R - 1e-9))
    return float(draws.sorted[min(k, R) - 1])


# ---------------------------------------------------------------------------
# scalar pipeline


class ScalarStatistic:
    """``theta -> S(theta)`` for a scalar estimating function.

    Parameters
    ----------
    psi : callable
        Maps a parameter value to the length-T raw indicator series.
    spec : KernelSpec
    bandwidth : float
    """

    def __init__(self, psi: Callable[[float], np.ndarray], spec: KernelSpec, bandwidth: float,
                 use_kappa_hat: bool = False):
        self.psi = psi
        self.spec = spec
        self.bandwidth = float(bandwidth)
        self.use_kappa_hat = use_kappa_hat
        self._warned = False

    def smoothed(self, theta: float) -> SmoothedSeries:
        raw = np.asarray(self.psi(theta), dtype=float).reshape(-1, 1)
        sm = smooth_series(raw, self.spec, self.bandwidth, -0.5, warn=not self._warned)
        self._warned = True
        return sm

    def __call__(self, theta: float) -> float:
        sm = self.smoothed(theta)
        # Var(T^{1/2} psibar_T) is B kappa1^2 LRV under the B^{-1/2} scaling,
        # while lr_scalar estimates kappa1^2 LRV; the factor B restores
        # pivotality and makes S^2 equal the uncentred r = 1 quadratic form.
        var = sm.bandwidth * lr_scalar(sm, self.use_kappa_hat)
        return math.sqrt(sm.T) * float(sm.values.mean()) / math.sqrt(var)


def s_stat(psi: Callable[[float], np.ndarray], spec: KernelSpec, bandwidth: float, at: float,
           use_kappa_hat: bool = False) -> float:
    """Studentized smoothed mean ``T^{1/2} psibar_T(at) / (B sigma_psi(at))^{1/2}``."""
    return ScalarStatistic(psi, spec, bandwidth, use_kappa_hat)(at)


def s_star(resampled) -> float:
    """``T^{1/2} mean / sqrt(mean of squares)`` of one resampled series."""
    x = np.asarray(resampled, dtype=float).ravel()
    ss = float(x @ x) / x.size
    if not ss > 0:
        raise DegenerateVarianceError("bootstrap sample has zero second moment")
    return math.sqrt(x.size) * float(x.mean()) / math.sqrt(ss)


# ---------------------------------------------------------------------------
# resampling


def _pool(sm: SmoothedSeries, recenter: bool) -> np.ndarray:
    pool = sm.pool()
    if recenter:
        # constant columns recentre to exact zeros, not rounding residue
        const = np.ptp(pool, axis=0) <= 1e-14 * np.max(np.abs(pool), axis=0)
        pool = pool - pool.mean(axis=0)
        pool[:, const] = 0.0
    return pool


def resample_smoothed(sm: SmoothedSeries, recenter: bool, rng: Rng) -> np.ndarray:
    """Draw T rows uniformly with replacement from ``{B^{1/2} g_{T,t}}``.

    With ``recenter`` the pool is shifted to mean zero first.
    """
    pool = _pool(sm, recenter)
    return pool[rng.index(sm.T, size=sm.T)]


def _chunks(R, T, r):
    step = max(1, _CHUNK_FLOATS // max(1, T * r))
    for start in range(0, R, step):
        yield start, min(R, start + step)


def s_star_draws(sm: SmoothedSeries, R: int, rng: Rng) -> BootstrapDraws:
    """R replicates of ``S*``; the scalar pool is not recentred."""
    if sm.r != 1:
        raise ValueError("S* needs a single-column series")
    pool = _pool(sm, recenter=False)[:, 0]
    T = sm.T
    out = np.empty(R)
    for a, b in _chunks(R, T, 1):
        x = pool[rng.index(T, size=(b - a, T))]
        ss = np.einsum("ij,ij->i", x, x) / T
        if np.any(ss <= 0):
            raise DegenerateVarianceError("bootstrap sample has zero second moment")
        out[a:b] = math.sqrt(T) * x.mean(axis=1) / np.sqrt(ss)
    return BootstrapDraws(out, "S", rng.seed, rng.stream_id)


# ---------------------------------------------------------------------------
# multivariate pipeline


def q_stat(raw, spec: KernelSpec, bandwidth: float, center: bool = True,
           use_kappa_hat: bool = False, warn: bool = True):
    """``T gbar' Omega^+ gbar`` and the rank of ``Omega``.

    Returns
    -------
    value : float
    rank : int
        Degrees of freedom for the chi-square reference. A rank of zero
        yields a value of 0.
    """
    sm = smooth_series(raw, spec, bandwidth, -1.0, warn=warn)
    return q_from_smoothed(sm, center, use_kappa_hat)


def q_from_smoothed(sm: SmoothedSeries, center: bool = True, use_kappa_hat: bool = False):
    lrc = lr_cov_smoothed(sm.rescaled(-1.0), center=center, use_kappa_hat=use_kappa_hat)
    gbar = sm.rescaled(-1.0).values.mean(axis=0)
    if lrc.rank == 0:
        return 0.0, 0
    return float(sm.T * gbar @ lrc.inverse @ gbar), int(lrc.rank)


def q_star_from(resampled):
    """``T m' Omega*^+ m`` for one resample (rows already recentred).

    ``Omega*`` is the uncentred second-moment matrix of the resample, so it
    is re-estimated for every replicate.
    """
    x = np.asarray(resampled, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    T = x.shape[0]
    m = x.mean(axis=0)
    om = x.T @ x / T
    inv, rank = pseudo_inverse(om)
    if rank == 0:
        return 0.0
    return float(T * m @ inv @ m)


def q_star(sm: SmoothedSeries, rng: Rng) -> float:
    """One ``Q*`` replicate from the recentred pool."""
    return q_star_from(resample_smoothed(sm, True, rng))


def q_star_draws(sm: SmoothedSeries, R: int, rng: Rng) -> BootstrapDraws:
    """R replicates of ``Q*``; replicates consume the stream in order."""
    pool = _pool(sm, recenter=True)
    T, r = pool.shape
    out = np.empty(R)
    ranks = np.empty(R, dtype=int)
    for a, b in _chunks(R, T, r):
        x = pool[rng.index(T, size=(b - a, T))]
        m = x.mean(axis=1)
        om = np.einsum("kti,ktj->kij", x, x) / T
        inv, rank = pseudo_inverse(om)
        out[a:b] = T * np.einsum("ki,kij,kj->k", m, inv, m)
        ranks[a:b] = rank
    return BootstrapDraws(out, "Q", rng.seed, rng.stream_id, ranks=ranks)
