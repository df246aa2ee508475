"""
Numerical building blocks
=========================

Small, self-contained routines shared by the rest of the package:

* a counter-based, splittable random stream (:class:`Rng`),
* cyclic Jacobi eigen-decomposition and the Moore-Penrose inverse of small
  symmetric matrices (both work on stacks of matrices),
* the Bessel function of the first kind of order one,
* normal and chi-square distribution helpers,
* a secant root finder with bisection fallback.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .exceptions import DomainViolation, NoRootError, NonConvergenceError, NotPSDError

__all__ = [
    "Rng",
    "draw_uniform",
    "draw_exponential",
    "draw_index",
    "as_symmetric",
    "sym_eigen",
    "pseudo_inverse",
    "bessel_j1",
    "normal_cdf",
    "normal_quantile",
    "chi2_cdf",
    "chi2_sf",
    "chi2_quantile",
    "secant_root",
]

_U53 = 2.0**-53


class Rng:
    """Deterministic random stream addressed by ``(seed, stream_id)``.

    Backed by the Philox counter-based bit generator. The stream id is mixed
    into the key through ``SeedSequence.spawn_key`` so distinct ids give
    independent streams and the same pair always reproduces the same draws.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed < 2**64 and 0 <= stream_id < 2**64):
            raise DomainViolation("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream_id={self.stream_id})"

    def child(self, stream_id: int) -> "Rng":
        """Independent stream under the same seed (used per replicate)."""
        return Rng(self.seed, stream_id)

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        k = self._gen.integers(0, 2**53, size=size, dtype=np.int64)
        return (k + 0.5) * _U53

    def exponential(self, size=None):
        return -np.log(self.uniform(size))

    def index(self, n: int, size=None):
        if n <= 0:
            raise DomainViolation("draw_index needs n >= 1")
        return self._gen.integers(0, n, size=size, dtype=np.int64)

    def normal(self, size=None):
        return self._gen.standard_normal(size)


def draw_uniform(rng: Rng) -> float:
    return float(rng.uniform())


def draw_exponential(rng: Rng) -> float:
    return float(rng.exponential())


def draw_index(rng: Rng, n: int) -> int:
    return int(rng.index(n))


# ---------------------------------------------------------------------------
# symmetric matrices


def as_symmetric(m, atol: float = 1e-12) -> np.ndarray:
    """Validate and symmetrize a (stack of) square matrix.

    Asymmetry up to ``atol`` relative to the largest entry is averaged away;
    anything larger is rejected.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] < 1:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    mt = np.swapaxes(m, -1, -2)
    scale = np.max(np.abs(m)) if m.size else 0.0
    asym = np.max(np.abs(m - mt)) if m.size else 0.0
    if asym > atol * max(scale, 1e-300) and asym > 0:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (m + mt)


def sym_eigen(m, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of symmetric matrices by cyclic Jacobi sweeps.

    Parameters
    ----------
    m : array_like, shape (..., n, n)
        Symmetric matrix or stack of matrices.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol`` times the Frobenius norm of the input.
    max_sweeps : int
        Sweep budget before :class:`NonConvergenceError` is raised.

    Returns
    -------
    eigenvalues : ndarray, shape (..., n)
        In descending order.
    eigenvectors : ndarray, shape (..., n, n)
        Orthonormal columns matching ``eigenvalues``.
    """
    a = as_symmetric(m).copy()
    n = a.shape[-1]
    batch = a.shape[:-2]
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    norm = np.sqrt(np.sum(a * a, axis=(-2, -1)))
    offmask = ~np.eye(n, dtype=bool)

    def off(x):
        return np.sqrt(np.sum(np.where(offmask, x * x, 0.0), axis=(-2, -1)))

    for _ in range(max_sweeps):
        resid = off(a)
        if np.all(resid <= tol * norm):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                active = np.abs(apq) > 1e-300
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (a[..., q, q] - a[..., p, p]) / (2.0 * safe)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c = np.where(active, c, 1.0)[..., None]
                s = np.where(active, s, 0.0)[..., None]
                # A <- A J
                ap = a[..., :, p].copy()
                aq = a[..., :, q].copy()
                a[..., :, p] = c * ap - s * aq
                a[..., :, q] = s * ap + c * aq
                # A <- J^T A
                rp = a[..., p, :].copy()
                rq = a[..., q, :].copy()
                a[..., p, :] = c * rp - s * rq
                a[..., q, :] = s * rp + c * rq
                vp = v[..., :, p].copy()
                vq = v[..., :, q].copy()
                v[..., :, p] = c * vp - s * vq
                v[..., :, q] = s * vp + c * vq
    else:
        resid = off(a)
        if np.any(resid > tol * norm):
            worst = float(np.max(resid - tol * norm))
            raise NonConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps", residual=worst
            )

    w = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    if not batch:
        return w, v
    return w, v


def pseudo_inverse(m, rank_tol: float = 1e-10):
    """Moore-Penrose inverse of a positive semi-definite symmetric matrix.

    Eigenvalues at or below ``rank_tol * lambda_max`` are treated as zero.
    Works on a single matrix or a stack ``(..., n, n)``.

    Returns
    -------
    inverse : ndarray
    rank : int or ndarray of int
        Number of retained eigenvalues.

    Raises
    ------
    NotPSDError
        If an eigenvalue is below ``-rank_tol * lambda_max``.
    """
    w, v = sym_eigen(m)
    lam_max = np.maximum(w[..., 0], 0.0)
    lam_min = w[..., -1]
    if np.any(lam_min < -rank_tol * lam_max) and np.any(lam_min < 0):
        bad = lam_min < -rank_tol * lam_max
        worst = float(np.min(np.where(bad, lam_min, np.inf)))
        raise NotPSDError(f"matrix not PSD (eigenvalue {worst:.3e})", min_eigenvalue=worst)
    keep = w > rank_tol * lam_max[..., None]
    inv_w = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    inv = np.einsum("...ik,...k,...jk->...ij", v, inv_w, v)
    inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
    rank = keep.sum(axis=-1)
    if rank.ndim == 0:
        rank = int(rank)
    return inv, rank


# ---------------------------------------------------------------------------
# Bessel J1

# Below the seam the power series is summed directly; above it the Hankel
# asymptotic expansion is used. In float64 the series loses ~1e-8 to
# cancellation at |z| = 25, so the seam sits where both branches are < 1e-11.
BESSEL_SEAM = 12.0
_HANKEL_TERMS = 24


def _j1_series(z):
    h = 0.5 * z
    h2 = h * h
    term = h.copy()
    total = h.copy()
    j = 0
    while True:
        term = -term * h2 / ((j + 1) * (j + 2))
        total = total + term
        j += 1
        if np.all(np.abs(term) <= 1e-14 * np.abs(total)) or j > 200:
            return total


def _j1_asymptotic(z):
    # z > 0 here
    mu = 4.0
    p = np.ones_like(z)
    q = np.zeros_like(z)
    a = 1.0
    zk = np.ones_like(z)
    for k in range(1, _HANKEL_TERMS + 1):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0)
        zk = zk * z
        term = a / zk
        if k % 2 == 0:
            p = p + (-1) ** (k // 2) * term
        else:
            q = q + (-1) ** ((k - 1) // 2) * term
    chi = z - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * z)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(z):
    """Bessel function of the first kind, order one.

    Accepts scalars or arrays. Absolute error is below 1e-10 on the real line.
    """
    za = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(za)):
        raise DomainViolation("bessel_j1 needs finite arguments")
    x = np.abs(np.atleast_1d(za))
    out = np.empty_like(x)
    small = x <= BESSEL_SEAM
    if np.any(small):
        out[small] = _j1_series(x[small])
    if np.any(~small):
        out[~small] = _j1_asymptotic(x[~small])
    out = np.where(np.atleast_1d(za) < 0, -out, out)
    if za.ndim == 0:
        return float(out[0])
    return out.reshape(za.shape)


# ---------------------------------------------------------------------------
# distributions


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def normal_quantile(p: float) -> float:
    """Standard normal quantile (rational approximation plus a Halley step)."""
    if not 0.0 < p < 1.0:
        raise DomainViolation(f"probability must lie in (0, 1), got {p}")
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    elif p <= 1 - plow:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)
    else:
        q = math.sqrt(-2 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    # Halley refinement
    e = normal_cdf(x) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1 + 0.5 * x * u)


def _gamma_series(a, x):
    ap = a
    s = d = 1.0 / a
    for _ in range(10000):
        ap += 1.0
        d *= x / ap
        s += d
        if abs(d) < abs(s) * 1e-17:
            break
    return s * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a, x):
    # modified Lentz for the upper regularized gamma
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _check_df(df):
    if int(df) != df or df < 1:
        raise DomainViolation(f"degrees of freedom must be a positive integer, got {df}")


def chi2_cdf(x: float, df: int) -> float:
    """Chi-square CDF via the regularized lower incomplete gamma function."""
    _check_df(df)
    if x <= 0:
        return 0.0
    a, y = 0.5 * df, 0.5 * x
    if y < a + 1.0:
        return _gamma_series(a, y)
    return 1.0 - _gamma_cfrac(a, y)


def chi2_sf(x: float, df: int) -> float:
    _check_df(df)
    if x <= 0:
        return 1.0
    a, y = 0.5 * df, 0.5 * x
    if y < a + 1.0:
        return 1.0 - _gamma_series(a, y)
    return _gamma_cfrac(a, y)


@lru_cache(maxsize=4096)
def chi2_quantile(p: float, df: int) -> float:
    """Chi-square quantile by bisection on :func:`chi2_cdf`."""
    if not 0.0 < p < 1.0:
        raise DomainViolation(f"probability must lie in (0, 1), got {p}")
    _check_df(df)
    lo, hi = 0.0, max(1.0, float(df))
    while chi2_cdf(hi, df) < p:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# root finding


def secant_root(
    f: Callable[[float], float],
    x0: float,
    x1: float,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> float:
    """Secant iteration that falls back to bisection inside a known bracket.

    Stops when ``|f(x)| < tol`` or once a sign-changing bracket is narrower
    than ``tol``. Raises :class:`NoRootError` with the last iterate otherwise.
    """
    f0, f1 = float(f(x0)), float(f(x1))
    if not (math.isfinite(f0) and math.isfinite(f1)):
        raise NoRootError("function not finite at starting points", last_iterate=x1)
    if abs(f0) < tol:
        return float(x0)
    if abs(f1) < tol:
        return float(x1)
    bracket = (x0, f0, x1, f1) if f0 * f1 < 0 else None
    for _ in range(max_iter):
        if f1 != f0:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x2 = math.nan
        if bracket is not None:
            a, fa, b, fb = bracket
            lo, hi = min(a, b), max(a, b)
            if not (math.isfinite(x2) and lo < x2 < hi):
                x2 = 0.5 * (a + b)
        elif not math.isfinite(x2):
            raise NoRootError("secant step degenerate (flat function)", last_iterate=x1)
        f2 = float(f(x2))
        if not math.isfinite(f2):
            raise NoRootError("function not finite at iterate", last_iterate=x2)
        if abs(f2) < tol:
            return float(x2)
        if bracket is not None:
            a, fa, b, fb = bracket
            bracket = (a, fa, x2, f2) if fa * f2 < 0 else (x2, f2, b, fb)
            if abs(bracket[2] - bracket[0]) < tol:
                return float(x2)
        elif f1 * f2 < 0:
            bracket = (x1, f1, x2, f2)
        elif f0 * f2 < 0:
            bracket = (x0, f0, x2, f2)
        x0, f0, x1, f1 = x1, f1, x2, f2
    raise NoRootError(f"no root after {max_iter} iterations", last_iterate=x1)
