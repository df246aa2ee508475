"""
Confidence intervals, regions, distributions and curves from bootstrap draws.

Intervals are obtained by inverting the studentized statistic: the endpoint
``a`` solves ``S(a) = q*`` for a bootstrap quantile ``q*``. Regions collect
the grid points where ``Q(beta)`` stays below the bootstrap threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import (
    DomainViolation,
    EmptySlice,
    MonotonicityViolated,
    QuantileOutOfRange,
)
from .numerics import chi2_sf, normal_cdf, secant_root
from .statistics import BootstrapDraws, bootstrap_quantile

__all__ = [
    "ConfidenceInterval",
    "ConfidenceCurvePoints",
    "RegionResult",
    "monotone_direction",
    "invert_one_sided",
    "invert_two_sided",
    "confidence_region",
    "region_curve",
    "confidence_distribution",
    "gaussian_distribution",
    "confidence_curve",
    "p_value_one_sided",
    "p_value_equal_tail",
    "slice_region",
    "marginal_curve",
    "curve_crossings",
    "write_curve_csv",
]

SCAN_POINTS = 16


@dataclass(frozen=True)
class ConfidenceInterval:
    """Interval ``(lower, upper]`` at confidence ``level``."""

    lower: float
    upper: float
    level: float
    kind: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower endpoint exceeds upper endpoint")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower < x <= self.upper

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "level": self.level, "kind": self.kind}


@dataclass
class ConfidenceCurvePoints:
    """Grid of parameter values with the CD ``hstar`` and curve ``cv``."""

    grid: np.ndarray
    hstar: np.ndarray | None = None
    cv: np.ndarray | None = None
    stat: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be a strictly increasing vector")


@dataclass
class RegionResult:
    mask: np.ndarray
    threshold: float
    values: np.ndarray
    ranks: np.ndarray

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.mask))


# ---------------------------------------------------------------------------
# inversion of the scalar statistic


def monotone_direction(s_of: Callable[[float], float], lo: float, hi: float,
                       n: int = SCAN_POINTS):
    """Scan ``s_of`` on ``n`` points of ``[lo, hi]``.

    Returns
    -------
    direction : int
        +1 if strictly increasing, -1 if strictly decreasing.
    xs, ys : ndarray
        The scan.

    Raises
    ------
    MonotonicityViolated
    """
    if not lo < hi:
        raise DomainViolation("bracket must satisfy lo < hi")
    xs = np.linspace(lo, hi, n)
    ys = np.array([float(s_of(x)) for x in xs])
    d = np.diff(ys)
    if np.all(d > 0):
        return 1, xs, ys
    if np.all(d < 0):
        return -1, xs, ys
    raise MonotonicityViolated(f"statistic is not strictly monotone on [{lo:g}, {hi:g}]")


def _solve(s_of, target, xs, ys, tol):
    lo_y, hi_y = min(ys[0], ys[-1]), max(ys[0], ys[-1])
    if not lo_y <= target <= hi_y:
        raise QuantileOutOfRange(
            f"quantile {target:.6g} outside statistic range [{lo_y:.6g}, {hi_y:.6g}] on the bracket")
    f = ys - target
    hit = np.flatnonzero(f == 0.0)
    if hit.size:
        return float(xs[hit[0]])
    i = int(np.flatnonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0])
    return secant_root(lambda a: float(s_of(a)) - target, float(xs[i]), float(xs[i + 1]), tol=tol)


def invert_one_sided(s_of: Callable[[float], float], draws: BootstrapDraws, alpha: float,
                     bracket, theta_min: float = -math.inf, tol: float = 1e-13) -> ConfidenceInterval:
    """Upper confidence bound ``[theta_min, c]`` at level ``1 - alpha``.

    ``c`` solves ``S(c) = q*_{1-alpha}`` when ``S`` increases and
    ``S(c) = q*_alpha`` when it decreases.
    """
    _check_alpha(alpha)
    direction, xs, ys = monotone_direction(s_of, *bracket)
    q = bootstrap_quantile(draws, 1.0 - alpha if direction > 0 else alpha)
    c = _solve(s_of, q, xs, ys, tol)
    return ConfidenceInterval(float(theta_min), c, 1.0 - alpha, "one_sided_upper")


def invert_two_sided(s_of: Callable[[float], float], draws: BootstrapDraws, alpha: float,
                     bracket, tol: float = 1e-13) -> ConfidenceInterval:
    """Equal-tailed interval from the ``alpha/2`` and ``1 - alpha/2`` quantiles."""
    _check_alpha(alpha)
    direction, xs, ys = monotone_direction(s_of, *bracket)
    s1 = bootstrap_quantile(draws, alpha / 2.0)
    s2 = bootstrap_quantile(draws, 1.0 - alpha / 2.0)
    c1 = _solve(s_of, s1, xs, ys, tol)
    c2 = _solve(s_of, s2, xs, ys, tol)
    lo, hi = (c1, c2) if direction > 0 else (c2, c1)
    return ConfidenceInterval(lo, hi, 1.0 - alpha, "two_sided_equal_tail")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainViolation(f"alpha must lie in (0, 1), got {alpha}")


# ---------------------------------------------------------------------------
# regions


def _eval_q(q_of, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    vals = np.empty(grid.shape[0])
    ranks = np.empty(grid.shape[0], dtype=int)
    for i, b in enumerate(grid):
        v, nu = q_of(b if b.size > 1 else b[0])
        vals[i], ranks[i] = v, nu
    return vals, ranks


def confidence_region(q_of: Callable, draws: BootstrapDraws, alpha: float, grid) -> RegionResult:
    """Grid points with ``Q(beta) <= q*_{1-alpha}``.

    ``q_of`` returns ``(value, rank)``. An empty mask is a legal result.
    """
    _check_alpha(alpha)
    thr = bootstrap_quantile(draws, 1.0 - alpha)
    vals, ranks = _eval_q(q_of, grid)
    return RegionResult(vals <= thr, thr, vals, ranks)


def region_curve(values, draws: BootstrapDraws | None = None, ranks=None) -> np.ndarray:
    """Confidence curve of a quadratic statistic.

    With ``draws`` the curve is ``P*[Q* >= Q(beta)]``; without, the
    chi-square tail at the given ``ranks`` (first-order reference).
    """
    values = np.asarray(values, dtype=float)
    if draws is not None:
        below = np.searchsorted(draws.sorted, values, side="left")
        return (draws.R - below) / draws.R
    if ranks is None:
        raise ValueError("ranks are needed for the chi-square curve")
    ranks = np.broadcast_to(np.asarray(ranks), values.shape)
    flat = [chi2_sf(v, int(k)) if k > 0 else 1.0 for v, k in zip(values.ravel(), ranks.ravel())]
    return np.asarray(flat).reshape(values.shape)


# ---------------------------------------------------------------------------
# confidence distributions and curves


def confidence_distribution(s_of: Callable[[float], float], draws: BootstrapDraws,
                            grid) -> ConfidenceCurvePoints:
    """``H*(theta) = P*[S* <= S(theta)]`` on a grid."""
    pts = ConfidenceCurvePoints(grid)
    stat = np.array([float(s_of(t)) for t in pts.grid])
    pts.stat = stat
    pts.hstar = np.searchsorted(draws.sorted, stat, side="right") / draws.R
    return pts


def gaussian_distribution(s_of: Callable[[float], float], grid) -> ConfidenceCurvePoints:
    """First-order counterpart ``Phi(S(theta))`` of the bootstrap CD."""
    pts = ConfidenceCurvePoints(grid)
    pts.stat = np.array([float(s_of(t)) for t in pts.grid])
    pts.hstar = np.array([normal_cdf(s) for s in pts.stat])
    return pts


def confidence_curve(cd: ConfidenceCurvePoints) -> ConfidenceCurvePoints:
    """Fill ``cv = 2 min(hstar, 1 - hstar)``."""
    if cd.hstar is None:
        raise ValueError("confidence distribution values missing")
    h = np.asarray(cd.hstar, dtype=float)
    cd.cv = 2.0 * np.minimum(h, 1.0 - h)
    return cd


def _hstar_at(cd, theta0):
    if cd.hstar is None:
        raise ValueError("confidence distribution values missing")
    if not cd.grid[0] <= theta0 <= cd.grid[-1]:
        raise DomainViolation(f"theta0={theta0} outside the grid [{cd.grid[0]}, {cd.grid[-1]}]")
    return float(np.interp(theta0, cd.grid, cd.hstar))


def p_value_one_sided(cd: ConfidenceCurvePoints, theta0: float) -> float:
    """Bootstrap p-value of ``H0: theta <= theta0``, i.e. ``H*(theta0)``."""
    return _hstar_at(cd, theta0)


def p_value_equal_tail(cd: ConfidenceCurvePoints, theta0: float) -> float:
    h = _hstar_at(cd, theta0)
    return 2.0 * min(h, 1.0 - h)


def curve_crossings(grid, cv, level: float):
    """Outermost points where ``cv`` crosses ``level`` (linear interpolation).

    Returns ``(lower, upper)``; an end of the grid is returned when the
    curve is still above ``level`` there.
    """
    grid = np.asarray(grid, dtype=float)
    cv = np.asarray(cv, dtype=float)
    above = np.flatnonzero(cv >= level)
    if above.size == 0:
        raise EmptySlice(f"curve never reaches level {level}")
    i, j = above[0], above[-1]

    def cross(a, b):
        ya, yb = cv[a] - level, cv[b] - level
        if ya == yb:
            return grid[a]
        return grid[a] + (grid[b] - grid[a]) * ya / (ya - yb)

    lo = grid[0] if i == 0 else cross(i - 1, i)
    hi = grid[-1] if j == grid.size - 1 else cross(j, j + 1)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# reporting for multi-parameter regions


def slice_region(q_of: Callable, draws: BootstrapDraws, alpha: float, fix, free_index: int,
                 grid1d) -> ConfidenceInterval:
    """Interval for one coordinate with the others pinned at ``fix``.

    The level set ``Q <= q*_{1-alpha}`` along the free axis is located on
    ``grid1d`` and its edges refined by linear interpolation of ``Q``.
    """
    _check_alpha(alpha)
    fix = np.asarray(fix, dtype=float).ravel()
    grid1d = np.asarray(grid1d, dtype=float)
    pts = np.repeat(fix[None, :], grid1d.size, axis=0)
    pts[:, free_index] = grid1d
    thr = bootstrap_quantile(draws, 1.0 - alpha)
    vals, _ = _eval_q(q_of, pts)
    inside = vals <= thr
    if not np.any(inside):
        raise EmptySlice("level set is empty on the grid")
    # connected component around the smallest statistic
    k = int(np.argmin(np.where(inside, vals, np.inf)))
    i = k
    while i > 0 and inside[i - 1]:
        i -= 1
    j = k
    while j < grid1d.size - 1 and inside[j + 1]:
        j += 1

    def cross(a, b):
        ya, yb = vals[a] - thr, vals[b] - thr
        return grid1d[a] + (grid1d[b] - grid1d[a]) * ya / (ya - yb) if ya != yb else grid1d[a]

    lo = grid1d[0] if i == 0 else cross(i - 1, i)
    hi = grid1d[-1] if j == grid1d.size - 1 else cross(j, j + 1)
    return ConfidenceInterval(float(lo), float(hi), 1.0 - alpha, "slice")


def marginal_curve(cv_grid, axes, target_index: int) -> ConfidenceCurvePoints:
    """Integrate a curve over nuisance axes by the trapezoid rule.

    Parameters
    ----------
    cv_grid : ndarray
        Curve values on the product grid ``axes[0] x axes[1] x ...``.
    axes : sequence of 1-D arrays
    target_index : int
        Axis that is kept.

    The result is rescaled so its maximum is 1. Axes of length one are
    sliced rather than integrated.
    """
    cv = np.asarray(cv_grid, dtype=float)
    if cv.ndim != len(axes):
        raise ValueError("cv_grid dimension must match the number of axes")
    out = cv
    for ax in sorted((a for a in range(cv.ndim) if a != target_index), reverse=True):
        x = np.asarray(axes[ax], dtype=float)
        if x.size == 1:
            out = np.take(out, 0, axis=ax)
        else:
            out = np.trapezoid(out, x, axis=ax)
    top = float(np.max(out))
    if not top > 0:
        raise EmptySlice("marginal curve is identically zero")
    pts = ConfidenceCurvePoints(np.asarray(axes[target_index], dtype=float))
    pts.cv = out / top
    return pts


def write_curve_csv(path, cd: ConfidenceCurvePoints, column: str = "cv") -> None:
    """Two-column CSV ``theta,<column>``."""
    vals = getattr(cd, column)
    if vals is None:
        raise ValueError(f"curve has no {column} values")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", column])
        for t, v in zip(cd.grid, vals):
            w.writerow([repr(float(t)), repr(float(v))])

