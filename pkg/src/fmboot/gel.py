"""
Generalized empirical likelihood on kernel-smoothed moments.

The criterion is

    P(beta, lam) = T^{-1} sum_t [rho(kappa lam' g_{T,t}(beta)) - rho(0)]

maximised over ``lam`` (inner problem, damped Newton) and the profiled value
minimised over ``beta`` in a box (outer problem, Nelder-Mead with several
starts). Carriers are standardized so that ``rho'(0) = rho''(0) = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .exceptions import (
    DomainUnreachable,
    DomainViolation,
    FMBError,
    InnerDiverged,
    OuterDiverged,
)
from .kernels import KernelSpec
from .numerics import Rng
from .smoothing import smooth_series

__all__ = [
    "RhoFamily",
    "GelProblem",
    "GelEstimate",
    "rho",
    "gel_criterion",
    "inner_lambda",
    "inner_lambda_from",
    "profiled_criterion",
    "outer_beta",
    "gel_foc",
    "smoothed_moments",
    "smoothed_jacobian",
    "profiled_gradient",
]


@dataclass(frozen=True)
class RhoFamily:
    """Concave GEL carrier: ``"EL"``, ``"ET"`` or ``"CUE"``."""

    kind: str

    def __post_init__(self):
        k = self.kind.upper()
        if k not in ("EL", "ET", "CUE"):
            raise ValueError(f"unknown rho family {self.kind!r}")
        object.__setattr__(self, "kind", k)

    @property
    def rho0(self) -> float:
        return -1.0 if self.kind == "ET" else 0.0

    @property
    def upper(self) -> float:
        """Right end of the open domain; ``inf`` when unbounded."""
        return 1.0 if self.kind == "EL" else math.inf

    def inside(self, v) -> bool:
        return bool(np.all(np.asarray(v) < self.upper))

    def __call__(self, v):
        return rho(v, self)


def rho(v, family: RhoFamily | str):
    """Return ``(rho(v), rho'(v), rho''(v))`` elementwise."""
    fam = family if isinstance(family, RhoFamily) else RhoFamily(family)
    v = np.asarray(v, dtype=float)
    if fam.kind == "EL":
        if np.any(v >= 1.0):
            bad = np.argwhere(np.atleast_1d(v) >= 1.0)[0, 0]
            raise DomainViolation("EL carrier needs v < 1", index=int(bad))
        u = 1.0 - v
        return np.log(u), -1.0 / u, -1.0 / u**2
    if fam.kind == "ET":
        e = np.exp(v)
        return -e, -e, -e
    return -v - 0.5 * v**2, -1.0 - v, -np.ones_like(v)


@dataclass
class GelProblem:
    """Moment model plus smoothing and carrier settings.

    Parameters
    ----------
    moment_fn : callable
        ``(data, beta) -> T x r`` raw moment indicators.
    p, r : int
        Parameter and moment dimensions, ``r >= p``.
    rho : RhoFamily or str
    spec : KernelSpec
    bandwidth : float
    box : (lower, upper)
        Compact parameter box.
    jacobian_fn : callable, optional
        ``(data, beta) -> T x r x p`` raw moment derivatives. Central finite
        differences are used when absent.
    """

    moment_fn: Callable
    p: int
    r: int
    rho: RhoFamily | str
    spec: KernelSpec
    bandwidth: float
    box: tuple
    jacobian_fn: Callable | None = None

    def __post_init__(self):
        if isinstance(self.rho, str):
            self.rho = RhoFamily(self.rho)
        if self.r < self.p:
            raise ValueError("need r >= p")
        lo = np.asarray(self.box[0], dtype=float).reshape(self.p)
        hi = np.asarray(self.box[1], dtype=float).reshape(self.p)
        if np.any(lo > hi):
            raise ValueError("empty parameter box")
        self.box = (lo, hi)

    @property
    def kappa(self) -> float:
        return self.spec.kappa


@dataclass
class GelEstimate:
    beta_hat: np.ndarray
    lambda_hat: np.ndarray
    criterion: float
    inner_converged: bool
    outer_converged: bool
    at_boundary: bool = False
    nfev: int = 0
    starts: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "beta_hat": [float(b) for b in self.beta_hat],
            "lambda_hat": [float(v) for v in self.lambda_hat],
            "criterion": float(self.criterion),
            "inner_converged": bool(self.inner_converged),
            "outer_converged": bool(self.outer_converged),
            "at_boundary": bool(self.at_boundary),
            "nfev": int(self.nfev),
        }


# ---------------------------------------------------------------------------
# smoothed moments


def _raw(problem, data, beta):
    g = np.asarray(problem.moment_fn(data, np.asarray(beta, dtype=float)), dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[1] != problem.r:
        raise ValueError(f"moment_fn returned {g.shape[1]} columns, expected {problem.r}")
    return g


def smoothed_moments(problem: GelProblem, data, beta) -> np.ndarray:
    """T x r smoothed moments ``g_{T,t}(beta)`` under the ``B^{-1}`` scaling."""
    return smooth_series(_raw(problem, data, beta), problem.spec, problem.bandwidth, -1.0,
                         warn=False).values


def _fd_step(b):
    return max(1e-6, 1e-6 * abs(b))


def smoothed_jacobian(problem: GelProblem, data, beta) -> np.ndarray:
    """T x r x p array ``d g_{T,t} / d beta``.

    Smoothing is linear, so the derivative series is smoothed directly.
    """
    beta = np.asarray(beta, dtype=float)
    if problem.jacobian_fn is not None:
        d = np.asarray(problem.jacobian_fn(data, beta), dtype=float)
    else:
        lo, hi = problem.box
        cols = []
        for j in range(problem.p):
            h = _fd_step(beta[j])
            e = np.zeros(problem.p)
            e[j] = h
            # one-sided differences when a box face is within one step
            up = beta + e if beta[j] + h <= hi[j] else beta
            dn = beta - e if beta[j] - h >= lo[j] else beta
            width = (up[j] - dn[j])
            cols.append((_raw(problem, data, up) - _raw(problem, data, dn)) / width)
        d = np.stack(cols, axis=-1)
    T = d.shape[0]
    flat = d.reshape(T, -1)
    sm = smooth_series(flat, problem.spec, problem.bandwidth, -1.0, warn=False).values
    return sm.reshape(T, problem.r, problem.p)


# ---------------------------------------------------------------------------
# criterion and inner problem


def _criterion_from(G, lam, kappa, fam):
    v = kappa * (G @ lam)
    val, _, _ = rho(v, fam)
    return float(np.mean(val) - fam.rho0)


def gel_criterion(problem: GelProblem, data, beta, lam) -> float:
    """``T^{-1} sum_t [rho(kappa lam' g_{T,t}) - rho0]``."""
    G = smoothed_moments(problem, data, beta)
    return _criterion_from(G, np.asarray(lam, dtype=float), problem.kappa, problem.rho)


def inner_lambda_from(G, kappa: float, fam: RhoFamily, tol: float = 1e-9,
                      max_iter: int = 100, lam0=None):
    """Maximise the criterion over ``lam`` for a fixed smoothed moment matrix.

    Returns ``(lam, value)``. Newton steps are halved until the iterate
    stays inside the carrier domain and the criterion does not decrease.
    """
    G = np.asarray(G, dtype=float)
    T, r = G.shape
    lam = np.zeros(r) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    v = kappa * (G @ lam)
    if not fam.inside(v):
        lam = np.zeros(r)
        v = np.zeros(T)
    val, d1, d2 = rho(v, fam)
    P = float(np.mean(val))
    for _ in range(max_iter):
        grad = kappa * (G.T @ d1) / T
        if np.linalg.norm(grad) < tol:
            return lam, P - fam.rho0
        H = kappa**2 * (G.T * d2) @ G / T
        try:
            step = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            step = grad
        t = 1.0
        while t > 1e-14:
            cand = lam + t * step
            vc = kappa * (G @ cand)
            if fam.inside(vc):
                with np.errstate(over="ignore", invalid="ignore"):
                    valc, d1c, d2c = rho(vc, fam)
                Pc = float(np.mean(valc))
                if np.isfinite(Pc) and Pc >= P - 1e-15 * max(1.0, abs(P)):
                    break
            t *= 0.5
        else:
            if np.linalg.norm(grad) < 1e3 * tol:
                return lam, P - fam.rho0
            raise DomainUnreachable("no feasible ascent step for the Lagrange multiplier")
        lam, P, d1, d2 = cand, Pc, d1c, d2c
    grad = kappa * (G.T @ d1) / T
    if np.linalg.norm(grad) < tol:
        return lam, P - fam.rho0
    raise InnerDiverged(f"inner Newton did not converge, |grad| = {np.linalg.norm(grad):.3g}")


def inner_lambda(problem: GelProblem, data, beta, tol: float = 1e-9) -> np.ndarray:
    """``lambda(beta) = argmax_lam P(beta, lam)``."""
    G = smoothed_moments(problem, data, beta)
    lam, _ = inner_lambda_from(G, problem.kappa, problem.rho, tol)
    return lam


def profiled_criterion(problem: GelProblem, data, beta) -> float:
    """``P(beta, lambda(beta))``."""
    G = smoothed_moments(problem, data, beta)
    return inner_lambda_from(G, problem.kappa, problem.rho)[1]


def profiled_gradient(problem: GelProblem, data, beta) -> np.ndarray:
    """Gradient of :func:`profiled_criterion` by the envelope theorem.

    ``kappa mean_t rho'(kappa lam' g_{T,t}) (d g_{T,t} / d beta)' lam`` at
    ``lam = lambda(beta)``; exact up to the inner tolerance.
    """
    G = smoothed_moments(problem, data, beta)
    lam, _ = inner_lambda_from(G, problem.kappa, problem.rho, tol=1e-12)
    D = smoothed_jacobian(problem, data, beta)
    _, d1, _ = rho(problem.kappa * (G @ lam), problem.rho)
    return problem.kappa * np.mean(d1[:, None] * np.einsum("trp,r->tp", D, lam), axis=0)


# ---------------------------------------------------------------------------
# outer problem

_PENALTY = 1e10


def _objective(problem, data):
    def f(beta):
        try:
            G = smoothed_moments(problem, data, beta)
            return inner_lambda_from(G, problem.kappa, problem.rho)[1]
        except (FMBError, ValueError, FloatingPointError, np.linalg.LinAlgError):
            return _PENALTY
    return f


def _starts(problem, start, n_starts, seed):
    lo, hi = problem.box
    x0 = np.clip(np.asarray(start, dtype=float).reshape(problem.p), lo, hi)
    starts = [x0]
    if n_starts > 1:
        rng = Rng(seed, stream_id=0)
        width = 0.1 * (hi - lo)
        for _ in range(n_starts - 1):
            u = rng.uniform(size=problem.p)
            starts.append(np.clip(x0 + (2.0 * u - 1.0) * width, lo, hi))
    return starts


def outer_beta(problem: GelProblem, data, start, n_starts: int = 5, seed: int = 0,
               xatol: float = 1e-10, fatol: float = 1e-14, max_iter: int = 2000) -> GelEstimate:
    """Minimise the profiled criterion over the box from several starts.

    The first start is ``start`` itself; the others are jittered within 10%
    of the box width around it. The best feasible solution is returned.
    """
    lo, hi = problem.box
    if np.any(np.asarray(start) < lo) or np.any(np.asarray(start) > hi):
        raise DomainViolation("start must lie inside the parameter box")
    f = _objective(problem, data)
    bounds = list(zip(lo, hi))
    best = None
    records = []
    nfev = 0
    for x0 in _starts(problem, start, n_starts, seed):
        if f(x0) >= _PENALTY:
            records.append(None)
            continue
        res = optimize.minimize(
            f, x0, method="Nelder-Mead", bounds=bounds,
            options={"xatol": xatol, "fatol": fatol, "maxiter": max_iter, "maxfev": 4 * max_iter},
        )
        nfev += res.nfev
        records.append((res.x.copy(), float(res.fun), bool(res.success)))
        if res.fun < _PENALTY and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise OuterDiverged("no start produced a feasible profiled criterion")
    beta = np.clip(best.x, lo, hi)
    G = smoothed_moments(problem, data, beta)
    try:
        lam, val = inner_lambda_from(G, problem.kappa, problem.rho)
        inner_ok = True
    except FMBError:
        lam, val, inner_ok = np.zeros(problem.r), float(best.fun), False
    span = np.maximum(hi - lo, 1e-300)
    at_boundary = bool(np.any(np.minimum(beta - lo, hi - beta) <= 1e-8 * span))
    return GelEstimate(beta, lam, val, inner_ok, bool(best.success), at_boundary, nfev, records)


# ---------------------------------------------------------------------------
# first-order conditions


def gel_foc(problem: GelProblem, data, beta, lam):
    """Stacked first-order conditions at ``(beta, lam)``.

    Returns
    -------
    psi1_bar : (r,) array
        ``mean_t rho'(kappa lam' g_{T,t}) g_{T,t}``
    psi2_bar : (p,) array
        ``mean_t rho'(kappa lam' g_{T,t}) (d g_{T,t} / d beta)' lam``
    stack : (T, r + p) array
        Per-period contributions.
    """
    lam = np.asarray(lam, dtype=float)
    G = smoothed_moments(problem, data, beta)
    D = smoothed_jacobian(problem, data, beta)
    v = problem.kappa * (G @ lam)
    _, d1, _ = rho(v, problem.rho)
    psi1 = d1[:, None] * G
    psi2 = d1[:, None] * np.einsum("trp,r->tp", D, lam)
    stack = np.hstack([psi1, psi2])
    return psi1.mean(axis=0), psi2.mean(axis=0), stack
