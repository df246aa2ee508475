"""
Monte Carlo coverage of confidence regions for the ACD(1,1) parameters.

Each replicate simulates a duration series, estimates ``beta`` by smoothed
ET-GEL and checks whether the true value lies in the region produced by
each method:

``FMB``    ``Q(beta0) <= q*_{1-alpha}`` from bootstrap draws of ``Q*``;
``S``      ``Q(beta0) <= chi2_{1-alpha}(nu)``;
``Wald``   HAC sandwich Wald statistic against ``chi2_{1-alpha}(p)``;
``LR``     GEL criterion ratio against ``chi2_{1-alpha}(r)``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acd import ACDParams, acd_moments, acd_problem, simulate_acd
from .exceptions import ConfigError, FMBError, ReplicateFailed
from .gel import (
    GelEstimate,
    GelProblem,
    inner_lambda_from,
    outer_beta,
    smoothed_jacobian,
    smoothed_moments,
)
from .hac import lr_cov_smoothed
from .numerics import Rng, chi2_quantile
from .smoothing import SmoothedSeries, smooth_series
from .statistics import bootstrap_quantile, q_from_smoothed, q_star_draws

__all__ = [
    "CoverageConfig",
    "CoverageReport",
    "METHODS",
    "method_s",
    "method_wald",
    "method_lr",
    "lr_statistic",
    "wald_statistic",
    "coverage_replicate",
    "run_coverage",
    "load_config",
    "write_report_csv",
    "read_report_csv",
]

log = logging.getLogger(__name__)

METHODS = ("FMB", "S", "Wald", "LR")
CONFIG_KEYS = ("n", "bandwidth", "mc_reps", "bootstrap_r", "alphas", "methods", "seed")
MAX_FAILURE_RATE = 0.05


# ---------------------------------------------------------------------------
# competitors


def method_s(q_value: float, nu: int, alpha: float) -> bool:
    """Chi-square reference for the same quadratic statistic as the bootstrap."""
    if nu <= 0:
        return True
    return bool(q_value <= chi2_quantile(1.0 - alpha, int(nu)))


def wald_statistic(problem: GelProblem, data, estimate: GelEstimate, beta0) -> float:
    """``N d' G' Omega^+ G d`` with ``d = beta_hat - beta0``.

    ``G`` is the mean of the smoothed moment Jacobian at ``beta_hat`` and
    ``Omega`` the automatic HAC estimate there, so ``V = (G' Omega^+ G)^{-1}``.

    Raises
    ------
    ReplicateFailed
        ``G' Omega^+ G`` is singular or not positive definite.
    """
    beta_hat = np.asarray(estimate.beta_hat, dtype=float)
    G = smoothed_jacobian(problem, data, beta_hat).mean(axis=0)
    g = smoothed_moments(problem, data, beta_hat)
    sm = _as_smoothed(problem, g)
    lrc = lr_cov_smoothed(sm, center=True)
    info = G.T @ lrc.inverse @ G
    info = 0.5 * (info + info.T)
    w = np.linalg.eigvalsh(info)
    if not w[0] > 1e-12 * max(w[-1], 1e-300):
        raise ReplicateFailed("Wald information matrix is singular")
    d = beta_hat - np.asarray(beta0, dtype=float)
    return float(g.shape[0] * d @ info @ d)


def method_wald(problem: GelProblem, data, estimate: GelEstimate, beta0, alpha: float) -> bool:
    return wald_statistic(problem, data, estimate, beta0) <= chi2_quantile(1.0 - alpha, problem.p)


def lr_statistic(problem: GelProblem, data, beta0, estimate: GelEstimate,
                 lr_scale: str = "smoothed") -> float:
    """GEL criterion ratio ``2 N c [P(beta0) - P(beta_hat)]``.

    ``c = kappa2 / (kappa1^2 B)`` under ``"smoothed"``, which makes the ratio
    match the quadratic statistic to first order under the ``B^{-1}``
    smoothing convention; ``"plain"`` drops the ``1 / B``.
    """
    spec = problem.spec
    if lr_scale == "smoothed":
        c = spec.kappa2 / (spec.kappa1**2 * problem.bandwidth)
    elif lr_scale == "plain":
        c = spec.kappa2 / spec.kappa1**2
    else:
        raise ConfigError(f"unknown lr_scale {lr_scale!r}")
    try:
        G0 = smoothed_moments(problem, data, beta0)
        _, p0 = inner_lambda_from(G0, problem.kappa, problem.rho)
    except FMBError as exc:
        raise ReplicateFailed(f"inner problem failed at beta0: {exc}") from exc
    N = G0.shape[0]
    return max(0.0, 2.0 * N * c * (p0 - estimate.criterion))


def method_lr(problem: GelProblem, data, beta0, estimate: GelEstimate, alpha: float,
              lr_scale: str = "smoothed") -> bool:
    lr = lr_statistic(problem, data, beta0, estimate, lr_scale)
    return lr <= chi2_quantile(1.0 - alpha, problem.r)


def _as_smoothed(problem, g):
    return SmoothedSeries(g, problem.spec, float(problem.bandwidth), -1.0)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class CoverageConfig:
    """Settings of a coverage study.

    Only the first seven fields are read from a configuration file; the
    remaining ones describe the design and default to the ACD(1,1)
    experiment with ``omega = 1`` and ``beta = (0.25, 0.25)``.
    """

    n: int = 100
    bandwidth: float = 3.0
    mc_reps: int = 2000
    bootstrap_r: int = 1000
    alphas: tuple = (0.01, 0.05, 0.10, 0.25)
    methods: tuple = METHODS
    seed: int = 20240601
    beta_true: tuple = (0.25, 0.25)
    omega: float = 1.0
    kernel: str = "bessel_qs"
    rho: str = "ET"
    lr_scale: str = "smoothed"
    n_starts: int = 5
    burn_in: int = 500

    def __post_init__(self):
        errors = []
        if int(self.n) < 10:
            errors.append("n must be at least 10")
        if not float(self.bandwidth) > 0:
            errors.append("bandwidth must be positive")
        if int(self.mc_reps) < 1:
            errors.append("mc_reps must be positive")
        if int(self.bootstrap_r) < 1:
            errors.append("bootstrap_r must be positive")
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not 0 < a < 1 for a in alphas):
            errors.append("alphas must lie in (0, 1)")
        methods = tuple(str(m) for m in self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            errors.append(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.lr_scale not in ("smoothed", "plain"):
            errors.append("lr_scale must be 'smoothed' or 'plain'")
        if not 0 <= int(self.seed) < 2**64:
            errors.append("seed must be a non-negative 64-bit integer")
        if errors:
            raise ConfigError("; ".join(errors))
        self.n, self.mc_reps, self.bootstrap_r = int(self.n), int(self.mc_reps), int(self.bootstrap_r)
        self.bandwidth, self.seed = float(self.bandwidth), int(self.seed)
        self.alphas, self.methods = alphas, methods


def load_config(path) -> dict:
    """Read a JSON or YAML coverage configuration.

    Only the keys ``n, bandwidth, mc_reps, bootstrap_r, alphas, methods,
    seed`` are accepted.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of settings")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; allowed {list(CONFIG_KEYS)}")
    return data


# ---------------------------------------------------------------------------
# replicates


def coverage_replicate(cfg: CoverageConfig, index: int) -> dict:
    """Covered flags for one Monte Carlo replicate.

    Streams ``2 * index`` and ``2 * index + 1`` of ``cfg.seed`` drive the
    simulation and the bootstrap respectively.

    Returns
    -------
    dict
        ``{"index", "covered": {method: [bool per alpha]}, "failed": {method: msg}}``.
        A failure of the estimation step fails every method.
    """
    beta0 = np.asarray(cfg.beta_true, dtype=float)
    truth = ACDParams(cfg.omega, *cfg.beta_true)
    x = simulate_acd(truth, cfg.n, cfg.burn_in, Rng(cfg.seed, 2 * index))
    problem = acd_problem(cfg.rho, cfg.kernel, cfg.bandwidth, cfg.omega)
    out = {"index": index, "covered": {}, "failed": {}}
    try:
        est = outer_beta(problem, x, beta0, n_starts=cfg.n_starts, seed=cfg.seed + index)
    except FMBError as exc:
        for m in cfg.methods:
            out["failed"][m] = f"estimation: {exc}"
        return out

    need_q = "FMB" in cfg.methods or "S" in cfg.methods
    if need_q:
        raw0 = acd_moments(x, beta0, cfg.omega)
        sm0 = smooth_series(raw0, problem.spec, cfg.bandwidth, -1.0, warn=False)
        q0, nu0 = q_from_smoothed(sm0, center=True)
    for m in cfg.methods:
        try:
            if m == "FMB":
                gh = smoothed_moments(problem, x, est.beta_hat)
                draws = q_star_draws(_as_smoothed(problem, gh), cfg.bootstrap_r,
                                     Rng(cfg.seed, 2 * index + 1))
                flags = [q0 <= bootstrap_quantile(draws, 1.0 - a) for a in cfg.alphas]
            elif m == "S":
                flags = [method_s(q0, nu0, a) for a in cfg.alphas]
            elif m == "Wald":
                w = wald_statistic(problem, x, est, beta0)
                flags = [w <= chi2_quantile(1.0 - a, problem.p) for a in cfg.alphas]
            else:
                lr = lr_statistic(problem, x, beta0, est, cfg.lr_scale)
                flags = [lr <= chi2_quantile(1.0 - a, problem.r) for a in cfg.alphas]
            out["covered"][m] = [bool(f) for f in flags]
        except (FMBError, np.linalg.LinAlgError) as exc:
            out["failed"][m] = str(exc)
    return out


def _run_chunk(args):
    cfg, indices = args
    return [coverage_replicate(cfg, i) for i in indices]


@dataclass
class CoverageReport:
    method: str
    nominal: list
    empirical: list
    mc_reps: int
    N: int
    B_N: float
    seed: int
    failures: int = 0
    failed_indices: list = field(default_factory=list)

    @property
    def mc_se(self) -> list:
        n = max(self.mc_reps, 1)
        return [math.sqrt(p * (1.0 - p) / n) for p in self.empirical]


def _threads(threads):
    if threads is None:
        env = os.environ.get("FMB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def run_coverage(cfg: CoverageConfig, threads: int | None = None,
                 max_failure_rate: float = MAX_FAILURE_RATE) -> list:
    """Run the study and aggregate per method in replicate order.

    Replicates are independent; with ``threads > 1`` they are spread over a
    process pool, and the result does not depend on the pool size.

    Raises
    ------
    ReplicateFailed
        More than ``max_failure_rate`` of the replicates failed for a method.
    """
    n_workers = min(_threads(threads), cfg.mc_reps)
    indices = list(range(cfg.mc_reps))
    if n_workers > 1:
        chunks = [indices[k::n_workers] for k in range(n_workers)]
        with ProcessPoolExecutor(n_workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
        results = sorted((r for p in parts for r in p), key=lambda r: r["index"])
    else:
        results = [coverage_replicate(cfg, i) for i in indices]

    reports = []
    for m in cfg.methods:
        ok = [r["covered"][m] for r in results if m in r["covered"]]
        failed = [r["index"] for r in results if m in r["failed"]]
        for i in failed:
            log.warning("replicate %d (seed %d) failed for %s: %s", i, cfg.seed, m,
                        results[i]["failed"][m])
        if len(failed) > max_failure_rate * cfg.mc_reps:
            raise ReplicateFailed(
                f"{m}: {len(failed)} of {cfg.mc_reps} replicates failed "
                f"(limit {max_failure_rate:.0%})")
        arr = np.asarray(ok, dtype=float).reshape(len(ok), len(cfg.alphas))
        emp = arr.mean(axis=0).tolist() if len(ok) else [math.nan] * len(cfg.alphas)
        reports.append(CoverageReport(m, [1.0 - a for a in cfg.alphas], emp, len(ok), cfg.n,
                                      cfg.bandwidth, cfg.seed, len(failed), failed))
    return reports


REPORT_COLUMNS = ("N", "B_N", "method", "nominal", "empirical", "mc_se", "mc_reps", "failures",
                  "seed")


def write_report_csv(path_or_file, reports) -> None:
    """One row per (method, nominal level), in the layout of a coverage table."""
    own = isinstance(path_or_file, (str, Path))
    fh = Path(path_or_file).open("w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for rep in reports:
            for nom, emp, se in zip(rep.nominal, rep.empirical, rep.mc_se):
                w.writerow([rep.N, f"{rep.B_N:g}", rep.method, f"{nom:.2f}", f"{emp:.4f}",
                            f"{se:.4f}", rep.mc_reps, rep.failures, rep.seed])
    finally:
        if own:
            fh.close()


def read_report_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
