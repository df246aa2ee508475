"""
Command-line interface: ``fmb <subcommand> [options]``.

Exit codes: 0 on success, 2 on invalid input, 1 on a computational
failure. Errors are written to stderr as a JSON object with a stable
``code`` field.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acd import (
    SUMMARY_FIELDS,
    ACDParams,
    acd_moments,
    acd_moments_free,
    acd_problem,
    read_series_csv,
    simulate_acd,
    summary_stats,
)
from .bench import CONFIG_KEYS, CoverageConfig, load_config, run_coverage, write_report_csv
from .exceptions import ConfigError, FMBError
from .gel import outer_beta, smoothed_moments
from .inference import (
    confidence_curve,
    confidence_distribution,
    confidence_region,
    curve_crossings,
    gaussian_distribution,
    invert_one_sided,
    invert_two_sided,
    marginal_curve,
    region_curve,
)
from .kernels import KERNEL_NAMES, get_kernel
from .numerics import Rng
from .smoothing import SmoothedSeries, smooth_series, taper_weights
from .statistics import ScalarStatistic, q_from_smoothed, q_star_draws, s_star_draws

__all__ = ["main", "build_parser", "location_model"]


# ---------------------------------------------------------------------------
# helpers


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return repr(float(v))


def _read_input(path) -> np.ndarray:
    if not Path(path).is_file():
        raise ConfigError(f"input file not found: {path}")
    return read_series_csv(path)


def location_model(x):
    """Estimating function ``psi_t(theta) = theta - x_t`` for the mean.

    The sign makes the studentized statistic increasing in ``theta``, so
    the bootstrap confidence distribution is increasing as well.
    """
    x = np.asarray(x, dtype=float)
    return lambda theta: theta - x


def _smoothed_root(x, spec, bandwidth):
    """Mean estimate solving the smoothed estimating equation exactly."""
    w = taper_weights(x.size, spec, bandwidth)
    return float(w @ x / w.sum())


def _common(p):
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="bessel_qs")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="smoothing bandwidth B (default: 2 T^(1/5))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def _bandwidth(args, T):
    return args.bandwidth if args.bandwidth is not None else 2.0 * T**0.2


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("FMB_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"FMB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    errs = []
    if args.n < 2:
        errs.append("--n must be at least 2")
    if args.burn_in < 0:
        errs.append("--burn-in must be non-negative")
    if errs:
        raise ConfigError("; ".join(errs))
    params = ACDParams(args.omega, args.beta1, args.beta2)
    x = simulate_acd(params, args.n, args.burn_in, Rng(args.seed, args.stream))
    _emit(_csv_text(["x"], [[_fmt(v)] for v in x]), args.out)


def cmd_summary(args):
    rows = []
    for path in args.inputs:
        s = summary_stats(_read_input(path))
        rows.append([Path(path).stem] + [s["n"]] + [f"{s[k]:.6g}" for k in SUMMARY_FIELDS[1:]])
    _emit(_csv_text(["series", *SUMMARY_FIELDS], rows), args.out)


def _estimate(args, x):
    B = _bandwidth(args, x.size)
    if args.free_omega:
        prob = acd_problem(args.rho, args.kernel, B, free_omega=True)
        b1, b2 = args.start
        start = [max(1e-3, (1.0 - b1 - b2) * float(np.mean(x))), b1, b2]
    else:
        prob = acd_problem(args.rho, args.kernel, B, omega=args.omega)
        start = list(args.start)
    est = outer_beta(prob, x, start, n_starts=args.starts, seed=args.seed)
    return prob, est


def _add_estimate_opts(p):
    p.add_argument("--input", required=True)
    p.add_argument("--rho", choices=("ET", "EL", "CUE"), default="ET")
    p.add_argument("--omega", type=float, default=1.0, help="fixed omega when not estimated")
    p.add_argument("--free-omega", action="store_true", help="estimate omega jointly")
    p.add_argument("--start", type=float, nargs=2, default=(0.25, 0.25),
                   metavar=("BETA1", "BETA2"))
    p.add_argument("--starts", type=int, default=5, help="number of optimizer starts")


def cmd_estimate(args):
    x = _read_input(args.input)
    prob, est = _estimate(args, x)
    rec = est.to_dict()
    rec["names"] = ["omega", "beta1", "beta2"] if args.free_omega else ["beta1", "beta2"]
    rec.update({"n": int(x.size), "bandwidth": prob.bandwidth, "kernel": args.kernel,
                "rho": args.rho})
    _emit(json.dumps(rec, indent=2) + "\n", args.out)


def _scalar_setup(args):
    x = _read_input(args.input)
    spec = get_kernel(args.kernel)
    B = _bandwidth(args, x.size)
    stat = ScalarStatistic(location_model(x), spec, B)
    theta_hat = _smoothed_root(x, spec, B)
    draws = s_star_draws(stat.smoothed(theta_hat), args.R, Rng(args.seed, 1))
    sd = float(np.std(x, ddof=1)) or 1.0
    half = args.span * sd
    return x, spec, B, stat, theta_hat, draws, (theta_hat - half, theta_hat + half)


def cmd_ci(args):
    if not 0 < args.alpha < 1:
        raise ConfigError("--alpha must lie in (0, 1)")
    x, spec, B, stat, theta_hat, draws, bracket = _scalar_setup(args)
    if args.sided == "two":
        ci = invert_two_sided(stat, draws, args.alpha, bracket)
    else:
        ci = invert_one_sided(stat, draws, args.alpha, bracket)
    rec = ci.to_dict()
    rec.update({"estimate": theta_hat, "n": int(x.size), "bandwidth": B, "kernel": args.kernel,
                "R": args.R, "seed": args.seed})
    _emit(json.dumps(rec, indent=2) + "\n", args.out)


def _q_of(prob, x, moment_fn, omega):
    spec, B = prob.spec, prob.bandwidth

    def q_of(beta):
        raw = moment_fn(x, beta) if omega is None else moment_fn(x, beta, omega)
        return q_from_smoothed(smooth_series(raw, spec, B, -1.0, warn=False), center=True)
    return q_of


def _acd_bootstrap(args, x):
    prob, est = _estimate(args, x)
    g = smoothed_moments(prob, x, est.beta_hat)
    sm = SmoothedSeries(g, prob.spec, prob.bandwidth, -1.0)
    draws = q_star_draws(sm, args.R, Rng(args.seed, 1))
    if args.free_omega:
        q_of = _q_of(prob, x, acd_moments_free, None)
    else:
        q_of = _q_of(prob, x, acd_moments, args.omega)
    return prob, est, draws, q_of


def _axis(center, half, n, lo, hi):
    a, b = max(lo, center - half), min(hi, center + half)
    return np.linspace(a, b, n)


def cmd_region(args):
    if not 0 < args.alpha < 1:
        raise ConfigError("--alpha must lie in (0, 1)")
    if args.free_omega:
        raise ConfigError("region grids are two-dimensional; drop --free-omega")
    x = _read_input(args.input)
    prob, est, draws, q_of = _acd_bootstrap(args, x)
    lo, hi = prob.box
    a1 = _axis(est.beta_hat[0], args.half_width, args.grid_n, lo[0], hi[0])
    a2 = _axis(est.beta_hat[1], args.half_width, args.grid_n, lo[1], hi[1])
    pts = np.array([(u, v) for u in a1 for v in a2 if u + v < 1.0])
    res = confidence_region(q_of, draws, args.alpha, pts)
    rows = [[_fmt(b[0]), _fmt(b[1]), _fmt(q), int(m), _fmt(res.threshold)]
            for b, q, m in zip(pts, res.values, res.mask)]
    _emit(_csv_text(["beta1", "beta2", "q", "inside", "threshold"], rows), args.out)


def cmd_curve(args):
    if args.mode == "scalar":
        x, spec, B, stat, theta_hat, draws, bracket = _scalar_setup(args)
        grid = np.linspace(bracket[0], bracket[1], args.grid_n)
        cd = confidence_curve(confidence_distribution(stat, draws, grid))
        gd = confidence_curve(gaussian_distribution(stat, grid))
        rows = [[_fmt(t), _fmt(h), _fmt(c), _fmt(g)]
                for t, h, c, g in zip(grid, cd.hstar, cd.cv, gd.cv)]
        _emit(_csv_text(["theta", "hstar", "cv_fmb", "cv_gaussian"], rows), args.out)
        return
    x = _read_input(args.input)
    args.free_omega = True
    prob, est, draws, q_of = _acd_bootstrap(args, x)
    lo, hi = prob.box
    names = ("omega", "beta1", "beta2")
    target = names.index(args.target)
    n = args.grid_n
    axes = []
    for j in range(3):
        half = args.half_width * (est.beta_hat[0] if j == 0 else 1.0)
        axes.append(_axis(est.beta_hat[j], half, n, lo[j], hi[j]))
    shape = tuple(a.size for a in axes)
    vals = np.full(shape, np.inf)
    ranks = np.zeros(shape, dtype=int)
    for idx in np.ndindex(*shape):
        th = np.array([axes[j][idx[j]] for j in range(3)])
        if th[1] + th[2] >= 1.0:
            continue
        vals[idx], ranks[idx] = q_of(th)
    finite = np.isfinite(vals)
    cv_fmb = np.where(finite, region_curve(np.where(finite, vals, 0.0), draws), 0.0)
    cv_gauss = np.where(finite, region_curve(np.where(finite, vals, 0.0), ranks=np.maximum(ranks, 1)),
                        0.0)
    m_fmb = marginal_curve(cv_fmb, axes, target)
    m_gauss = marginal_curve(cv_gauss, axes, target)
    level = args.alpha
    try:
        ci_f = curve_crossings(m_fmb.grid, m_fmb.cv, level)
        ci_g = curve_crossings(m_gauss.grid, m_gauss.cv, level)
    except FMBError:
        ci_f = ci_g = (float("nan"), float("nan"))
    rows = [[_fmt(t), _fmt(a), _fmt(b)] for t, a, b in zip(m_fmb.grid, m_fmb.cv, m_gauss.cv)]
    text = _csv_text([args.target, "cv_fmb", "cv_gaussian"], rows)
    _emit(text, args.out)
    sys.stderr.write(json.dumps({"estimate": float(est.beta_hat[target]),
                                 "fmb_interval": list(ci_f), "gaussian_interval": list(ci_g),
                                 "level": 1.0 - level}) + "\n")


def cmd_coverage(args):
    settings = {}
    if args.config:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file not found: {args.config}")
        settings.update(load_config(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    cfg = CoverageConfig(**settings, lr_scale=args.lr_scale)
    reports = run_coverage(cfg, threads=_threads(args))
    buf = io.StringIO()
    write_report_csv(buf, reports)
    _emit(buf.getvalue(), args.out)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmb",
        description="Fast moving-average bootstrap for dependent data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="simulate ACD(1,1) durations as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--beta1", type=float, default=0.25)
    p.add_argument("--beta2", type=float, default=0.25)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--stream", type=int, default=0, help="random stream id under --seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("summary", help="descriptive statistics of one or more series")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("estimate", help="GEL estimate of the ACD(1,1) parameters (JSON)")
    _add_estimate_opts(p)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ci", help="bootstrap interval for the mean of a series (JSON)")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--sided", choices=("one", "two"), default="two")
    p.add_argument("--R", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--span", type=float, default=2.0,
                   help="search bracket half-width in sample standard deviations")
    _common(p)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("region", help="confidence region for (beta1, beta2) on a grid (CSV)")
    _add_estimate_opts(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--R", type=int, default=1000)
    p.add_argument("--grid-n", type=int, default=41)
    p.add_argument("--half-width", type=float, default=0.3)
    _common(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("curve", help="confidence curves, bootstrap and Gaussian (CSV)")
    p.add_argument("--mode", choices=("acd", "scalar"), default="acd")
    _add_estimate_opts(p)
    p.add_argument("--target", choices=("omega", "beta1", "beta2"), default="beta1")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--R", type=int, default=1000)
    p.add_argument("--grid-n", type=int, default=21)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--span", type=float, default=2.0)
    _common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study (CSV)")
    p.add_argument("--config", default=None, help="JSON or YAML file with the study settings")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--mc-reps", dest="mc_reps", type=int, default=None)
    p.add_argument("--bootstrap-r", dest="bootstrap_r", type=int, default=None)
    p.add_argument("--alphas", type=float, nargs="+", default=None)
    p.add_argument("--methods", nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lr-scale", choices=("smoothed", "plain"), default="smoothed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: FMB_THREADS or the number of cores)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coverage)
    return parser


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line", 2)
    try:
        args.func(args)
    except ConfigError as exc:
        return _fail(exc.code, str(exc), 2)
    except FMBError as exc:
        if isinstance(exc, ValueError):
            return _fail(exc.code, str(exc), 2)
        return _fail(exc.code, str(exc), 1)
    except (OSError, ValueError) as exc:
        return _fail("invalid_input", str(exc), 2)
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        return _fail("computation", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
