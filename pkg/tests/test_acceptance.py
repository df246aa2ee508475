"""Acceptance criteria, each reported as one PASS/FAIL line.

The two Monte Carlo coverage studies take roughly 10-20 minutes each on a
single core; their reports are written to ``reports/``.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from fmboot.acd import ACDParams, acd_problem, simulate_acd
from fmboot.bench import CoverageConfig, run_coverage, write_report_csv
from fmboot.gel import (
    gel_foc,
    inner_lambda,
    outer_beta,
    profiled_criterion,
    profiled_gradient,
    rho,
    smoothed_moments,
)
from fmboot.hac import lr_cov_lagform, lr_cov_smoothed
from fmboot.inference import invert_two_sided
from fmboot.kernels import KERNEL_NAMES, get_kernel, self_convolution
from fmboot.numerics import Rng
from fmboot.smoothing import SmoothedSeries, smooth_series, taper_weights
from fmboot.statistics import ScalarStatistic, q_star_draws, s_star_draws

ROOT = Path(__file__).resolve().parents[1]
REPORTS = ROOT / "reports"
QS = get_kernel("bessel_qs")
LEVELS = (0.99, 0.95, 0.90, 0.75)
ALPHAS = tuple(round(1 - p, 2) for p in LEVELS)


def parzen(a):
    h = abs(a) / 2.0
    if h <= 0.5:
        return 1 - 6 * h**2 + 6 * h**3
    if h <= 1.0:
        return 2 * (1 - h) ** 3
    return 0.0


def qs_closed(x):
    z = 6 * math.pi * x / 5
    return 25 / (12 * math.pi**2 * x**2) * (math.sin(z) / z - math.cos(z))


def fmt(values):
    return "(" + ", ".join(f"{v:.3f}" for v in values) + ")"


# ---------------------------------------------------------------------------


def test_criterion_1_kernel_identities(criterion):
    a = np.linspace(-3, 3, 601)
    e_trunc = np.max(np.abs(self_convolution(get_kernel("truncated"), a)
                            - np.clip(1 - np.abs(a) / 2, 0, None)))
    e_bart = np.max(np.abs(self_convolution(get_kernel("bartlett"), a)
                           - np.array([parzen(v) for v in a])))
    x = np.linspace(0.1, 3, 291)
    e_qs = np.max(np.abs(self_convolution(QS, x) - np.array([qs_closed(v) for v in x])))
    ok = e_trunc < 1e-8 and e_bart < 1e-8 and e_qs < 1e-3
    criterion("1 kernel identities", ok,
              f"truncated {e_trunc:.1e}, bartlett {e_bart:.1e} (< 1e-8); bessel {e_qs:.1e} (< 1e-3)")
    assert ok


def test_criterion_2_hac_form_equivalence(criterion):
    # literal statement: smoothed rows t = 1..T against the lag-covariance form
    worst = 0.0
    worst_ext = 0.0
    rng = np.random.default_rng(2)
    for name in KERNEL_NAMES:
        spec = get_kernel(name)
        for B in (2.0, 3.0, 5.0):
            for _ in range(200):
                raw = rng.normal(size=(200, 3))
                lag = lr_cov_lagform(raw, spec, B)
                scale = np.max(np.abs(lag))
                sm = smooth_series(raw, spec, B, -1.0, warn=False)
                inner = lr_cov_smoothed(sm, center=False).omega
                worst = max(worst, np.max(np.abs(inner - lag)) / scale)
                ext = smooth_series(raw, spec, B, -1.0, full_support=True, warn=False)
                g = ext.values
                omega_ext = spec.kappa1**2 * B / (spec.kappa2 * 200) * g.T @ g
                worst_ext = max(worst_ext, np.max(np.abs(omega_ext - lag)) / scale)
    ok = worst < 1e-10
    criterion("2 HAC form equivalence", ok,
              f"max relative error {worst:.2e} (target 1e-10); with zero-extended smoothed rows "
              f"{worst_ext:.1e}")
    assert ok


def test_criterion_3_pivotality(criterion):
    T, R = 2000, 2000
    B = 2 * T**0.2
    x = simulate_acd(ACDParams(1.0, 0.25, 0.25), T, rng=Rng(2024, 0))
    stat = ScalarStatistic(lambda th: x - th, QS, B)
    w = taper_weights(T, QS, B)
    s_draws = s_star_draws(stat.smoothed(float(w @ x / w.sum())), R, Rng(2024, 1))
    ks_s = stats.kstest(s_draws.replicates, "norm").statistic
    prob = acd_problem(bandwidth=B)
    est = outer_beta(prob, x, [0.25, 0.25])
    g = smoothed_moments(prob, x, est.beta_hat)
    q_draws = q_star_draws(SmoothedSeries(g, QS, B, -1.0), R, Rng(2024, 2))
    ks_q = stats.kstest(q_draws.replicates, "chi2", args=(3,)).statistic
    ok = ks_s < 0.05 and ks_q < 0.05
    criterion("3 pivotality", ok, f"KS(S*, N(0,1)) = {ks_s:.4f}, KS(Q*, chi2_3) = {ks_q:.4f} (< 0.05)")
    assert ok


def test_criterion_4_reparameterization(criterion):
    x = Rng(4).exponential(300) ** 1.5 + 2.0
    B = 5.0
    w = taper_weights(x.size, QS, B)
    th = float(w @ x / w.sum())
    stat = ScalarStatistic(lambda t: x - t, QS, B)
    draws = s_star_draws(stat.smoothed(th), 999, Rng(4, 1))
    half = 2 * x.std()
    ci = invert_two_sided(stat, draws, 0.05, (th - half, th + half))
    ci_exp = invert_two_sided(lambda eta: stat(math.log(eta)), draws, 0.05,
                              (math.exp(th - half), math.exp(th + half)))
    err = max(abs(ci_exp.lower / math.exp(ci.lower) - 1), abs(ci_exp.upper / math.exp(ci.upper) - 1))
    ok = err < 1e-8
    criterion("4 reparameterization invariance", ok, f"max relative endpoint error {err:.1e} (< 1e-8)")
    assert ok


def coverage_table(n, bandwidth, mc_reps, methods, name):
    cfg = CoverageConfig(n=n, bandwidth=bandwidth, mc_reps=mc_reps, bootstrap_r=1000,
                         alphas=ALPHAS, methods=methods, seed=20240601)
    reports = run_coverage(cfg, threads=1)
    REPORTS.mkdir(exist_ok=True)
    write_report_csv(REPORTS / name, reports)
    return {r.method: r for r in reports}


def within(emp, target, tol):
    return all(abs(e - t) <= tol for e, t in zip(emp, target))


def fmb_vs_s(reps):
    f, s = reps["FMB"], reps["S"]
    i = LEVELS.index(0.95)
    se = math.hypot(f.mc_se[i], s.mc_se[i])
    return f.empirical[i] >= s.empirical[i] - 2 * se, f.empirical[i], s.empirical[i]


REFERENCE_FMB = (0.954, 0.908, 0.862, 0.754)
REFERENCE_WALD = (0.923, 0.843, 0.774, 0.619)


@pytest.mark.slow
def test_criterion_5_coverage_n100(criterion):
    reps = coverage_table(100, 3.0, 2000, ("FMB", "S", "Wald", "LR"), "coverage_N100_B3.csv")
    fmb, wald = reps["FMB"].empirical, reps["Wald"].empirical
    order_ok, f95, s95 = fmb_vs_s(reps)
    ok_f = within(fmb, REFERENCE_FMB, 0.03)
    ok_w = within(wald, REFERENCE_WALD, 0.03)
    ok = ok_f and ok_w and order_ok
    criterion("5 reference coverage (N=100, B=3, 2000 reps)", ok,
              f"FMB {fmt(fmb)} vs {fmt(REFERENCE_FMB)} [{'ok' if ok_f else 'off'}]; "
              f"Wald {fmt(wald)} vs {fmt(REFERENCE_WALD)} [{'ok' if ok_w else 'off'}]; "
              f"FMB {f95:.3f} vs S {s95:.3f} at 0.95 [{'ok' if order_ok else 'off'}]; "
              f"LR {fmt(reps['LR'].empirical)}")
    assert ok


@pytest.mark.slow
def test_criterion_5_smoke(criterion):
    t0 = time.time()
    reps = coverage_table(100, 3.0, 200, ("FMB", "S", "Wald", "LR"), "coverage_N100_B3_smoke.csv")
    elapsed = time.time() - t0
    fmb, wald = reps["FMB"].empirical, reps["Wald"].empirical
    order_ok, f95, s95 = fmb_vs_s(reps)
    ok_f = within(fmb, REFERENCE_FMB, 0.08)
    ok_w = within(wald, REFERENCE_WALD, 0.08)
    ok = ok_f and ok_w and order_ok and elapsed < 600
    criterion("5 smoke (200 reps, +-0.08)", ok,
              f"FMB {fmt(fmb)} [{'ok' if ok_f else 'off'}]; Wald {fmt(wald)} "
              f"[{'ok' if ok_w else 'off'}]; FMB {f95:.3f} vs S {s95:.3f}; {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_6_coverage_n250(criterion):
    reps = coverage_table(250, 5.0, 2000, ("FMB", "S"), "coverage_N250_B5.csv")
    emp = reps["FMB"].empirical[LEVELS.index(0.90)]
    ok = abs(emp - 0.881) <= 0.03
    criterion("6 reference spot check (N=250, B=5, nominal 0.90)", ok,
              f"FMB {emp:.3f} vs 0.881 +- 0.03; full row FMB {fmt(reps['FMB'].empirical)}, "
              f"S {fmt(reps['S'].empirical)}")
    assert ok


def test_criterion_7_gel(criterion):
    notes = []
    std = max(max(abs(rho(0.0, f)[1] + 1), abs(rho(0.0, f)[2] + 1)) for f in ("EL", "ET", "CUE"))
    notes.append(f"rho'(0), rho''(0) error {std:.1e}")
    x = simulate_acd(ACDParams(1.0, 0.25, 0.25), 500, rng=Rng(7, 0))
    beta = np.array([0.3, 0.2])
    cue = acd_problem(rho="CUE", bandwidth=4.0)
    G = smoothed_moments(cue, x, beta)
    closed = -np.linalg.solve(G.T @ G / G.shape[0], G.mean(axis=0)) / cue.kappa
    lam = inner_lambda(cue, x, beta)
    e_cue = np.max(np.abs(lam - closed)) / np.max(np.abs(closed))
    notes.append(f"CUE closed form {e_cue:.1e}")
    foc = 0.0
    grad = 0.0
    interior = True
    for fam in ("EL", "ET", "CUE"):
        prob = acd_problem(rho=fam, bandwidth=4.0)
        est = outer_beta(prob, x, [0.25, 0.25])
        interior = interior and not est.at_boundary
        psi1, psi2, _ = gel_foc(prob, x, est.beta_hat, est.lambda_hat)
        foc = max(foc, np.max(np.abs(psi1)), np.max(np.abs(psi2)))
        g = profiled_gradient(prob, x, beta)
        h = 1e-5
        fd = np.array([(profiled_criterion(prob, x, beta + h * e)
                        - profiled_criterion(prob, x, beta - h * e)) / (2 * h) for e in np.eye(2)])
        grad = max(grad, np.max(np.abs(g - fd)) / np.max(np.abs(g)))
    notes.append(f"FOC means {foc:.1e}")
    notes.append(f"gradient relative error {grad:.1e}")
    ok = std < 1e-12 and e_cue < 1e-9 and foc < 1e-6 and grad < 1e-5 and interior
    criterion("7 GEL correctness", ok, "; ".join(notes))
    assert ok


PROPERTY_TESTS = [
    "tests/test_statistics.py::test_recentred_pool_mean_zero",
    "tests/test_statistics.py::test_recentred_constant_column_is_exactly_zero",
    "tests/test_statistics.py::test_quantile_nesting",
    "tests/test_inference.py::test_cv_is_twice_min_tail",
    "tests/test_inference.py::test_curve_identities",
    "tests/test_hac.py::test_hac_outputs_psd",
    "tests/test_numerics.py::test_moore_penrose_identities",
    "tests/test_numerics.py::test_pseudo_inverse_identity",
    "tests/test_smoothing.py::test_linearity",
    "tests/test_smoothing.py::test_scaling_bridge",
    "tests/test_smoothing.py::test_bandwidth_warning_emitted",
    "tests/test_acd.py::test_params_validation",
    "tests/test_acd.py::test_simulate_rejects_bad_sizes",
    "tests/test_acd.py::test_recursion_rejects_bad_input",
    "tests/test_golden.py",
]


def test_criterion_8_property_suite(criterion):
    t0 = time.time()
    res = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                          "-m", "not slow", *PROPERTY_TESTS],
                         cwd=ROOT, capture_output=True, text=True)
    elapsed = time.time() - t0
    summary = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr[-200:]
    ok = res.returncode == 0 and elapsed < 60
    criterion("8 property suite", ok, f"{summary}; {elapsed:.1f} s (< 60 s)")
    assert ok, res.stdout[-3000:]
