import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from fmboot.acd import ACDParams, acd_problem, simulate_acd
from fmboot.exceptions import DomainViolation
from fmboot.gel import (
    GelProblem,
    RhoFamily,
    gel_criterion,
    gel_foc,
    inner_lambda,
    inner_lambda_from,
    outer_beta,
    profiled_criterion,
    profiled_gradient,
    rho,
    smoothed_jacobian,
    smoothed_moments,
)
from fmboot.kernels import get_kernel
from fmboot.numerics import Rng
from fmboot.smoothing import taper_weights

FAMILIES = ("EL", "ET", "CUE")
QS = get_kernel("bessel_qs")


def mean_problem(rho_name="ET", B=3.0):
    return GelProblem(lambda d, b: d - b[0], 1, 1, rho_name, QS, B, ([-10.0], [10.0]))


def two_moment_problem(rho_name="ET", B=3.0):
    # mean and second moment of a unit-variance series, one parameter
    def g(d, b):
        return np.column_stack([d - b[0], d**2 - b[0] ** 2 - 1.0])
    return GelProblem(g, 1, 2, rho_name, QS, B, ([-5.0], [5.0]))


@pytest.fixture(scope="module")
def acd_data():
    return simulate_acd(ACDParams(1.0, 0.25, 0.25), 300, rng=Rng(5, 0))


# ---------------------------------------------------------------------------
# carrier functions


@pytest.mark.parametrize("fam", FAMILIES)
def test_rho_standardization(fam):
    v, d1, d2 = rho(0.0, fam)
    assert d1 == pytest.approx(-1.0, abs=1e-12)
    assert d2 == pytest.approx(-1.0, abs=1e-12)
    assert v == RhoFamily(fam).rho0


@pytest.mark.parametrize("fam", FAMILIES)
def test_rho_derivatives_match_differences(fam):
    v = np.linspace(-0.8, 0.8, 17)
    h = 1e-6
    val, d1, d2 = rho(v, fam)
    assert_allclose(d1, (rho(v + h, fam)[0] - rho(v - h, fam)[0]) / (2 * h), rtol=1e-7)
    assert_allclose(d2, (rho(v + h, fam)[1] - rho(v - h, fam)[1]) / (2 * h), rtol=1e-7)


def test_rho_values():
    assert rho(1.0, "CUE")[0] == -1.5
    assert rho(0.5, "EL")[0] == pytest.approx(np.log(0.5))
    assert rho(2.0, "ET")[0] == pytest.approx(-np.exp(2.0))
    with pytest.raises(DomainViolation):
        rho(1.0, "EL")


def test_unknown_family():
    with pytest.raises(ValueError):
        RhoFamily("GMM")


# ---------------------------------------------------------------------------
# criterion


@pytest.mark.parametrize("fam", FAMILIES)
def test_criterion_zero_multiplier(fam, acd_data):
    prob = acd_problem(rho=fam)
    assert gel_criterion(prob, acd_data, [0.3, 0.2], np.zeros(3)) == 0.0


def test_cue_closed_form(acd_data):
    prob = acd_problem(rho="CUE")
    lam = np.array([0.03, -0.02, 0.01])
    G = smoothed_moments(prob, acd_data, [0.3, 0.2])
    v = prob.kappa * (G @ lam)
    expected = np.mean(-v - v**2 / 2)
    assert gel_criterion(prob, acd_data, [0.3, 0.2], lam) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("fam", ["EL", "ET"])
def test_criterion_concave_in_lambda(fam, acd_data):
    prob = acd_problem(rho=fam)
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.normal(scale=0.01, size=(2, 3))
        pts = [a + t * (b - a) for t in np.linspace(0, 1, 5)]
        vals = [gel_criterion(prob, acd_data, [0.3, 0.2], p) for p in pts]
        chord = np.linspace(vals[0], vals[-1], 5)
        assert np.all(np.asarray(vals) >= chord - 1e-14)


# ---------------------------------------------------------------------------
# inner problem


@pytest.mark.parametrize("fam", FAMILIES)
def test_inner_lambda_zero_mean(fam):
    G = np.vstack([np.eye(2), -np.eye(2)])
    lam, val = inner_lambda_from(G, 0.5, RhoFamily(fam))
    assert_array_equal(lam, 0.0)
    assert val == 0.0


def test_inner_cue_r1_closed_form():
    x = Rng(2).normal(200) + 0.3
    prob = mean_problem("CUE")
    g = smoothed_moments(prob, x, [0.0])[:, 0]
    lam = inner_lambda(prob, x, [0.0])
    expected = -g.mean() / (prob.kappa * np.mean(g**2))
    assert lam[0] == pytest.approx(expected, rel=1e-9)


def test_inner_et_small_at_truth():
    # with B^{-1} smoothing the multiplier is of order B / sqrt(T), so the
    # bound needs a bandwidth small relative to sqrt(T)
    prob = two_moment_problem("ET", B=1.5)
    norms = [np.linalg.norm(inner_lambda(prob, Rng(s).normal(2000), [0.0])) for s in range(20)]
    assert np.median(norms) < 0.1


def test_inner_et_drifts_to_zero():
    def median_norm(T, B):
        prob = two_moment_problem("ET", B=B)
        return np.median([np.linalg.norm(inner_lambda(prob, Rng(s).normal(T), [0.0]))
                          for s in range(20)])
    a, b, c = (median_norm(T, 4.0) for T in (500, 2000, 8000))
    assert a > b > c
    # linear in B at fixed T
    assert median_norm(2000, 1.5) / b == pytest.approx(1.5 / 4.0, rel=0.1)


@pytest.mark.parametrize("fam", FAMILIES)
def test_inner_lambda_solves_foc(fam, acd_data):
    prob = acd_problem(rho=fam)
    lam = inner_lambda(prob, acd_data, [0.3, 0.2])
    psi1, _, _ = gel_foc(prob, acd_data, [0.3, 0.2], lam)
    assert np.max(np.abs(psi1)) < 1e-8


# ---------------------------------------------------------------------------
# outer problem


@pytest.mark.parametrize("fam", FAMILIES)
def test_exactly_identified_mean(fam):
    x = Rng(4).normal(250) + 1.0
    prob = mean_problem(fam)
    est = outer_beta(prob, x, [0.5])
    w = taper_weights(250, QS, 3.0)
    assert est.beta_hat[0] == pytest.approx(w @ x / w.sum(), abs=1e-6)
    assert abs(est.lambda_hat[0]) < 1e-6
    assert est.criterion == pytest.approx(0.0, abs=1e-10)
    assert est.inner_converged and est.outer_converged


def test_noiseless_toy_starting_at_truth():
    x = np.tile([-1.0, 1.0], 100)
    prob = two_moment_problem("ET", B=0.5)
    est = outer_beta(prob, x, [0.0], n_starts=1)
    assert est.beta_hat[0] == pytest.approx(0.0, abs=1e-8)
    assert est.criterion == pytest.approx(0.0, abs=1e-14)


def test_outer_deterministic(acd_data):
    prob = acd_problem()
    a = outer_beta(prob, acd_data, [0.25, 0.25], seed=3)
    b = outer_beta(prob, acd_data, [0.25, 0.25], seed=3)
    assert_array_equal(a.beta_hat, b.beta_hat)
    assert a.to_dict() == b.to_dict()


def test_outer_respects_box(acd_data):
    prob = acd_problem(box=([0.0, 0.0], [0.2, 0.2]))
    est = outer_beta(prob, acd_data, [0.1, 0.1])
    assert np.all(est.beta_hat >= 0) and np.all(est.beta_hat <= 0.2)


@pytest.mark.slow
def test_acd_estimates_consistent():
    errs = []
    for i in range(100):
        x = simulate_acd(ACDParams(1.0, 0.25, 0.25), 250, rng=Rng(6, i))
        est = outer_beta(acd_problem(bandwidth=5.0), x, [0.25, 0.25])
        errs.append(np.abs(est.beta_hat - 0.25))
    assert np.all(np.median(errs, axis=0) < 0.15)


# ---------------------------------------------------------------------------
# first-order conditions and gradients


def test_foc_at_zero_multiplier(acd_data):
    prob = acd_problem()
    psi1, psi2, stack = gel_foc(prob, acd_data, [0.3, 0.2], np.zeros(3))
    assert_allclose(psi1, -smoothed_moments(prob, acd_data, [0.3, 0.2]).mean(axis=0), rtol=1e-14)
    assert_array_equal(psi2, 0.0)
    assert stack.shape == (300, 5)


@pytest.mark.parametrize("fam", FAMILIES)
def test_foc_is_lambda_gradient(fam, acd_data):
    prob = acd_problem(rho=fam)
    lam = np.array([0.02, -0.01, 0.005])
    psi1, _, _ = gel_foc(prob, acd_data, [0.3, 0.2], lam)
    h = 1e-6
    fd = np.array([(gel_criterion(prob, acd_data, [0.3, 0.2], lam + h * e)
                    - gel_criterion(prob, acd_data, [0.3, 0.2], lam - h * e)) / (2 * h)
                   for e in np.eye(3)])
    assert_allclose(psi1, fd / prob.kappa, atol=1e-6)


def test_foc_vanish_at_cue_closed_form():
    x = Rng(7).normal(200)
    prob = mean_problem("CUE")
    w = taper_weights(200, QS, 3.0)
    beta = [float(w @ x / w.sum())]
    lam = inner_lambda(prob, x, beta)
    psi1, psi2, _ = gel_foc(prob, x, beta, lam)
    assert abs(psi1[0]) < 1e-8 and abs(psi2[0]) < 1e-8


@pytest.mark.parametrize("fam", FAMILIES)
def test_foc_means_at_estimate(fam, acd_data):
    prob = acd_problem(rho=fam)
    est = outer_beta(prob, acd_data, [0.25, 0.25])
    psi1, psi2, _ = gel_foc(prob, acd_data, est.beta_hat, est.lambda_hat)
    assert np.max(np.abs(psi1)) < 1e-6
    if not est.at_boundary:
        assert np.max(np.abs(psi2)) < 1e-6


def test_analytic_jacobian_matches_differences(acd_data):
    prob = acd_problem()
    fd_prob = acd_problem()
    fd_prob.jacobian_fn = None
    a = smoothed_jacobian(prob, acd_data, [0.3, 0.2])
    b = smoothed_jacobian(fd_prob, acd_data, [0.3, 0.2])
    assert np.max(np.abs(a - b)) < 1e-6 * np.max(np.abs(a))


@pytest.mark.parametrize("fam", FAMILIES)
def test_profiled_gradient_matches_differences(fam, acd_data):
    prob = acd_problem(rho=fam)
    beta = np.array([0.3, 0.2])
    g = profiled_gradient(prob, acd_data, beta)
    h = 1e-5
    fd = np.array([(profiled_criterion(prob, acd_data, beta + h * e)
                    - profiled_criterion(prob, acd_data, beta - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.max(np.abs(g - fd)) / np.max(np.abs(g)) < 1e-5
