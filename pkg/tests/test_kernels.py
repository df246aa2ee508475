import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from fmboot.exceptions import BandwidthWarning, ConfigError
from fmboot.kernels import (
    KERNEL_NAMES,
    check_bandwidth,
    eval_induced,
    eval_kernel,
    get_kernel,
    induced_riemann,
    kappa_hat,
    kernel_weights,
    qs_kernel,
    self_convolution,
)


def parzen(a):
    # induced Bartlett kernel written out piecewise
    h = abs(a) / 2.0
    if h <= 0.5:
        return 1 - 6 * h**2 + 6 * h**3
    if h <= 1.0:
        return 2 * (1 - h) ** 3
    return 0.0


def qs_closed(x):
    z = 6 * math.pi * x / 5
    return 25 / (12 * math.pi**2 * x**2) * (math.sin(z) / z - math.cos(z))


def test_constants():
    t, b, q = (get_kernel(n) for n in KERNEL_NAMES)
    assert (t.kappa1, t.kappa2, t.char_exponent) == (2.0, 2.0, 1)
    assert (b.kappa1, b.kappa2, b.char_exponent) == (1.0, 2.0 / 3.0, 2)
    assert q.kappa1 == pytest.approx(math.sqrt(5 * math.pi / 2), rel=1e-15)
    assert q.kappa2 == pytest.approx(2 * math.pi, rel=1e-15)
    for spec in (t, b, q):
        assert spec.kappa == spec.kappa1 / spec.kappa2


@pytest.mark.parametrize("name", ["truncated", "bartlett"])
def test_constants_match_quadrature_compact(name):
    spec = get_kernel(name)
    k1, _ = integrate.quad(lambda x: eval_kernel(spec, x), -1, 1, points=[0])
    k2, _ = integrate.quad(lambda x: eval_kernel(spec, x) ** 2, -1, 1, points=[0])
    assert k1 == pytest.approx(spec.kappa1, abs=1e-6)
    assert k2 == pytest.approx(spec.kappa2, abs=1e-6)


def test_constants_match_quadrature_bessel():
    # band-limited integrand: the trapezoid sum is exact up to the tails
    spec = get_kernel("bessel_qs")
    h, half = 0.05, 20000.0
    x = np.arange(-half, half + h / 2, h)
    f = eval_kernel(spec, x)
    k2 = h * np.sum(f**2)
    assert k2 == pytest.approx(spec.kappa2, abs=1e-3)
    # int k converges slowly (tails ~ |x|^{-3/2}); exponential damping fixes it
    k1 = h * np.sum(f * np.exp(-(x / 2000.0) ** 2))
    assert k1 == pytest.approx(spec.kappa1, abs=1e-3)


def test_unknown_kernel():
    with pytest.raises(ConfigError):
        get_kernel("epanechnikov")


def test_eval_kernel_examples():
    assert eval_kernel(get_kernel("truncated"), 0.5) == 1.0
    assert eval_kernel(get_kernel("truncated"), 1.5) == 0.0
    assert eval_kernel(get_kernel("bartlett"), 0.5) == 0.5
    zero = math.sqrt(5 * math.pi / 8) * 3 * math.pi / 5
    assert eval_kernel(get_kernel("bessel_qs"), 0.0) == pytest.approx(zero, rel=1e-14)
    assert zero == pytest.approx(2.64127, abs=5e-5)


def test_bessel_kernel_continuous_at_zero():
    spec = get_kernel("bessel_qs")
    assert eval_kernel(spec, 1e-7) == pytest.approx(eval_kernel(spec, 0.0), rel=1e-10)


def test_qs_kernel_at_zero():
    assert qs_kernel(0.0) == pytest.approx(1.0)
    assert qs_kernel(0.7) == pytest.approx(qs_closed(0.7), rel=1e-12)


def test_induced_examples():
    t, b = get_kernel("truncated"), get_kernel("bartlett")
    assert eval_induced(t, 0.0) == 1.0
    assert eval_induced(t, 1.0) == 0.5
    assert eval_induced(b, 1.0) == pytest.approx(0.25, abs=1e-15)


def test_truncated_self_convolution_identity():
    spec = get_kernel("truncated")
    a = np.linspace(-3, 3, 601)
    numeric = self_convolution(spec, a)
    assert np.max(np.abs(numeric - np.clip(1 - np.abs(a) / 2, 0, None))) < 1e-8


def test_bartlett_self_convolution_identity():
    spec = get_kernel("bartlett")
    a = np.linspace(-3, 3, 601)
    numeric = self_convolution(spec, a)
    assert np.max(np.abs(numeric - np.array([parzen(v) for v in a]))) < 1e-8


def test_bessel_self_convolution_matches_qs():
    spec = get_kernel("bessel_qs")
    x = np.linspace(0.1, 3, 291)
    numeric = self_convolution(spec, x)
    assert np.max(np.abs(numeric - np.array([qs_closed(v) for v in x]))) < 1e-3
    assert self_convolution(spec, 0.0) == pytest.approx(1.0, abs=1e-3)


def test_kernel_weights_shape():
    w = kernel_weights(get_kernel("truncated"), 3.0, 100)
    assert w.size == 7 and np.all(w == 1.0)
    w = kernel_weights(get_kernel("bartlett"), 2.5, 100)
    assert_allclose(w, [0.2, 0.6, 1.0, 0.6, 0.2])
    assert kernel_weights(get_kernel("bessel_qs"), 3.0, 5).size == 11


def test_induced_riemann_hand_enumeration():
    assert induced_riemann(get_kernel("truncated"), 0, 3.0, 200) == pytest.approx(7 / 6)


def test_induced_riemann_no_overlap():
    assert induced_riemann(get_kernel("truncated"), 7, 3.0, 200) == 0.0


def test_induced_riemann_bartlett_at_zero():
    assert abs(induced_riemann(get_kernel("bartlett"), 0, 50.0, 10_000) - 1.0) < 5e-3


@pytest.mark.parametrize("name", KERNEL_NAMES)
@pytest.mark.parametrize("B", [25, 50, 100])
def test_induced_riemann_converges(name, B):
    spec = get_kernel(name)
    T = 100 * B
    for s in (0, B // 2, B, 3 * B // 2):
        err = abs(induced_riemann(spec, s, B, T) - eval_induced(spec, s / B))
        # truncated at s = 0 errs by exactly 1 / (2B), i.e. 2e-2 at B = 25
        assert err <= 2e-2 * (1 + 1e-12)


def test_kappa_hat_examples():
    assert kappa_hat(get_kernel("truncated"), 1, 3.0, 200) == pytest.approx(7 / 3)
    assert kappa_hat(get_kernel("bartlett"), 2, 100.0, 10_000) == pytest.approx(2 / 3, abs=0.01)
    qs = get_kernel("bessel_qs")
    assert kappa_hat(qs, 1, 200.0, 100_000) == pytest.approx(math.sqrt(5 * math.pi / 2), abs=0.02)


def test_kappa_hat_rejects_bad_index():
    with pytest.raises(ConfigError):
        kappa_hat(get_kernel("truncated"), 3, 3.0, 100)


def test_bandwidth_window_warning():
    with pytest.warns(BandwidthWarning):
        assert not check_bandwidth(2.0, 10_000)
    with pytest.warns(BandwidthWarning):
        assert not check_bandwidth(200.0, 10_000)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_bandwidth(30.0, 10_000)
