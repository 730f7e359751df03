import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from mixlab.errors import UnsupportedRegimeError, ValidationError
from mixlab.models import (
    ModelSpec,
    beta_kh,
    classify_regime,
    fgn_L,
    fou_asymptote,
    fou_autocov_raw,
    fou_variance,
    gamma_y,
    gamma_z,
    gamma_zy,
    increment_law,
    sigma_of_n,
    slowly_varying_L,
)

ALPHAS = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8]


def fgn_direct(alpha, k):
    k = abs(k)
    return 0.5 * (abs(k + 1) ** alpha - 2 * k**alpha + abs(k - 1) ** alpha)


def fou_qawf(hurst, lam, k):
    """Independent oracle: Fourier-weighted QUADPACK on the spectral density."""
    c_h = special.gamma(2 * hurst + 1) * math.sin(math.pi * hurst)
    pref = c_h / math.pi
    e = 1 - 2 * hurst
    head, _ = integrate.quad(lambda x: math.cos(k * x) / (lam**2 + x * x), 0, 1, weight="alg", wvar=(e, 0), limit=400)
    if k == 0:
        tail, _ = integrate.quad(lambda x: x**e / (lam**2 + x * x), 1, np.inf, limit=400)
    else:
        tail, _ = integrate.quad(lambda x: x**e / (lam**2 + x * x), 1, np.inf, weight="cos", wvar=k, limlst=200)
    return pref * (head + tail)


# ---------------------------------------------------------------- ModelSpec


def test_model_validation():
    for bad in [("fBm", 0.5), ("fGn", 0.0), ("fGn", 2.0), ("fOU", 1.0), ("fOU", 0.6, -1.0), ("fOU", 0.6, 1.0, 0.0)]:
        with pytest.raises(ValidationError):
            ModelSpec(*bad)
    assert ModelSpec.from_hurst("fOU", 0.3) == ModelSpec("fOU", 0.6)
    assert ModelSpec("fGn", 0.6).hurst == 0.3


# ---------------------------------------------------------------- fGn


def test_fgn_examples():
    assert gamma_y(ModelSpec("fGn", 1.0), 1) == 0.0
    assert gamma_y(ModelSpec("fGn", 0.6), 1) == pytest.approx((2**0.6 - 2) / 2, rel=1e-14)
    assert gamma_y(ModelSpec("fGn", 0.6), 1) == pytest.approx(-0.242142, abs=1e-6)
    for a in ALPHAS:
        assert gamma_y(ModelSpec("fGn", a), 0) == 1.0


@pytest.mark.parametrize("alpha", ALPHAS)
def test_fgn_series_branch_matches_high_precision(alpha):
    import mpmath

    mpmath.mp.dps = 50
    for k in [31, 32, 33, 100, 1000, 10**5]:
        a = mpmath.mpf(alpha)
        ref = (mpmath.mpf(k + 1) ** a - 2 * mpmath.mpf(k) ** a + mpmath.mpf(k - 1) ** a) / 2
        assert gamma_y(ModelSpec("fGn", alpha), k) == pytest.approx(float(ref), rel=1e-12)


def test_gamma_y_rejects_negative_lag():
    with pytest.raises(ValidationError):
        gamma_y(ModelSpec("fGn", 0.6), -1)


# ---------------------------------------------------------------- sigma(n)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_sigma_of_n_closed_form(alpha):
    import mpmath

    mpmath.mp.dps = 40
    model = ModelSpec("fGn", alpha)
    a = mpmath.mpf(alpha)
    for n in [1, 2, 3, 7, 30, 100, 999, 10**4]:
        # closed form in extended precision: the double version cancels at large n
        closed = 1 / mpmath.sqrt(2 - abs(n - 1) ** a + 2 * mpmath.mpf(n) ** a - mpmath.mpf(n + 1) ** a)
        assert sigma_of_n(model, n) == pytest.approx(float(closed), rel=1e-12)


def test_sigma_of_n_examples():
    for n in [1, 5, 50]:
        assert sigma_of_n(ModelSpec("fGn", 1.0), n) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert sigma_of_n(ModelSpec("fGn", 0.6), 1) == pytest.approx(1 / math.sqrt(4 - 2**0.6), rel=1e-14)
    assert sigma_of_n(ModelSpec("fGn", 0.6), 1) == pytest.approx(0.634, abs=1e-3)
    assert sigma_of_n(ModelSpec("fGn", 0.6), 10**6) == pytest.approx(1 / math.sqrt(2), rel=1e-6)
    with pytest.raises(ValidationError):
        sigma_of_n(ModelSpec("fGn", 0.6), 0)


# ---------------------------------------------------------------- increments


def test_gamma_z_examples():
    law = increment_law(ModelSpec("fGn", 1.0), 1)
    assert gamma_z(law, 0) == pytest.approx(1.0, rel=1e-15)
    assert gamma_z(law, 1) == pytest.approx(-0.5, rel=1e-15)
    assert gamma_z(law, 2) == 0.0


@pytest.mark.parametrize("model", [ModelSpec("fGn", 0.6), ModelSpec("fGn", 1.8), ModelSpec("fOU", 0.6), ModelSpec("fOU", 1.8)])
def test_gamma_z_even_unit_and_decay(model):
    law = increment_law(model, 30)
    assert gamma_z(law, 0) == pytest.approx(1.0, rel=1e-13)
    k = np.arange(1, 200)
    np.testing.assert_allclose(gamma_z(law, k), gamma_z(law, -k), rtol=0, atol=1e-15)
    big = np.array([10**3, 3 * 10**3, 10**4, 3 * 10**4, 10**5])
    g = np.abs(gamma_z(law, big))
    # O(k^(alpha-3)) as a bound; the second difference actually gives k^(alpha-4)
    ratio = g / big ** (model.alpha - 3)
    assert np.all(np.diff(ratio) <= 0) and ratio[0] < 1.0
    sharp = g / big ** (model.alpha - 4)
    assert sharp.max() / sharp.min() < 1.05


def test_gamma_zy_examples():
    law = increment_law(ModelSpec("fGn", 1.0), 1)
    assert gamma_zy(law, 0) == pytest.approx(-1 / math.sqrt(2), rel=1e-15)
    law2 = increment_law(ModelSpec("fGn", 0.6), 2)
    expected = sigma_of_n(ModelSpec("fGn", 0.6), 2) * (fgn_direct(0.6, 3) - fgn_direct(0.6, 1))
    assert gamma_zy(law2, 1) == pytest.approx(expected, rel=1e-13)
    assert abs(gamma_zy(increment_law(ModelSpec("fGn", 0.6), 30), 10**6)) < 1e-8


def test_increment_summability():
    for model in [ModelSpec("fGn", 0.6), ModelSpec("fGn", 1.8), ModelSpec("fOU", 0.6), ModelSpec("fOU", 1.8)]:
        law = increment_law(model, 30)
        g = np.abs(gamma_z(law, np.arange(1, 2 * 10**6 + 1)))
        # increments of the partial sums beyond K = 10^6
        assert g[10**6 :].sum() < 1e-8 or model.alpha > 1.5
        assert (g[10**6 :] ** 2).sum() < 1e-8
        # absolute sums converge for every alpha < 2: the k^(alpha-3) tail mass past K
        tail = g[10**6 - 1] * 10**6 / (2 - model.alpha)
        assert tail < 1e-4


# ---------------------------------------------------------------- L(k)


def test_slowly_varying_L():
    m = ModelSpec("fGn", 0.6)
    assert slowly_varying_L(m, 1e6) / slowly_varying_L(m, 2e6) == pytest.approx(1.0, abs=1e-4)
    assert slowly_varying_L(m, 10) == pytest.approx(50 * (1.1**0.6 - 2 + 0.9**0.6), rel=1e-12)
    np.testing.assert_allclose(fgn_L(2.0, np.array([3.0, 50.0, 1e4])), 1.0, rtol=1e-12)
    with pytest.raises(ValidationError):
        slowly_varying_L(m, 0.5)
    ou = ModelSpec("fOU", 1.8, lam=2.0, sigma=3.0)
    const = 9 * 1.8 * 0.8 / (2 * 4) / fou_variance(0.9, 2.0, 3.0)
    assert slowly_varying_L(ou, 17) == pytest.approx(const)


# ---------------------------------------------------------------- regime


def test_regime_examples():
    r = classify_regime(ModelSpec("fGn", 0.6))
    assert (r.real_limit, r.real_rate, r.imag_rate) == ("Gaussian", "sqrt(N+1)", "sqrt(N+1)")
    assert r.regime == "subdiffusive" and r.beta_1 is None
    r = classify_regime(ModelSpec("fGn", 1.8))
    assert r.real_limit == "RosenblattMixture" and r.regime == "strongly-superdiffusive"
    assert r.beta_1 == pytest.approx(math.sqrt(1 / (0.9 * 0.8)), rel=1e-14)
    assert r.beta_1 == pytest.approx(1.178511, abs=1e-6)
    assert r.beta_2 == pytest.approx(math.sqrt(2 / (0.8 * 0.6)), rel=1e-14)
    assert r.real_rate_value(1023) == pytest.approx(1024**0.2 / slowly_varying_L(ModelSpec("fGn", 1.8), 1024))
    assert classify_regime(ModelSpec("fGn", 1.0)).regime == "diffusive"
    assert classify_regime(ModelSpec("fGn", 1.2)).regime == "weakly-superdiffusive"


def test_boundary_is_flagged():
    r = classify_regime(ModelSpec("fGn", 1.5))
    assert r.regime == "boundary" and not r.supported
    with pytest.raises(UnsupportedRegimeError):
        r.real_rate_value(100)


def test_beta_kh_domain():
    with pytest.raises(ValidationError):
        beta_kh(1, 0.4)


# ---------------------------------------------------------------- fOU


@pytest.mark.parametrize("hurst, lam", [(0.3, 1.0), (0.9, 1.0), (0.2, 0.3), (0.7, 2.5)])
def test_fou_variance_closed_form(hurst, lam):
    assert fou_autocov_raw(hurst, lam, 1.0, 0)[0] == pytest.approx(fou_qawf(hurst, lam, 0), rel=1e-9)
    assert fou_variance(hurst, lam, 1.0) == pytest.approx(special.gamma(2 * hurst + 1) / (2 * lam ** (2 * hurst)), rel=1e-15)


@pytest.mark.parametrize("hurst, lam", [(0.3, 1.0), (0.9, 1.0), (0.2, 0.3), (0.7, 2.5)])
def test_fou_quadrature_matches_independent_oracle(hurst, lam):
    ks = [1, 2, 5, 13, 30]
    ours = fou_autocov_raw(hurst, lam, 1.0, ks, method="quad")
    ref = np.array([fou_qawf(hurst, lam, k) for k in ks])
    np.testing.assert_allclose(ours, ref, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("hurst", [0.1, 0.3, 0.7, 0.9])
def test_fou_series_and_quadrature_agree(hurst):
    ks = np.array([40, 55, 80, 150])
    np.testing.assert_allclose(
        fou_autocov_raw(hurst, 1.0, 1.0, ks, method="series"),
        fou_autocov_raw(hurst, 1.0, 1.0, ks, method="quad"),
        rtol=1e-10,
    )


@pytest.mark.parametrize("alpha", [0.6, 1.8])
def test_fou_asymptote_within_five_percent(alpha):
    model = ModelSpec("fOU", alpha)
    raw = fou_autocov_raw(model.hurst, 1.0, 1.0, 1000, method="quad")[0]
    assert raw / fou_asymptote(model, 1000) == pytest.approx(1.0, abs=0.05)


def test_fou_sigma_scales_raw_but_cancels_after_normalization():
    raw1 = fou_autocov_raw(0.3, 1.0, 1.0, [0, 3])
    raw2 = fou_autocov_raw(0.3, 1.0, 2.0, [0, 3])
    np.testing.assert_allclose(raw2, 4 * raw1, rtol=1e-14)
    a = gamma_y(ModelSpec("fOU", 0.6, 1.0, 1.0), np.arange(10))
    b = gamma_y(ModelSpec("fOU", 0.6, 1.0, 5.0), np.arange(10))
    np.testing.assert_array_equal(a, b)
    assert a[0] == pytest.approx(1.0, rel=1e-14)


def test_fou_method_validation():
    with pytest.raises(ValidationError):
        fou_autocov_raw(0.3, 1.0, 1.0, 5, method="fft")


def test_fou_memo_does_not_change_values():
    model = ModelSpec("fOU", 0.9, lam=0.7)
    small = gamma_y(model, np.arange(20)).copy()
    big = gamma_y(model, np.arange(5000))
    np.testing.assert_array_equal(small, big[:20])
    np.testing.assert_allclose(small, fou_autocov_raw(0.45, 0.7, 1.0, np.arange(20)) / fou_variance(0.45, 0.7, 1.0), rtol=1e-15)


def test_fou_memo_concurrent_reads():
    model = ModelSpec("fOU", 1.3, lam=1.7)
    results = [None] * 8

    def work(i):
        results[i] = gamma_y(model, np.arange(100 * (i + 1)))

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for r in results:
        np.testing.assert_array_equal(r, results[-1][: len(r)])


@given(st.sampled_from([0.6, 1.0, 1.8]), st.integers(1, 300))
@settings(max_examples=30, deadline=None)
def test_gamma_z_unit_variance_property(alpha, n):
    law = increment_law(ModelSpec("fGn", alpha), n)
    assert gamma_z(law, 0) == pytest.approx(1.0, rel=1e-12)
    assert abs(gamma_z(law, n)) <= 1.0 + 1e-12
