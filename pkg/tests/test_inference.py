import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixlab.asymptotics import build_profile
from mixlab.errors import UnsupportedRegimeError, ValidationError
from mixlab.inference import (
    TestReport,
    bootstrap_theta,
    chi2_2_survival,
    default_block_length,
    mixing_test,
    mixing_test_from_parameters,
)
from mixlab.models import ModelSpec
from mixlab.sim import replicate_seeds, sample_path
from mixlab.statistic import MixingStat, compute_stat

MODEL = ModelSpec("fGn", 0.6)


@pytest.fixture(scope="module")
def profile():
    return build_profile(MODEL, 30)


def stat_with(re, im, n=30, n_obs=8191):
    return MixingStat(n, n_obs, complex(re, im), complex(re + 0.3, im), 0.3)


def test_zero_statistic_at_centering(profile):
    r = mixing_test(stat_with(profile.mu_re, 0.0), profile)
    assert r.statistic_value == 0.0 and r.p_value == 1.0
    assert r.parameter_source == "analytic" and r.regime_warning is None
    assert (r.n, r.n_obs) == (30, 8191)


def test_chi_square_quantile_identity():
    assert chi2_2_survival(5.991) == pytest.approx(0.0500, abs=1e-4)
    from scipy import stats

    for t in [0.1, 1.0, 5.991, 20.0]:
        assert chi2_2_survival(t) == pytest.approx(stats.chi2.sf(t, 2), rel=1e-12)


def test_statistic_formula(profile):
    re, im = profile.mu_re + 0.01, -0.004
    r = mixing_test(stat_with(re, im), profile)
    t = 8192 * (0.01**2 / profile.theta_re_sq + im**2 / profile.theta_im_sq)
    assert r.statistic_value == pytest.approx(t, rel=1e-12)
    assert r.p_value == math.exp(-r.statistic_value / 2)


@given(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_p_value_monotone(re1, im1, re2, im2):
    p = build_profile(MODEL, 30)
    a = mixing_test(stat_with(re1, im1), p)
    b = mixing_test(stat_with(re2, im2), p)
    assert 0 <= a.p_value <= 1
    if a.statistic_value < b.statistic_value:
        assert a.p_value >= b.p_value


def test_refuses_outside_gaussian_regime():
    with pytest.raises(UnsupportedRegimeError, match="3/2"):
        mixing_test(stat_with(0.1, 0.0), build_profile(ModelSpec("fGn", 1.8), 30))


def test_zero_theta_and_lag_mismatch(profile):
    with pytest.raises(ValidationError):
        mixing_test_from_parameters(stat_with(0, 0), 0.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        mixing_test(stat_with(0, 0, n=5), profile)


def test_regime_warnings():
    s = stat_with(0.0, 0.0)
    assert mixing_test_from_parameters(s, 0, 1, 1, alpha=None).regime_warning
    assert mixing_test_from_parameters(s, 0, 1, 1, alpha=1.5).regime_warning
    assert mixing_test_from_parameters(s, 0, 1, 1, alpha=1.8).regime_warning
    assert mixing_test_from_parameters(s, 0, 1, 1, alpha=1.2).regime_warning is None


def test_report_json(profile):
    r = mixing_test(stat_with(0.01, 0.02), profile)
    d = json.loads(r.to_json())
    assert d["p_value"] == r.p_value and d["parameter_source"] == "analytic"
    assert TestReport(**d) == r


def test_order_invariance(profile):
    stats_ = [stat_with(0.001 * i, -0.002 * i) for i in range(5)]
    a = [mixing_test(s, profile) for s in stats_]
    b = [mixing_test(s, profile) for s in reversed(stats_)]
    assert a == list(reversed(b))


# ---------------------------------------------------------------- bootstrap


def test_default_block_length():
    assert default_block_length(8191) == 21
    assert default_block_length(1000) == 10
    assert default_block_length(1) == 1


def test_single_block_gives_zero_variance():
    path = sample_path(MODEL, 200, 3)
    assert bootstrap_theta(path, 5, block_length=200, n_boot=100, seed=1) == (0.0, 0.0)


def test_all_zero_path():
    assert bootstrap_theta(np.zeros(300), 5, n_boot=100) == (0.0, 0.0)


def test_bootstrap_validation():
    path = sample_path(MODEL, 200, 3)
    with pytest.raises(ValidationError):
        bootstrap_theta(path, 5, block_length=201, n_boot=100)
    with pytest.raises(ValidationError):
        bootstrap_theta(path, 5, block_length=0, n_boot=100)
    with pytest.raises(ValidationError):
        bootstrap_theta(path, 5, n_boot=99)


def test_bootstrap_deterministic():
    path = sample_path(MODEL, 500, 3)
    a = bootstrap_theta(path, 5, n_boot=100, seed=9)
    assert a == bootstrap_theta(path, 5, n_boot=100, seed=9)
    assert a != bootstrap_theta(path, 5, n_boot=100, seed=10)
    assert all(v > 0 for v in a)


def test_bootstrap_feeds_test():
    path = sample_path(MODEL, 2000, 3)
    th = bootstrap_theta(path, 30, n_boot=100)
    r = mixing_test_from_parameters(compute_stat(path, 30), build_profile(MODEL, 30).mu_re, *th, MODEL.alpha)
    assert r.parameter_source == "bootstrap" and 0 <= r.p_value <= 1


@pytest.mark.slow
def test_bootstrap_calibration(profile):
    """theta_im^2 from the block bootstrap within 30% of sigma_2n^2 in at least 80% of 200 trials."""
    hits = 0
    for s in replicate_seeds(77, 200):
        path = sample_path(MODEL, 8192, s)
        _, th_im = bootstrap_theta(path, 30, default_block_length(8191), 500, s)
        hits += abs(th_im / profile.theta_im_sq - 1) <= 0.30
    assert hits >= 160
