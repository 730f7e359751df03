"""Limit-theory constants for the mixing statistic.

Lag sums run over ``|l| <= k_max``; the neglected lags are bounded with a
hyperbolic envelope ``|gamma(l)| <= C l^(-p)`` fitted on ``[k_max/2, k_max]``.
Coefficient truncation is bounded through the Hermite tail bounds.
Every variance-like output is reported with a tail bound on the variance
scale.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import ConvergenceError, NumericalInconsistencyError, UnsupportedRegimeError, ValidationError
from .hermite import DEFAULT_M_MAX, SeriesValue, trig_coefficients
from .models import (
    BOUNDARY_ALPHA,
    IncrementLaw,
    ModelSpec,
    RegimeProfile,
    classify_regime,
    gamma_y,
    gamma_z,
    gamma_zy,
    increment_law,
)

DEFAULT_K_MAX = 100_000
E_COS_Y0 = math.exp(-0.5)

# Sign of the cross term 4 c sigma1 sigma3 rho13 in theta_R^2.  The real
# part is Re E1 - E2, so the E2 fluctuation enters with a minus sign; the
# Monte Carlo resolution in tests/test_asymptotics.py confirms -1.
CROSS_TERM_SIGN = -1
_RHO_SLACK = 1e-6
_ENVELOPE_SAFETY = 1.25


def mu_real(model: ModelSpec, n: int) -> float:
    """Centering ``E cos(Y(n) - Y(0)) - (E cos Y(0))^2 = exp(-(1 - gamma_Y(n))) - exp(-1)``."""
    if n < 1:
        raise ValidationError(f"lag n must be >= 1, got {n}")
    return math.exp(-(1.0 - gamma_y(model, n))) - math.exp(-1.0)


def _envelope_tail(values_at_lags: np.ndarray, lags: np.ndarray, decay: float, power: int, k_max: int) -> float:
    """Bound on ``sum_{l > k_max} |gamma(l)|^power`` from a hyperbolic envelope."""
    mask = lags >= k_max // 2
    const = _ENVELOPE_SAFETY * float(np.max(np.abs(values_at_lags[mask]) * lags[mask] ** decay))
    exponent = power * decay - 1.0
    if exponent <= 0:
        return math.inf
    return const**power * k_max ** (-exponent) / exponent


def _power_sums(gam_pos: np.ndarray, gam0: float, m_max: int) -> np.ndarray:
    """``S_m = sum_{|l| <= K} gamma(l)^m`` for m = 0..m_max, for an even covariance."""
    sums = np.empty(m_max + 1)
    power = np.ones_like(gam_pos)
    for m in range(m_max + 1):
        sums[m] = gam0**m + 2.0 * math.fsum(power.tolist())
        power = power * gam_pos
    return sums


def _check_k_max(k_max: int):
    if k_max < 1000:
        raise ValidationError(f"k_max must be >= 1000, got {k_max}")


def _nonnegative(value: float, tail: float) -> float:
    # a negative sum inside the certified tail is truncation noise around 0
    if value < 0:
        if -value <= tail:
            return 0.0
        raise ConvergenceError(f"negative truncated long-run variance {value:.3g} (tail {tail:.3g}); increase k_max")
    return value


def _long_run_variance(gam0, gam_pos, coeffs, m_start, m_stop, decay, k_max):
    sums = _power_sums(gam_pos, gam0, m_stop)
    m = np.arange(m_start, m_stop + 1)
    value = math.fsum((coeffs.weights[m] * sums[m]).tolist())
    lags = np.arange(1, k_max + 1, dtype=float)
    lag_tail = 2.0 * coeffs.variance() * _envelope_tail(gam_pos, lags, decay, max(coeffs.rank, m_start), k_max)
    # |gamma|^m <= gamma^2 for every order beyond the truncation
    if m_stop == coeffs.truncation_m:
        coef_mass = coeffs.tail_bound
    else:
        coef_mass = coeffs.tail_bound + float(np.sum(coeffs.weights[m_stop + 1 :]))
    coef_tail = coef_mass * (gam0**2 + 2.0 * math.fsum((gam_pos**2).tolist()) + lag_tail)
    return value, lag_tail + coef_tail


def sigma_rn(
    law: IncrementLaw,
    part: Literal["real", "imaginary"],
    m_max: int = DEFAULT_M_MAX,
    k_max: int = DEFAULT_K_MAX,
) -> SeriesValue:
    """Long-run standard deviation of ``cos`` (real) or ``sin`` (imaginary) of the increments.

    Value is ``sqrt(sum_{m=1}^{m_max} g_m^2 m! sum_l gamma_Z(l)^m)`` with
    coefficients of ``cos(x / sigma(n))`` or ``sin(x / sigma(n))``; the tail
    is on the variance scale.
    """
    if part not in ("real", "imaginary"):
        raise ValidationError(f"part must be 'real' or 'imaginary', got {part!r}")
    if m_max < 1:
        raise ValidationError("m_max must be >= 1")
    _check_k_max(k_max)
    coeffs = trig_coefficients(1.0 / law.sigma_n, "cosine" if part == "real" else "sine", max(m_max, 2))
    gam = gamma_z(law, np.arange(0, k_max + 1))
    value, tail = _long_run_variance(gam[0], gam[1:], coeffs, 1, m_max, 3.0 - law.parent.alpha, k_max)
    return SeriesValue(math.sqrt(_nonnegative(value, tail)), tail)


def _require_gaussian_regime(model: ModelSpec, what: str):
    if model.alpha == BOUNDARY_ALPHA:
        raise UnsupportedRegimeError(f"{what} is undefined at the boundary alpha = 3/2")
    if model.alpha > BOUNDARY_ALPHA:
        raise UnsupportedRegimeError(
            f"{what} requires alpha < 3/2 (square-summable covariance); got alpha = {model.alpha:g}, "
            "where the real part has a non-Gaussian limit at a nonstandard rate"
        )


def sigma_three(model: ModelSpec, m_max: int = DEFAULT_M_MAX, k_max: int = DEFAULT_K_MAX) -> SeriesValue:
    """Long-run standard deviation of ``cos Y(k)``: ``sqrt(sum_{m>=2} g_cos,m^2 m! sum_k gamma_Y(k)^m)``."""
    _require_gaussian_regime(model, "sigma_3")
    _check_k_max(k_max)
    coeffs = trig_coefficients(1.0, "cosine", m_max)
    gam = np.asarray(gamma_y(model, np.arange(0, k_max + 1)), dtype=float)
    value, tail = _long_run_variance(gam[0], gam[1:], coeffs, 2, m_max, 2.0 - model.alpha, k_max)
    return SeriesValue(math.sqrt(_nonnegative(value, tail)), tail)


def cross_long_run_covariance(law: IncrementLaw, m_max: int = DEFAULT_M_MAX, k_max: int = DEFAULT_K_MAX) -> SeriesValue:
    """``sum_{m>=2} g_{1,n,m} g_cos,m m! sum_{|k|<=K} gamma_ZY(k)^m`` (two-sided lag sum)."""
    _check_k_max(k_max)
    g1 = trig_coefficients(1.0 / law.sigma_n, "cosine", m_max)
    gc = trig_coefficients(1.0, "cosine", m_max)
    k = np.arange(-k_max, k_max + 1)
    cross = gamma_zy(law, k)
    terms = []
    power = cross * cross
    fact = 2.0
    for m in range(2, m_max + 1):
        if m > 2:
            power = power * cross
            fact *= m
        if g1.coeffs[m] != 0.0:
            terms.append(g1.coeffs[m] * gc.coeffs[m] * fact * math.fsum(power.tolist()))
    # envelope of |gamma_ZY(k)| ~ |k|^(alpha-3) on both sides
    pos = np.arange(k_max // 2, k_max + 1, dtype=float)
    right = np.abs(gamma_zy(law, pos.astype(int)))
    left = np.abs(gamma_zy(law, -pos.astype(int)))
    decay = 3.0 - law.parent.alpha
    const = _ENVELOPE_SAFETY * float(np.max(np.maximum(right, left) * pos**decay))
    exponent = 2 * decay - 1.0
    tail = 2.0 * math.sqrt(g1.variance() * gc.variance()) * const**2 * k_max ** (-exponent) / exponent
    tail += math.sqrt(g1.tail_bound * gc.tail_bound) * math.fsum((cross**2).tolist())
    return SeriesValue(math.fsum(terms), tail)


def rho_13(law: IncrementLaw, m_max: int = DEFAULT_M_MAX, k_max: int = DEFAULT_K_MAX) -> float:
    """Limit correlation between the fluctuations of ``Re E1`` and of ``mean cos Y``."""
    _require_gaussian_regime(law.parent, "rho_13")
    num = cross_long_run_covariance(law, m_max, k_max).value
    if num == 0.0:
        return 0.0
    s1 = sigma_rn(law, "real", m_max, k_max).value
    s3 = sigma_three(law.parent, m_max, k_max).value
    rho = num / (s1 * s3)
    if abs(rho) > 1.0 + _RHO_SLACK:
        raise NumericalInconsistencyError(f"|rho_13| = {abs(rho):.9f} exceeds 1: truncation or sign error")
    return max(-1.0, min(1.0, rho))


def theta_re_sq_candidates(sigma1: float, sigma3: float, rho13: float) -> dict[int, float]:
    """theta_R^2 under both signs of the cross term, keyed by the sign."""
    c = E_COS_Y0
    base = sigma1**2 + 4.0 * c * c * sigma3**2
    cross = 4.0 * c * sigma1 * sigma3 * rho13
    return {+1: base + cross, -1: base - cross}


@dataclass(frozen=True)
class AsymptoticProfile:
    """Every limit-theory quantity for one model and lag.

    In the strongly superdiffusive regime ``sigma3``, ``rho13`` and
    ``theta_re_sq`` are ``None`` and ``real_limit_constants`` holds the two
    scalar weights of the non-Gaussian real-part limit.
    """

    model: ModelSpec
    n: int
    mu_re: float
    sigma1n: float
    sigma2n: float
    sigma3: Optional[float]
    rho13: Optional[float]
    theta_re_sq: Optional[float]
    theta_im_sq: float
    regime: RegimeProfile
    series_tail_bounds: dict = field(default_factory=dict)
    real_limit_constants: Optional[tuple[float, float]] = None

    def as_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "n": self.n,
            "mu_re": self.mu_re,
            "sigma1n": self.sigma1n,
            "sigma2n": self.sigma2n,
            "sigma3": self.sigma3,
            "rho13": self.rho13,
            "theta_re_sq": self.theta_re_sq,
            "theta_im_sq": self.theta_im_sq,
            "regime": self.regime.regime,
            "real_rate": self.regime.real_rate,
            "imag_rate": self.regime.imag_rate,
            "real_limit": self.regime.real_limit,
            "beta_2": self.regime.beta_2,
            "beta_1": self.regime.beta_1,
            "real_limit_constants": list(self.real_limit_constants) if self.real_limit_constants else None,
            "tail_bounds": dict(self.series_tail_bounds),
        }


@functools.lru_cache(maxsize=128)
def build_profile(
    model: ModelSpec, n: int, m_max: int = DEFAULT_M_MAX, k_max: int = DEFAULT_K_MAX
) -> AsymptoticProfile:
    """Assemble centering, variances, correlation and regime for ``(model, n)``."""
    regime = classify_regime(model)
    if not regime.supported:
        raise UnsupportedRegimeError("alpha = 3/2 is the boundary case; no limit law is available")
    law = increment_law(model, n)
    s1 = sigma_rn(law, "real", m_max, k_max)
    s2 = sigma_rn(law, "imaginary", m_max, k_max)
    tails = {"sigma1n_sq": s1.tail, "sigma2n_sq": s2.tail}
    mu = mu_real(model, n)
    if regime.real_limit == "Gaussian":
        s3 = sigma_three(model, m_max, k_max)
        cross = cross_long_run_covariance(law, m_max, k_max)
        rho = 0.0 if cross.value == 0.0 else cross.value / (s1.value * s3.value)
        if abs(rho) > 1.0 + _RHO_SLACK:
            raise NumericalInconsistencyError(f"|rho_13| = {abs(rho):.9f} exceeds 1")
        rho = max(-1.0, min(1.0, rho))
        theta_re = theta_re_sq_candidates(s1.value, s3.value, rho)[CROSS_TERM_SIGN]
        if theta_re < 0:
            raise NumericalInconsistencyError(f"negative theta_R^2 = {theta_re:.3g}")
        tails.update(sigma3_sq=s3.tail, cross_cov=cross.tail)
        return AsymptoticProfile(
            model, n, mu, s1.value, s2.value, s3.value, rho, theta_re, s2.value**2, regime, tails
        )
    g_cos = trig_coefficients(1.0, "cosine", 2).coeffs[2]
    g_sin = trig_coefficients(1.0, "sine", 2).coeffs[1]
    constants = (g_cos * regime.beta_2, g_sin**2 * regime.beta_1**2)
    return AsymptoticProfile(
        model, n, mu, s1.value, s2.value, None, None, None, s2.value**2, regime, tails, constants
    )
