"""Covariance structure of the stationary Gaussian models and their increments.

Two models are covered, both normalized to unit variance:

* ``fGn``: fractional Gaussian noise with diffusion exponent ``alpha = 2H``;
* ``fOU``: the stationary fractional Ornstein-Uhlenbeck process sampled at
  integer times, ``dV = -lambda V dt + sigma dB_H``.

For a lag ``n`` the normalized increment process is
``Z_n(k) = sigma(n) (Y(n + k) - Y(k))`` with ``sigma(n)`` chosen so that
``Var Z_n(k) = 1``.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, UnsupportedRegimeError, ValidationError

Kind = Literal["fGn", "fOU"]

BOUNDARY_ALPHA = 1.5
# beyond this many multiples of 1/lambda the fOU large-lag expansion is
# accurate to exp(-40) relative; below it the spectral integral is evaluated
_FOU_SERIES_THRESHOLD = 40.0
# fGn lags at or above this use the binomial series in 1/k (no cancellation)
_FGN_SERIES_THRESHOLD = 32
_FGN_SERIES_TERMS = 16


@dataclass(frozen=True)
class ModelSpec:
    """A unit-variance stationary Gaussian model.

    ``lam`` and ``sigma`` are only meaningful for fOU; ``sigma`` cancels
    after normalization but is kept for the unnormalized covariance.
    """

    kind: Kind
    alpha: float
    lam: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fGn", "fOU"):
            raise ValidationError(f"unknown model kind {self.kind!r}; expected 'fGn' or 'fOU'")
        if not 0.0 < self.alpha < 2.0:
            raise ValidationError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.kind == "fOU":
            if self.alpha == 1.0:
                raise ValidationError("fOU requires H != 1/2 (alpha != 1)")
            if not (self.lam > 0 and self.sigma > 0):
                raise ValidationError("fOU requires lambda > 0 and sigma > 0")

    @property
    def hurst(self) -> float:
        return self.alpha / 2.0

    @classmethod
    def from_hurst(cls, kind: Kind, hurst: float, lam: float = 1.0, sigma: float = 1.0) -> "ModelSpec":
        return cls(kind, 2.0 * hurst, lam, sigma)

    def describe(self) -> str:
        if self.kind == "fGn":
            return f"fGn(alpha={self.alpha:g})"
        return f"fOU(alpha={self.alpha:g}, lambda={self.lam:g}, sigma={self.sigma:g})"


@dataclass(frozen=True)
class IncrementLaw:
    """Second-order law of the normalized increment process at lag ``n``."""

    parent: ModelSpec
    n: int
    sigma_n: float


@dataclass(frozen=True)
class RegimeProfile:
    """Limit-theory classification of a model (rates and limit types).

    ``real_rate`` and ``imag_rate`` are labels; use :meth:`real_rate_value`
    and :meth:`imag_rate_value` for the numeric normalizers at a given N.
    """

    model: ModelSpec
    regime: str
    real_rate: str
    imag_rate: str
    real_limit: str
    beta_2: Optional[float] = None
    beta_1: Optional[float] = None

    @property
    def supported(self) -> bool:
        return self.regime != "boundary"

    def real_rate_value(self, n_obs: int) -> float:
        if not self.supported:
            raise UnsupportedRegimeError("alpha = 3/2 has no limit law for the real part")
        if self.real_limit == "Gaussian":
            return math.sqrt(n_obs + 1)
        return (n_obs + 1) ** (2.0 - self.model.alpha) / slowly_varying_L(self.model, n_obs + 1)

    def imag_rate_value(self, n_obs: int) -> float:
        return math.sqrt(n_obs + 1)


def beta_kh(k: int, hurst: float) -> float:
    """Normalizing constant ``sqrt(k! / (H (2H - 1)))`` of the non-central limit, H in (1/2, 1)."""
    if not 0.5 < hurst < 1.0:
        raise ValidationError(f"beta_kH needs H in (1/2, 1), got {hurst}")
    return math.sqrt(math.factorial(k) / (hurst * (2 * hurst - 1)))


# --------------------------------------------------------------------------
# fGn


def _fgn_series(alpha: float, k: np.ndarray) -> np.ndarray:
    """``k^alpha sum_{j>=1} binom(alpha, 2j) k^(-2j)``: fGn autocovariance for k >= 2."""
    total = np.zeros_like(k)
    inv2 = 1.0 / k**2
    power = np.ones_like(k)
    for j in range(1, _FGN_SERIES_TERMS + 1):
        power = power * inv2
        total += special.binom(alpha, 2 * j) * power
    return k**alpha * total


def fgn_autocov(alpha: float, k) -> np.ndarray:
    """``0.5 (|k+1|^a - 2|k|^a + |k-1|^a)`` evaluated without cancellation at large lags."""
    k = np.abs(np.asarray(k, dtype=float))
    out = np.empty_like(k)
    small = k < _FGN_SERIES_THRESHOLD
    ks = k[small]
    out[small] = 0.5 * (np.abs(ks + 1) ** alpha - 2 * ks**alpha + np.abs(ks - 1) ** alpha)
    if np.any(~small):
        out[~small] = _fgn_series(alpha, k[~small])
    return out


def fgn_L(alpha: float, k) -> np.ndarray:
    """Slowly varying factor ``k^2/2 {(1 + 1/k)^a - 2 + |1 - 1/k|^a}`` of fGn (k >= 1)."""
    k = np.asarray(k, dtype=float)
    return fgn_autocov(alpha, k) * k ** (2.0 - alpha)


# --------------------------------------------------------------------------
# fOU


def fou_variance(hurst: float, lam: float, sigma: float) -> float:
    """Stationary variance ``sigma^2 Gamma(2H + 1) / (2 lambda^(2H))``."""
    return sigma**2 * math.gamma(2 * hurst + 1) / (2 * lam ** (2 * hurst))


def _fou_spectral_prefactor(hurst: float, sigma: float) -> float:
    # gamma(k) = (sigma^2 c_H / pi) int_0^inf cos(kx) x^(1-2H) / (lam^2 + x^2) dx
    c_h = math.gamma(2 * hurst + 1) * math.sin(math.pi * hurst)
    return sigma**2 * c_h / math.pi


def _fou_cosine_integral_quad(hurst: float, lam: float, k: float) -> float:
    """``int_0^inf cos(kx) x^(s-1) / (lam^2 + x^2) dx`` with s = 2 - 2H, k > 0.

    The contour is rotated onto the imaginary axis, which turns the
    oscillatory integral into an exponentially damped principal-value
    integral plus half the residue at ``x = i lam``.
    """
    s = 2.0 - 2.0 * hurst
    phi = 0.5 * math.pi * (s - 1.0)
    opts = dict(limit=400, epsabs=0.0, epsrel=1e-12)

    def base(y):
        return math.exp(-k * y) / ((lam - y) * (lam + y))

    lo, hi = 0.5 * lam, 1.5 * lam
    with warnings.catch_warnings():
        # roundoff warnings are superseded by the explicit error check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # [0, lam/2]: algebraic endpoint weight y^(s-1)
        p1, e1 = integrate.quad(base, 0.0, lo, weight="alg", wvar=(s - 1.0, 0.0), **opts)
        # [lam/2, 3 lam/2]: Cauchy principal value at y = lam
        p2, e2 = integrate.quad(
            lambda y: -math.exp(-k * y) * y ** (s - 1.0) / (lam + y), lo, hi, weight="cauchy", wvar=lam, **opts
        )
        p3, e3 = integrate.quad(lambda y: base(y) * y ** (s - 1.0), hi, np.inf, **opts)
    pv = p1 + p2 + p3
    err = e1 + e2 + e3
    if not np.isfinite(pv) or err > 1e-9 * max(abs(pv), 1e-300) + 1e-15:
        raise ConvergenceError(f"fOU spectral quadrature did not converge at lag {k} (error {err:.3g})")
    pole = 0.5 * math.pi * math.cos(phi) * lam ** (s - 2.0) * math.exp(-k * lam)
    return -math.sin(phi) * pv + pole


def _fou_cosine_integral_series(hurst: float, lam: float, k: np.ndarray) -> np.ndarray:
    """Large-lag form of :func:`_fou_cosine_integral_quad` (valid for k lam >= 40).

    Expanding ``1 / (lam^2 - y^2)`` in the damped integral gives
    ``sum_j Gamma(s + 2j) lam^(-2j-2) k^(-s-2j)``; stopping at the smallest
    term leaves an error of order ``exp(-k lam)``.
    """
    s = 2.0 - 2.0 * hurst
    phi = 0.5 * math.pi * (s - 1.0)
    k = np.asarray(k, dtype=float)
    logk = np.log(k)
    total = np.zeros_like(k)
    prev = np.full_like(k, np.inf)
    active = np.ones(k.shape, dtype=bool)
    for j in range(200):
        log_term = special.gammaln(s + 2 * j) - (2 * j + 2) * math.log(lam) - (s + 2 * j) * logk
        term = np.exp(log_term)
        active &= term < prev
        total += np.where(active, term, 0.0)
        active &= term > 1e-18 * total
        prev = term
        if not active.any():
            break
    pole = 0.5 * math.pi * math.cos(phi) * lam ** (s - 2.0) * np.exp(-k * lam)
    return -math.sin(phi) * total + pole


def fou_autocov_raw(hurst: float, lam: float, sigma: float, k, method: str = "auto") -> np.ndarray:
    """Unnormalized fOU autocovariance at integer lags ``k``.

    ``method`` selects ``"quad"`` (spectral integral), ``"series"`` (large-lag
    expansion) or ``"auto"`` (series once ``k lam >= 40``).
    """
    k = np.abs(np.atleast_1d(np.asarray(k, dtype=float)))
    out = np.empty_like(k)
    pref = _fou_spectral_prefactor(hurst, sigma)
    zero = k == 0
    out[zero] = fou_variance(hurst, lam, sigma)
    if method == "auto":
        use_series = (k * lam >= _FOU_SERIES_THRESHOLD) & ~zero
    elif method == "series":
        use_series = ~zero
    elif method == "quad":
        use_series = np.zeros_like(zero)
    else:
        raise ValidationError(f"unknown method {method!r}")
    use_quad = ~zero & ~use_series
    if use_series.any():
        out[use_series] = pref * _fou_cosine_integral_series(hurst, lam, k[use_series])
    for i in np.flatnonzero(use_quad):
        out[i] = pref * _fou_cosine_integral_quad(hurst, lam, float(k[i]))
    return out


class _FouCache:
    """Memoized normalized fOU autocovariance per model, grown on demand.

    Readers get an immutable snapshot; growth happens under a lock and
    replaces the stored array atomically.
    """

    def __init__(self):
        self._arrays: dict = {}
        self._lock = threading.Lock()

    def get(self, model: ModelSpec, max_lag: int) -> np.ndarray:
        key = (model.hurst, model.lam)
        arr = self._arrays.get(key)
        if arr is not None and len(arr) > max_lag:
            return arr
        with self._lock:
            arr = self._arrays.get(key)
            start = 0 if arr is None else len(arr)
            if start > max_lag:
                return arr
            stop = max(max_lag + 1, 2 * start)
            lags = np.arange(start, stop, dtype=float)
            # sigma cancels in the normalization
            var = fou_variance(model.hurst, model.lam, 1.0)
            new = fou_autocov_raw(model.hurst, model.lam, 1.0, lags) / var
            arr = new if arr is None else np.concatenate([arr, new])
            arr.setflags(write=False)
            self._arrays[key] = arr
            return arr


_fou_cache = _FouCache()


# --------------------------------------------------------------------------
# public operations


def _as_lags(k) -> tuple[np.ndarray, bool]:
    arr = np.asarray(k)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr), scalar


def gamma_y(model: ModelSpec, k):
    """Autocovariance of the unit-variance model at lag(s) ``k >= 0``."""
    lags, scalar = _as_lags(k)
    if np.any(lags < 0):
        raise ValidationError("gamma_y needs nonnegative lags")
    if model.kind == "fGn":
        out = fgn_autocov(model.alpha, lags)
    else:
        lags = lags.astype(np.int64)
        table = _fou_cache.get(model, int(lags.max()))
        out = table[lags]
    return float(out[0]) if scalar else np.array(out, dtype=float)


def _gamma_abs(model: ModelSpec, k) -> np.ndarray:
    return np.asarray(gamma_y(model, np.abs(np.atleast_1d(k))), dtype=float)


def sigma_of_n(model: ModelSpec, n: int) -> float:
    """``1 / sqrt(2 - 2 gamma_Y(n))``, the normalizer giving unit-variance increments."""
    if n < 1:
        raise ValidationError(f"lag n must be >= 1, got {n}")
    g = gamma_y(model, n)
    if g >= 1.0:
        raise ValidationError(f"degenerate increment: gamma_Y({n}) = {g} >= 1")
    return 1.0 / math.sqrt(2.0 - 2.0 * g)


def increment_law(model: ModelSpec, n: int) -> IncrementLaw:
    return IncrementLaw(model, int(n), sigma_of_n(model, n))


def gamma_z(law: IncrementLaw, k):
    """Autocovariance of ``Z_n``: ``sigma(n)^2 [2 g(|k|) - g(|k+n|) - g(|k-n|)]``."""
    lags, scalar = _as_lags(k)
    lags = lags.astype(np.int64)
    n, model = law.n, law.parent
    out = law.sigma_n**2 * (
        2.0 * _gamma_abs(model, lags) - _gamma_abs(model, lags + n) - _gamma_abs(model, lags - n)
    )
    return float(out[0]) if scalar else out


def gamma_zy(law: IncrementLaw, k):
    """Cross-covariance ``Cov(Z_n(k + j), Y(j)) = sigma(n) [g(|n + k|) - g(|k|)]``."""
    lags, scalar = _as_lags(k)
    lags = lags.astype(np.int64)
    out = law.sigma_n * (_gamma_abs(law.parent, lags + law.n) - _gamma_abs(law.parent, lags))
    return float(out[0]) if scalar else out


def slowly_varying_L(model: ModelSpec, k):
    """Slowly varying factor L in ``gamma_Y(k) ~ L(k) k^(alpha - 2)``.

    fGn uses the exact expression; for fOU L is the constant prefactor of
    the covariance asymptote ``alpha (alpha - 1) sigma^2 / (2 lambda^2)``,
    divided by the stationary variance.
    """
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 1):
        raise ValidationError("L(k) is defined for k >= 1")
    if model.kind == "fGn":
        out = fgn_L(model.alpha, arr)
    else:
        a = model.alpha
        const = model.sigma**2 * a * (a - 1) / (2 * model.lam**2)
        out = np.full_like(arr, const / fou_variance(model.hurst, model.lam, model.sigma))
    return float(out) if np.ndim(out) == 0 else out


def fou_asymptote(model: ModelSpec, k) -> np.ndarray:
    """Leading large-lag term of the unnormalized fOU covariance."""
    a = model.alpha
    return model.sigma**2 * a * (a - 1) / (2 * model.lam**2) * np.asarray(k, dtype=float) ** (a - 2)


def classify_regime(model: ModelSpec) -> RegimeProfile:
    """Rates and limit types of the real and imaginary parts of the statistic."""
    a = model.alpha
    if a < 1:
        regime = "subdiffusive"
    elif a == 1:
        regime = "diffusive"
    elif a < BOUNDARY_ALPHA:
        regime = "weakly-superdiffusive"
    elif a == BOUNDARY_ALPHA:
        regime = "boundary"
    else:
        regime = "strongly-superdiffusive"

    if regime == "boundary":
        return RegimeProfile(model, regime, "unsupported", "sqrt(N+1)", "unsupported")
    if a < BOUNDARY_ALPHA:
        return RegimeProfile(model, regime, "sqrt(N+1)", "sqrt(N+1)", "Gaussian")
    return RegimeProfile(
        model,
        regime,
        f"(N+1)^{2 - a:g}/L(N+1)",
        "sqrt(N+1)",
        "RosenblattMixture",
        beta_2=beta_kh(2, a - 1),
        beta_1=beta_kh(1, a / 2),
    )
