"""Probabilists' Hermite polynomials and Hermite expansions of cos(ax), sin(ax).

All expansions are with respect to the standard Gaussian weight
``phi(x) = exp(-x**2 / 2) / sqrt(2 pi)``, so that ``E[H_m(Z) H_k(Z)] = m! delta_mk``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import stats

from .errors import ConvergenceError, ValidationError

Parity = Literal["cosine", "sine"]

DEFAULT_M_MAX = 40
_QUAD_NODES = (64, 128, 256)
_QUAD_TOL = 1e-12


class SeriesValue(NamedTuple):
    """A truncated series together with a bound on the neglected part."""

    value: float
    tail: float


@dataclass(frozen=True)
class HermiteCoefficients:
    """Coefficients ``g_m``, m = 0..truncation_m, of cos(scale x) or sin(scale x)."""

    scale: float
    parity: Parity
    coeffs: np.ndarray
    truncation_m: int
    tail_bound: float

    @property
    def rank(self) -> int:
        """Hermite rank: smallest m >= 1 with a nonzero coefficient."""
        return 2 if self.parity == "cosine" else 1

    @property
    def weights(self) -> np.ndarray:
        """``g_m**2 * m!`` for m = 0..truncation_m (the L2(phi) energy per order)."""
        m = np.arange(self.truncation_m + 1)
        return self.coeffs**2 * np.exp(_log_factorial(m))

    def variance(self) -> float:
        """Exact ``Var G(Z)`` for Z standard normal (closed form, not the truncated sum)."""
        a2 = self.scale**2
        if self.parity == "cosine":
            return 0.5 * (1.0 + math.exp(-2 * a2)) - math.exp(-a2)
        return 0.5 * (1.0 - math.exp(-2 * a2))


def _log_factorial(m):
    return np.array([math.lgamma(k + 1) for k in np.atleast_1d(m)])


def hermite_eval(m: int, x):
    """Evaluate He_m(x) with the three-term recurrence ``He_{k+1} = x He_k - k He_{k-1}``.

    Works elementwise on arrays.
    """
    if m < 0:
        raise ValidationError(f"Hermite order must be nonnegative, got {m}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if m == 0:
        return h_prev if x.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, m):
        h_prev, h = h, x * h - k * h_prev
    return h if x.ndim else float(h)


def trig_coefficients(scale: float, parity: Parity, m_max: int = DEFAULT_M_MAX) -> HermiteCoefficients:
    """Closed-form Hermite coefficients of ``cos(scale x)`` or ``sin(scale x)``.

    Uses ``E[exp(i a Z) He_m(Z)] = (i a)^m exp(-a^2/2)``, so ``g_m`` is
    ``exp(-a^2/2) a^m / m!`` times the real (cosine) or imaginary (sine)
    part of ``i^m``.

    The tail bound is the Poisson(a^2) survival function at ``m_max``, which
    equals the envelope sum ``sum_{m > m_max} exp(-a^2) a^(2m) / m!``.
    """
    if not scale > 0:
        raise ValidationError(f"scale must be positive, got {scale}")
    if parity not in ("cosine", "sine"):
        raise ValidationError(f"parity must be 'cosine' or 'sine', got {parity!r}")
    if m_max < 2:
        raise ValidationError(f"m_max must be at least 2, got {m_max}")

    m = np.arange(m_max + 1)
    envelope = np.exp(-0.5 * scale**2 + m * math.log(scale) - _log_factorial(m))
    # real / imaginary part of i^m: 1, 0, -1, 0, ... and 0, 1, 0, -1, ...
    phase = np.array([1.0, 0.0, -1.0, 0.0]) if parity == "cosine" else np.array([0.0, 1.0, 0.0, -1.0])
    coeffs = envelope * phase[m % 4]
    tail = float(stats.poisson.sf(m_max, scale**2))
    return HermiteCoefficients(float(scale), parity, coeffs, int(m_max), tail)


def coefficient_quadrature(f: Callable[[np.ndarray], np.ndarray], m: int) -> float:
    """``(1/m!) E[f(Z) He_m(Z)]`` by Gauss-Hermite quadrature with node doubling.

    Accepts the result once two consecutive node counts agree to 1e-12.
    """
    if m < 0:
        raise ValidationError(f"Hermite order must be nonnegative, got {m}")
    previous = None
    for nodes in _QUAD_NODES:
        x, w = hermegauss(nodes)
        value = float(np.sum(w * f(x) * hermite_eval(m, x)) / math.sqrt(2 * math.pi) / math.factorial(m))
        if previous is not None and abs(value - previous) < _QUAD_TOL:
            return value
        previous = value
    raise ConvergenceError(
        f"Gauss-Hermite quadrature for order {m} unstable up to {_QUAD_NODES[-1]} nodes"
    )


def covariance_series(c1: HermiteCoefficients, c2: HermiteCoefficients, rho: float) -> SeriesValue:
    """``Cov(G1(X), G2(Y)) = sum_{m>=1} g1_m g2_m m! rho^m`` for a standard Gaussian pair.

    The tail is bounded by Cauchy-Schwarz: ``sqrt(tail1 * tail2) |rho|^(M+1)``.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValidationError(f"correlation must lie in [-1, 1], got {rho}")
    if c1.truncation_m != c2.truncation_m:
        raise ValidationError("coefficient sets must share the same truncation order")
    m = np.arange(1, c1.truncation_m + 1)
    terms = c1.coeffs[1:] * c2.coeffs[1:] * np.exp(_log_factorial(m)) * rho**m
    tail = math.sqrt(c1.tail_bound * c2.tail_bound) * abs(rho) ** (c1.truncation_m + 1)
    return SeriesValue(math.fsum(terms), tail)
