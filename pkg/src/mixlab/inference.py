"""Chi-square(2) test of the mixing hypothesis and block-bootstrap variances."""
from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .asymptotics import AsymptoticProfile
from .errors import UnsupportedRegimeError, ValidationError
from .models import BOUNDARY_ALPHA
from .sim import replicate_seeds
from .statistic import MixingStat, PathLike, _values, compute_stat

DEFAULT_N_BOOT = 500


@dataclass(frozen=True)
class TestReport:
    statistic_value: float
    p_value: float
    n: int
    n_obs: int
    parameter_source: str
    regime_warning: Optional[str] = None

    __test__ = False  # not a pytest class

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def chi2_2_survival(t: float) -> float:
    """Exact survival function of the chi-square law with two degrees of freedom."""
    return math.exp(-0.5 * t)


def _regime_warning(alpha: Optional[float]) -> Optional[str]:
    if alpha is None:
        return "diffusion exponent unknown: the chi-square calibration holds only for alpha < 3/2"
    if alpha >= BOUNDARY_ALPHA:
        return f"alpha = {alpha:g} >= 3/2: the real part is not asymptotically Gaussian"
    return None


def mixing_test_from_parameters(
    stat: MixingStat,
    mu_re: float,
    theta_re_sq: float,
    theta_im_sq: float,
    alpha: Optional[float] = None,
    source: str = "bootstrap",
) -> TestReport:
    """``T = (sqrt(N+1)(Re E - mu_R) / theta_R)^2 + (sqrt(N+1) Im E / theta_I)^2``, ``p = exp(-T/2)``."""
    if not (theta_re_sq > 0 and theta_im_sq > 0):
        raise ValidationError(f"asymptotic variances must be positive, got {theta_re_sq}, {theta_im_sq}")
    root = math.sqrt(stat.n_obs + 1)
    t_re = root * (stat.e_total.real - mu_re) / math.sqrt(theta_re_sq)
    t_im = root * stat.e_total.imag / math.sqrt(theta_im_sq)
    t = t_re * t_re + t_im * t_im
    return TestReport(t, chi2_2_survival(t), stat.n, stat.n_obs, source, _regime_warning(alpha))


def mixing_test(stat: MixingStat, profile: AsymptoticProfile) -> TestReport:
    """Test of the mixing hypothesis with analytic plug-in parameters.

    Refuses when ``alpha >= 3/2``, where the real part has a non-Gaussian
    limit and the chi-square calibration fails.
    """
    if profile.theta_re_sq is None:
        raise UnsupportedRegimeError(
            f"mixing test is calibrated only for alpha < 3/2 (got alpha = {profile.model.alpha:g}); "
            "the real part converges to a non-Gaussian limit at a nonstandard rate"
        )
    if stat.n != profile.n:
        raise ValidationError(f"statistic lag {stat.n} does not match profile lag {profile.n}")
    return mixing_test_from_parameters(
        stat, profile.mu_re, profile.theta_re_sq, profile.theta_im_sq, profile.model.alpha, "analytic"
    )


def default_block_length(n_obs: int) -> int:
    """``ceil(N^(1/3))``."""
    return max(1, math.ceil(n_obs ** (1.0 / 3.0) - 1e-12))


def _block_resample(values: np.ndarray, block_length: int, seed: int) -> np.ndarray:
    size = len(values)
    n_blocks = -(-size // block_length)
    rng = np.random.Generator(np.random.Philox(seed))
    starts = rng.integers(0, size - block_length + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_length)).ravel()[:size]
    return values[idx]


def bootstrap_theta(
    path: PathLike,
    n: int,
    block_length: Optional[int] = None,
    n_boot: int = DEFAULT_N_BOOT,
    seed: int = 0,
) -> tuple[float, float]:
    """Moving-block bootstrap estimates of ``(theta_R^2, theta_I^2)``.

    Blocks of the observed sequence are resampled with replacement and
    concatenated to the original length.  Returns the sample variances of
    ``sqrt(N+1) (Re E* - Re E)`` and ``sqrt(N+1) Im E*``.
    """
    values = _values(path)
    size = len(values)
    if block_length is None:
        block_length = default_block_length(size - 1)
    if not 1 <= block_length <= size:
        raise ValidationError(f"block length must lie in [1, N+1 = {size}], got {block_length}")
    if n_boot < 100:
        raise ValidationError(f"need at least 100 bootstrap resamples, got {n_boot}")
    observed = compute_stat(values, n)
    root = math.sqrt(size)
    dev = np.empty((n_boot, 2))
    for i, child in enumerate(replicate_seeds(seed, n_boot)):
        star = compute_stat(_block_resample(values, block_length, child), n)
        dev[i] = root * (star.e_total.real - observed.e_total.real), root * star.e_total.imag
    # exact rational arithmetic: a constant column gives exactly 0
    return float(statistics.variance(dev[:, 0].tolist())), float(statistics.variance(dev[:, 1].tolist()))
