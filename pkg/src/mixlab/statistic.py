"""The empirical mixing statistic and its decomposition.

For observations ``Y(0..N)`` and a lag ``n < N``::

    E1 = 1/(N-n+1) sum_{k=0}^{N-n} exp(i [Y(n+k) - Y(k)])
    E2 = |1/(N+1) sum_{k=0}^{N} exp(i Y(k))|^2
    E  = E1 - E2
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError
from .sim import Path

PathLike = Union[Path, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class MixingStat:
    n: int
    n_obs: int
    e_total: complex
    e1: complex
    e2: float

    def row(self) -> tuple:
        """``(n, re_total, im_total, re_e1, im_e1, e2)``."""
        return (self.n, self.e_total.real, self.e_total.imag, self.e1.real, self.e1.imag, self.e2)


class _TrigCache:
    """cos Y(k), sin Y(k) computed once per path and reused for every lag.

    Increment terms use the angle-difference identities, so every lag reads
    the same cached arrays.
    """

    def __init__(self, values: np.ndarray):
        self.cos = np.cos(values)
        self.sin = np.sin(values)
        self.n_obs = len(values) - 1
        n1 = self.n_obs + 1
        mean_cos = math.fsum(self.cos.tolist()) / n1
        mean_sin = math.fsum(self.sin.tolist()) / n1
        self.e2 = mean_cos * mean_cos + mean_sin * mean_sin

    def stat(self, n: int) -> MixingStat:
        c, s = self.cos, self.sin
        head_c, head_s = c[: len(c) - n], s[: len(s) - n]
        tail_c, tail_s = c[n:], s[n:]
        count = self.n_obs - n + 1
        re1 = math.fsum((tail_c * head_c + tail_s * head_s).tolist()) / count
        im1 = math.fsum((tail_s * head_c - tail_c * head_s).tolist()) / count
        e1 = complex(re1, im1)
        return MixingStat(n, self.n_obs, complex(re1 - self.e2, im1), e1, self.e2)


def _values(path: PathLike) -> np.ndarray:
    values = path.values if isinstance(path, Path) else path
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValidationError("path must be one-dimensional")
    if not np.all(np.isfinite(values)):
        raise ValidationError("path contains non-finite values")
    return values


def _check_lag(n: int, n_obs: int):
    if not 1 <= n < n_obs:
        raise ValidationError(f"lag must satisfy 1 <= n < N = {n_obs}, got n = {n}")


def compute_stat_multi(path: PathLike, lags: Sequence[int]) -> list[MixingStat]:
    """The statistic at several strictly increasing lags, sharing one trig pass."""
    values = _values(path)
    n_obs = len(values) - 1
    lags = [int(n) for n in lags]
    if not lags:
        raise ValidationError("need at least one lag")
    if any(b <= a for a, b in zip(lags, lags[1:])):
        raise ValidationError(f"lags must be strictly increasing, got {lags}")
    for n in lags:
        _check_lag(n, n_obs)
    cache = _TrigCache(values)
    return [cache.stat(n) for n in lags]


def compute_stat(path: PathLike, n: int) -> MixingStat:
    """``E_N(n)`` with its parts; sums are exactly rounded (``math.fsum``)."""
    return compute_stat_multi(path, [n])[0]
