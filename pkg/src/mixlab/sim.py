"""Exact sampling of stationary Gaussian paths with reproducible seeding.

Paths are drawn by circulant embedding of the Toeplitz covariance
(Davies-Harte).  Gaussian variates come from a Philox counter-based stream
mapped through the inverse normal c.d.f., so a given ``(model, n_points,
seed)`` triple always yields the same path on a fixed build.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np
from scipy import linalg, special

from .errors import NumericalInconsistencyError, ValidationError
from .models import ModelSpec, gamma_y

NEGATIVE_EIGEN_TOL = 1e-9
DENSE_FALLBACK_MAX = 4096
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class Path:
    """A sampled path ``Y(0), ..., Y(N)`` and its provenance."""

    values: np.ndarray
    model: ModelSpec
    seed: int
    sampler: str = "circulant"

    @property
    def length_n_plus_1(self) -> int:
        return len(self.values)

    @property
    def n_obs(self) -> int:
        """N, the index of the last observation."""
        return len(self.values) - 1


def embedding_size(n_points: int) -> int:
    """Smallest power of two >= 2 (n_points - 1)."""
    return 1 << max(1, math.ceil(math.log2(2 * (n_points - 1))))


@functools.lru_cache(maxsize=64)
def _embedding(model: ModelSpec, size: int) -> tuple[np.ndarray, float]:
    half = size // 2
    r = np.asarray(gamma_y(model, np.arange(half + 1)), dtype=float)
    row = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(row).real
    eig.setflags(write=False)
    return eig, float(eig.min())


def embedding_eigenvalues(model: ModelSpec, n_points: int) -> np.ndarray:
    """Eigenvalues of the minimal circulant embedding for ``n_points`` observations."""
    return _embedding(model, embedding_size(n_points))[0]


def _standard_normals(seed: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(seed & _MASK64)
    raw = bitgen.random_raw(count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return special.ndtri(u)


def _check_points(n_points: int):
    if n_points < 2:
        raise ValidationError(f"need at least 2 points, got {n_points}")


def _dense_sample(model: ModelSpec, n_points: int, seed: int) -> np.ndarray:
    r = np.asarray(gamma_y(model, np.arange(n_points)), dtype=float)
    chol = linalg.cholesky(linalg.toeplitz(r), lower=True)
    return chol @ _standard_normals(seed, n_points)


def sampler_for(model: ModelSpec, n_points: int) -> str:
    """Which sampler :func:`sample_path` will use: ``"circulant"`` or ``"dense"``."""
    _check_points(n_points)
    eig, low = _embedding(model, embedding_size(n_points))
    if low >= -NEGATIVE_EIGEN_TOL * eig.max():
        return "circulant"
    if n_points <= DENSE_FALLBACK_MAX:
        return "dense"
    raise NumericalInconsistencyError(
        f"circulant embedding of {model.describe()} for {n_points} points has a negative "
        f"eigenvalue {low:.6g} and the dense fallback is limited to {DENSE_FALLBACK_MAX} points"
    )


def sample_paths(model: ModelSpec, n_points: int, seeds: Sequence[int]) -> np.ndarray:
    """Stack of paths, one row per seed; row ``i`` equals ``sample_path(..., seeds[i]).values``."""
    sampler = sampler_for(model, n_points)
    seeds = [int(s) for s in seeds]
    if sampler == "dense":
        return np.array([_dense_sample(model, n_points, s) for s in seeds]).reshape(len(seeds), n_points)
    size = embedding_size(n_points)
    eig = _embedding(model, size)[0]
    scale = np.sqrt(np.clip(eig, 0.0, None) / size)
    out = np.empty((len(seeds), n_points))
    for i, s in enumerate(seeds):
        z = _standard_normals(s, 2 * size)
        w = scale * (z[:size] + 1j * z[size:])
        out[i] = np.fft.fft(w)[:n_points].real
    return out


def sample_path(model: ModelSpec, n_points: int, seed: int) -> Path:
    """Exact draw of ``n_points`` consecutive values of the unit-variance model."""
    sampler = sampler_for(model, n_points)
    values = sample_paths(model, n_points, [seed])[0]
    values.setflags(write=False)
    return Path(values, model, int(seed), sampler)


def _mix64(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer: a bijection on 64-bit words
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def replicate_seeds(master_seed: int, count: int) -> list[int]:
    """Child seeds ``mix64(mix64(master) + (i + 1) * golden)`` for i = 0..count-1.

    Each child depends only on ``(master_seed, i)``, so the stream is
    prefix-stable and independent of evaluation order; the counter map is
    injective, so children never collide.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    base = _mix64(np.array([master_seed & _MASK64], dtype=np.uint64))[0]
    counters = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        states = base + counters * np.uint64(_GOLDEN)
        children = _mix64(states)
    if len(np.unique(children)) != count:
        raise NumericalInconsistencyError("seed collision in replicate stream")
    return [int(c) for c in children]


# --------------------------------------------------------------------------
# CSV import / export


def _header(model: ModelSpec, seed: int) -> str:
    fields = [f"model={model.kind}", f"alpha={model.alpha!r}", f"seed={seed}"]
    if model.kind == "fOU":
        fields += [f"lambda={model.lam!r}", f"sigma={model.sigma!r}"]
    return "# " + " ".join(fields)


def format_path_csv(path: Path) -> str:
    """One value per line at 17 significant digits, after a ``# model=... alpha=... seed=...`` header."""
    lines = [_header(path.model, path.seed)]
    lines += [format(v, ".17g") for v in path.values]
    return "\n".join(lines) + "\n"


def write_path_csv(path: Path, target) -> None:
    try:
        FsPath(target).write_text(format_path_csv(path))
    except OSError as exc:
        raise ValidationError(f"cannot write {target}: {exc}") from exc


def read_path_csv(source) -> Path:
    """Inverse of :func:`write_path_csv`; files without a header are read as bare values."""
    try:
        text = FsPath(source).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read {source}: {exc}") from exc
    meta: dict[str, str] = {}
    values = []
    for lineno, line in enumerate(text, 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
            continue
        try:
            values.append(float(line.split(",")[0]))
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: not a number: {line!r}") from None
    if len(values) < 2:
        raise ValidationError(f"{source}: need at least 2 values, found {len(values)}")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{source}: non-finite values")
    model = None
    if "model" in meta and "alpha" in meta:
        model = ModelSpec(
            meta["model"],
            float(meta["alpha"]),
            float(meta.get("lambda", 1.0)),
            float(meta.get("sigma", 1.0)),
        )
    arr.setflags(write=False)
    return Path(arr, model, int(meta.get("seed", 0)), "file")
