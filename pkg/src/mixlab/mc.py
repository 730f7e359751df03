"""Monte Carlo harness: histogram, rate and size studies, plus report output.

Every replicate draws its path from a child seed of the cell seed, and cell
seeds are children of the master seed, so results do not depend on the
number of worker threads or on scheduling.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .asymptotics import build_profile, mu_real
from .errors import MixlabError, NumericalInconsistencyError, ValidationError
from .inference import mixing_test
from .models import ModelSpec
from .sim import replicate_seeds, sample_paths
from .statistic import MixingStat, _TrigCache
from .svg import histogram_svg

DEFAULT_M = 500
DEFAULT_LEVELS = (0.01, 0.05, 0.10)
_CHUNK = 64

CELL_COLUMNS = ["kind", "alpha", "lambda", "sigma", "n_points", "replicate", "seed", "re", "im", "re_std", "im_std"]
MOMENT_COLUMNS = ["kind", "alpha", "lambda", "sigma", "n_points", "part", "count", "mean", "variance", "skewness", "excess_kurtosis"]
SLOPE_COLUMNS = ["kind", "alpha", "lambda", "sigma", "part", "slope", "stderr", "intercept", "n_grid"]
SIZE_COLUMNS = ["kind", "alpha", "lambda", "sigma", "n_points", "level", "rejection_rate", "ks_distance"]


@dataclass(frozen=True)
class Moments:
    count: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=float)
        return cls(
            len(x),
            float(np.mean(x)),
            float(np.var(x, ddof=1)),
            float(stats.skew(x, bias=False)),
            float(stats.kurtosis(x, fisher=True, bias=False)),
        )


@dataclass
class Cell:
    """All replicates of one (model, N+1) combination."""

    model: ModelSpec
    n_points: int
    seeds: np.ndarray
    re: np.ndarray
    im: np.ndarray
    mu_re: float
    p_values: Optional[np.ndarray] = None

    @property
    def key(self) -> tuple:
        return (self.model, self.n_points)

    def standardized(self, part: str) -> np.ndarray:
        """Real part centred at ``mu_R``, imaginary at 0; both scaled by the sample std."""
        x = self.re - self.mu_re if part == "re" else self.im
        sd = np.std(self.re if part == "re" else self.im, ddof=1)
        if not sd > 0:
            raise NumericalInconsistencyError(f"zero sample std for {part} in cell {describe_cell(self)}")
        return x / sd

    def std(self, part: str) -> float:
        return float(np.std(self.re if part == "re" else self.im, ddof=1))

    def moments(self, part: str) -> Moments:
        return Moments.of(self.standardized(part))

    def histogram(self, part: str) -> tuple[np.ndarray, np.ndarray]:
        """Freedman-Diaconis histogram of the standardized sample."""
        x = self.standardized(part)
        edges = np.histogram_bin_edges(x, bins="fd")
        counts, edges = np.histogram(x, bins=edges)
        return counts, edges


@dataclass
class McReport:
    config: dict
    cells: list[Cell] = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    rejection_rates: dict = field(default_factory=dict)
    ks_distances: dict = field(default_factory=dict)

    def cell(self, model: ModelSpec, n_points: int) -> Cell:
        for c in self.cells:
            if c.key == (model, n_points):
                return c
        raise KeyError((model, n_points))

    def moments(self) -> dict:
        return {(c.model, c.n_points, p): c.moments(p) for c in self.cells for p in ("re", "im")}

    def standardized_samples(self) -> dict:
        return {(c.model, c.n_points, p): c.standardized(p) for c in self.cells for p in ("re", "im")}


def describe_cell(cell: Cell) -> str:
    return f"{cell.model.describe()} N+1={cell.n_points}"


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValidationError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


def _chunk_stats(model: ModelSpec, n_points: int, n: int, seeds: Sequence[int], offset: int):
    try:
        paths = sample_paths(model, n_points, seeds)
    except MixlabError as exc:
        raise type(exc)(f"replicate {offset}..{offset + len(seeds) - 1}: {exc}") from exc
    out = np.empty((len(seeds), 2))
    for i, y in enumerate(paths):
        e = _TrigCache(y).stat(n).e_total
        out[i] = e.real, e.imag
    if not np.all(np.isfinite(out)):
        bad = offset + int(np.argmax(~np.isfinite(out).all(axis=1)))
        raise NumericalInconsistencyError(f"non-finite statistic at replicate {bad}")
    return out


def simulate_cell(model: ModelSpec, n: int, n_points: int, m_reps: int, seed: int, threads: int = 1) -> Cell:
    """``m_reps`` replicates of the statistic at lag ``n`` with child seeds of ``seed``."""
    if not 1 <= n < n_points - 1:
        raise ValidationError(f"lag must satisfy 1 <= n < N = {n_points - 1}, got {n}")
    seeds = replicate_seeds(seed, m_reps)
    chunks = [(i, seeds[i : i + _CHUNK]) for i in range(0, m_reps, _CHUNK)]
    workers = resolve_threads(threads)
    if workers == 1:
        parts = [_chunk_stats(model, n_points, n, s, i) for i, s in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map preserves submission order, so the reduction is index-ordered
            parts = list(pool.map(lambda c: _chunk_stats(model, n_points, n, c[1], c[0]), chunks))
    vals = np.concatenate(parts)
    return Cell(model, n_points, np.array(seeds, dtype=np.uint64), vals[:, 0], vals[:, 1], mu_real(model, n))


def _check_reps(m_reps: int, minimum: int = 100):
    if m_reps < minimum:
        raise ValidationError(f"need at least {minimum} replicates, got {m_reps}")


def _config(models, n, n_points_list, m_reps, seed, kind) -> dict:
    return {
        "study": kind,
        "models": [m.describe() for m in models],
        "n": n,
        "n_points": list(n_points_list),
        "m_reps": m_reps,
        "seed": seed,
    }


def run_histogram_study(
    model: ModelSpec, n: int, n_points: int, m_reps: int, seed: int, threads: int = 1
) -> McReport:
    """Replicates of the statistic in one cell, standardized for histogram and moment checks."""
    _check_reps(m_reps)
    cell = simulate_cell(model, n, n_points, m_reps, seed, threads)
    return McReport(_config([model], n, [n_points], m_reps, seed, "histogram"), [cell])


def fit_slope(n_points_list: Sequence[int], stds: Sequence[float]) -> tuple[float, float, float]:
    """OLS of ``log std`` on ``log(N+1)``: ``(slope, stderr, intercept)``."""
    x = np.log(np.asarray(n_points_list, dtype=float))
    y = np.log(np.asarray(stds, dtype=float))
    if len(x) < 3:
        raise ValidationError(f"need at least 3 grid points, got {len(x)}")
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr), float(fit.intercept)


def run_rate_study(
    models: Sequence[ModelSpec],
    n: int,
    n_points_list: Sequence[int],
    m_reps: int = DEFAULT_M,
    seed: int = 0,
    threads: int = 1,
) -> McReport:
    """Sample std of both parts per (model, N+1) and the log-log slope per (model, part)."""
    n_points_list = [int(p) for p in n_points_list]
    if len(n_points_list) < 3:
        raise ValidationError(f"need at least 3 grid points, got {len(n_points_list)}")
    if len(set(n_points_list)) != len(n_points_list):
        raise ValidationError("grid points must be distinct")
    _check_reps(m_reps, 2)
    models = list(models)
    if not models:
        raise ValidationError("need at least one model")
    cell_seeds = replicate_seeds(seed, len(models) * len(n_points_list))
    report = McReport(_config(models, n, n_points_list, m_reps, seed, "rate"))
    for i, model in enumerate(models):
        row = []
        for j, pts in enumerate(n_points_list):
            cell = simulate_cell(model, n, pts, m_reps, cell_seeds[i * len(n_points_list) + j], threads)
            row.append(cell)
        report.cells.extend(row)
        for part in ("re", "im"):
            stds = [c.std(part) for c in row]
            for c, s in zip(row, stds):
                if not s > 0:
                    raise NumericalInconsistencyError(f"zero sample std for {part} in cell {describe_cell(c)}")
            report.slopes[(model, part)] = fit_slope(n_points_list, stds)
    return report


def run_size_study(
    model: ModelSpec,
    n: int,
    n_points: int,
    m_reps: int,
    seed: int,
    levels: Sequence[float] = DEFAULT_LEVELS,
    threads: int = 1,
) -> McReport:
    """Null rejection rates of the analytic mixing test and the KS distance of its p-values to U(0,1)."""
    _check_reps(m_reps)
    profile = build_profile(model, n)
    cell = simulate_cell(model, n, n_points, m_reps, seed, threads)
    # the test only reads n, n_obs and e_total from the statistic
    n_obs = n_points - 1
    pv = np.array([
        mixing_test(MixingStat(n, n_obs, complex(r, i), complex(r, i), 0.0), profile).p_value
        for r, i in zip(cell.re, cell.im)
    ])
    cell.p_values = pv
    report = McReport(_config([model], n, [n_points], m_reps, seed, "size"), [cell])
    ks = float(stats.kstest(pv, "uniform").statistic)
    for lv in levels:
        report.rejection_rates[(model, n_points, float(lv))] = float(np.mean(pv < lv))
    report.ks_distances[(model, n_points)] = ks
    return report


# --------------------------------------------------------------------------
# output


def _model_fields(model: ModelSpec) -> list:
    return [model.kind, repr(model.alpha), repr(model.lam), repr(model.sigma)]


def _alpha_token(model: ModelSpec) -> str:
    return f"{model.alpha:g}" if model.kind == "fGn" else f"fOU{model.alpha:g}"


def _write_csv(target: FsPath, header: list, rows) -> FsPath:
    try:
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise ValidationError(f"cannot write {target}: {exc}") from exc
    return target


def emit_report(report: McReport, out_dir, svg: bool = True) -> list[FsPath]:
    """Write ``cells.csv``, ``moments.csv``, ``slopes.csv`` and per-cell SVG histograms.

    ``sizes.csv`` is added when the report carries rejection rates.
    Returns the list of files written.
    """
    out = FsPath(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create {out}: {exc}") from exc
    f = lambda v: format(v, ".17g")  # noqa: E731

    cell_rows, moment_rows = [], []
    for c in report.cells:
        zr, zi = c.standardized("re"), c.standardized("im")
        for k in range(len(c.re)):
            cell_rows.append(_model_fields(c.model) + [c.n_points, k, int(c.seeds[k]), f(c.re[k]), f(c.im[k]), f(zr[k]), f(zi[k])])
        for part in ("re", "im"):
            m = c.moments(part)
            moment_rows.append(
                _model_fields(c.model) + [c.n_points, part, m.count, f(m.mean), f(m.variance), f(m.skewness), f(m.excess_kurtosis)]
            )
    slope_rows = [
        _model_fields(model) + [part, f(s), f(se), f(b), len(report.config.get("n_points", []))]
        for (model, part), (s, se, b) in report.slopes.items()
    ]
    manifest = [
        _write_csv(out / "cells.csv", CELL_COLUMNS, cell_rows),
        _write_csv(out / "moments.csv", MOMENT_COLUMNS, moment_rows),
        _write_csv(out / "slopes.csv", SLOPE_COLUMNS, slope_rows),
    ]
    if report.rejection_rates:
        size_rows = [
            _model_fields(model) + [pts, lv, f(rate), f(report.ks_distances.get((model, pts), float("nan")))]
            for (model, pts, lv), rate in report.rejection_rates.items()
        ]
        manifest.append(_write_csv(out / "sizes.csv", SIZE_COLUMNS, size_rows))
    if svg:
        for c in report.cells:
            for part in ("re", "im"):
                counts, edges = c.histogram(part)
                z = c.standardized(part)
                label = "Re" if part == "re" else "Im"
                title = f"{label} E, {c.model.describe()}, N+1={c.n_points}, M={len(z)}"
                target = out / f"hist_{_alpha_token(c.model)}_{c.n_points - 1}_{part}.svg"
                try:
                    target.write_text(histogram_svg(counts, edges, float(z.mean()), float(z.std(ddof=1)), title))
                except OSError as exc:
                    raise ValidationError(f"cannot write {target}: {exc}") from exc
                manifest.append(target)
    return manifest


def read_cells_csv(source) -> dict:
    """Standardized samples from ``cells.csv``, keyed by ``(kind, alpha, n_points, part)``."""
    groups: dict = {}
    with open(source, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["kind"], float(row["alpha"]), int(row["n_points"]))
            groups.setdefault(key, []).append((int(row["replicate"]), float(row["re_std"]), float(row["im_std"])))
    out = {}
    for key, rows in groups.items():
        rows.sort()
        arr = np.array([r[1:] for r in rows])
        out[key + ("re",)] = arr[:, 0]
        out[key + ("im",)] = arr[:, 1]
    return out
