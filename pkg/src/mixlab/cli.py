"""Command-line entry point ``mixlab``.

Exit codes: 0 success, 2 invalid input, 3 numerical inconsistency.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath
from typing import Optional, Sequence

from . import __version__
from .asymptotics import build_profile, mu_real
from .config import load_model
from .errors import NumericalInconsistencyError, ValidationError
from .inference import (
    DEFAULT_N_BOOT,
    bootstrap_theta,
    default_block_length,
    mixing_test,
    mixing_test_from_parameters,
)
from .mc import (
    CELL_COLUMNS,
    DEFAULT_M,
    MOMENT_COLUMNS,
    SLOPE_COLUMNS,
    emit_report,
    run_histogram_study,
    run_rate_study,
    run_size_study,
)
from .models import ModelSpec
from .sim import format_path_csv, read_path_csv, sample_path, write_path_csv
from .statistic import compute_stat, compute_stat_multi

CONFIG_HELP = (
    "model file with key=value lines: kind=fGn|fOU, alpha=<0..2> (or H=<alpha/2>), "
    "lambda=<>0> and sigma=<>0> (fOU only, default 1); '#' starts a comment"
)

EPILOG = f"""\
output files of hist-study / rate-study / size-study (in --out):
  cells.csv    {','.join(CELL_COLUMNS)}
  moments.csv  {','.join(MOMENT_COLUMNS)}
  slopes.csv   {','.join(SLOPE_COLUMNS)}
  sizes.csv    rejection rates and KS distance (size-study only)
  hist_<alpha>_<N>_<re|im>.svg  histogram with fitted normal curve
  (alpha is prefixed with 'fOU' for fOU models)

exit codes: 0 success, 2 invalid input, 3 numerical inconsistency
"""


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, model_flag: bool = True):
    if model_flag:
        p.add_argument("--config", "--model", dest="config", metavar="FILE", help=CONFIG_HELP)
        p.add_argument("--kind", choices=("fGn", "fOU"), help="model kind (overrides --config)")
        p.add_argument("--alpha", type=float, help="diffusion exponent (overrides --config)")
        p.add_argument("--lambda", dest="lam", type=float, help="fOU rate (overrides --config)")
        p.add_argument("--sigma", type=float, help="fOU scale (overrides --config)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores (default 1)")
    p.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mixlab",
        description="Mixing statistic for Gaussian anomalous diffusion: simulation, limit theory and tests.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=f"mixlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="simulate a path and write it as CSV")
    _common(p)
    p.add_argument("--points", type=int, required=True, help="number of observations N+1")

    p = sub.add_parser("estat", help="statistic at one or more lags of a path CSV")
    _common(p, model_flag=False)
    p.add_argument("--input", required=True, help="path CSV")
    p.add_argument("--lags", type=_int_list, required=True, help="comma-separated increasing lags")

    p = sub.add_parser("asym", help="asymptotic profile of a model at lag n")
    _common(p)
    p.add_argument("--n", type=int, required=True, help="lag")
    p.add_argument("--format", choices=("table", "json"), default="table")

    p = sub.add_parser("mixtest", help="chi-square mixing test on a path CSV")
    _common(p)
    p.add_argument("--input", required=True, help="path CSV")
    p.add_argument("--n", type=int, required=True, help="lag")
    p.add_argument("--bootstrap", type=int, metavar="B", help=f"use B block-bootstrap resamples (e.g. {DEFAULT_N_BOOT})")
    p.add_argument("--block", type=int, metavar="L", help="bootstrap block length (default ceil(N^(1/3)))")

    p = sub.add_parser("hist-study", help="histogram study of the standardized statistic")
    _common(p)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--points", type=int, default=1024, help="N+1 (default 1024)")
    p.add_argument("--reps", type=int, default=1000, help="replicates M (default 1000)")

    p = sub.add_parser("rate-study", help="log-log slope of the sample std against N+1")
    _common(p)
    p.add_argument("--alphas", type=_float_list, help="comma-separated alphas (default: the model's alpha)")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--points", type=_int_list, default=[2**k for k in range(9, 15)], help="comma-separated N+1 grid")
    p.add_argument("--reps", type=int, default=DEFAULT_M, help=f"replicates per cell (default {DEFAULT_M})")

    p = sub.add_parser("size-study", help="null rejection rates of the analytic test")
    _common(p)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--points", type=int, default=8192, help="N+1 (default 8192)")
    p.add_argument("--reps", type=int, default=2000, help="replicates (default 2000)")
    return ap


def _model(args, fallback: Optional[ModelSpec] = None, required: bool = True) -> Optional[ModelSpec]:
    base = load_model(args.config) if args.config else fallback
    if base is None and args.kind is None:
        if required:
            raise ValidationError("no model given: use --config FILE or --kind/--alpha")
        return None
    kind = args.kind or base.kind
    alpha = args.alpha if args.alpha is not None else (base.alpha if base else None)
    if alpha is None:
        raise ValidationError("no alpha given")
    lam = args.lam if args.lam is not None else (base.lam if base else 1.0)
    sigma = args.sigma if args.sigma is not None else (base.sigma if base else 1.0)
    return ModelSpec(kind, alpha, lam, sigma)


def _table(rows) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _out_dir(args, default: str) -> FsPath:
    return FsPath(args.out or default)


def cmd_sim(args) -> int:
    model = _model(args)
    path = sample_path(model, args.points, args.seed)
    if args.out:
        out = FsPath(args.out)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"path_seed{args.seed}.csv"
        write_path_csv(path, target)
        print(target)
    else:
        sys.stdout.write(format_path_csv(path))
    return 0


def cmd_estat(args) -> int:
    path = read_path_csv(args.input)
    rows = compute_stat_multi(path, args.lags)
    print("n,re_total,im_total,re_e1,im_e1,e2")
    for s in rows:
        print(",".join([str(s.n)] + [format(v, ".17g") for v in s.row()[1:]]))
    return 0


def cmd_asym(args) -> int:
    model = _model(args)
    d = build_profile(model, args.n).as_dict()
    if args.format == "json":
        print(json.dumps(d, indent=2))
        return 0
    rows = [(k, _fmt(v)) for k, v in d.items() if k not in ("tail_bounds", "real_limit_constants")]
    if d["real_limit_constants"]:
        rows.append(("real_limit_constants", ", ".join(_fmt(v) for v in d["real_limit_constants"])))
    rows += [(f"tail[{k}]", _fmt(v)) for k, v in d["tail_bounds"].items()]
    print(_table(rows))
    return 0


def cmd_mixtest(args) -> int:
    path = read_path_csv(args.input)
    model = _model(args, fallback=path.model, required=args.bootstrap is None)
    stat = compute_stat(path, args.n)
    if args.bootstrap is None:
        if args.block is not None:
            raise ValidationError("--block requires --bootstrap")
        report = mixing_test(stat, build_profile(model, args.n))
        extra = []
    else:
        if model is None:
            raise ValidationError("the bootstrap test still needs a model for the centering mu_R")
        block = args.block or default_block_length(path.n_obs)
        th_re, th_im = bootstrap_theta(path, args.n, block, args.bootstrap, args.seed)
        report = mixing_test_from_parameters(stat, mu_real(model, args.n), th_re, th_im, model.alpha, "bootstrap")
        extra = [("block_length", str(block)), ("theta_re_sq", _fmt(th_re)), ("theta_im_sq", _fmt(th_im))]
    rows = [
        ("statistic_value", _fmt(report.statistic_value)),
        ("p_value", _fmt(report.p_value)),
        ("n", str(report.n)),
        ("n_obs", str(report.n_obs)),
        ("parameter_source", report.parameter_source),
        ("regime_warning", report.regime_warning or "-"),
    ] + extra
    print(_table(rows))
    print(report.to_json())
    return 0


def _print_moments(report):
    print("model,n_points,part,mean,variance,skewness,excess_kurtosis")
    for (model, pts, part), m in report.moments().items():
        print(f"{model.describe()},{pts},{part},{m.mean:.6g},{m.variance:.6g},{m.skewness:.6g},{m.excess_kurtosis:.6g}")


def cmd_hist_study(args) -> int:
    report = run_histogram_study(_model(args), args.n, args.points, args.reps, args.seed, args.threads)
    _print_moments(report)
    files = emit_report(report, _out_dir(args, "hist_study"))
    print(f"wrote {len(files)} files to {files[0].parent}")
    return 0


def cmd_rate_study(args) -> int:
    base = _model(args)
    alphas = args.alphas or [base.alpha]
    models = [ModelSpec(base.kind, a, base.lam, base.sigma) for a in alphas]
    report = run_rate_study(models, args.n, args.points, args.reps, args.seed, args.threads)
    print("model,part,slope,stderr")
    for (model, part), (s, se, _) in report.slopes.items():
        print(f"{model.describe()},{part},{s:.4f},{se:.4f}")
    files = emit_report(report, _out_dir(args, "rate_study"), svg=False)
    print(f"wrote {len(files)} files to {files[0].parent}")
    return 0


def cmd_size_study(args) -> int:
    model = _model(args)
    report = run_size_study(model, args.n, args.points, args.reps, args.seed, threads=args.threads)
    print("level,rejection_rate")
    for (_, _, lv), rate in report.rejection_rates.items():
        print(f"{lv:g},{rate:.4f}")
    print(f"ks_distance,{report.ks_distances[(model, args.points)]:.4f}")
    files = emit_report(report, _out_dir(args, "size_study"), svg=False)
    print(f"wrote {len(files)} files to {files[0].parent}")
    return 0


COMMANDS = {
    "sim": cmd_sim,
    "estat": cmd_estat,
    "asym": cmd_asym,
    "mixtest": cmd_mixtest,
    "hist-study": cmd_hist_study,
    "rate-study": cmd_rate_study,
    "size-study": cmd_size_study,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"mixlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalInconsistencyError as exc:
        print(f"mixlab: numerical inconsistency: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
