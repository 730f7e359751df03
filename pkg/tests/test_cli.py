import json
import subprocess
import sys

import numpy as np
import pytest

from mixlab.cli import main
from mixlab.config import load_model, parse_config_text
from mixlab.errors import ValidationError
from mixlab.models import ModelSpec
from mixlab.sim import read_path_csv


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "m.cfg"
    p.write_text("# subdiffusive noise\nkind = fGn\nalpha = 0.6   # exponent\n\n")
    return p


# ---------------------------------------------------------------- config


def test_config_parsing(tmp_path):
    assert parse_config_text("kind=fOU\nH=0.9\nlambda = 2\nsigma=0.5") == {"kind": "fOU", "H": "0.9", "lambda": "2", "sigma": "0.5"}
    p = tmp_path / "c"
    p.write_text("kind=fOU\nH=0.9\nlambda = 2\n")
    assert load_model(p) == ModelSpec("fOU", 1.8, 2.0, 1.0)


@pytest.mark.parametrize(
    "text",
    ["kind=fGn", "alpha=0.6", "kind=fGn\nalpha=0.6\nH=0.3", "kind=fGn\nalpha=x", "kind=fGn\nalpha=0.6\nfoo=1", "kind fGn", "kind=fGn\nkind=fOU\nalpha=1"],
)
def test_config_errors(tmp_path, text):
    p = tmp_path / "c"
    p.write_text(text)
    with pytest.raises(ValidationError):
        load_model(p)


def test_config_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_model(tmp_path / "nope")


# ---------------------------------------------------------------- commands


def test_sim_estat_round_trip(cfg, tmp_path, capsys):
    assert main(["sim", "--config", str(cfg), "--points", "300", "--seed", "5", "--out", str(tmp_path)]) == 0
    target = tmp_path / "path_seed5.csv"
    path = read_path_csv(target)
    assert path.model == ModelSpec("fGn", 0.6) and path.seed == 5 and len(path.values) == 300
    capsys.readouterr()
    assert main(["estat", "--input", str(target), "--lags", "5,10,30"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,re_total,im_total,re_e1,im_e1,e2"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [5, 10, 30]
    row = [float(v) for v in lines[3].split(",")]
    assert row[1] == pytest.approx(row[3] - row[5], abs=1e-15)


def test_sim_stdout_is_deterministic(cfg, capsys):
    main(["sim", "--config", str(cfg), "--points", "50", "--seed", "1"])
    a = capsys.readouterr().out
    main(["sim", "--config", str(cfg), "--points", "50", "--seed", "1"])
    assert capsys.readouterr().out == a
    assert a.startswith("# model=fGn alpha=0.6 seed=1")


def test_asym_json_and_table(cfg, capsys):
    assert main(["asym", "--model", str(cfg), "--n", "30", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["regime"] == "subdiffusive" and d["theta_re_sq"] > 0
    assert main(["asym", "--kind", "fGn", "--alpha", "1.8", "--n", "30"]) == 0
    out = capsys.readouterr().out
    assert "RosenblattMixture" in out and "real_limit_constants" in out


def test_mixtest_analytic_and_bootstrap(cfg, tmp_path, capsys):
    main(["sim", "--config", str(cfg), "--points", "2048", "--seed", "2", "--out", str(tmp_path)])
    csv = str(tmp_path / "path_seed2.csv")
    capsys.readouterr()
    assert main(["mixtest", "--input", csv, "--n", "30"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    rep = json.loads(out[-1])
    assert rep["parameter_source"] == "analytic" and 0 <= rep["p_value"] <= 1
    assert main(["mixtest", "--input", csv, "--n", "30", "--model", str(cfg), "--bootstrap", "100", "--block", "15"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out.strip().splitlines()[-1])["parameter_source"] == "bootstrap"
    assert "block_length      15" in out


def test_exit_codes(cfg, tmp_path, capsys):
    bare = tmp_path / "bare.csv"
    np.savetxt(bare, np.zeros(100))
    assert main(["estat", "--input", str(bare), "--lags", "10,5"]) == 2
    assert "strictly increasing" in capsys.readouterr().err
    assert main(["mixtest", "--input", str(bare), "--n", "5"]) == 2
    assert main(["asym", "--kind", "fGn", "--alpha", "1.5", "--n", "30"]) == 2
    assert main(["asym", "--kind", "fGn", "--alpha", "2.5", "--n", "30"]) == 2
    assert main(["mixtest", "--input", str(bare), "--n", "5", "--kind", "fGn", "--alpha", "1.8"]) == 2
    assert main(["estat", "--input", str(tmp_path / "missing.csv"), "--lags", "1"]) == 2


def test_exit_code_numeric_inconsistency(monkeypatch, capsys):
    import mixlab.sim as sim

    monkeypatch.setattr(sim, "DENSE_FALLBACK_MAX", 4)
    assert main(["sim", "--kind", "fOU", "--alpha", "1.8", "--lambda", "0.1", "--points", "17"]) == 3
    assert "negative eigenvalue" in capsys.readouterr().err


def test_studies(cfg, tmp_path, capsys):
    out = tmp_path / "h"
    assert main(["hist-study", "--config", str(cfg), "--points", "256", "--reps", "100", "--threads", "0", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "cells.csv", "hist_0.6_255_im.svg", "hist_0.6_255_re.svg", "moments.csv", "slopes.csv"
    ]
    out = tmp_path / "r"
    assert main(["rate-study", "--config", str(cfg), "--alphas", "0.6,1.0", "--points", "128,256,512", "--reps", "20", "--n", "10", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "fGn(alpha=1),im," in text
    assert len((out / "slopes.csv").read_text().strip().splitlines()) == 5
    out = tmp_path / "s"
    assert main(["size-study", "--config", str(cfg), "--points", "256", "--reps", "100", "--out", str(out)]) == 0
    assert (out / "sizes.csv").exists()


def test_help_documents_config_keys_and_columns():
    res = subprocess.run([sys.executable, "-m", "mixlab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "cells.csv" in res.stdout and "exit codes" in res.stdout
    res = subprocess.run([sys.executable, "-m", "mixlab.cli", "asym", "--help"], capture_output=True, text=True)
    for key in ("kind=", "alpha=", "H=", "lambda=", "sigma="):
        assert key in res.stdout


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["estat", "--input", "x", "--lags", "a,b"])
    assert exc.value.code == 2
