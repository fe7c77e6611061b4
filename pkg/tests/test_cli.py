import json
import math
import subprocess
import sys

import numpy as np
import pytest

from seedbank import serialize
from seedbank.cli import main


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def _run(*argv):
    return subprocess.run([sys.executable, "-m", "seedbank", *argv], capture_output=True, text=True)


def test_tmrca_writes_outputs(tmp_path):
    code = main(["tmrca", "--n", "1000", "--beta", "0.2", "--eps", "0.5", "--replicates", "50",
                 "--seed", "3", "--out", str(tmp_path)])
    assert code == 0
    names = set(_files(tmp_path))
    stem = "tmrca_N1000_beta0.2_eps0.5_m2"
    assert {f"{stem}.csv", f"{stem}_hist.csv", f"{stem}_fit.csv", "tmrca_summary.csv"} <= names
    meta, cols, rows = serialize.read_csv(tmp_path / f"{stem}.csv")
    assert meta["N"] == 1000 and meta["B"] == 3 and meta["seed"] == 3
    assert len(rows) == 50


def test_tmrca_grid_and_json(tmp_path):
    code = main(["tmrca", "--n", "100,1000", "--beta", "0.2", "--eps", "0.3,0.6", "--m", "3",
                 "--replicates", "20", "--format", "json", "--out", str(tmp_path)])
    assert code == 0
    files = [p for p in tmp_path.iterdir() if p.name.startswith("tmrca_N")]
    assert len(files) == 4
    doc = json.loads(files[0].read_text())
    assert len(doc["t_mrca"]) == 20
    assert set(doc["merger_events"]) == {"double", "multiple", "simultaneous"}
    summary = json.loads((tmp_path / "tmrca_summary.json").read_text())
    assert len(summary["rows"]) == 4


def test_tmrca_deterministic_across_threads(tmp_path):
    outs = []
    for threads in ("1", "3"):
        d = tmp_path / threads
        assert main(["tmrca", "--n", "1000", "--beta", "0.5", "--eps", "0.3", "--m", "4",
                     "--replicates", "30", "--seed", "5", "--threads", threads,
                     "--out", str(d)]) == 0
        outs.append(_files(d))
    assert outs[0] == outs[1]


def test_sample_size_one_is_a_usage_error(tmp_path):
    assert main(["tmrca", "--m", "1", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("argv", [
    ["tmrca", "--n", "1"], ["tmrca", "--eps", "1.5"], ["tmrca", "--gamma", "d99"],
    ["mixing", "--beta", "0"], ["tmrca", "--replicates", "0"],
])
def test_domain_errors_exit_one(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_bad_flag_exits_one():
    r = _run("tmrca", "--no-such-flag")
    assert r.returncode == 1


def test_env_var_defaults(tmp_path):
    import os
    env = dict(os.environ, SEEDBANK_REPLICATES="7", SEEDBANK_N="500")
    r = subprocess.run([sys.executable, "-m", "seedbank", "tmrca", "--out", str(tmp_path)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    meta, _, rows = serialize.read_csv(tmp_path / "tmrca_N500_beta0.2_eps0.5_m2.csv")
    assert len(rows) == 7


def test_advisory_outside_kingman_range(tmp_path):
    r = _run("tmrca", "--n", "100", "--beta", "0.5", "--replicates", "5", "--out", str(tmp_path))
    assert r.returncode == 0
    assert "1/4" in r.stderr


@pytest.mark.slow
def test_cli_example_scaled_mean_near_one(tmp_path):
    # N=1e4, beta=0.2, eps=0.5, 5000 replicates: scaled mean within 3 standard errors of 1
    assert main(["tmrca", "--n", "10000", "--beta", "0.2", "--eps", "0.5", "--m", "2",
                 "--replicates", "5000", "--seed", "7", "--out", str(tmp_path)]) == 0
    _, cols, rows = serialize.read_csv(tmp_path / "tmrca_summary.csv")
    row = dict(zip(cols, rows[0]))
    se = float(row["scaled_sd"]) / math.sqrt(5000)
    assert abs(float(row["scaled_mean"]) - 1.0) <= 3 * se, row["scaled_mean"]


def test_mixing_from_stationary_is_flat(tmp_path):
    assert main(["mixing", "--n", "10000", "--beta", "0.2", "--initial", "stationary",
                 "--max-steps", "300", "--out", str(tmp_path)]) == 0
    _, cols, rows = serialize.read_csv(tmp_path / "mixing_N10000_beta0.2_eps0.5.csv")
    tv = np.array([float(r[1]) for r in rows])
    assert tv.size == 301 and tv.max() <= 1e-12


def test_mixing_worst_case(tmp_path):
    assert main(["mixing", "--n", "10000", "--beta", "0.2", "--out", str(tmp_path)]) == 0
    _, cols, rows = serialize.read_csv(tmp_path / "mixing_summary.csv")
    row = dict(zip(cols, rows[0]))
    assert int(row["first_step_below_quarter"]) <= 10_000 ** 0.7
    assert float(row["geometric_time_tv"]) <= 10_000 ** -0.2
    _, _, curve = serialize.read_csv(tmp_path / "mixing_N10000_beta0.2_eps0.5.csv")
    tv = [float(r[1]) for r in curve]
    assert all(b <= a + 1e-15 for a, b in zip(tv, tv[1:]))
    _, _, nu = serialize.read_csv(tmp_path / "stationary_N10000_beta0.2_eps0.5.csv")
    assert float(nu[0][1]) == pytest.approx(1 / 3.5)


def test_mixing_json(tmp_path):
    assert main(["mixing", "--n", "100", "--beta", "0.5", "--eps", "0.2", "--format", "json",
                 "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "mixing_N100_beta0.5_eps0.2.json").read_text())
    assert doc["header"]["B"] == 10
    assert doc["first_step_below_quarter"] is not None
    assert doc["geometric_time_tv"]["error_bound"] <= 1e-10


def test_verify_quick(tmp_path):
    assert main(["verify", "--quick", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"] and not report["failed"]


def test_verify_detects_injected_fault(tmp_path):
    assert main(["verify", "--quick", "--inject-fault", "--out", str(tmp_path)]) == 3
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["failed"]


def test_csv_round_trip(tmp_path):
    path = tmp_path / "x.csv"
    vals = [0.1, 1 / 3, 2.5e-17, 123456789.0]
    serialize.write(path, serialize.csv_text(["i", "v"], enumerate(vals), {"k": 1}))
    meta, cols, rows = serialize.read_csv(path)
    assert meta == {"k": 1} and cols == ["i", "v"]
    assert [float(r[1]) for r in rows] == vals
