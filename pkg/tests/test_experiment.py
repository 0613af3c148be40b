"""실행 모드 종단 간 검사 (작은 격자)"""

import json
import pandas as pd
import pytest
from rdopt.errors import ConfigurationError
from rdopt.main import main
from rdopt.commands import run_experiment
from rdopt.services.config_parser import config_hash, parse_config

SMALL = """
[domain]
xmin = -10
xmax = 10
nx = 41

[time]
T = 2
nt = 40

[reaction]
kind = bistable
theta = 0.25

[constraint]
mass = 3

[optimizer]
max_iter = 3
seed = 5
moves_per_temp = 5
max_evaluations = 20

[checks]
directions = 2
epsilons = 1e-3, 1e-4

[output]
timings = false
snapshot_stride = 10
"""

HALF_INTERVAL = """
[domain]
xmin = 0
xmax = 3.141592653589793
nx = {nx}

[time]
T = {T}
nt = {nt}

[reaction]
kind = {kind}
{param}

[constraint]
mass = 1

[optimizer]
seed = 11

[twoscale]
k_list = 2, 4

[checks]
trials = 4
profiles = 2
t_samples = 3
r_samples = 2

[output]
timings = false
"""


@pytest.fixture
def small_cfg():
    return parse_config(SMALL)


def test_optimize_writes_artifacts_and_manifest(tmp_path, small_cfg):
    assert run_experiment(small_cfg, "optimize", tmp_path) == 0

    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["mode"] == "optimize"
    assert manifest["config_hash"] == config_hash(small_cfg)
    assert set(manifest["artifacts"]) == {
        "trace.csv", "u0_final.dat", "p0_final.dat", "prop1_report.txt", "summary.csv"
    }
    assert parse_config((tmp_path / "config.ini").read_text(encoding="utf-8")) == small_cfg

    trace = pd.read_csv(tmp_path / "trace.csv")
    assert list(trace.columns) == ["iter", "objective", "threshold_c", "flat_cell_count", "tau", "wall_ms"]
    assert trace["objective"].is_monotonic_increasing

    report = json.loads((tmp_path / "prop1_report.txt").read_text(encoding="utf-8"))
    assert report["status"] in ("empty singular arc", "passed", "violated")


def test_compare_reruns_are_byte_identical(tmp_path, small_cfg):
    first, second = tmp_path / "first", tmp_path / "second"
    assert run_experiment(small_cfg, "compare", first) == 0
    assert run_experiment(small_cfg, "compare", second) == 0

    for name in ("summary.csv", "fixed_point/trace.csv", "annealing/trace.csv", "annealing/u0_final.dat"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    summary = pd.read_csv(first / "summary.csv")
    assert summary["method"].tolist() == ["fixed_point", "annealing"]
    assert (summary["final_objective"] >= summary["initial_objective"]).all()
    assert {"forward_solves", "wall_s", "wall_ms", "solve_ratio"} <= set(summary.columns)
    assert summary["solve_ratio"].iloc[0] == 1.0
    assert summary["solve_ratio"].iloc[1] == pytest.approx(summary["forward_solves"].iloc[1] / summary["forward_solves"].iloc[0])
    assert (summary["forward_solves"] >= 1).all()
    assert (summary["wall_ms"] == 0.0).all()


def test_forward_writes_snapshots(tmp_path, small_cfg):
    run_experiment(small_cfg, "forward", tmp_path)
    names = sorted(p.name for p in (tmp_path / "snapshots").iterdir())
    assert names == [f"u_{i:06d}.dat" for i in (0, 10, 20, 30, 40)]
    assert (tmp_path / "u_final.dat").exists()


def test_grad_check_tables(tmp_path, small_cfg):
    run_experiment(small_cfg, "grad-check", tmp_path)
    grad = pd.read_csv(tmp_path / "grad_check.csv")
    assert len(grad) == 4
    assert list(grad.columns) == ["direction", "epsilon", "fd_value", "adjoint_value", "rel_error"]
    assert len(pd.read_csv(tmp_path / "hessian.csv")) == 2
    assert "dt_refinement_ratio" in pd.read_csv(tmp_path / "summary.csv").columns


def test_twoscale_tables(tmp_path):
    cfg = parse_config(HALF_INTERVAL.format(nx=257, T=2, nt=100, kind="bistable", param="theta = 0.25"))
    run_experiment(cfg, "twoscale", tmp_path)

    sweep = pd.read_csv(tmp_path / "sweep.csv")
    assert sweep["k"].tolist() == [2, 4]
    assert "time_uniformity" in sweep.columns
    laplace = pd.read_csv(tmp_path / "laplace.csv")
    assert len(laplace) == 6
    assert (abs(laplace["ratio"] - laplace["oracle"]) <= 1e-10).all()
    assert set(pd.read_csv(tmp_path / "fit.csv").columns) == {"slope", "intercept", "r2", "uniformity"}


def test_convex_check_tables(tmp_path):
    cfg = parse_config(HALF_INTERVAL.format(nx=101, T=0.5, nt=250, kind="convex", param="a = 2"))
    run_experiment(cfg, "convex-check", tmp_path)

    for name in ("block_check.csv", "extreme_check.csv", "comparison.csv"):
        assert (tmp_path / name).exists()
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert summary["check"].tolist() == ["block_convex", "extreme_point", "parabolic_comparison"]
    assert summary["passed"].all()


def test_stochastic_mode_requires_seed(tmp_path):
    cfg = parse_config(SMALL.replace("seed = 5\n", ""))
    with pytest.raises(ConfigurationError, match="seed"):
        run_experiment(cfg, "anneal", tmp_path)


def test_unknown_mode_is_rejected(tmp_path, small_cfg):
    with pytest.raises(ConfigurationError, match="unknown mode"):
        run_experiment(small_cfg, "explore", tmp_path)


def test_cli_exit_codes(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(SMALL, encoding="utf-8")
    bad = tmp_path / "bad.ini"
    bad.write_text(SMALL.replace("mass = 3", "mass = 200"), encoding="utf-8")

    assert main(["forward", str(good), "--out", str(tmp_path / "run")]) == 0
    assert main(["forward", str(bad), "--out", str(tmp_path / "bad_run")]) == 1
    assert main(["forward", str(tmp_path / "missing.ini")]) == 3
