import json
from pathlib import Path

import pandas as pd
import pytest

from contactpy import load_env, main, parse_config, run_command


def _config(tmp_path, text, name="exp.cfg"):
    fname = tmp_path / name
    fname.write_text(text)
    return str(fname)


def _summary(out):
    return json.loads((out / "summary.json").read_text())


SURVIVAL = "spec = point(0.0)\ntrials = 50\nt_grid = 0.5, 1\nwall_time = false\n"


def test_usage_errors(tmp_path):
    cfg = _config(tmp_path, SURVIVAL)
    assert main(["bogus", cfg]) == 2
    assert main(["survival", str(tmp_path / "missing.cfg")]) == 2
    assert main(["survival", cfg, "--parallelism", "0"]) == 2
    assert main(["survival", _config(tmp_path, "spec = nope\n", "bad.cfg")]) \
        == 2


def test_version():
    assert main(["--version"]) == 0


def test_survival_without_rates(tmp_path):
    out = tmp_path / "run"
    assert main(["survival", _config(tmp_path, SURVIVAL), "--out",
                 str(out)]) == 0
    table = pd.read_csv(out / "survival.csv")
    assert len(table) == 2
    assert (out / "survival.txt").exists()
    summary = _summary(out)
    assert set(summary) == {"config", "results", "diagnostics"}
    assert summary["config"]["spec"] == "point(0.0)"
    assert "out" not in summary["config"]
    diagnostics = summary["diagnostics"]
    assert diagnostics["command"] == "survival"
    assert not diagnostics["failed"]
    assert "wall_time" not in diagnostics
    assert diagnostics["files"] == ["survival.csv", "survival.txt"]


def test_wall_time_records_execution(tmp_path):
    out = tmp_path / "timed"
    cfg = _config(tmp_path, SURVIVAL.replace("false", "true"))
    assert main(["survival", cfg, "--out", str(out)]) == 0
    diagnostics = _summary(out)["diagnostics"]
    assert diagnostics["wall_time"] >= 0
    assert diagnostics["execution"]["parallelism"] == 1


def test_env_command(tmp_path):
    out = tmp_path / "env"
    cfg = _config(tmp_path, "spec = zero_or(3.0, 0.5)\nenv_seeds = 1, 2\n"
                            "h = 2\nw = 3\n")
    assert main(["env", cfg, "--out", str(out)]) == 0
    env = load_env(out / "env_2.env")
    assert env.master_seed == 2
    rates = pd.read_csv(out / "rates.csv")
    assert sorted(set(rates["seed"])) == [1, 2]
    assert len(rates) == 4
    assert _summary(out)["results"]["window"] == "-3:3+2i"


def test_blocks_without_rates(tmp_path):
    out = tmp_path / "blocks"
    cfg = _config(tmp_path, "spec = point(0.0)\nh = 1\nw = 2\nr = 0\n"
                            "N_grid = 0, 1\nhorizon = 2\ntrials = 5\n")
    assert main(["blocks", cfg, "--out", str(out)]) == 0
    table = pd.read_csv(out / "blocks.csv")
    assert len(table) == 8
    assert (table["estimate"] == 0.0).all()
    assert (out / "blocks_R.txt").exists()


GOLDEN = Path(__file__).parent / "fixtures" / "blocks_golden.csv"

BLOCKS = ("spec = point(0.0)\nh = 1\nw = 2\nr = 0\nN_grid = 0, 1\n"
          "horizon = 2\ntrials = 5\nwall_time = false\n")


def test_blocks_match_the_golden_table(tmp_path):
    out = tmp_path / "blocks"
    assert main(["blocks", _config(tmp_path, BLOCKS), "--out", str(out)]) == 0
    assert (out / "blocks.csv").read_bytes() == GOLDEN.read_bytes()


REPRODUCIBLE = {
    "survival": (SURVIVAL.replace("point(0.0)", "point(1.0)"), 0),
    "env": ("spec = zero_or(3.0, 0.5)\nenv_seeds = 1, 2\nh = 2\nw = 3\n"
            "wall_time = false\n", 0),
    "blocks": (BLOCKS.replace("point(0.0)", "uniform(1.5, 2.5)"), 0),
    "renorm": ("spec = point(0.0)\nn = 1\ntrials = 2\nwall_time = false\n", 1),
    "cc": ("spec = point(1.0)\ntrials = 20\nwindow = 0:1\nt_grid = 0.5, 1\n"
           "burn = 1\nmargin = 2\nwall_time = false\n", 0),
}


@pytest.mark.parametrize("command", sorted(REPRODUCIBLE))
def test_reports_do_not_depend_on_parallelism(tmp_path, command):
    text, code = REPRODUCIBLE[command]
    cfg = _config(tmp_path, text)
    runs = []
    for threads in ("1", "8"):
        out = tmp_path / f"run{threads}"
        assert main([command, cfg, "--out", str(out), "--parallelism",
                     threads]) == code
        runs.append(out)
    names = sorted(p.name for p in runs[0].iterdir() if p.suffix != ".png")
    assert names == sorted(p.name for p in runs[1].iterdir()
                           if p.suffix != ".png")
    assert "summary.json" in names
    for name in names:
        assert (runs[1] / name).read_bytes() == (runs[0] / name).read_bytes()


def test_unknown_experiment(tmp_path):
    cfg = _config(tmp_path, "spec = point(1.0)\nexperiment = nope\n")
    assert main(["blocks", cfg, "--out", str(tmp_path / "x")]) == 2


def test_trajectory_with_figure(tmp_path):
    out = tmp_path / "sim"
    cfg = _config(tmp_path, "spec = point(1.0)\nt_grid = 1, 2\nmargin = 3\n"
                            "plot = true\n")
    assert main(["simulate", cfg, "--out", str(out)]) == 0
    for name in ("rep.txt", "intervals.csv", "size.txt", "spacetime.png"):
        assert (out / name).exists()
    results = _summary(out)["results"]
    assert results["horizon"] == 2.0
    assert results["region"] == "-3:3+3i"


def test_cc_distance(tmp_path):
    out = tmp_path / "cc"
    cfg = _config(tmp_path, "spec = point(1.0)\ntrials = 20\nwindow = 0:1\n"
                            "t_grid = 0.5, 1\nburn = 1\nmargin = 2\n")
    assert main(["cc", cfg, "--out", str(out)]) == 0
    assert len(pd.read_csv(out / "cc.csv")) == 2
    assert isinstance(_summary(out)["results"]["decreasing"], bool)


def test_renorm_without_rates_fails(tmp_path):
    out = tmp_path / "renorm"
    cfg = _config(tmp_path, "spec = point(0.0)\nn = 1\ntrials = 2\n")
    assert main(["renorm", cfg, "--out", str(out)]) == 1
    assert _summary(out)["diagnostics"]["failed"]
    assert _summary(out)["results"]["w_bar"] is None


@pytest.mark.parametrize("name", ["", "survive", "ENV"])
def test_run_command_rejects_unknown_names(tmp_path, name):
    cfg = parse_config("spec = point(1.0)\n").with_overrides(
        out=str(tmp_path))
    assert run_command(name, cfg) == 2
