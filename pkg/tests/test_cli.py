import json

import pytest

from adhocnet.cli import main
from adhocnet.netmodel import Scenario, save_scenario

FEASIBLE = Scenario(n_nodes=10, spreading_gain=64, master_seed=6,
                    area_side=150.0)


def write_scenario(tmp_path):
    path = tmp_path / "scenario.json"
    save_scenario(FEASIBLE, path)
    return str(path)


def test_gain_subcommand(capsys):
    assert main(["gain", "30", "32", "55", "128"]) == 0
    assert capsys.readouterr().out.strip() == "2.181818"


def test_run_subcommand(tmp_path, capsys):
    code = main(["run", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "status: ok" in out
    assert (tmp_path / "out" / "trace.csv").exists()


def test_run_with_phase_budget(tmp_path):
    code = main(["run", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out"), "--phase-budget", "5"])
    assert code == 0
    lines = (tmp_path / "out" / "trace.csv").read_text().strip().splitlines()
    assert len(lines) == 6


def test_flag_overrides_reach_the_manifest(tmp_path):
    code = main(["run", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out"), "--seed", "123",
                 "--nodes", "8"])
    assert code == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["scenario"]["master_seed"] == 123
    assert manifest["config"]["scenario"]["n_nodes"] == 8


def test_multistart_subcommand(tmp_path):
    code = main(["multistart", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out"), "--trials", "3"])
    assert code == 0
    lines = (tmp_path / "out" / "trials.csv").read_text().strip().splitlines()
    assert len(lines) == 4


def test_fairness_subcommand(tmp_path):
    code = main(["fairness", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out"), "--trials", "4"])
    assert code == 0
    assert (tmp_path / "out" / "weights.csv").exists()


def test_capacity_subcommand(tmp_path):
    code = main(["capacity", "--config", write_scenario(tmp_path),
                 "--out", str(tmp_path / "out"), "--trials", "5",
                 "--target", "0.4", "--n-min", "6", "--n-max", "10",
                 "--n-step", "4"])
    assert code in (0, 3)
    assert (tmp_path / "out" / "capacity.csv").exists()


def test_emit_plots_subcommand(tmp_path, capsys):
    main(["run", "--config", write_scenario(tmp_path),
          "--out", str(tmp_path / "out")])
    capsys.readouterr()
    code = main(["emit-plots", "--out", str(tmp_path / "out")])
    assert code == 0
    assert "plot_total_power_vs_phase.csv" in capsys.readouterr().out


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_scenario_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"n_nodes": 10, "mystery": 5}')
    assert main(["run", "--config", str(path)]) == 2
    assert "mystery" in capsys.readouterr().err


def test_infeasible_scenario_exits_3(tmp_path):
    hard = Scenario(n_nodes=12, spreading_gain=1, master_seed=2,
                    pc_max_iter=1500)
    path = tmp_path / "hard.json"
    save_scenario(hard, path)
    code = main(["run", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == 3
