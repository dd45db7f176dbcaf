import json

import pytest

from rosb import config as cfgmod
from rosb.cli import main

FAST_TRAIN = ["--set", "train.parallel_envs=2", "--set", "train.warmup_episodes=4",
              "--set", "train.update_times=2", "--set", "env.max_steps=30"]


def test_train_writes_artifacts(tmp_path):
    out = tmp_path / "t"
    assert main(["train", "--algo", "sac-a", "--test", "2b", "--episodes", "12", "--seed", "1",
                 "--out", str(out)] + FAST_TRAIN) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["effective_config"]["env"]["e_th"] == 0.3
    assert manifest["effective_config"]["algo"] == "sac-a"
    assert (out / "checkpoint" / "actor.npz").exists()
    assert len((out / "learning_curve.csv").read_text().splitlines()) == 13


def test_test_presets_set_error_threshold(tmp_path):
    for test, e_th in (("1", 0.0), ("2a", 1.0)):
        out = tmp_path / test
        main(["train", "--algo", "ddpg", "--test", test, "--episodes", "2", "--out", str(out)]
             + FAST_TRAIN)
        assert json.loads((out / "manifest.json").read_text())["effective_config"]["env"]["e_th"] == e_th


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--algo", "nope"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["train", "--algo", "td3", "--test", "3"])
    assert exc.value.code == 2
    assert main(["train", "--algo", "td3", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["sweep", "--radii", "", "--out", str(tmp_path)]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("env.depth_m: 40\ntrain.gamma: 0.5\nenv:\n  sigma: 2.0\n")
    flat = cfgmod.load_config(cfg)
    env = cfgmod.env_config(flat)
    assert env.depth == 40 and env.sigma == 2.0
    assert cfgmod.train_config(flat).gamma == 0.5
    bad = tmp_path / "bad.yaml"
    bad.write_text("env.nonsense: 1\n")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.env_config(cfgmod.load_config(bad))
    out = tmp_path / "o"
    main(["train", "--algo", "ddpg", "--config", str(cfg), "--set", "env.depth=25", "--episodes",
          "2", "--out", str(out)] + FAST_TRAIN)
    eff = json.loads((out / "manifest.json").read_text())["effective_config"]
    assert eff["env"]["depth"] == 25 and eff["train"]["gamma"] == 0.5


def test_eval_predefined_and_compare(tmp_path):
    a = tmp_path / "a"
    assert main(["eval", "--policy", "predefined", "--runs", "6", "--depth", "15", "--seed", "3",
                 "--out", str(a), "--set", "env.max_steps=60"]) == 0
    m = json.loads((a / "metrics.json").read_text())
    assert m["n_runs"] == 6 and len(m["per_step_iqm"]) == 60
    assert main(["compare", "--a", str(a / "metrics.json"), "--b", str(a / "metrics.json"),
                 "--out", str(tmp_path / "cmp.json")]) == 0
    c = json.loads((tmp_path / "cmp.json").read_text())
    assert c["transient_delta_pct"] == 0.0 and c["prob_improvement_transient"] == 0.5
    b = tmp_path / "b"
    main(["eval", "--policy", "predefined", "--runs", "5", "--out", str(b), "--set", "env.max_steps=60"])
    assert main(["compare", "--a", str(a / "metrics.json"), "--b", str(b / "metrics.json"),
                 "--out", str(tmp_path / "x.json")]) == 3


def test_eval_single_run_exports_trajectory(tmp_path):
    assert main(["eval", "--policy", "predefined", "--runs", "1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory_0.csv").exists()
    assert len((tmp_path / "run_matrix.csv").read_text().splitlines()) == 2


def test_eval_checkpoint_and_corrupt_checkpoint(tmp_path):
    t = tmp_path / "t"
    main(["train", "--algo", "td3", "--episodes", "3", "--out", str(t)] + FAST_TRAIN)
    assert main(["eval", "--policy", str(t / "checkpoint"), "--runs", "4", "--out",
                 str(tmp_path / "e"), "--set", "env.max_steps=20"]) == 0
    (t / "checkpoint" / "actor.npz").write_bytes(b"garbage")
    assert main(["eval", "--policy", str(t / "checkpoint"), "--runs", "4",
                 "--out", str(tmp_path / "e2")]) == 3


def test_sweep_windows(tmp_path):
    for w in ("30", "300"):
        assert main(["sweep", "--depth", "200", "--radii", "200,283", "--window", w, "--runs", "5",
                     "--out", str(tmp_path)]) == 0
    lines30 = (tmp_path / "sweep_window30.csv").read_text().splitlines()
    lines300 = (tmp_path / "sweep_window300.csv").read_text().splitlines()
    assert lines30[0] == lines300[0] and len(lines30) == len(lines300) == 3


def test_sweep_preset_includes_sqrt2_radius(tmp_path):
    assert 283.0 in cfgmod.preset("paper-fig4")["sweep.radii"]
    assert main(["sweep", "--preset", "paper-fig4", "--runs", "3", "--out", str(tmp_path)]) == 0


def test_export(tmp_path):
    t = tmp_path / "t"
    main(["train", "--algo", "ddpg", "--episodes", "5", "--out", str(t)] + FAST_TRAIN)
    e = tmp_path / "e"
    main(["eval", "--policy", "predefined", "--runs", "4", "--out", str(e), "--set", "env.max_steps=10"])
    assert main(["export", "--curve", str(t / "learning_curve.csv"), "--metrics",
                 str(e / "metrics.json"), "--reward-window", "2", "--out", str(tmp_path / "x")]) == 0
    assert (tmp_path / "x" / "fig_reward.csv").exists()
    assert len((tmp_path / "x" / "fig_iqm.csv").read_text().splitlines()) == 11
    assert main(["export", "--out", str(tmp_path / "y")]) == 2


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ROSB_OUTPUT_ROOT", str(tmp_path))
    assert main(["eval", "--policy", "predefined", "--runs", "1", "--out", "rel"]) == 0
    assert (tmp_path / "rel" / "run_matrix.csv").exists()


def test_compare_out_directory(tmp_path, capsys):
    a = tmp_path / "a"
    main(["eval", "--policy", "predefined", "--runs", "4", "--out", str(a), "--set", "env.max_steps=60"])
    assert main(["compare", "--a", str(a / "metrics.json"), "--b", str(a / "metrics.json"),
                 "--out", str(tmp_path / "cmp")]) == 0
    assert (tmp_path / "cmp" / "compare.json").exists()
    assert "steady delta n/a" in capsys.readouterr().out
