"""End-to-end command line runs: exit codes, determinism, output layout.

Every invocation goes through a real subprocess so the installed entry
point, argument parsing, and error mapping are all on the hook.
"""

import filecmp
import json
import os
import subprocess
import sys

import pytest

from levywave import config_to_dict, default_alpha_config, save_config

pytestmark = pytest.mark.cli


def run_cli(args, env_extra=None, cwd=None):
    env = dict(os.environ)
    env.pop("LEVY_WAVE_OUT", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        ["levy-wave", *args], capture_output=True, text=True, env=env, cwd=cwd
    )


def micro_config(**patch):
    """Small enough to finish a compare in seconds, still well-posed."""
    cfg = default_alpha_config()
    doc = config_to_dict(cfg)
    doc.update(
        dict(
            spacing=1.0 / 16.0,
            n_paths=40,
            epsilons=[1.0, 0.5, 0.25],
            q_max=8,
            n_output_times=9,
        )
    )
    doc.update(patch)
    return doc


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return str(path)


def assert_trees_identical(a, b):
    cmp = filecmp.dircmp(str(a), str(b))
    assert not cmp.left_only and not cmp.right_only
    same, diff, funny = filecmp.cmpfiles(str(a), str(b), cmp.common_files, shallow=False)
    assert not diff and not funny, f"outputs differ: {diff or funny}"
    assert same  # at least one artifact was produced


def test_check_condition_roundtrip(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    out = tmp_path / "o1"
    res = run_cli(["check-condition", "--config", cfg, "--out", str(out)])
    assert res.returncode == 0, res.stderr
    assert "HOLDS" in res.stdout
    report = json.loads((out / "report.json").read_text())
    assert report["condition"]["verdict"] == "HOLDS"
    assert (out / "ratios.csv").exists()


def test_check_condition_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["check-condition", "--config", cfg, "--out", str(a)]).returncode == 0
    assert run_cli(["check-condition", "--config", cfg, "--out", str(b)]).returncode == 0
    assert_trees_identical(a, b)


def test_simulate_outputs_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    a, b = tmp_path / "a", tmp_path / "b"
    res = run_cli(["simulate", "--config", cfg, "--out", str(a)])
    assert res.returncode == 0, res.stderr
    report = json.loads((a / "report.json").read_text())
    for name in report["files"]:
        assert (a / name).exists()
    assert {"field.csv", "jumps.csv", "v_coeffs.csv"} <= set(report["files"])
    assert run_cli(["simulate", "--config", cfg, "--out", str(b)]).returncode == 0
    assert_trees_identical(a, b)


def test_simulate_seed_override_changes_path(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    run_cli(["simulate", "--config", cfg, "--out", str(a)])
    run_cli(["simulate", "--config", cfg, "--out", str(b), "--seed", "99"])
    run_cli(["simulate", "--config", cfg, "--out", str(c), "--seed", "99"])
    pa = json.loads((a / "report.json").read_text())["probe_value"]
    pb = json.loads((b / "report.json").read_text())["probe_value"]
    pc = json.loads((c / "report.json").read_text())["probe_value"]
    assert pb == pc
    assert pa != pb


def test_env_var_beats_flag(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    envdir = tmp_path / "fromenv"
    flagdir = tmp_path / "fromflag"
    res = run_cli(
        ["check-condition", "--config", cfg, "--out", str(flagdir)],
        env_extra={"LEVY_WAVE_OUT": str(envdir)},
    )
    assert res.returncode == 0
    assert (envdir / "report.json").exists()
    assert not flagdir.exists()


def test_hermite_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    out = tmp_path / "h"
    res = run_cli(["hermite", "--config", cfg, "--out", str(out)])
    assert res.returncode == 0
    assert (out / "hermite.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["q_max"] == 8


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{this is not json")
    res = run_cli(["check-condition", "--config", str(bad), "--out", str(tmp_path / "x")])
    assert res.returncode == 2
    assert "config error" in res.stderr

    unknown = write_cfg(tmp_path, {**micro_config(), "rogue": 1}, name="unknown.json")
    res = run_cli(["simulate", "--config", unknown, "--out", str(tmp_path / "y")])
    assert res.returncode == 2


def test_nonexistent_config_exit_code(tmp_path):
    res = run_cli(["simulate", "--config", str(tmp_path / "ghost.json")])
    assert res.returncode == 2


def test_compare_failure_exit_code(tmp_path):
    """Impossible pass bands force the dichotomy expectation to fail, so
    the process must signal it with exit 1 (not a crash, not 0)."""
    doc = micro_config(n_paths=20)
    doc["thresholds"] = {
        "light_ks_max": 0.0,
        "monotone_slack": 0.0,
        "heavy_ks_min": 1.0,
        "v_light_ks_max": 0.0,
        "v_monotone_slack": 0.0,
        "v_heavy_ks_min": 1.0,
    }
    cfg = write_cfg(tmp_path, doc)
    out = tmp_path / "cmp"
    res = run_cli(["compare", "--config", cfg, "--out", str(out), "--threads", "1"])
    assert res.returncode == 1, res.stdout + res.stderr
    report = json.loads((out / "report.json").read_text())
    assert report["dichotomy_pass"] is False
    for name in ("ks.csv", "moments.csv", "samples.csv"):
        assert (out / name).exists()


def test_bad_threads_rejected(tmp_path):
    cfg = write_cfg(tmp_path, micro_config())
    res = run_cli(["check-condition", "--config", cfg, "--threads", "0", "--out", str(tmp_path / "z")])
    assert res.returncode == 2


def test_save_config_output_loads_back(tmp_path):
    # the library writer and the CLI reader agree on the format
    path = tmp_path / "written.json"
    save_config(default_alpha_config(), str(path))
    out = tmp_path / "w"
    res = run_cli(["hermite", "--config", str(path), "--out", str(out)])
    assert res.returncode == 0
