import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from phasegpt import cli


def small_scenario(**over):
    cfg = {
        "name": "small",
        "grid": {"n": 32, "half_width": 6.0},
        "kernel": [{"w": 1.0, "k": 1.0}],
        "V_p": 2 * np.pi,
        "initial": {"variant": "gaussian", "q0": 1.0},
        "hamiltonian": {"type": "harmonic", "stiffness": 0.5},
        "run": {"dt": 0.005, "steps": 20, "stride": 10, "monitors": ["norm", "energy"]},
    }
    cfg.update(over)
    return cfg


def write_cfg(tmp_path, cfg, name="scn.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_scenarios_listed(capsys):
    assert cli.main(["scenarios"]) == 0
    names = capsys.readouterr().out.split()
    assert {"sho_quantum_quarter_turn", "sho_inner_product_invariance",
            "spekkens_classification", "hybrid_associator_witness"} <= set(names)


def test_run_custom_scenario(tmp_path):
    assert cli.main(["run", write_cfg(tmp_path, small_scenario()), "--out", str(tmp_path / "o")]) == 0
    root = tmp_path / "o" / "small"
    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["completed"] is True
    assert sorted(p.name for p in (root / "trajectory").iterdir()) == [
        "state0_00000.csv", "state0_00001.csv", "state0_00002.csv"]
    for name in manifest["checksums"]:
        assert (root / name).exists()


def test_run_is_deterministic(tmp_path):
    path = write_cfg(tmp_path, small_scenario())
    for d in ("a", "b"):
        assert cli.main(["run", path, "--out", str(tmp_path / d)]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["run", write_cfg(tmp_path, small_scenario())]) == 0
    assert (tmp_path / "env" / "small" / "manifest.json").exists()


def test_malformed_kernel_names_the_field(tmp_path, capsys):
    cfg = small_scenario(kernel=[{"w": -1, "k": 1.0}])
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "kernel[0].w" in err and "weight must be > 0" in err


@pytest.mark.parametrize("drop", ["V_p", "grid", "kernel", "initial"])
def test_missing_key_is_a_config_error(tmp_path, capsys, drop):
    cfg = small_scenario()
    del cfg[drop]
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert drop in capsys.readouterr().err


def test_unknown_scenario(capsys):
    assert cli.main(["run", "no_such_scenario"]) == 2
    assert "no such file" in capsys.readouterr().err


def test_bad_thread_count(capsys):
    assert cli.main(["verify", "chaos", "--threads", "0"]) == 2


def test_cfl_violation_reported(tmp_path, capsys):
    cfg = small_scenario(run={"dt": 1.0, "steps": 2})
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "stability guard" in capsys.readouterr().err


def test_quarter_turn_scenario(tmp_path):
    assert cli.main(["run", "sho_quantum_quarter_turn", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "sho_quantum_quarter_turn" / "manifest.json").read_text())
    assert manifest["rotation_residual"] < 1e-4


def test_associator_scenario(tmp_path):
    assert cli.main(["run", "hybrid_associator_witness", "--out", str(tmp_path)]) == 0
    values = json.loads((tmp_path / "hybrid_associator_witness" / "associator.json").read_text())
    assert len(values) == 2
    assert values[0]["associator"] < 1e-10
    assert values[1]["associator"] >= 1e-3


def test_spekkens_scenario(tmp_path):
    assert cli.main(["run", "spekkens_classification", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "spekkens_classification" / "table.json").read_text())
    assert len(rows) == 24


@pytest.mark.parametrize("suite", ["inner-product", "star-algebra", "volumes", "spekkens", "chaos"])
def test_verify_suites(capsys, suite):
    assert cli.main(["verify", suite]) == 0
    report = json.loads(capsys.readouterr().out)
    assert list(report) == [suite] and all(c["pass"] for c in report[suite])


def test_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "nonsense"])
    assert exc.value.code == 2


def test_spekkens_table(capsys):
    assert cli.main(["spekkens", "table"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 25 and lines[0].startswith("permutation")


def test_chaos_curve(capsys):
    args = ["chaos", "curve", '{"variant": "gaussian"}', "--grid-n", "64", "--points", "5"]
    assert cli.main(args) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["dx", "I"] and len(rows) == 6
    for dx, val in rows[1:]:
        assert float(val) == pytest.approx(np.exp(-float(dx) ** 2 / 2), abs=1e-6)


def test_chaos_curve_bad_json(capsys):
    assert cli.main(["chaos", "curve", "{not json"]) == 2
    assert "spec" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "phasegpt", "scenarios"], capture_output=True, text=True)
    assert res.returncode == 0 and "spekkens_classification" in res.stdout
