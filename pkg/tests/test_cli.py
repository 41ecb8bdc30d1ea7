"""CLI contract: artifacts, exit codes, config precedence, reproducibility."""

import json

import numpy as np
import pytest

from opq import cli

XZ = ["--system", "two_observable", "--tau-z", "2", "--tau-x", "1"]
DZ = ["--system", "driven_z", "--tau", "1", "--delta", "1"]


def run(*argv):
    return cli.main(list(argv))


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 1
    # required options are checked after config merging, not by argparse
    assert run("onset", *XZ) == 1       # missing required --theta-i


def test_domain_error_exits_2(tmp_path):
    # equal strengths: no island, so no caustic onset exists
    code = run("onset", "--system", "two_observable", "--tau-z", "1",
               "--tau-x", "1", "--theta-i", "1.0",
               "--out-dir", str(tmp_path))
    assert code == 2


def test_missing_system_exits_2(tmp_path):
    assert run("onset", "--theta-i", "1.0", "--out-dir", str(tmp_path)) == 2


# ---------------------------------------------------------------------------
# artifact-producing subcommands
# ---------------------------------------------------------------------------

def test_onset_artifact(tmp_path, capsys):
    code = run("onset", *XZ, "--theta-i", str(np.pi - 0.5),
               "--out-dir", str(tmp_path))
    assert code == 0
    assert "caustic onset" in capsys.readouterr().out
    payload = json.loads((tmp_path / "onset.json").read_text())
    assert payload["onset"] == pytest.approx(6.3032, abs=1e-3)
    assert payload["system"]["kind"] == "two_observable"


def test_portrait_artifacts(tmp_path):
    assert run("portrait", *DZ, "--n-theta", "60", "--n-p", "30",
               "--n-energies", "6", "--out-dir", str(tmp_path)) == 0
    contours = np.loadtxt(tmp_path / "portrait_contours.csv", delimiter=",",
                          skiprows=1)
    assert contours.shape[1] == 3
    grid = np.loadtxt(tmp_path / "sdot_grid.csv", delimiter=",", skiprows=1)
    assert np.all(grid[:, 2] <= 0.0)
    meta = json.loads((tmp_path / "portrait.json").read_text())
    assert meta["fixed_point"][1] == -1.0


def test_periods_artifact(tmp_path):
    assert run("periods", *XZ, "--n-energies", "12",
               "--out-dir", str(tmp_path)) == 0
    data = np.loadtxt(tmp_path / "periods.csv", delimiter=",", skiprows=1)
    assert data.shape == (12, 2)
    assert np.all(np.diff(data[:, 1]) > 0.0)   # period grows toward E_c


def test_periods_scan_artifact(tmp_path):
    assert run("periods", *DZ, "--n-energies", "8", "--e-max", "1.0",
               "--out-dir", str(tmp_path)) == 0
    data = np.loadtxt(tmp_path / "scan_2pi.csv", delimiter=",", skiprows=1)
    assert data.shape == (8, 3)
    assert np.all(np.diff(data[:, 1]) < 0.0)


def test_manifold_artifact(tmp_path):
    assert run("manifold", *XZ, "--theta-i", str(np.pi - 0.5),
               "--t", "0", "3.15", "--out-dir", str(tmp_path)) == 0
    for name in ("manifold_t0.csv", "manifold_t3.15.csv"):
        f = tmp_path / name
        assert f.read_text().splitlines()[0] == "p_i,theta,p,S,fold_flag"
    snap = np.loadtxt(tmp_path / "manifold_t3.15.csv", delimiter=",",
                      skiprows=1)
    assert np.all(snap[:, 4] == 0.0)   # pre-onset: no folds flagged


def test_multipath_artifact(tmp_path, capsys):
    assert run("multipath", *XZ, "--theta-i", str(np.pi - 0.5),
               "--theta-f", "3.5", "--t", "9",
               "--out-dir", str(tmp_path)) == 0
    assert "3 branches" in capsys.readouterr().out
    payload = json.loads((tmp_path / "multipath.json").read_text())
    assert len(payload["branches"]) == 3
    kinds = [b["kind"] for b in payload["branches"]]
    assert kinds == ["MLP", "LLP", "MLP"]
    assert sum(b["weight"] for b in payload["branches"]) == pytest.approx(1.0)
    for b in payload["branches"]:
        path = np.loadtxt(tmp_path / b["path_csv"], delimiter=",", skiprows=1)
        assert path.shape[1] == 4


def test_classify_artifact(tmp_path):
    assert run("classify", "--system", "two_observable", "--tau-z", "1",
               "--tau-x", "1", "--theta-i", "0", "--p-i", "0.5", "--t", "2",
               "--out-dir", str(tmp_path)) == 0
    payload = json.loads((tmp_path / "classify.json").read_text())
    assert payload["kind"] == "MLP"
    assert payload["delta2_sine"] < 0.0


def test_simulate_and_densify_roundtrip(tmp_path):
    args = ["simulate", "--system", "two_observable", "--tau-z", "1",
            "--tau-x", "1", "--theta-i", "1.0", "--t-final", "0.5",
            "--n", "200", "--seed", "7", "--n-store", "21",
            "--out-dir", str(tmp_path)]
    assert run(*args) == 0
    first = (tmp_path / "ensemble.csv").read_bytes()
    assert run(*args) == 0
    assert (tmp_path / "ensemble.csv").read_bytes() == first  # reproducible

    assert run("densify", "--ensemble", str(tmp_path / "ensemble.csv"),
               "--time-bins", "10", "--theta-bins", "12",
               "--out-dir", str(tmp_path)) == 0
    density = np.loadtxt(tmp_path / "density.csv", delimiter=",")
    assert density.shape == (10, 12)
    assert density.max() == 1.0
    meta = json.loads((tmp_path / "density.json").read_text())
    assert meta["normalization"] == "max-bin"


def test_densify_postselection(tmp_path):
    run("simulate", "--system", "two_observable", "--tau-z", "1",
        "--tau-x", "1", "--theta-i", "1.0", "--t-final", "0.5",
        "--n", "500", "--seed", "3", "--out-dir", str(tmp_path))
    assert run("densify", "--ensemble", str(tmp_path / "ensemble.csv"),
               "--theta-f", "1.0", "--t", "0.5", "--tol-theta", "0.5",
               "--out-dir", str(tmp_path)) == 0
    meta = json.loads((tmp_path / "density.json").read_text())
    assert 0.0 < meta["postselect"]["fraction"] <= 1.0


def test_limits_artifact(tmp_path):
    assert run("limits", "--delta", "1", "--tau", "50", "--theta-i", "0",
               "--theta-f", "1.5707963267948966", "--wg-t", "2.0",
               "--out-dir", str(tmp_path)) == 0
    lines = (tmp_path / "limits.csv").read_text().splitlines()
    assert lines[0] == "quantity,value"
    values = dict(line.split(",") for line in lines[1:])
    assert set(values) == {"rabi_time_approx", "rabi_action_A",
                           "rabi_action_C"}
    wg = np.loadtxt(tmp_path / "wrapped_gaussian.csv", delimiter=",",
                    skiprows=1)
    assert wg.shape[1] == 2


# ---------------------------------------------------------------------------
# config file handling
# ---------------------------------------------------------------------------

def test_config_file_supplies_system(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "system": {"kind": "two_observable", "tau_x": 1.0, "tau_z": 2.0},
        "theta-i": np.pi - 0.5}))
    assert run("onset", "--config", str(cfg),
               "--out-dir", str(tmp_path)) == 0
    payload = json.loads((tmp_path / "onset.json").read_text())
    assert payload["system"]["tau_z"] == 2.0


def test_config_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "system": {"kind": "two_observable", "tau_x": 1.0, "tau_z": 2.0},
        "theta-i": 0.1}))
    # explicit flag wins over the config value
    assert run("onset", "--config", str(cfg), "--theta-i",
               str(np.pi - 0.5), "--out-dir", str(tmp_path)) == 0
    payload = json.loads((tmp_path / "onset.json").read_text())
    assert payload["theta_i"] == pytest.approx(np.pi - 0.5)


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"frobs": 3}))
    assert run("onset", "--config", str(cfg), "--theta-i", "1.0",
               "--out-dir", str(tmp_path)) == 2
