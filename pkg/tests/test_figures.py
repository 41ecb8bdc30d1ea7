"""Figure scripts: artifact-driven rendering, determinism, failure modes."""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from opq import cli

FIGURES = Path(__file__).resolve().parent.parent / "figures"
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def render(script, in_dir, out_file):
    return subprocess.run(
        [sys.executable, str(FIGURES / script),
         "--in", str(in_dir), "--out", str(out_file)],
        capture_output=True, text=True)


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """One directory holding every CLI artifact the scripts consume."""
    out = tmp_path_factory.mktemp("artifacts")
    xz = ["--system", "two_observable", "--tau-z", "2", "--tau-x", "1"]
    dz = ["--system", "driven_z", "--tau", "1", "--delta", "1"]
    theta_i = str(np.pi - 0.5)
    runs = [
        ["portrait", *dz, "--n-theta", "60", "--n-p", "40",
         "--n-energies", "7"],
        ["periods", *xz, "--n-energies", "12"],
        ["manifold", *xz, "--theta-i", theta_i, "--t", "0", "3.15", "9"],
        ["multipath", *xz, "--theta-i", theta_i, "--theta-f", "3.5",
         "--t", "9"],
        ["simulate", "--system", "two_observable", "--tau-z", "1",
         "--tau-x", "1", "--theta-i", "1.0", "--t-final", "0.5",
         "--n", "300", "--seed", "11", "--n-store", "26"],
    ]
    for argv in runs:
        assert cli.main(argv + ["--out-dir", str(out)]) == 0
    assert cli.main(["densify", "--ensemble", str(out / "ensemble.csv"),
                     "--time-bins", "25", "--theta-bins", "30",
                     "--out-dir", str(out)]) == 0
    assert cli.main(["periods", *dz, "--n-energies", "10", "--e-max", "1.0",
                     "--out-dir", str(out)]) == 0
    return out


@pytest.mark.parametrize("script", ["portrait.py", "periods.py",
                                    "manifold_snapshots.py",
                                    "density_overlay.py", "winding.py"])
def test_script_renders_png(script, artifacts, tmp_path):
    out = tmp_path / "fig.png"
    result = render(script, artifacts, out)
    assert result.returncode == 0, result.stderr
    assert out.read_bytes()[:8] == PNG_MAGIC


def test_rerender_is_byte_identical(artifacts, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    assert render("density_overlay.py", artifacts, a).returncode == 0
    assert render("density_overlay.py", artifacts, b).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_input_fails_fast(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = render("portrait.py", empty, tmp_path / "fig.png")
    assert result.returncode == 1
    assert "missing input" in result.stderr
    assert not (tmp_path / "fig.png").exists()


def test_schema_mismatch_fails_fast(tmp_path):
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "periods.csv").write_text("E,frequency\n0.1,2.0\n")
    result = render("periods.py", bad, tmp_path / "fig.png")
    assert result.returncode == 1
    assert "expected columns" in result.stderr


def test_density_shape_mismatch_rejected(artifacts, tmp_path):
    clone = tmp_path / "clone"
    clone.mkdir()
    (clone / "density.json").write_bytes(
        (artifacts / "density.json").read_bytes())
    np.savetxt(clone / "density.csv", np.zeros((3, 3)), delimiter=",")
    result = render("density_overlay.py", clone, tmp_path / "fig.png")
    assert result.returncode == 1
    assert "does not match" in result.stderr
