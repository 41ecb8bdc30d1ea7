"""Shared plumbing for the figure scripts.

Every script is a read-only consumer of the CLI's CSV/JSON artifacts: it
loads inputs from `--in <dir>`, fails fast on a missing file or a header
that does not match the documented schema, and writes one deterministic
PNG to `--out <file.png>`.  No physics is recomputed here.
"""

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# styling conventions shared by all figures
SDOT_CMAP = "viridis"
DENSITY_CMAP = "magma"
CONTOUR_COLOR = "0.45"
SEPARATRIX_COLOR = "crimson"
FOLD_COLOR = "red"
FIXED_POINT_COLOR = "black"
DPI = 150

_KIND_STYLE = {
    "MLP": {"linestyle": "-"},
    "LLP": {"linestyle": "--"},
    "SP": {"linestyle": ":"},
}


class MissingInput(Exception):
    pass


class SchemaMismatch(Exception):
    pass


def branch_style(kind):
    """Line style for an extremal-path kind: MLP solid, LLP dashed."""
    try:
        return dict(_KIND_STYLE[kind])
    except KeyError:
        raise SchemaMismatch(f"unknown branch kind {kind!r}")


def load_csv(path, columns):
    """Load a headered CSV, enforcing the exact column list."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"missing input file: {path}")
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if header != list(columns):
        raise SchemaMismatch(
            f"{path.name}: expected columns {','.join(columns)}, "
            f"got {','.join(header)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(columns):
        raise SchemaMismatch(f"{path.name}: ragged rows")
    return {c: data[:, i] for i, c in enumerate(columns)}


def load_matrix(path):
    """Load a headerless numeric matrix CSV (the density grid)."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"missing input file: {path}")
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_json(path, required_keys=()):
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"missing input file: {path}")
    payload = json.loads(path.read_text())
    for key in required_keys:
        if key not in payload:
            raise SchemaMismatch(f"{path.name}: missing key {key!r}")
    return payload


def run(figure_id, make_figure, argv=None):
    """Standard entry point: parse --in/--out, render, save, exit code."""
    parser = argparse.ArgumentParser(prog=figure_id)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the CLI artifacts")
    parser.add_argument("--out", dest="out_file", required=True,
                        help="output PNG path")
    args = parser.parse_args(argv)

    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        print(f"{figure_id}: not a directory: {in_dir}", file=sys.stderr)
        return 1
    try:
        fig = make_figure(in_dir)
    except (MissingInput, SchemaMismatch) as exc:
        print(f"{figure_id}: {exc}", file=sys.stderr)
        return 1
    fig.savefig(args.out_file, dpi=DPI, metadata={"Software": figure_id})
    plt.close(fig)
    return 0
