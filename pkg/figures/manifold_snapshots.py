#!/usr/bin/env python3
"""Lagrange-manifold snapshots with fold markers highlighted.

Inputs (from `opq manifold`): every manifold_t*.csv in the input
directory, one panel per snapshot time, ordered by time.
"""

import re
import sys

import matplotlib.pyplot as plt

import _style

_COLUMNS = ("p_i", "theta", "p", "S", "fold_flag")


def _snapshot_files(in_dir):
    found = []
    for path in in_dir.glob("manifold_t*.csv"):
        m = re.fullmatch(r"manifold_t(.+)\.csv", path.name)
        try:
            found.append((float(m.group(1)), path))
        except ValueError:
            raise _style.SchemaMismatch(f"unparseable snapshot time: {path.name}")
    if not found:
        raise _style.MissingInput(f"no manifold_t*.csv files in {in_dir}")
    return sorted(found)


def make_figure(in_dir):
    snapshots = _snapshot_files(in_dir)
    n = len(snapshots)
    ncols = min(n, 3)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(3.6 * ncols, 3.0 * nrows),
                             squeeze=False)

    for ax, (t, path) in zip(axes.ravel(), snapshots):
        data = _style.load_csv(path, _COLUMNS)
        ax.plot(data["theta"], data["p"], color="tab:blue", linewidth=1.0)
        folds = data["fold_flag"] != 0.0
        if folds.any():
            ax.plot(data["theta"][folds], data["p"][folds], "o",
                    color=_style.FOLD_COLOR, markersize=3.5)
        ax.set_title(rf"$t = {t:g}\ \mu$s")
        ax.set_xlabel(r"$\theta$ (rad)")
        ax.set_ylabel(r"$p$")

    for ax in axes.ravel()[n:]:
        ax.set_axis_off()
    fig.tight_layout()
    return fig


if __name__ == "__main__":
    sys.exit(_style.run("manifold_snapshots", make_figure))
