#!/usr/bin/env python3
"""Trajectory-density heatmap with extremal paths overlaid.

Inputs: density.csv + density.json (from `opq densify`); optionally
multipath.json with its per-branch path CSVs (from `opq multipath`) to
draw the extremal paths on top — MLP solid, LLP dashed.
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

import _style


def make_figure(in_dir):
    density = _style.load_matrix(in_dir / "density.csv")
    meta = _style.load_json(in_dir / "density.json",
                            required_keys=("t_edges", "theta_edges"))
    t_edges = np.asarray(meta["t_edges"])
    theta_edges = np.asarray(meta["theta_edges"])
    if density.shape != (t_edges.size - 1, theta_edges.size - 1):
        raise _style.SchemaMismatch(
            f"density.csv shape {density.shape} does not match the "
            f"bin edges in density.json")

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(t_edges, theta_edges, density.T,
                         cmap=_style.DENSITY_CMAP, shading="flat",
                         vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label="relative density")

    multipath = in_dir / "multipath.json"
    if multipath.is_file():
        payload = _style.load_json(multipath, required_keys=("branches",))
        for branch in payload["branches"]:
            path = _style.load_csv(in_dir / branch["path_csv"],
                                   ("t", "theta", "p", "S"))
            style = _style.branch_style(branch["kind"])
            ax.plot(path["t"], path["theta"], color="white",
                    linewidth=1.6, **style)

    ax.set_xlabel(r"$t$ ($\mu$s)")
    ax.set_ylabel(r"$\theta$ (rad)")
    ax.set_title("Post-selected trajectory density")
    fig.tight_layout()
    return fig


if __name__ == "__main__":
    sys.exit(_style.run("density_overlay", make_figure))
