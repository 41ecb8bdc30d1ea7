#!/usr/bin/env python3
"""Phase portrait: action-rate heat field, energy contours, separatrix.

Inputs (from `opq portrait`): sdot_grid.csv, portrait_contours.csv,
portrait.json.
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

import _style


def make_figure(in_dir):
    grid = _style.load_csv(in_dir / "sdot_grid.csv", ("theta", "p", "sdot"))
    contours = _style.load_csv(in_dir / "portrait_contours.csv",
                               ("E", "theta", "p"))
    meta = _style.load_json(in_dir / "portrait.json")

    theta = np.unique(grid["theta"])
    p = np.unique(grid["p"])
    sdot = grid["sdot"].reshape(theta.size, p.size)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(theta, p, sdot.T, cmap=_style.SDOT_CMAP,
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, label=r"action rate $\dot S$")

    # separatrix = the contour energy nearest the critical value
    E_sep = meta.get("E_c", meta.get("E_star"))
    energies = np.unique(contours["E"])
    sep_E = None
    if E_sep is not None and energies.size:
        sep_E = energies[np.argmin(np.abs(energies - E_sep))]
    for E in energies:
        sel = contours["E"] == E
        th, pp = contours["theta"][sel], contours["p"][sel]
        order = np.argsort(th, kind="stable")
        style = (dict(color=_style.SEPARATRIX_COLOR, linewidth=1.8)
                 if E == sep_E else
                 dict(color=_style.CONTOUR_COLOR, linewidth=0.7))
        # upper/lower momentum branches interleave; plot as points-joined
        ax.plot(th[order], pp[order], ",", markersize=2.0, **style)

    if "fixed_point" in meta:
        ax.plot(*meta["fixed_point"], "o", color=_style.FIXED_POINT_COLOR,
                markersize=5)

    ax.set_xlabel(r"$\theta$ (rad)")
    ax.set_ylabel(r"$p$")
    ax.set_xlim(theta.min(), theta.max())
    ax.set_ylim(p.min(), p.max())
    ax.set_title("Phase portrait")
    fig.tight_layout()
    return fig


if __name__ == "__main__":
    sys.exit(_style.run("portrait", make_figure))
