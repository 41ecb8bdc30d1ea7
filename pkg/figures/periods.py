#!/usr/bin/env python3
"""Period and action curves versus orbit energy.

Inputs (from `opq periods`): periods.csv (island periods) and/or
scan_2pi.csv (one-revolution time and action).  At least one must exist.
"""

import sys

import matplotlib.pyplot as plt

import _style


def make_figure(in_dir):
    have_island = (in_dir / "periods.csv").is_file()
    have_scan = (in_dir / "scan_2pi.csv").is_file()
    if not (have_island or have_scan):
        raise _style.MissingInput(
            f"need periods.csv or scan_2pi.csv in {in_dir}")

    n_panels = 1 + (have_island and have_scan) + have_scan
    fig, axes = plt.subplots(1, n_panels, figsize=(4.0 * n_panels, 3.6),
                             squeeze=False)
    axes = list(axes[0])

    if have_island:
        data = _style.load_csv(in_dir / "periods.csv", ("E", "period"))
        ax = axes.pop(0)
        ax.plot(data["E"], data["period"], color="tab:blue")
        ax.set_xlabel(r"$E$")
        ax.set_ylabel(r"island period ($\mu$s)")
        ax.set_title("Oscillation period")

    if have_scan:
        data = _style.load_csv(in_dir / "scan_2pi.csv", ("E", "T_2pi", "S"))
        ax = axes.pop(0)
        ax.plot(data["E"], data["T_2pi"], color="tab:blue")
        ax.set_xlabel(r"$E$")
        ax.set_ylabel(r"$T_{2\pi}$ ($\mu$s)")
        ax.set_title("One-revolution time")
        ax = axes.pop(0)
        ax.plot(data["E"], data["S"], color="tab:orange")
        ax.set_xlabel(r"$E$")
        ax.set_ylabel(r"$S$ per revolution")
        ax.set_title("Action per revolution")

    fig.tight_layout()
    return fig


if __name__ == "__main__":
    sys.exit(_style.run("periods", make_figure))
