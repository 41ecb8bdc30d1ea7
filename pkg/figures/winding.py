#!/usr/bin/env python3
"""Winding-multipath composite: every branch's unwrapped angle history.

Inputs (from `opq multipath`): multipath.json and its per-branch path
CSVs.  Each branch is labeled with its winding number, action, and
weight; MLP branches are solid, LLP dashed.
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

import _style

_BRANCH_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                  "tab:purple", "tab:brown", "tab:pink")


def make_figure(in_dir):
    payload = _style.load_json(in_dir / "multipath.json",
                               required_keys=("boundary", "branches"))
    if not payload["branches"]:
        raise _style.SchemaMismatch("multipath.json has no branches")

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for i, branch in enumerate(payload["branches"]):
        path = _style.load_csv(in_dir / branch["path_csv"],
                               ("t", "theta", "p", "S"))
        style = _style.branch_style(branch["kind"])
        label = (f"n={branch['winding']}  S={branch['S']:.2f}  "
                 f"w={branch['weight']:.2g}")
        ax.plot(path["t"], path["theta"],
                color=_BRANCH_COLORS[i % len(_BRANCH_COLORS)],
                linewidth=1.5, label=label, **style)

    boundary = payload["boundary"]
    T, theta_f = boundary["T"], boundary["theta_f"]
    # mark every unwrapped angle equivalent to the target at the final time
    theta_all = np.concatenate(
        [_style.load_csv(in_dir / b["path_csv"],
                         ("t", "theta", "p", "S"))["theta"]
         for b in payload["branches"]])
    k_lo = int(np.floor((theta_all.min() - theta_f) / (2.0 * np.pi)))
    k_hi = int(np.ceil((theta_all.max() - theta_f) / (2.0 * np.pi)))
    for k in range(k_lo, k_hi + 1):
        ax.plot(T, theta_f + 2.0 * np.pi * k, "k.", markersize=6)

    ax.set_xlabel(r"$t$ ($\mu$s)")
    ax.set_ylabel(r"unwrapped $\theta$ (rad)")
    ax.set_title("Winding multipaths")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return fig


if __name__ == "__main__":
    sys.exit(_style.run("winding", make_figure))
