#!/usr/bin/env python3
"""Plot a trajectory CSV produced by `phsvg run` (non-normative helper).

Usage: python3 docs/plot_trajectory.py out/trajectory_iss.csv [more.csv ...]
"""

import csv
import sys

import matplotlib.pyplot as plt


def load(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    t = [float(r["t"]) for r in rows]
    cols = {}
    for name in ("x1", "x2", "x3", "x4", "x5", "u1", "u2", "H", "H0"):
        vals = [r[name] for r in rows]
        if all(v != "" for v in vals):
            cols[name] = [float(v) for v in vals]
    return t, cols


def main(paths):
    fig, (ax_x, ax_u, ax_h) = plt.subplots(3, 1, sharex=True, figsize=(9, 8))
    for path in paths:
        t, cols = load(path)
        label = path.rsplit("trajectory_", 1)[-1].removesuffix(".csv")
        for name in ("x1", "x2", "x3", "x4"):
            ax_x.plot(t, cols[name], lw=0.8,
                      label=f"{label}:{name}" if name == "x1" else None)
        ax_u.plot(t, cols["u1"], lw=0.8, label=f"{label}:u1")
        ax_u.plot(t, cols["u2"], lw=0.8, label=f"{label}:u2")
        h0 = cols["H0"]
        ax_h.semilogy(t, [abs(v - h0[0]) + 1e-18 for v in h0], lw=0.8,
                      label=f"{label}:|H0-H0(0)|")
    ax_x.set_ylabel("states")
    ax_u.set_ylabel("inputs")
    ax_h.set_ylabel("energy deviation")
    ax_h.set_xlabel("t [s]")
    for ax in (ax_x, ax_u, ax_h):
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right", fontsize=8)
    plt.tight_layout()
    plt.show()


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])
