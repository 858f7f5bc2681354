"""Steady-state roots and the hysteretic branch over one mode period.

Writes roots.csv, trace.csv and jumps.csv for the strong-coupling set; with
--plot also a PNG (needs matplotlib).
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from bicavity import presets
from bicavity.steady_state import Branch, hysteresis_trace, steady_roots


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fig1")
    ap.add_argument("--points", type=int, default=4097)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    p, c, _ = presets.fig2b()
    grid = np.linspace(0, 1, args.points)
    with open(out / "roots.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "j", "stable"])
        for xi in grid:
            for r in steady_roots(xi, p, c):
                w.writerow([f"{xi:.17g}", f"{r.j:.17g}", int(r.stable)])

    fwd = hysteresis_trace(grid, p, c, Branch.UPPER)
    rev = hysteresis_trace(grid[::-1], p, c, Branch.UPPER)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "xi", "j", "branch"])
        for name, tr in (("forward", fwd), ("reverse", rev)):
            for x, j, b in zip(tr.xi, tr.j, tr.branch):
                w.writerow([name, f"{x:.17g}", f"{j:.17g}", int(b)])
    with open(out / "jumps.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "xi", "direction", "dj"])
        for name, tr in (("forward", fwd), ("reverse", rev)):
            for jp in tr.jumps:
                w.writerow([name, f"{jp.xi:.6f}", jp.direction, f"{jp.dj:.6f}"])
                print(f"{name:8s} {jp.direction:4s} at xi = {jp.xi:.4f}  dJ = {jp.dj:+.4f}")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(fwd.xi, fwd.j, lw=1, label="forward")
        ax.plot(rev.xi, rev.j, lw=1, ls="--", label="reverse")
        ax.set_xlabel("x / Lambda")
        ax.set_ylabel("J")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "hysteresis.png", dpi=150)


if __name__ == "__main__":
    main()
