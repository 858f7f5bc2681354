"""Velocity-variance cooling of 5 and 25 particles sharing the cavity.

For each seed the feedback run is paired with its dI = 0 twin.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from bicavity import presets
from bicavity.core import without_feedback
from bicavity.ensemble import EnsembleConfig, simulate_ensemble, variance_series


def run(n, seed, t_max, bare=False):
    p, c, sigma = presets.fig3(n)
    curve = without_feedback(c) if bare else c
    return simulate_ensemble(EnsembleConfig(n, seed, sigma, p, curve, 0.01, t_max))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fig3")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--t-max", type=float, default=presets.FIG3_T_MAX)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    curves = {}
    for n in (5, 25):
        for seed in range(args.seeds):
            fb, bare = run(n, seed, args.t_max), run(n, seed, args.t_max, bare=True)
            v_fb, v_bare = variance_series(fb), variance_series(bare)
            rows.append([n, seed, fb.summary.var0, v_fb[-1], v_bare[-1], fb.summary.half_life, fb.summary.n_jumps])
            if seed == 0:
                curves[n] = (fb.tau, v_fb, v_bare)
            print(f"n={n:2d} seed={seed}: var {fb.summary.var0:.3e} -> {v_fb[-1]:.3e} (no feedback {v_bare[-1]:.3e}), "
                  f"half-life {fb.summary.half_life:.4g}, jumps {fb.summary.n_jumps}")
    with open(out / "ensemble_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "seed", "var0", "var_final_fb", "var_final_nofb", "half_life", "n_jumps"])
        w.writerows(rows)
    for n in (5, 25):
        sel = [r for r in rows if r[0] == n]
        wins = sum(r[3] < r[4] for r in sel)
        print(f"n={n}: feedback ahead for {wins}/{len(sel)} seeds, median half-life {np.median([r[5] for r in sel]):.4g}")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 3.5))
        for n, (tau, v_fb, v_bare) in curves.items():
            ax.plot(tau, v_fb / v_fb[0], lw=1, label=f"n={n}")
            ax.plot(tau, v_bare / v_bare[0], lw=0.8, ls=":", label=f"n={n}, dI=0")
        ax.set_xlabel("kappa t")
        ax.set_ylabel("variance / initial")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "variance.png", dpi=150)


if __name__ == "__main__":
    main()
