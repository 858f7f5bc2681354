"""Single-particle deceleration for the weak- and strong-coupling sets.

Each set runs with feedback and with its dI = 0 twin; prints the fitted
slope, trapping time and |u| half time, and writes one CSV per run.
"""

import argparse
import csv
import json
from pathlib import Path

from bicavity import presets
from bicavity.analytics import escape_velocity, stopping_force
from bicavity.core import without_feedback
from bicavity.dynamics import ParticleState, SimConfig, simulate

SETS = {"weak": (presets.fig2a, 12000.0), "strong": (presets.fig2b, 3000.0)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fig2")
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    runs = {}
    for name, (preset, t_max) in SETS.items():
        p, c, u = preset()
        for tag, curve in (("fb", c), ("nofb", without_feedback(c))):
            tr = simulate(SimConfig(p, curve, ParticleState(0.0, u), dt=args.dt, t_max=t_max,
                                    record_stride=max(1, int(round(0.2 / args.dt)))))
            runs[f"{name}_{tag}"] = tr
            with open(out / f"{name}_{tag}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["tau", "xi", "u", "j", "input_rel"])
                w.writerows(zip(tr.tau, tr.xi, tr.u, tr.j, tr.input_rel))
            s = tr.summary
            print(f"{name:6s} {tag:4s} slope={s.slope if s.slope is None else f'{s.slope:.3e}'} "
                  f"trapped_at={s.trapped_at} half_time={s.half_time} events={s.n_events}")
        print(f"{name:6s} weak-coupling estimate 4|eps u0| = {abs(stopping_force(p, small_coupling=True)):.3e}, "
              f"upper-well escape velocity {escape_velocity(c.high, p):.4f}")
    (out / "summary.json").write_text(json.dumps({k: v.summary.to_dict() for k, v in runs.items()}, indent=2))

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 1, figsize=(6, 6))
        for ax, name in zip(axes, SETS):
            for tag in ("fb", "nofb"):
                tr = runs[f"{name}_{tag}"]
                ax.plot(tr.tau, tr.u, lw=0.6, label=tag)
            ax.set_title(name)
            ax.set_xlabel("kappa t")
            ax.set_ylabel("v / (kappa Lambda)")
            ax.legend()
        fig.tight_layout()
        fig.savefig(out / "deceleration.png", dpi=150)


if __name__ == "__main__":
    main()
