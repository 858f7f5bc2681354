"""Command-line entry point.

Every invocation writes its data files plus one ``<command>_manifest.json``
holding the fully resolved configuration; ``bicavity run <manifest>``
regenerates the same files byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 no bistability for an analytic request.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import analytics, config as cfg
from .core import DomainError, StepFeedback, step_limit, to_dimensionless, without_feedback
from .dynamics import IntegrationError, Mode, ParticleState, SimConfig, simulate
from .ensemble import EnsembleConfig, simulate_ensemble, variance_series
from .steady_state import Branch, effective_detuning, hysteresis_trace, steady_roots

EXIT_CONFIG, EXIT_NUMERIC, EXIT_NO_BISTABILITY = 2, 3, 4

COLUMNS_HELP = """\
output columns:
  steady-scan   steady_scan.csv: xi, delta_hat, n_roots, j1, s1, j2, s2, j3, s3
  hysteresis    hysteresis.csv: xi, j, branch; hysteresis_jumps.csv: xi, direction, dj
  single        single.csv: tau, xi, u, j, input_rel[, branch]; single_summary.json
  ensemble      ensemble.csv: tau, variance, variance_smoothed, mean_ke, j; ensemble_summary.json
                ensemble_snapshots.csv: tau, particle, xi, u (with --snapshots)
"""


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BICAVITY_THREADS", "2")))
    except ValueError:
        return 1


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _table(columns: list[str], rows, fmt: str) -> bytes:
    if fmt == "json":
        cols = {c: [] for c in columns}
        for row in rows:
            for c, v in zip(columns, row):
                cols[c].append(_jsonable(v))
        return (json.dumps(cols, indent=1) + "\n").encode()
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue().encode()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    return v


def _json(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode()


def _ext(fmt):
    return "json" if fmt == "json" else "csv"


PLOT_STUB = '''"""Quick look at {name} output (generated; needs matplotlib and pandas)."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "{name}.csv")
x, *ys = df.columns[:{ncols}]
fig, axes = plt.subplots(len(ys), 1, sharex=True, squeeze=False)
for ax, y in zip(axes[:, 0], ys):
    ax.plot(df[x], df[y], lw=0.8)
    ax.set_ylabel(y)
axes[-1, 0].set_xlabel(x)
plt.show()
'''


# -- commands -------------------------------------------------------------------
# Each returns (resolved config, {filename: bytes}).


def cmd_steady_scan(data, opts):
    res = cfg.resolve(data, ["cavity", "feedback", "scan"])
    p, c = cfg.cavity_params(res["cavity"]), cfg.feedback_curve(res["feedback"])
    sc = res["scan"]
    rows = []
    for xi in np.linspace(sc["xi_min"], sc["xi_max"], int(sc["n_points"])):
        roots = steady_roots(xi, p, c)
        cells = []
        for k in range(3):
            cells += [roots[k].j, roots[k].stable] if k < len(roots) else [None, None]
        rows.append([xi, float(effective_detuning(xi, p)), len(roots)] + cells)
    cols = ["xi", "delta_hat", "n_roots", "j1", "s1", "j2", "s2", "j3", "s3"]
    return res, {f"steady_scan.{_ext(opts['format'])}": _table(cols, rows, opts["format"])}


def cmd_hysteresis(data, opts):
    res = cfg.resolve(data, ["cavity", "feedback", "scan"])
    p, c = cfg.cavity_params(res["cavity"]), cfg.feedback_curve(res["feedback"])
    sc = res["scan"]
    try:
        start = Branch[str(sc["initial_branch"]).upper()]
    except KeyError:
        raise cfg.ConfigError("scan.initial_branch must be 'lower' or 'upper'") from None
    tr = hysteresis_trace(np.linspace(sc["xi_min"], sc["xi_max"], int(sc["n_points"])), p, c, start)
    ext = _ext(opts["format"])
    names = {Branch.LOWER: "lower", Branch.UPPER: "upper"}
    trace_rows = [(x, j, names[Branch(b)]) for x, j, b in zip(tr.xi, tr.j, tr.branch)]
    jump_rows = [(jp.xi, jp.direction, jp.dj) for jp in tr.jumps]
    return res, {
        f"hysteresis.{ext}": _table(["xi", "j", "branch"], trace_rows, opts["format"]),
        f"hysteresis_jumps.{ext}": _table(["xi", "direction", "dj"], jump_rows, opts["format"]),
    }


def _single_files(tag, traj, fmt):
    cols = ["tau", "xi", "u", "j", "input_rel"]
    arrays = [traj.tau, traj.xi, traj.u, traj.j, traj.input_rel]
    if traj.branch is not None:
        cols.append("branch")
        arrays.append(traj.branch)
    rows = zip(*arrays)
    ev_rows = [(e.tau, e.direction, e.value, e.xi) for e in traj.events]
    ext = _ext(fmt)
    return {
        f"{tag}.{ext}": _table(cols, rows, fmt),
        f"{tag}_events.{ext}": _table(["tau", "direction", "value", "xi"], ev_rows, fmt),
        f"{tag}_summary.json": _json(traj.summary.to_dict()),
    }


def cmd_single(data, opts):
    res = cfg.resolve(data, ["cavity", "feedback", "particle", "run"])
    p, c = cfg.cavity_params(res["cavity"]), cfg.feedback_curve(res["feedback"])
    run = res["run"]
    try:
        mode = Mode(run["mode"])
    except ValueError:
        raise cfg.ConfigError("run.mode must be 'full' or 'adiabatic'") from None

    def make(curve):
        return SimConfig(p, curve, ParticleState(res["particle"]["xi"], res["particle"]["u"]), run["initial_field"],
                         run["dt"], run["t_max"], int(run["record_stride"]), mode)

    configs = {"single": make(c)}
    if opts.get("compare_no_feedback"):
        configs["single_nofb"] = make(without_feedback(c))
    with ThreadPoolExecutor(max_workers=min(_threads(), len(configs))) as pool:
        trajs = dict(zip(configs, pool.map(simulate, configs.values())))
    files = {}
    for tag, traj in trajs.items():
        files.update(_single_files(tag, traj, opts["format"]))
    return res, files


def cmd_ensemble(data, opts):
    res = cfg.resolve(data, ["cavity", "feedback", "run", "ensemble"])
    p, c = cfg.cavity_params(res["cavity"]), cfg.feedback_curve(res["feedback"])
    run, ens = res["run"], res["ensemble"]

    def make(curve):
        return EnsembleConfig(int(ens["n"]), int(ens["seed"]), ens["sigma_u"], p, curve, run["dt"], run["t_max"],
                              int(run["record_stride"]), int(ens["snapshot_stride"]), Mode(run["mode"]))

    configs = {"ensemble": make(c)}
    if opts.get("compare_no_feedback"):
        configs["ensemble_nofb"] = make(without_feedback(c))
    with ThreadPoolExecutor(max_workers=min(_threads(), len(configs))) as pool:
        trajs = dict(zip(configs, pool.map(simulate_ensemble, configs.values())))
    files = {}
    ext = _ext(opts["format"])
    for tag, tr in trajs.items():
        smooth = variance_series(tr)
        rows = zip(tr.tau, tr.variance, smooth, tr.mean_ke, tr.j)
        files[f"{tag}.{ext}"] = _table(["tau", "variance", "variance_smoothed", "mean_ke", "j"], rows, opts["format"])
        files[f"{tag}_summary.json"] = _json(tr.summary.to_dict())
        if opts.get("snapshots"):
            snap = [(t, i, x, u) for t, xs, us in zip(tr.snapshot_tau, tr.snapshot_xi, tr.snapshot_u)
                    for i, (x, u) in enumerate(zip(xs, us))]
            files[f"{tag}_snapshots.{ext}"] = _table(["tau", "particle", "xi", "u"], snap, opts["format"])
    return res, files


def cmd_analytic(data, opts):
    res = cfg.resolve(data, ["cavity", "feedback"])
    p, c = cfg.cavity_params(res["cavity"]), cfg.feedback_curve(res["feedback"])
    step = c if isinstance(c, StepFeedback) else step_limit(c)
    report = analytics.step_model_report(p, step).to_dict()
    report["i1_rel"], report["i2_rel"], report["i_sw_rel"] = step.i1_rel, step.i2_rel, step.i_sw_rel
    report["f_stop_small_coupling"] = analytics.stopping_force(p, small_coupling=True)
    if p.u0 != 0:
        report["escape_velocity_upper"] = analytics.escape_velocity(step.high, p)
    return res, {"analytic_report.json": _json(report)}


def cmd_feasibility(data, opts):
    res = cfg.resolve(data, ["feasibility"])
    try:
        rep = analytics.feedback_feasibility(**res["feasibility"])
    except DomainError as exc:
        raise cfg.ConfigError(str(exc)) from None
    return res, {"feasibility.json": _json(rep.to_dict())}


def cmd_dimensionless(data, opts):
    res = cfg.resolve(data, ["physical"])
    params, scales = to_dimensionless(cfg.physical_params(res["physical"]))
    out = {
        "delta_c": params.delta_c,
        "u0": params.u0,
        "gamma0": params.gamma0,
        "epsilon": params.epsilon,
        "kappa": scales.kappa,
        "velocity_scale": scales.velocity,
        "recoil_velocity": scales.recoil_velocity,
    }
    return res, {"dimensionless.json": _json(out)}


COMMANDS = {
    "steady-scan": cmd_steady_scan,
    "hysteresis": cmd_hysteresis,
    "single": cmd_single,
    "ensemble": cmd_ensemble,
    "analytic-report": cmd_analytic,
    "feasibility-check": cmd_feasibility,
    "dimensionless": cmd_dimensionless,
}
TABLE_COMMANDS = {"steady-scan": "steady_scan", "hysteresis": "hysteresis", "single": "single", "ensemble": "ensemble"}


# -- plumbing ---------------------------------------------------------------------


def write_atomic(path: Path, payload: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(command: str, data: dict, opts: dict, out_dir: Path) -> dict:
    """Run ``command`` on raw config ``data``; write outputs and the manifest."""
    t0 = time.perf_counter()
    resolved, files = COMMANDS[command](data, opts)
    stem = command.replace("-", "_")
    if command in TABLE_COMMANDS and opts.get("format", "csv") == "csv":
        name = TABLE_COMMANDS[command]
        ncols = {"steady-scan": 4, "hysteresis": 2, "single": 5, "ensemble": 5}[command]
        files[f"plot_{name}.py"] = PLOT_STUB.format(name=name, ncols=ncols).encode()
    for name, payload in files.items():
        write_atomic(out_dir / name, payload)
    seed = resolved.get("ensemble", {}).get("seed")
    manifest = {
        "tool": "bicavity",
        "version": __version__,
        "subcommand": command,
        "config": resolved,
        "options": opts,
        "seed": seed,
        "outputs": sorted(files),
        "out_dir": str(out_dir),
        "duration_s": time.perf_counter() - t0,
    }
    write_atomic(out_dir / f"{stem}_manifest.json", _json(manifest))
    return manifest


def _apply_overrides(data: dict, args) -> dict:
    data = copy.deepcopy(data)

    def put(section, key, value):
        if value is not None:
            data.setdefault(section, {})[key] = value

    put("run", "dt", getattr(args, "dt", None))
    put("run", "t_max", getattr(args, "t_max", None))
    put("run", "mode", getattr(args, "mode", None))
    put("ensemble", "seed", getattr(args, "seed", None) if args.command == "ensemble" else None)
    put("ensemble", "n", getattr(args, "n", None))
    put("ensemble", "sigma_u", getattr(args, "sigma_u", None))
    if getattr(args, "feedback", None) == "none":
        data["feedback"] = {"kind": "none"}
    return data


def _feasibility_from_flags(args) -> dict | None:
    keys = ["delta_i_rel", "photon_energy", "mean_power", "velocity", "period", "switch_time", "ratio_threshold"]
    given = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    return given or None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (JSON with # comments)")
    common.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
    common.add_argument("--seed", type=int, help="RNG seed (ensemble); accepted and ignored elsewhere")
    common.add_argument("--dt", type=float, help="time step in units of 1/kappa")
    common.add_argument("--t-max", type=float, help="horizon in units of 1/kappa")
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="table format")

    parser = argparse.ArgumentParser(
        prog="bicavity",
        description="Cooling of particles in a bistable feedback cavity (dimensionless units).",
        epilog=COLUMNS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("steady-scan", parents=[common], help="steady-state roots versus particle position")
    sub.add_parser("hysteresis", parents=[common], help="adiabatic branch trace and jumps")

    p = sub.add_parser("single", parents=[common], help="single-particle deceleration run")
    p.add_argument("--mode", choices=["full", "adiabatic"])
    p.add_argument("--feedback", choices=["none"], help="override the configured feedback")
    p.add_argument("--compare-no-feedback", action="store_true", help="also run the dI = 0 twin")

    p = sub.add_parser("ensemble", parents=[common], help="N-particle cooling run")
    p.add_argument("--n", type=int)
    p.add_argument("--sigma-u", type=float)
    p.add_argument("--mode", choices=["full", "adiabatic"])
    p.add_argument("--feedback", choices=["none"])
    p.add_argument("--compare-no-feedback", action="store_true")
    p.add_argument("--snapshots", action="store_true", help="write per-particle snapshots")

    sub.add_parser("analytic-report", parents=[common], help="step-model critical detunings and stopping force")

    p = sub.add_parser("feasibility-check", parents=[common], help="measurement-time and velocity bounds")
    for flag in ["delta-i-rel", "photon-energy", "mean-power", "velocity", "period", "switch-time", "ratio-threshold"]:
        p.add_argument(f"--{flag}", type=float)

    sub.add_parser("dimensionless", parents=[common], help="convert a physical block to dimensionless parameters")

    p = sub.add_parser("run", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help="defaults to the manifest's original output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            man = json.loads(Path(args.manifest).read_text())
            out_dir = Path(args.out_dir or man["out_dir"])
            execute(man["subcommand"], man["config"], man["options"], out_dir)
            return 0
        data = cfg.load(args.config) if args.config else {}
        if args.command == "feasibility-check":
            flags = _feasibility_from_flags(args)
            if flags:
                data = {**data, "feasibility": {**data.get("feasibility", {}), **flags}}
        data = _apply_overrides(data, args)
        opts = {"format": args.format}
        for key in ("compare_no_feedback", "snapshots"):
            if getattr(args, key, False):
                opts[key] = True
        manifest = execute(args.command, data, opts, Path(args.out_dir))
        for name in manifest["outputs"]:
            print(Path(args.out_dir) / name)
        return 0
    except (cfg.ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except analytics.NoBistability as exc:
        print(f"no bistability: {exc}", file=sys.stderr)
        return EXIT_NO_BISTABILITY
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
