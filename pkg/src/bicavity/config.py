"""Run configuration files.

A configuration is a JSON object with the sections below; full-line ``#``
comments are allowed.  Unknown sections or keys are rejected.

    cavity      delta_c, u0, epsilon, [gamma0]
    feedback    kind = "smooth" | "step" | "none"
                smooth: delta_i_rel, i_sw_rel, steepness, [units = "4J" | "J"]
                step:   i1_rel, i2_rel, i_sw_rel
    particle    u, [xi]
    run         [dt, t_max, record_stride, mode, initial_field]
    ensemble    [n, seed, sigma_u, snapshot_stride]
    scan        [xi_min, xi_max, n_points, initial_branch]
    physical    PhysicalParams fields
    feasibility delta_i_rel, photon_energy, mean_power, velocity, period, switch_time, [ratio_threshold]

``units = "J"`` reads ``i_sw_rel`` and ``steepness`` as acting on J = T|E|^2/(4 I0)
rather than on T I / I0 = 4J; this is the convention the published figure
parameters are quoted in.
"""

from __future__ import annotations

import json
from dataclasses import MISSING, fields
from pathlib import Path

from .core import CavityParams, DomainError, FeedbackCurve, PhysicalParams, SmoothFeedback, StepFeedback, no_feedback

REQUIRED = object()

SCHEMA = {
    "cavity": {"delta_c": REQUIRED, "u0": REQUIRED, "epsilon": REQUIRED, "gamma0": 0.0},
    "particle": {"u": REQUIRED, "xi": 0.0},
    "run": {"dt": 1e-2, "t_max": 1000.0, "record_stride": 10, "mode": "full", "initial_field": "steady"},
    "ensemble": {"n": 5, "seed": 0, "sigma_u": 0.016, "snapshot_stride": 10},
    "scan": {"xi_min": 0.0, "xi_max": 1.0, "n_points": 4096, "initial_branch": "upper"},
    "physical": {f.name: (REQUIRED if f.default is MISSING else f.default) for f in fields(PhysicalParams)},
    "feasibility": {
        "delta_i_rel": REQUIRED,
        "photon_energy": REQUIRED,
        "mean_power": REQUIRED,
        "velocity": REQUIRED,
        "period": REQUIRED,
        "switch_time": REQUIRED,
        "ratio_threshold": 0.1,
    },
}

FEEDBACK_SCHEMA = {
    "smooth": {"delta_i_rel": REQUIRED, "i_sw_rel": REQUIRED, "steepness": REQUIRED, "units": "4J"},
    "step": {"i1_rel": REQUIRED, "i2_rel": REQUIRED, "i_sw_rel": REQUIRED},
    "none": {},
}


class ConfigError(ValueError):
    pass


def parse_text(text: str, source: str = "<config>") -> dict:
    # blank out comment lines so JSON error positions still match the file
    lines = ["" if ln.lstrip().startswith("#") else ln for ln in text.splitlines()]
    try:
        data = json.loads("\n".join(lines))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    return data


def load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text, str(path))


def _section(data: dict, name: str, schema: dict) -> dict:
    raw = data.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{name}' must be an object")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key '{name}.{unknown[0]}'")
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is REQUIRED:
            raise ConfigError(f"missing required key '{name}.{key}'")
        else:
            out[key] = default
    return out


def resolve(data: dict, sections) -> dict:
    """Validate ``data`` and expand defaults for the requested ``sections``."""
    known = set(SCHEMA) | {"feedback"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown section '{unknown[0]}'")
    out = {}
    for name in sections:
        if name == "feedback":
            out[name] = _feedback_section(data)
        else:
            out[name] = _section(data, name, SCHEMA[name])
    return out


def _feedback_section(data: dict) -> dict:
    raw = data.get("feedback")
    if raw is None:
        raise ConfigError("missing required section 'feedback'")
    if not isinstance(raw, dict):
        raise ConfigError("section 'feedback' must be an object")
    kind = raw.get("kind")
    if kind not in FEEDBACK_SCHEMA:
        raise ConfigError(f"feedback.kind must be one of {sorted(FEEDBACK_SCHEMA)}, got {kind!r}")
    body = {k: v for k, v in raw.items() if k != "kind"}
    out = _section({"feedback": body}, "feedback", FEEDBACK_SCHEMA[kind])
    if kind == "smooth":
        units = out.pop("units")
        if units == "J":
            out["i_sw_rel"] = 4.0 * out["i_sw_rel"]
            out["steepness"] = out["steepness"] / 4.0
        elif units != "4J":
            raise ConfigError(f"feedback.units must be '4J' or 'J', got {units!r}")
    return {"kind": kind, **out}


def cavity_params(section: dict) -> CavityParams:
    return _build(CavityParams, section, "cavity")


def feedback_curve(section: dict) -> FeedbackCurve:
    kind = section["kind"]
    body = {k: v for k, v in section.items() if k != "kind"}
    if kind == "none":
        return no_feedback()
    cls = SmoothFeedback if kind == "smooth" else StepFeedback
    return _build(cls, body, "feedback")


def physical_params(section: dict) -> PhysicalParams:
    return _build(PhysicalParams, section, "physical")


def _build(cls, section, name):
    try:
        return cls(**section)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from None


def curve_section(curve: FeedbackCurve) -> dict:
    if isinstance(curve, StepFeedback):
        return {"kind": "step", "i1_rel": curve.i1_rel, "i2_rel": curve.i2_rel, "i_sw_rel": curve.i_sw_rel}
    return {"kind": "smooth", "delta_i_rel": curve.delta_i_rel, "i_sw_rel": curve.i_sw_rel, "steepness": curve.steepness}
