"""Closed-form results for the two-level (step) feedback model.

All energies are in units of m kappa^2 Lambda^2 and forces in m kappa^2 Lambda.
In these units the branch-n potential is

    W_n(xi) = 4 eps (I_n/I0) / u0 * arctan(Delta(xi)/kappa)

whose gradient gives back the force -8 pi eps J_n sin(4 pi xi) with
J_n = (I_n/I0) / (1 + Delta^2/kappa^2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import CavityParams, DomainError, StepFeedback, effective_detuning


class NoBistability(ValueError):
    """The step curve can never be touched by the low-input line."""


@dataclass(frozen=True)
class StepModelReport:
    delta1_hat: float
    delta2_hat: float
    de_dimless: float
    f_stop_dimless: float
    reachable: bool

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FeasibilityReport:
    t_m: float
    displacement_ratio: float
    v_max: float

    def to_dict(self):
        return asdict(self)


def _require_coupling(params: CavityParams):
    if params.u0 == 0:
        raise DomainError("u0 = 0: the particle does not modulate the cavity")


def effective_potential(xi, level: float, params: CavityParams):
    """Adiabatic potential for a fixed input level I_n/I0 (gamma0 = 0)."""
    _require_coupling(params)
    return 4.0 * params.epsilon * level / params.u0 * np.arctan(effective_detuning(xi, params))


def branch_potential(xi, n: int, params: CavityParams, curve: StepFeedback):
    """Potential on branch ``n`` (1 = low input, 2 = high input) of the step model."""
    if n not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    return effective_potential(xi, curve.i1_rel if n == 1 else curve.i2_rel, params)


def collective_potential(xis, level: float, params: CavityParams):
    """Potential of n particles sharing one mode: arctan of the summed detuning."""
    _require_coupling(params)
    xis = np.asarray(xis, dtype=float)
    shift = params.u0 * np.sum(np.cos(2 * np.pi * xis) ** 2, axis=-1)
    return 4.0 * params.epsilon * level / params.u0 * np.arctan(params.delta_c - shift)


def well_depth(level: float, params: CavityParams) -> float:
    """Barrier height of the adiabatic potential at input level ``level``."""
    _require_coupling(params)
    c = 4.0 * abs(params.epsilon) * level / abs(params.u0)
    return c * abs(math.atan(params.delta_c) - math.atan(params.delta_c - params.u0))


def escape_velocity(level: float, params: CavityParams) -> float:
    return math.sqrt(2.0 * well_depth(level, params))


def critical_detunings(curve: StepFeedback) -> tuple[float, float]:
    """Detunings |Delta_n|/kappa at which the line J (1 + Delta^2) touches the step.

    (Delta_n/kappa)^2 = (4 I_n - T I_sw) / (T I_sw)
    """
    isw = curve.i_sw_rel
    if 4.0 * curve.i1_rel < isw:
        raise NoBistability(
            f"4*i1_rel = {4 * curve.i1_rel:g} < i_sw_rel = {isw:g}: the low input never reaches the switching point"
        )
    d1 = math.sqrt((4.0 * curve.i1_rel - isw) / isw)
    d2 = math.sqrt((4.0 * curve.i2_rel - isw) / isw)
    return d1, d2


def energy_loss_half_period(params: CavityParams, curve: StepFeedback) -> float:
    """Kinetic energy change over half a mode period for a slow particle."""
    _require_coupling(params)
    d1, d2 = critical_detunings(curve)
    di = curve.i2_rel - curve.i1_rel
    return -4.0 * params.epsilon * di / params.u0 * (math.atan(d2) - math.atan(d1))


def stopping_force(params: CavityParams, curve: StepFeedback | None = None, small_coupling: bool = False) -> float:
    """Average force along the direction of motion (negative = decelerating).

    With ``small_coupling`` the weak-coupling, delta_c = 1 limit is returned,
    F = -4 eps u0, which assumes the feedback is tuned to switch up at the
    antinode and down at the node.
    """
    if small_coupling:
        return -4.0 * params.epsilon * params.u0
    if curve is None:
        raise ValueError("a step curve is required outside the small-coupling limit")
    return 2.0 * energy_loss_half_period(params, curve)


def detuning_range(params: CavityParams) -> tuple[float, float]:
    """Range of |Delta(xi)|/kappa swept by a particle crossing one period."""
    ends = sorted((params.delta_c - params.u0, params.delta_c))
    if ends[0] <= 0 <= ends[1]:
        return 0.0, max(abs(ends[0]), abs(ends[1]))
    a, b = abs(ends[0]), abs(ends[1])
    return min(a, b), max(a, b)


def step_model_report(params: CavityParams, curve: StepFeedback) -> StepModelReport:
    d1, d2 = critical_detunings(curve)
    de = energy_loss_half_period(params, curve)
    lo, hi = detuning_range(params)
    reachable = lo <= d1 <= hi and lo <= d2 <= hi
    return StepModelReport(d1, d2, de, 2.0 * de, reachable)


def tuned_step(params: CavityParams, i_sw_rel: float = 2.0) -> StepFeedback:
    """Step curve switching up at the antinode and down at the node."""
    lo, hi = detuning_range(params)
    i1 = i_sw_rel * (1 + lo**2) / 4.0
    i2 = i_sw_rel * (1 + hi**2) / 4.0
    return StepFeedback(i1, i2, i_sw_rel)


def feedback_feasibility(
    delta_i_rel: float,
    photon_energy: float,
    mean_power: float,
    velocity: float,
    period: float,
    switch_time: float,
    ratio_threshold: float = 0.1,
) -> FeasibilityReport:
    """Shot-noise-limited measurement time and the velocity bound it implies.

    ``period`` is the spatial period the displacement during one measurement
    (or one switching time, whichever is longer) is compared with.
    """
    for name, v in [("delta_i_rel", delta_i_rel), ("photon_energy", photon_energy), ("mean_power", mean_power),
                    ("velocity", velocity), ("period", period), ("switch_time", switch_time)]:
        if not v > 0:
            raise DomainError(f"{name} must be positive")
    t_m = photon_energy / (delta_i_rel**2 * mean_power)
    ratio = velocity * max(t_m, switch_time) / period
    return FeasibilityReport(t_m, ratio, ratio_threshold * (period / switch_time))
