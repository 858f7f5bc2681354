"""Steady states of the feedback-closed cavity and their hysteretic tracking."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels as K
from .core import (
    CavityParams,
    FeedbackCurve,
    SmoothFeedback,
    curve_tuple,
    effective_detuning,
    feedback_input,
    feedback_slope,
    scattering_rate,
)


class Branch(IntEnum):
    LOWER = K.LOWER
    UPPER = K.UPPER


@dataclass(frozen=True)
class SteadyRoot:
    j: float
    stable: bool


@dataclass(frozen=True)
class BranchMemory:
    branch: Branch
    last_j: float


@dataclass(frozen=True)
class Jump:
    xi: float
    direction: str  # "up" or "down"
    dj: float


@dataclass
class HysteresisTrace:
    xi: np.ndarray
    j: np.ndarray
    branch: np.ndarray
    jumps: list[Jump] = field(default_factory=list)


def lorentz_factor(xi, params: CavityParams):
    """(1 + gamma/kappa)^2 + (Delta/kappa)^2 at position ``xi``: the slope of the
    straight line in the graphical solution."""
    return (1.0 + scattering_rate(xi, params)) ** 2 + effective_detuning(xi, params) ** 2


def j_upper_bound(curve: FeedbackCurve) -> float:
    """Largest possible steady J; valid because the Lorentz factor is >= 1 when gamma0 >= 0."""
    return curve.high


def residual(j, xi, params: CavityParams, curve: FeedbackCurve):
    """g(J) = J * ((1+gamma)^2 + Delta^2) - I_i(J)/I0."""
    return np.asarray(j) * lorentz_factor(xi, params) - feedback_input(j, curve)


def roots_for_factor(s: float, curve: FeedbackCurve) -> list[SteadyRoot]:
    """Roots of the steady-state equation for a given Lorentz factor ``s``."""
    out_j = np.empty(3)
    out_stable = np.empty(3, dtype=bool)
    n = K.steady_roots(float(s), *curve_tuple(curve), out_j, out_stable)
    return [SteadyRoot(float(out_j[k]), bool(out_stable[k])) for k in range(n)]


def steady_roots(xi: float, params: CavityParams, curve: FeedbackCurve) -> list[SteadyRoot]:
    """Every steady-state intensity at particle position ``xi``, increasing in J.

    For the step curve, the middle entry (when present) is the switching
    intensity itself: it separates the two basins but is a jump of the
    residual, not a zero of it.
    """
    return roots_for_factor(float(lorentz_factor(xi, params)), curve)


def classify_stability(j: float, xi: float, params: CavityParams, curve: FeedbackCurve) -> bool:
    """A root is stable iff the straight line crosses the feedback curve from below."""
    if not isinstance(curve, SmoothFeedback) and np.isclose(4 * j, curve.i_sw_rel, rtol=0, atol=1e-15):
        return False
    slope = lorentz_factor(xi, params) - feedback_slope(j, curve)
    return bool(slope > K.MARGINAL)


def initial_memory(xi: float, params: CavityParams, curve: FeedbackCurve, branch: Branch = Branch.UPPER) -> BranchMemory:
    """Memory sitting on ``branch`` at ``xi`` (or on the only stable root if that branch is absent)."""
    j, b, _ = K.follow_branch(float(lorentz_factor(xi, params)), int(branch), *curve_tuple(curve))
    return BranchMemory(Branch(b), float(j))


def adiabatic_intensity(xi: float, memory: BranchMemory, params: CavityParams, curve: FeedbackCurve):
    """Follow the stable branch held in ``memory`` to position ``xi``.

    Returns ``(J, new_memory, jump)`` where ``jump`` is None unless the branch
    disappeared in a fold and the field switched to the remaining stable root.
    """
    j, b, jumped = K.follow_branch(float(lorentz_factor(xi, params)), int(memory.branch), *curve_tuple(curve))
    jump = None
    if jumped:
        jump = Jump(float(xi), "up" if b == K.UPPER else "down", float(j - memory.last_j))
    return float(j), BranchMemory(Branch(b), float(j)), jump


def hysteresis_trace(xi_grid, params: CavityParams, curve: FeedbackCurve, initial: Branch = Branch.UPPER) -> HysteresisTrace:
    xi_grid = np.asarray(xi_grid, dtype=float)
    d = np.diff(xi_grid)
    if xi_grid.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("xi_grid must be strictly monotone")
    s = np.asarray(lorentz_factor(xi_grid, params), dtype=float)
    start = initial_memory(xi_grid[0], params, curve, initial)
    js, branches, jumped = K.trace(s, int(start.branch), *curve_tuple(curve))
    jumps = []
    for k in np.flatnonzero(jumped):
        prev = js[k - 1]
        jumps.append(Jump(float(xi_grid[k]), "up" if branches[k] == K.UPPER else "down", float(js[k] - prev)))
    return HysteresisTrace(xi_grid, js, branches, jumps)
