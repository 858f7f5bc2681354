"""Single-particle dynamics: full field/particle integration and the adiabatic limit.

Dimensionless equations of motion (tau = kappa t):

    da/dtau  = b(J) - a [1 + gamma(xi) + i (delta_c - U(xi))],   b = sqrt(I_i(J)/I0)
    du/dtau  = -8 pi eps J sin(4 pi xi)
    dxi/dtau = u
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as K
from .analytics import effective_potential, escape_velocity
from .core import CavityParams, FeedbackCurve, SmoothFeedback, curve_tuple, feedback_input
from .steady_state import Branch, BranchMemory, lorentz_factor, scattering_rate

EVENT_CAP = 1_000_000


class Mode(str, Enum):
    FULL = "full"
    ADIABATIC = "adiabatic"


@dataclass(frozen=True)
class ParticleState:
    xi: float
    u: float


@dataclass(frozen=True)
class FieldState:
    a: complex

    @property
    def j(self) -> float:
        return abs(self.a) ** 2


@dataclass(frozen=True)
class SimConfig:
    params: CavityParams
    curve: FeedbackCurve
    initial: ParticleState
    initial_field: FieldState | str = "steady"
    dt: float = 1e-2
    t_max: float = 1000.0
    record_stride: int = 10
    mode: Mode = Mode.FULL

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0:
            raise ValueError("dt and t_max must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class Event:
    tau: float
    direction: str
    value: float  # J after the switch (full) or the jump in J (adiabatic)
    xi: float


@dataclass
class Summary:
    slope: float | None = None
    slope_window: tuple[float, float] | None = None
    r2: float | None = None
    trapped_at: float | None = None
    u_final: float | None = None
    half_time: float | None = None
    energy_drift: float | None = None
    n_events: int = 0

    def to_dict(self):
        d = asdict(self)
        if d["slope_window"] is not None:
            d["slope_window"] = list(d["slope_window"])
        return d


@dataclass
class Trajectory:
    tau: np.ndarray
    xi: np.ndarray
    u: np.ndarray
    j: np.ndarray
    input_rel: np.ndarray
    branch: np.ndarray | None = None
    events: list[Event] = field(default_factory=list)
    summary: Summary = field(default_factory=Summary)
    final_field: FieldState | None = None
    final_memory: BranchMemory | None = None


class IntegrationError(RuntimeError):
    """Non-finite state; ``trajectory`` holds everything up to the last good step."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


def steady_field(xi: float, params: CavityParams, curve: FeedbackCurve, branch: Branch = Branch.UPPER) -> FieldState:
    """Stationary cavity amplitude on ``branch`` for a particle frozen at ``xi``."""
    s = float(lorentz_factor(xi, params))
    j, _, _ = K.follow_branch(s, int(branch), *curve_tuple(curve))
    b = math.sqrt(feedback_input(j, curve))
    g = 1.0 + float(scattering_rate(xi, params))
    d = params.delta_c - params.u0 * math.cos(2 * math.pi * xi) ** 2
    return FieldState(b / complex(g, d))


def _args(params: CavityParams, curve: FeedbackCurve):
    return (params.delta_c, params.u0, params.gamma0, params.epsilon) + curve_tuple(curve)


def step_full(state: tuple[FieldState, ParticleState], dt: float, params: CavityParams, curve: FeedbackCurve):
    """One RK4 step of the coupled field/particle system."""
    fld, p = state
    out = K.run_full(fld.a.real, fld.a.imag, np.array([p.u]), np.array([p.xi]), dt, 1, 1,
                     *_args(params, curve), 16)
    if out[10] < 1:
        raise IntegrationError("non-finite state", state)
    return FieldState(complex(out[11], out[12])), ParticleState(float(out[1][-1, 0]), float(out[2][-1, 0]))


def step_adiabatic(state: tuple[BranchMemory, ParticleState], dt: float, params: CavityParams, curve: FeedbackCurve):
    """One RK4 step with the field slaved to the tracked steady branch."""
    mem, p = state
    out = K.run_adiabatic(int(mem.branch), np.array([p.u]), np.array([p.xi]), dt, 1, 1,
                          *_args(params, curve), 16)
    if out[11] < 1:
        raise IntegrationError("non-finite state", state)
    return BranchMemory(Branch(int(out[12])), float(out[3][-1])), ParticleState(float(out[1][-1, 0]), float(out[2][-1, 0]))


def simulate(config: SimConfig) -> Trajectory:
    p, c = config.params, config.curve
    x0, u0 = config.initial.xi, config.initial.u
    n = config.n_steps
    if config.mode is Mode.FULL:
        fld = config.initial_field
        if isinstance(fld, str):
            if fld != "steady":
                raise ValueError(f"unknown initial field {fld!r}")
            fld = steady_field(x0, p, c)
        out = K.run_full(fld.a.real, fld.a.imag, np.array([u0]), np.array([x0]), config.dt, n,
                         config.record_stride, *_args(p, c), EVENT_CAP)
        tau, xi, u, j, inp, et, ed, ev, ex, nev, done, ar, ai = out
        branch = None
        final_field, final_mem = FieldState(complex(ar, ai)), None
    else:
        out = K.run_adiabatic(int(Branch.UPPER), np.array([u0]), np.array([x0]), config.dt, n,
                              config.record_stride, *_args(p, c), EVENT_CAP)
        tau, xi, u, j, inp, branch, et, ed, ev, ex, nev, done, b = out
        final_field, final_mem = None, BranchMemory(Branch(int(b)), float(j[-1]))
    events = [Event(float(t), "up" if d > 0 else "down", float(v), float(x)) for t, d, v, x in zip(et, ed, ev, ex)]
    traj = Trajectory(tau, xi[:, 0], u[:, 0], j, inp, branch, events, final_field=final_field, final_memory=final_mem)
    traj.summary = summarize(traj, config)
    traj.summary.n_events = int(nev)
    if done < n:
        raise IntegrationError(f"non-finite state after step {done}", traj)
    return traj


# -- analysis -----------------------------------------------------------------


def well_boundary(params: CavityParams) -> float:
    """Position of the potential maxima (mod 1/2)."""
    return 0.25 if params.epsilon >= 0 else 0.0


def well_index(xi, params: CavityParams):
    return np.floor((np.asarray(xi) - well_boundary(params)) / 0.5).astype(np.int64)


def small_oscillation_period(params: CavityParams, curve: FeedbackCurve) -> float:
    """Harmonic period at the well bottom on the upper input level."""
    x_min = well_boundary(params) + 0.25
    s = float(lorentz_factor(x_min, params))
    j, _, _ = K.follow_branch(s, int(Branch.UPPER), *curve_tuple(curve))
    k = 32 * math.pi**2 * abs(params.epsilon) * j
    return math.inf if k == 0 else 2 * math.pi / math.sqrt(k)


def detect_trapping(traj: Trajectory, params: CavityParams, curve: FeedbackCurve, oscillations: int = 10):
    """First time after which the particle never leaves its potential well.

    The tail after the last well crossing must hold at least ``oscillations``
    oscillations (counted from velocity reversals, or from the harmonic period
    for a particle sitting at rest).
    """
    wells = well_index(traj.xi, params)
    changes = np.flatnonzero(np.diff(wells) != 0)
    start = 0 if changes.size == 0 else changes[-1] + 1
    tail_u = traj.u[start:]
    reversals = np.count_nonzero(np.diff(np.signbit(tail_u).astype(np.int8)) != 0)
    span = traj.tau[-1] - traj.tau[start]
    if reversals >= 2 * oscillations or span >= oscillations * small_oscillation_period(params, curve):
        return float(traj.tau[start])
    return None


def energy_audit(traj: Trajectory) -> np.ndarray:
    """Kinetic-energy change between successive node crossings (xi = 1/4 mod 1/2)."""
    idx = np.floor((traj.xi - 0.25) / 0.5)
    cross = np.flatnonzero(np.diff(idx) != 0)
    if cross.size < 3:
        raise ValueError("trajectory too short: need at least two half periods between node crossings")
    ke = []
    for k in cross:
        x0, x1 = traj.xi[k], traj.xi[k + 1]
        node = 0.25 + 0.5 * max(idx[k], idx[k + 1])
        w = (node - x0) / (x1 - x0)
        uc = traj.u[k] + w * (traj.u[k + 1] - traj.u[k])
        ke.append(0.5 * uc * uc)
    return np.diff(np.array(ke))


def _fit_stats(s, lo, hi):
    """Least-squares line over samples [lo, hi) from prefix sums."""
    n = hi - lo
    st, su, stt, suu, stu = (s[q][hi] - s[q][lo] for q in range(5))
    sxx = stt - st * st / n
    syy = suu - su * su / n
    sxy = stu - st * su / n
    slope = sxy / sxx
    r2 = 1.0 if syy <= 0 else sxy * sxy / (sxx * syy)
    return slope, r2


def linear_window(tau, u, t_end=None, grid: int = 200, min_fraction: float = 0.1, r2_min: float = 0.99):
    """Longest window before ``t_end`` on which u(tau) is linear with R^2 > ``r2_min``.

    Window edges are taken on a uniform grid of ``grid`` candidate points.
    Returns ``(slope, (t0, t1), r2)`` or None.
    """
    tau = np.asarray(tau, dtype=float)
    u = np.asarray(u, dtype=float)
    stop = tau.size if t_end is None else int(np.searchsorted(tau, t_end, side="right"))
    if stop < 10:
        return None
    t = tau[:stop] - tau[0]
    y = u[:stop]
    s = [np.concatenate(([0.0], np.cumsum(v))) for v in (t, y, t * t, y * y, t * y)]
    edges = np.unique(np.linspace(0, stop, grid + 1).astype(int))
    min_len = max(5, int(min_fraction * stop))
    best = None
    for a_ in range(edges.size):
        for b_ in range(edges.size - 1, a_, -1):
            lo, hi = edges[a_], edges[b_]
            if hi - lo < min_len or (best is not None and hi - lo <= best[0]):
                break
            slope, r2 = _fit_stats(s, lo, hi)
            if r2 > r2_min:
                best = (hi - lo, slope, (float(tau[lo]), float(tau[hi - 1])), r2)
                break
    if best is None:
        return None
    return best[1], best[2], best[3]


def time_to_fraction(tau, u, fraction: float = 0.5):
    """Time after which |u| stays below ``fraction`` of its initial magnitude."""
    u = np.abs(np.asarray(u))
    above = np.flatnonzero(u > fraction * u[0])
    if above.size == 0:
        return float(tau[0])
    last = above[-1]
    if last + 1 >= u.size:
        return None
    return float(tau[last + 1])


def energy_drift(traj: Trajectory, params: CavityParams) -> float:
    """Max relative deviation of u^2/2 + W(xi) for the no-feedback potential."""
    e = 0.5 * traj.u**2 + effective_potential(traj.xi, 1.0, params)
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def summarize(traj: Trajectory, config: SimConfig) -> Summary:
    p, c = config.params, config.curve
    out = Summary(u_final=float(abs(traj.u[-1])))
    out.trapped_at = detect_trapping(traj, p, c)
    fit = linear_window(traj.tau, traj.u, out.trapped_at)
    if fit is not None:
        out.slope, out.slope_window, out.r2 = fit
    out.half_time = time_to_fraction(traj.tau, traj.u, 0.5)
    bare = isinstance(c, SmoothFeedback) and c.delta_i_rel == 0
    if config.mode is Mode.ADIABATIC and bare and p.gamma0 == 0 and p.u0 != 0:
        out.energy_drift = energy_drift(traj, p)
    return out


def trapped_below_escape(traj: Trajectory, params: CavityParams, curve: FeedbackCurve) -> bool:
    """Final speed below the escape velocity of the upper-level adiabatic well."""
    return abs(traj.u[-1]) < escape_velocity(curve.high, params)
