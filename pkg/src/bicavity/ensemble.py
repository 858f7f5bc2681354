"""N particles sharing one feedback-driven cavity mode.

The particles shift the resonance additively, U_tot = sum_i u0 cos^2(2 pi xi_i),
and every particle feels the common intensity J:

    du_i/dtau = -8 pi eps J sin(4 pi xi_i)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import CavityParams, FeedbackCurve, SmoothFeedback, curve_tuple, feedback_input
from .dynamics import EVENT_CAP, Event, FieldState, IntegrationError, Mode
from .steady_state import Branch, BranchMemory


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    seed: int
    sigma_u: float
    params: CavityParams
    curve: FeedbackCurve
    dt: float = 1e-2
    t_max: float = 1000.0
    record_stride: int = 100
    snapshot_stride: int = 10  # in records
    mode: Mode = Mode.FULL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma_u < 0:
            raise ValueError("sigma_u must be >= 0")
        if not self.dt > 0 or not self.t_max > 0 or self.record_stride < 1 or self.snapshot_stride < 1:
            raise ValueError("dt, t_max must be positive and strides >= 1")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class EnsembleState:
    xi: np.ndarray
    u: np.ndarray
    field: FieldState | None = None
    memory: BranchMemory | None = None


@dataclass
class EnsembleSummary:
    var0: float
    var_final: float
    half_life: float
    n_jumps: int

    def to_dict(self):
        return dict(var0=self.var0, var_final=self.var_final, half_life=self.half_life, n_jumps=self.n_jumps)


@dataclass
class EnsembleTrajectory:
    tau: np.ndarray
    j: np.ndarray
    variance: np.ndarray
    mean_ke: np.ndarray
    snapshot_tau: np.ndarray
    snapshot_xi: np.ndarray
    snapshot_u: np.ndarray
    events: list[Event] = field(default_factory=list)
    summary: EnsembleSummary | None = None


def velocity_variance(u, axis=-1):
    """Population variance, two-pass."""
    u = np.asarray(u, dtype=float)
    mean = np.mean(u, axis=axis, keepdims=True)
    return np.mean((u - mean) ** 2, axis=axis)


def collective_factor(xi, params: CavityParams) -> float:
    return float(K.collective_s(np.asarray(xi, dtype=float), params.delta_c, params.u0, params.gamma0))


def ensemble_feedback(params: CavityParams, n: int, delta_i_rel: float = 0.5, sharpness: float = 10.0) -> SmoothFeedback:
    """Feedback centred on the mean collective detuning of n uniformly spread particles.

    The switching intensity is the bare 4J at detuning delta_c - n u0 / 2, and the
    steepness is ``sharpness / i_sw_rel`` so that the curve keeps its shape
    relative to the switching point as n grows.
    """
    d_mean = params.delta_c - 0.5 * n * params.u0
    i_sw = 4.0 / ((1.0 + 0.5 * n * params.gamma0) ** 2 + d_mean**2)
    return SmoothFeedback(delta_i_rel, i_sw, sharpness / i_sw)


def _streams(seed: int, n: int):
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def init_ensemble(config: EnsembleConfig) -> EnsembleState:
    """Uniform positions on [0, 1), Gaussian velocities, field on the upper steady branch.

    Each particle draws from its own PCG64 stream spawned from ``seed``.
    """
    xi = np.empty(config.n)
    u = np.empty(config.n)
    for i, g in enumerate(_streams(config.seed, config.n)):
        xi[i] = g.random()
        u[i] = config.sigma_u * g.standard_normal() + 0.0
    p, c = config.params, config.curve
    s = collective_factor(xi, p)
    j, b, _ = K.follow_branch(s, int(Branch.UPPER), *curve_tuple(c))
    shift = p.u0 * float(np.sum(np.cos(2 * np.pi * xi) ** 2))
    gam = p.gamma0 * float(np.sum(np.cos(2 * np.pi * xi) ** 2))
    a = math.sqrt(feedback_input(j, c)) / complex(1.0 + gam, p.delta_c - shift)
    return EnsembleState(xi, u, FieldState(a), BranchMemory(Branch(b), float(j)))


def _args(params, curve):
    return (params.delta_c, params.u0, params.gamma0, params.epsilon) + curve_tuple(curve)


def step_ensemble(state: EnsembleState, dt: float, params: CavityParams, curve: FeedbackCurve) -> EnsembleState:
    """One RK4 step of the n-particle field/particle system."""
    a = state.field.a
    out = K.run_full(a.real, a.imag, np.array(state.u, dtype=float), np.array(state.xi, dtype=float), dt, 1, 1,
                     *_args(params, curve), 16)
    if out[10] < 1:
        raise IntegrationError("non-finite state", state)
    return EnsembleState(out[1][-1].copy(), out[2][-1].copy(), FieldState(complex(out[11], out[12])))


def simulate_ensemble(config: EnsembleConfig, state: EnsembleState | None = None) -> EnsembleTrajectory:
    p, c = config.params, config.curve
    st = init_ensemble(config) if state is None else state
    n = config.n_steps
    if config.mode is Mode.FULL:
        out = K.run_full(st.field.a.real, st.field.a.imag, st.u.copy(), st.xi.copy(), config.dt, n,
                         config.record_stride, *_args(p, c), EVENT_CAP)
        tau, xi, u, j, _inp, et, ed, ev, ex, nev, done, _, _ = out
    else:
        out = K.run_adiabatic(int(st.memory.branch), st.u.copy(), st.xi.copy(), config.dt, n,
                              config.record_stride, *_args(p, c), EVENT_CAP)
        tau, xi, u, j, _inp, _b, et, ed, ev, ex, nev, done, _ = out
    var = velocity_variance(u)
    traj = EnsembleTrajectory(
        tau=tau,
        j=j,
        variance=var,
        mean_ke=0.5 * np.mean(u * u, axis=1),
        snapshot_tau=tau[:: config.snapshot_stride],
        snapshot_xi=xi[:: config.snapshot_stride],
        snapshot_u=u[:: config.snapshot_stride],
        events=[Event(float(t), "up" if d > 0 else "down", float(v), float(x)) for t, d, v, x in zip(et, ed, ev, ex)],
    )
    smooth = variance_series(traj)
    traj.summary = EnsembleSummary(float(var[0]), float(var[-1]), half_life(tau, smooth, var[0]), int(nev))
    if done < n:
        raise IntegrationError(f"non-finite state after step {done}", traj)
    return traj


def default_window(n_samples: int) -> int:
    w = max(3, math.ceil(0.01 * n_samples))
    return w if w % 2 else w + 1


def variance_series(traj: EnsembleTrajectory, window: int | None = None) -> np.ndarray:
    """Centred moving average of the variance; the window shrinks at the ends."""
    return moving_average(traj.variance, default_window(traj.variance.size) if window is None else window)


def moving_average(x, window: int) -> np.ndarray:
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    x = np.asarray(x, dtype=float)
    # direct windowed sums; a running cumsum drifts on long series
    h = window // 2
    kernel = np.ones(window)
    sums = np.convolve(np.pad(x, h), kernel, mode="valid")
    counts = np.convolve(np.pad(np.ones_like(x), h), kernel, mode="valid")
    return sums / counts


def half_life(tau, series, initial=None) -> float:
    """Time after which ``series`` stays below half its initial value.

    If it never gets there, the rate is extrapolated from a log-linear fit;
    ``inf`` when the series does not decay at all.
    """
    tau = np.asarray(tau, dtype=float)
    series = np.asarray(series, dtype=float)
    ref = series[0] if initial is None else initial
    if ref <= 0:
        return math.inf
    above = np.flatnonzero(series > 0.5 * ref)
    if above.size == 0:
        return float(tau[0])
    if above[-1] + 1 < series.size:
        return float(tau[above[-1] + 1])
    ok = series > 0
    slope = np.polyfit(tau[ok], np.log(series[ok] / ref), 1)[0] if np.count_nonzero(ok) > 2 else 0.0
    return math.log(2) / -slope if slope < 0 else math.inf


def variance_steps_at_jumps(traj: EnsembleTrajectory, half_width: float) -> np.ndarray:
    """Variance change across each field jump, over [tau - w, tau + w]."""
    out = []
    for e in traj.events:
        lo = np.searchsorted(traj.tau, e.tau - half_width)
        hi = min(np.searchsorted(traj.tau, e.tau + half_width), traj.tau.size - 1)
        out.append(traj.variance[hi] - traj.variance[lo])
    return np.array(out)
