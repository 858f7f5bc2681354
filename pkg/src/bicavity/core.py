"""Dimensionless parameterization, feedback curves and unit conversion.

Scales used throughout the package:

    tau = kappa * t            time
    xi  = x / Lambda           position (mode function cos(2 pi xi))
    u   = v / (kappa Lambda)   velocity
    J   = T |E|^2 / (4 I0)     intracavity intensity
    |b|^2 = I_i / I0           input intensity

With these, the bare steady state is J = 1 / ((1 + gamma/kappa)^2 + Delta^2/kappa^2)
and the dipole force reads du/dtau = -8 pi eps J sin(4 pi xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

# SI constants, fixed to the values the reference figures were computed with.
C_LIGHT = 2.998e8
HBAR = 1.0546e-34
EPS0 = 8.854e-12

SMOOTH, STEP = 0, 1


class DomainError(ValueError):
    """Raised for parameters outside the physical domain."""


@dataclass(frozen=True)
class CavityParams:
    """Cavity and coupling constants in units of the field decay rate kappa.

    Attributes
    ----------
    delta_c : float
        Cavity detuning Delta_c / kappa.
    u0 : float
        Maximal resonance shift U0 / kappa caused by one particle at an antinode.
    gamma0 : float
        Maximal scattering rate gamma0 / kappa (non-negative).
    epsilon : float
        Coupling Re(alpha) I0 / (kappa^2 Lambda^2 T m); same sign as ``u0``.
    """

    delta_c: float
    u0: float
    gamma0: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.gamma0 < 0:
            raise DomainError(f"gamma0 must be >= 0, got {self.gamma0}")
        if self.u0 * self.epsilon < 0:
            raise DomainError("u0 and epsilon must carry the same sign (sign of Re(alpha))")


@dataclass(frozen=True)
class SmoothFeedback:
    """tanh-shaped input law ``I_i/I0 = 1 + (dI/2) tanh(a (4J - T I_sw / I0))``."""

    delta_i_rel: float
    i_sw_rel: float
    steepness: float

    def __post_init__(self):
        if not 0 <= self.delta_i_rel <= 2:
            raise DomainError("delta_i_rel must lie in [0, 2] to keep the input intensity non-negative")
        if self.i_sw_rel <= 0 or self.steepness <= 0:
            raise DomainError("i_sw_rel and steepness must be positive")

    @property
    def low(self) -> float:
        return 1.0 - 0.5 * self.delta_i_rel

    @property
    def high(self) -> float:
        return 1.0 + 0.5 * self.delta_i_rel

    @property
    def has_fold(self) -> bool:
        return self.delta_i_rel > 0


@dataclass(frozen=True)
class StepFeedback:
    """Two-level input law: ``i1_rel`` below the switching intensity, ``i2_rel`` at or above it."""

    i1_rel: float
    i2_rel: float
    i_sw_rel: float

    def __post_init__(self):
        if self.i1_rel < 0 or self.i2_rel < self.i1_rel:
            raise DomainError("step curve needs 0 <= i1_rel <= i2_rel")
        if self.i_sw_rel <= 0:
            raise DomainError("i_sw_rel must be positive")

    @property
    def low(self) -> float:
        return self.i1_rel

    @property
    def high(self) -> float:
        return self.i2_rel

    @property
    def has_fold(self) -> bool:
        return self.i2_rel > self.i1_rel


FeedbackCurve = Union[SmoothFeedback, StepFeedback]


def no_feedback() -> SmoothFeedback:
    """Constant input I_i = I0 (conventional cavity cooling)."""
    return SmoothFeedback(delta_i_rel=0.0, i_sw_rel=1.0, steepness=1.0)


def without_feedback(curve: FeedbackCurve) -> SmoothFeedback:
    """The dI = 0 twin of ``curve``."""
    if isinstance(curve, SmoothFeedback):
        return replace(curve, delta_i_rel=0.0)
    return SmoothFeedback(delta_i_rel=0.0, i_sw_rel=curve.i_sw_rel, steepness=1.0)


def step_limit(curve: SmoothFeedback) -> StepFeedback:
    """Step curve that ``curve`` approaches as its steepness grows."""
    return StepFeedback(curve.low, curve.high, curve.i_sw_rel)


def curve_tuple(curve: FeedbackCurve) -> tuple:
    """Flatten a curve into ``(kind, delta_i, i_sw, steepness, i1, i2)`` for compiled kernels."""
    if isinstance(curve, SmoothFeedback):
        return (SMOOTH, curve.delta_i_rel, curve.i_sw_rel, curve.steepness, curve.low, curve.high)
    return (STEP, curve.i2_rel - curve.i1_rel, curve.i_sw_rel, 1.0, curve.i1_rel, curve.i2_rel)


def mode_shift(xi, params: CavityParams):
    """Particle-induced resonance shift U(xi)/kappa = u0 cos^2(2 pi xi)."""
    return params.u0 * np.cos(2 * np.pi * np.asarray(xi)) ** 2


def effective_detuning(xi, params: CavityParams):
    """Delta(xi)/kappa = delta_c - U(xi)/kappa."""
    return params.delta_c - mode_shift(xi, params)


def scattering_rate(xi, params: CavityParams):
    """gamma(xi)/kappa = gamma0 cos^2(2 pi xi)."""
    return params.gamma0 * np.cos(2 * np.pi * np.asarray(xi)) ** 2


def feedback_input(j, curve: FeedbackCurve):
    """Scaled input intensity I_i/I0 for scaled intracavity intensity ``j``.

    Uses T I / I0 = 4 J, so the switching point sits at 4 J = ``i_sw_rel``.
    """
    j = np.asarray(j, dtype=float)
    if isinstance(curve, SmoothFeedback):
        out = 1.0 + 0.5 * curve.delta_i_rel * np.tanh(curve.steepness * (4.0 * j - curve.i_sw_rel))
    else:
        out = np.where(4.0 * j < curve.i_sw_rel, curve.i1_rel, curve.i2_rel)
    return out if out.ndim else float(out)


def feedback_slope(j, curve: FeedbackCurve):
    """d(I_i/I0)/dJ; zero off the step for the step curve."""
    j = np.asarray(j, dtype=float)
    if isinstance(curve, SmoothFeedback):
        x = curve.steepness * (4.0 * j - curve.i_sw_rel)
        out = 2.0 * curve.steepness * curve.delta_i_rel * (1.0 - np.tanh(x) ** 2)
    else:
        out = np.zeros_like(j)
    return out if out.ndim else float(out)


# -- physical units -----------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParams:
    """SI description of a particle in a driven standing-wave cavity.

    ``input_intensity_mean`` is |E_i|^2 averaged over the feedback, in (V/m)^2.
    """

    mass: float
    alpha_re: float
    mode_period: float
    mirror_transmission: float
    cavity_length: float
    mode_volume: float
    angular_frequency: float
    input_intensity_mean: float
    alpha_im: float = 0.0
    detuning: float = 0.0  # Delta_c in rad/s
    input_power_mean: float | None = None
    optical_wavelength: float | None = None

    def __post_init__(self):
        for name in ("mass", "mode_period", "cavity_length", "mode_volume", "angular_frequency"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 0 < self.mirror_transmission < 1:
            raise DomainError("mirror_transmission must lie in (0, 1)")
        if self.alpha_im < 0:
            raise DomainError("alpha_im must be non-negative")


@dataclass(frozen=True)
class Scales:
    """Derived scales reported alongside the dimensionless parameters."""

    kappa: float  # 1/s
    velocity: float  # kappa * Lambda, m/s
    recoil_velocity: float | None  # m/s


def decay_rate(transmission: float, length: float) -> float:
    """kappa = T c / (2 L)."""
    if transmission <= 0 or length <= 0:
        raise DomainError("transmission and length must be positive")
    return transmission * C_LIGHT / (2.0 * length)


def transmission_for(kappa: float, length: float) -> float:
    """Mirror transmission giving decay rate ``kappa`` for a cavity of ``length``."""
    return 2.0 * length * kappa / C_LIGHT


def recoil_velocity(mass: float, wavelength: float) -> float:
    """v_rec = hbar k / m with k = 2 pi / wavelength."""
    return 2 * math.pi * HBAR / (wavelength * mass)


def to_dimensionless(phys: PhysicalParams) -> tuple[CavityParams, Scales]:
    kappa = decay_rate(phys.mirror_transmission, phys.cavity_length)
    coupling = phys.angular_frequency / (EPS0 * phys.mode_volume * kappa)
    params = CavityParams(
        delta_c=phys.detuning / kappa,
        u0=coupling * phys.alpha_re,
        gamma0=coupling * phys.alpha_im,
        epsilon=phys.alpha_re * phys.input_intensity_mean
        / (kappa**2 * phys.mode_period**2 * phys.mirror_transmission * phys.mass),
    )
    v_rec = None
    if phys.optical_wavelength is not None:
        v_rec = recoil_velocity(phys.mass, phys.optical_wavelength)
    return params, Scales(kappa, kappa * phys.mode_period, v_rec)


def to_physical(params: CavityParams, kappa: float, template: PhysicalParams) -> PhysicalParams:
    """Inverse of :func:`to_dimensionless`.

    Geometry, mass, frequency and transmission are taken from ``template``; the
    cavity length, polarizability, detuning and mean input intensity are
    recomputed so that the result maps back onto ``params`` and ``kappa``.
    """
    length = template.mirror_transmission * C_LIGHT / (2.0 * kappa)
    per_alpha = template.angular_frequency / (EPS0 * template.mode_volume * kappa)
    alpha_re = params.u0 / per_alpha
    if alpha_re == 0:
        raise DomainError("u0 = 0 leaves the input intensity undetermined")
    intensity = (
        params.epsilon * kappa**2 * template.mode_period**2 * template.mirror_transmission * template.mass / alpha_re
    )
    return replace(
        template,
        cavity_length=length,
        alpha_re=alpha_re,
        alpha_im=params.gamma0 / per_alpha,
        detuning=params.delta_c * kappa,
        input_intensity_mean=intensity,
    )
