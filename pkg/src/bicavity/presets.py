"""Parameter sets of the published single-particle and ensemble experiments.

The published feedback numbers (T I_sw / I0 and the steepness a) are quoted
in a convention where the switching intensity is compared with
J = T|E|^2/(4 I0); ``SmoothFeedback`` compares with 4J, hence the factors of 4
in :func:`figure_feedback`.  Read literally in the 4J convention the sets
have no bistable window at all.
"""

from __future__ import annotations

from .core import CavityParams, SmoothFeedback, recoil_velocity
from .ensemble import ensemble_feedback

RB_MASS = 1.443e-25  # kg
WAVELENGTH = 1e-6  # m, also taken as the mode period
KAPPA = 1.2e8  # 1/s
CAVITY_LENGTH = 500e-6  # m
PUMP_POWER = 5e-9  # W


def figure_feedback(delta_i_rel: float, j_sw: float, a: float) -> SmoothFeedback:
    """Smooth curve from published (dI/I0, T I_sw/I0, a) values."""
    return SmoothFeedback(delta_i_rel, 4.0 * j_sw, a / 4.0)


def velocity_scale() -> float:
    """kappa * Lambda in m/s."""
    return KAPPA * WAVELENGTH


def recoil_units(n_recoil: float) -> float:
    """``n_recoil`` rubidium recoil velocities in units of kappa * Lambda."""
    return n_recoil * recoil_velocity(RB_MASS, WAVELENGTH) / velocity_scale()


def fig2a():
    """Weak coupling, red atomic detuning: returns (params, curve, initial u)."""
    params = CavityParams(delta_c=1.0, u0=0.1, gamma0=0.0, epsilon=2.5e-5)
    return params, figure_feedback(0.13, 0.53, 50.0), recoil_units(2500)


def fig2b():
    """Strong coupling, blue atomic detuning, cavity on resonance."""
    params = CavityParams(delta_c=0.0, u0=-1.33, gamma0=0.0, epsilon=-5e-5)
    return params, figure_feedback(0.95, 0.53, 10.0), recoil_units(2500)


FIG3_PARAMS = CavityParams(delta_c=0.0, u0=-0.7, gamma0=0.0, epsilon=-2.5e-6)
FIG3_SIGMA_U = 0.016
FIG3_T_MAX = 10_000.0


def fig3(n: int):
    """Ensemble set: (params, curve, sigma_u) for n particles."""
    return FIG3_PARAMS, ensemble_feedback(FIG3_PARAMS, n), FIG3_SIGMA_U
