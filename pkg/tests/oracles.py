"""Independent reference implementations used only by the tests."""

import numpy as np
from scipy.optimize import brentq


def dense_scan_roots(s, di, isw, a, n=100_000):
    """Steady-state roots by sign changes on an n-point grid refined with brentq.

    Written directly from J s = 1 + (dI/2) tanh(a (4J - I_sw)); shares no code
    with the package.
    """
    # past (1 + dI/2)/s the residual is positive; the margin keeps that true after rounding
    jmax = (1.0 + 0.5 * di) / s * (1.0 + 1e-9)
    g = lambda j: j * s - 1.0 - 0.5 * di * np.tanh(a * (4.0 * j - isw))  # noqa: E731
    grid = np.linspace(0.0, jmax, n)
    pos = g(grid) > 0
    roots = [brentq(g, grid[k], grid[k + 1], xtol=1e-15, rtol=1e-15) for k in np.flatnonzero(pos[:-1] != pos[1:])]
    return np.array(roots)


def bare_intensity(xi, delta_c, u0, gamma0=0.0):
    c2 = np.cos(2 * np.pi * np.asarray(xi)) ** 2
    return 1.0 / ((1.0 + gamma0 * c2) ** 2 + (delta_c - u0 * c2) ** 2)
