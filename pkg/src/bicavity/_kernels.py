"""Compiled inner loops.

Curves are passed flattened as ``(kind, di, isw, a, i1, i2)`` (see
``core.curve_tuple``); branch labels are 0 (lower) and 1 (upper).
"""

import math

import numpy as np
from numba import njit

SMOOTH = 0
STEP = 1
LOWER = 0
UPPER = 1
MARGINAL = 1e-9
TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
EIGHT_PI = 8.0 * math.pi


@njit(cache=True, nogil=True)
def feedback(j, kind, di, isw, a, i1, i2):
    if kind == SMOOTH:
        return 1.0 + 0.5 * di * math.tanh(a * (4.0 * j - isw))
    if 4.0 * j < isw:
        return i1
    return i2


@njit(cache=True, nogil=True)
def feedback_slope(j, kind, di, isw, a, i1, i2):
    if kind == SMOOTH:
        c = math.cosh(a * (4.0 * j - isw))
        return 2.0 * a * di / (c * c)
    return 0.0


@njit(cache=True, nogil=True)
def residual(j, s, kind, di, isw, a, i1, i2):
    return j * s - feedback(j, kind, di, isw, a, i1, i2)


@njit(cache=True, nogil=True)
def is_folded(s, kind, di, isw, a, i1, i2):
    """True when the closed steady-state equation can have three roots."""
    if kind == SMOOTH:
        return di > 0.0 and s < 2.0 * a * di
    return i2 > i1


@njit(cache=True, nogil=True)
def _bisect(lo, hi, glo, ghi, s, kind, di, isw, a, i1, i2):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = residual(mid, s, kind, di, isw, a, i1, i2)
        if gm == 0.0:
            return mid
        if (gm < 0.0) == (glo < 0.0):
            lo = mid
            glo = gm
        else:
            hi = mid
            ghi = gm
    if abs(glo) <= abs(ghi):
        return lo
    return hi


@njit(cache=True, nogil=True)
def steady_roots(s, kind, di, isw, a, i1, i2, out_j, out_stable):
    """All roots of J*s = I_i(J)/I0 in increasing order; returns the count.

    ``s`` is (1 + gamma/kappa)^2 + (Delta/kappa)^2.  For the smooth curve the
    interval [0, J_max] is split at the extrema of the residual (closed form,
    where sech^2 = s / (2 a dI)) so that every piece is monotone and holds at
    most one root, which bisection then pins down to machine precision.
    """
    if kind == STEP:
        j1 = i1 / s
        j2 = i2 / s
        lower_ok = 4.0 * j1 < isw
        upper_ok = 4.0 * j2 >= isw
        n = 0
        if lower_ok:
            out_j[n] = j1
            out_stable[n] = True
            n += 1
        if lower_ok and upper_ok:
            # the step itself separates the basins
            out_j[n] = 0.25 * isw
            out_stable[n] = False
            n += 1
        if upper_ok:
            out_j[n] = j2
            out_stable[n] = True
            n += 1
        return n

    if di == 0.0:
        out_j[0] = 1.0 / s
        out_stable[0] = True
        return 1

    # every root satisfies J s <= max input; the margin keeps g(jmax) > 0 after rounding
    jmax = (1.0 + 0.5 * di) / s * (1.0 + 1e-12)
    edges = np.empty(4)
    ne = 0
    edges[ne] = 0.0
    ne += 1
    if s < 2.0 * a * di:
        r = s / (2.0 * a * di)
        xs = math.acosh(1.0 / math.sqrt(r))
        c1 = 0.25 * (isw - xs / a)
        c2 = 0.25 * (isw + xs / a)
        if 0.0 < c1 < jmax:
            edges[ne] = c1
            ne += 1
        if 0.0 < c2 < jmax and c2 > edges[ne - 1]:
            edges[ne] = c2
            ne += 1
    edges[ne] = jmax
    ne += 1

    n = 0
    glo = residual(edges[0], s, kind, di, isw, a, i1, i2)
    for k in range(ne - 1):
        lo = edges[k]
        hi = edges[k + 1]
        ghi = residual(hi, s, kind, di, isw, a, i1, i2)
        root = -1.0
        if glo == 0.0:
            root = lo
        elif glo * ghi < 0.0:
            root = _bisect(lo, hi, glo, ghi, s, kind, di, isw, a, i1, i2)
        elif ghi == 0.0 and k == ne - 2:
            root = hi
        if root >= 0.0 and (n == 0 or root > out_j[n - 1]) and n < 3:
            out_j[n] = root
            slope = s - feedback_slope(root, kind, di, isw, a, i1, i2)
            out_stable[n] = slope > MARGINAL
            n += 1
        glo = ghi
    return n


@njit(cache=True, nogil=True)
def branch_of(j, isw):
    if 4.0 * j >= isw:
        return UPPER
    return LOWER


@njit(cache=True, nogil=True)
def follow_branch(s, branch, kind, di, isw, a, i1, i2):
    """Stable root on ``branch`` if it survives, else the remaining stable root.

    Returns ``(J, branch, jumped)``.
    """
    out_j = np.empty(3)
    out_stable = np.empty(3, dtype=np.bool_)
    n = steady_roots(s, kind, di, isw, a, i1, i2, out_j, out_stable)
    fallback = -1
    for k in range(n):
        if not out_stable[k]:
            continue
        if branch_of(out_j[k], isw) == branch:
            return out_j[k], branch, False
        fallback = k
    if fallback < 0:
        # only marginal roots left; take the outermost one on the far side
        fallback = n - 1 if branch == LOWER else 0
    j = out_j[fallback]
    new_branch = branch_of(j, isw)
    jumped = new_branch != branch and is_folded(s, kind, di, isw, a, i1, i2)
    return j, new_branch, jumped


@njit(cache=True, nogil=True)
def trace(s_values, branch, kind, di, isw, a, i1, i2):
    n = s_values.size
    js = np.empty(n)
    branches = np.empty(n, dtype=np.int64)
    jumped = np.zeros(n, dtype=np.bool_)
    for k in range(n):
        j, branch, jp = follow_branch(s_values[k], branch, kind, di, isw, a, i1, i2)
        js[k] = j
        branches[k] = branch
        jumped[k] = jp
    return js, branches, jumped


@njit(cache=True, nogil=True)
def collective_s(xi, dc, u0, g0):
    shift = 0.0
    gam = 0.0
    for i in range(xi.size):
        c = math.cos(TWO_PI * xi[i])
        c2 = c * c
        shift += u0 * c2
        gam += g0 * c2
    d = dc - shift
    g = 1.0 + gam
    return g * g + d * d


@njit(cache=True, nogil=True)
def _full_rhs(y, out, n, dc, u0, g0, eps, kind, di, isw, a, i1, i2):
    ar = y[0]
    ai = y[1]
    shift = 0.0
    gam = 0.0
    for i in range(n):
        c = math.cos(TWO_PI * y[2 + n + i])
        c2 = c * c
        shift += u0 * c2
        gam += g0 * c2
    j = ar * ar + ai * ai
    b = math.sqrt(feedback(j, kind, di, isw, a, i1, i2))
    d = dc - shift
    g = 1.0 + gam
    out[0] = b - (g * ar - d * ai)
    out[1] = -(g * ai + d * ar)
    force = -EIGHT_PI * eps * j
    for i in range(n):
        out[2 + i] = force * math.sin(FOUR_PI * y[2 + n + i])
        out[2 + n + i] = y[2 + i]


@njit(cache=True, nogil=True)
def _level(j, kind, di, isw, a, i1, i2):
    lo = i1
    hi = i2
    if hi <= lo:
        return 0.5
    return (feedback(j, kind, di, isw, a, i1, i2) - lo) / (hi - lo)


@njit(cache=True, nogil=True)
def run_full(ar, ai, u, xi, dt, nsteps, stride, dc, u0, g0, eps, kind, di, isw, a, i1, i2, event_cap):
    """Classical RK4 on (Re a, Im a, u_1..u_n, xi_1..xi_n).

    Switching events are detected every step with a Schmitt trigger on the
    normalized input level (up above 0.75, down below 0.25).
    Returns records, events and the number of completed steps.
    """
    n = u.size
    m = 2 + 2 * n
    y = np.empty(m)
    y[0] = ar
    y[1] = ai
    for i in range(n):
        y[2 + i] = u[i]
        y[2 + n + i] = xi[i]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)

    nrec = nsteps // stride + 1
    rec_t = np.empty(nrec)
    rec_u = np.empty((nrec, n))
    rec_xi = np.empty((nrec, n))
    rec_j = np.empty(nrec)
    rec_in = np.empty(nrec)
    ev_t = np.empty(event_cap)
    ev_dir = np.empty(event_cap, dtype=np.int64)
    ev_j = np.empty(event_cap)
    ev_xi = np.empty(event_cap)
    nev = 0

    j = y[0] * y[0] + y[1] * y[1]
    high = _level(j, kind, di, isw, a, i1, i2) >= 0.5
    rec_t[0] = 0.0
    for i in range(n):
        rec_u[0, i] = y[2 + i]
        rec_xi[0, i] = y[2 + n + i]
    rec_j[0] = j
    rec_in[0] = feedback(j, kind, di, isw, a, i1, i2)
    r = 1
    done = 0
    half = 0.5 * dt
    for step in range(1, nsteps + 1):
        _full_rhs(y, k1, n, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + half * k1[q]
        _full_rhs(tmp, k2, n, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + half * k2[q]
        _full_rhs(tmp, k3, n, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + dt * k3[q]
        _full_rhs(tmp, k4, n, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        finite = True
        for q in range(m):
            v = y[q] + dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
            if not math.isfinite(v):
                finite = False
            tmp[q] = v
        if not finite:
            break
        for q in range(m):
            y[q] = tmp[q]
        done = step
        j = y[0] * y[0] + y[1] * y[1]
        lev = _level(j, kind, di, isw, a, i1, i2)
        if (high and lev < 0.25) or ((not high) and lev > 0.75):
            high = not high
            if nev < event_cap:
                ev_t[nev] = step * dt
                ev_dir[nev] = 1 if high else -1
                ev_j[nev] = j
                ev_xi[nev] = y[2 + n]
            nev += 1
        if step % stride == 0:
            rec_t[r] = step * dt
            for i in range(n):
                rec_u[r, i] = y[2 + i]
                rec_xi[r, i] = y[2 + n + i]
            rec_j[r] = j
            rec_in[r] = feedback(j, kind, di, isw, a, i1, i2)
            r += 1
    nkeep = min(nev, event_cap)
    return (
        rec_t[:r], rec_xi[:r], rec_u[:r], rec_j[:r], rec_in[:r],
        ev_t[:nkeep], ev_dir[:nkeep], ev_j[:nkeep], ev_xi[:nkeep],
        nev, done, y[0], y[1],
    )


@njit(cache=True, nogil=True)
def _adiabatic_rhs(y, out, n, branch, dc, u0, g0, eps, kind, di, isw, a, i1, i2):
    s = collective_s(y[n:], dc, u0, g0)
    j, _, _ = follow_branch(s, branch, kind, di, isw, a, i1, i2)
    force = -EIGHT_PI * eps * j
    for i in range(n):
        out[i] = force * math.sin(FOUR_PI * y[n + i])
        out[n + i] = y[i]


@njit(cache=True, nogil=True)
def run_adiabatic(branch, u, xi, dt, nsteps, stride, dc, u0, g0, eps, kind, di, isw, a, i1, i2, event_cap):
    """RK4 on (u, xi) with the field slaved to the tracked stable branch.

    Stages read the branch held at the start of the step; the branch is
    committed (and a jump recorded) at the end of each step.
    """
    n = u.size
    m = 2 * n
    y = np.empty(m)
    for i in range(n):
        y[i] = u[i]
        y[n + i] = xi[i]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)

    nrec = nsteps // stride + 1
    rec_t = np.empty(nrec)
    rec_u = np.empty((nrec, n))
    rec_xi = np.empty((nrec, n))
    rec_j = np.empty(nrec)
    rec_in = np.empty(nrec)
    rec_b = np.empty(nrec, dtype=np.int64)
    ev_t = np.empty(event_cap)
    ev_dir = np.empty(event_cap, dtype=np.int64)
    ev_j = np.empty(event_cap)
    ev_xi = np.empty(event_cap)
    nev = 0

    j, branch, _ = follow_branch(collective_s(y[n:], dc, u0, g0), branch, kind, di, isw, a, i1, i2)
    rec_t[0] = 0.0
    for i in range(n):
        rec_u[0, i] = y[i]
        rec_xi[0, i] = y[n + i]
    rec_j[0] = j
    rec_in[0] = feedback(j, kind, di, isw, a, i1, i2)
    rec_b[0] = branch
    r = 1
    done = 0
    half = 0.5 * dt
    for step in range(1, nsteps + 1):
        _adiabatic_rhs(y, k1, n, branch, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + half * k1[q]
        _adiabatic_rhs(tmp, k2, n, branch, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + half * k2[q]
        _adiabatic_rhs(tmp, k3, n, branch, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        for q in range(m):
            tmp[q] = y[q] + dt * k3[q]
        _adiabatic_rhs(tmp, k4, n, branch, dc, u0, g0, eps, kind, di, isw, a, i1, i2)
        finite = True
        for q in range(m):
            v = y[q] + dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
            if not math.isfinite(v):
                finite = False
            tmp[q] = v
        if not finite:
            break
        for q in range(m):
            y[q] = tmp[q]
        done = step
        j_new, branch, jumped = follow_branch(collective_s(y[n:], dc, u0, g0), branch, kind, di, isw, a, i1, i2)
        if jumped:
            if nev < event_cap:
                ev_t[nev] = step * dt
                ev_dir[nev] = 1 if branch == UPPER else -1
                ev_j[nev] = j_new - j
                ev_xi[nev] = y[n]
            nev += 1
        j = j_new
        if step % stride == 0:
            rec_t[r] = step * dt
            for i in range(n):
                rec_u[r, i] = y[i]
                rec_xi[r, i] = y[n + i]
            rec_j[r] = j
            rec_in[r] = feedback(j, kind, di, isw, a, i1, i2)
            rec_b[r] = branch
            r += 1
    nkeep = min(nev, event_cap)
    return (
        rec_t[:r], rec_xi[:r], rec_u[:r], rec_j[:r], rec_in[:r], rec_b[:r],
        ev_t[:nkeep], ev_dir[:nkeep], ev_j[:nkeep], ev_xi[:nkeep],
        nev, done, branch,
    )
