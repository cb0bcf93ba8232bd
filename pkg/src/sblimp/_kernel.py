"""Compiled closed-loop integrators.

Scalar re-statements of the model, controller and reference laws, fused into
one fixed-step loop so sweeps of thousands of long runs stay cheap. The
public numpy implementations in ``model``, ``controller`` and
``trajectories`` are the readable references; the test-suite checks that
both agree.

Packed layouts
--------------
P  : m, J, a_x, a_z, eta, L_b, f_b, d_x, d_z, d_tau, f_min, f_max, g
     (spatial adds a_y, z_share; z_share < 0 selects the proportional split)
G  : k_vx, k_vz (planar) / k_vx, k_vy, k_vz (spatial)
TP : see ``TrajectoryRef.kernel_args``
L  : max speed, max |angle|, tracking ratio, tracking floor, tracking steps
"""
import math

import numpy as np
from numba import njit

HOVER, CIRCLE, HELIX, CONSTANT = 0, 1, 2, 3
OK, NONFINITE, OVERSPEED, OVERANGLE, TRACKING = 0, 1, 2, 3, 4
RK4, EULER = 0, 1


@njit(cache=True)
def ref3(kind, TP, t, x, y, z, out):
    """Spatial reference: out = [vdx, vdy, vdz, pdx, pdy, pdz]."""
    r = TP[0]
    sp = TP[1]
    if kind == CIRCLE or kind == HELIX:
        if kind == CIRCLE:
            speed = sp
            ph = sp / r * t
            zd = TP[6]
            vz = 0.0
        else:
            speed = sp + TP[2] * t
            ph = (sp * t + 0.5 * TP[2] * t * t) / r
            zd = TP[6] + TP[3] * t
            vz = TP[3]
        out[0] = -speed * math.sin(ph)
        out[1] = speed * math.cos(ph)
        out[2] = vz
        out[3] = r * math.cos(ph) + TP[4]
        out[4] = r * math.sin(ph) + TP[5]
        out[5] = zd
    elif kind == HOVER:
        kp = TP[10]
        vx = kp * (TP[7] - x)
        vy = kp * (TP[8] - y)
        vz = kp * (TP[9] - z)
        n = math.sqrt(vx * vx + vy * vy + vz * vz)
        if n > TP[11]:
            f = TP[11] / n
            vx *= f
            vy *= f
            vz *= f
        out[0] = vx
        out[1] = vy
        out[2] = vz
        out[3] = TP[7]
        out[4] = TP[8]
        out[5] = TP[9]
    else:
        out[0] = TP[12]
        out[1] = TP[13]
        out[2] = TP[14]
        out[3] = TP[15] + TP[12] * t
        out[4] = TP[16] + TP[13] * t
        out[5] = TP[17] + TP[14] * t


@njit(cache=True)
def ref2(kind, TP, t, x, z, out):
    """Planar reference in the xz plane: out = [vdx, vdz, pdx, pdz]."""
    if kind == CIRCLE:
        r = TP[0]
        sp = TP[1]
        ph = sp / r * t
        out[0] = -sp * math.sin(ph)
        out[1] = sp * math.cos(ph)
        out[2] = r * math.cos(ph) + TP[4]
        out[3] = r * math.sin(ph) + TP[6]
    elif kind == HOVER:
        kp = TP[10]
        vx = kp * (TP[7] - x)
        vz = kp * (TP[9] - z)
        n = math.sqrt(vx * vx + vz * vz)
        if n > TP[11]:
            f = TP[11] / n
            vx *= f
            vz *= f
        out[0] = vx
        out[1] = vz
        out[2] = TP[7]
        out[3] = TP[9]
    else:
        out[0] = TP[12]
        out[1] = TP[14]
        out[2] = TP[15] + TP[12] * t
        out[3] = TP[17] + TP[14] * t


@njit(cache=True)
def pair_command(P, ang, Xh, Xz, u, sat, i0):
    """Feedback-linearized, clamped thrusts for one tilted rotor pair.

    ``Xh``/``Xz`` is the world force demand in the pair's plane, ``ang`` the
    plane's tilt angle.
    """
    s = math.sin(P[4])
    c = math.cos(P[4])
    ca = math.cos(ang)
    sa = math.sin(ang)
    bx = ca * Xh + sa * Xz
    bz = -sa * Xh + ca * Xz
    a = bx / (2.0 * s)
    b = bz / (2.0 * c)
    raw1 = a + b
    raw2 = b - a
    fmin = P[10]
    fmax = P[11]
    sat[i0] = raw1 < fmin or raw1 > fmax
    sat[i0 + 1] = raw2 < fmin or raw2 > fmax
    u[i0] = min(max(raw1, fmin), fmax)
    u[i0 + 1] = min(max(raw2, fmin), fmax)


@njit(cache=True)
def command2(P, G, y, vd, u, sat):
    net = P[0] * P[12] - P[6]
    Xx = G[0] * (vd[0] - y[3])
    Xz = G[1] * (vd[1] - y[4]) + net
    pair_command(P, y[2], Xx, Xz, u, sat, 0)


@njit(cache=True)
def z_split(Xx, Xy):
    """Share of the vertical demand given to the pitch pair.

    Proportional to each pair's lateral demand, which keeps both pairs off
    their lower thrust limit for the largest set of demands. Motion confined
    to one vertical plane puts the whole vertical load on that plane's pair.
    """
    ax = abs(Xx)
    ay = abs(Xy)
    if ax + ay == 0.0:
        return 0.5
    return ax / (ax + ay)


@njit(cache=True)
def command3(P, G, y, vd, u, sat):
    net = P[0] * P[12] - P[6]
    Xx = G[0] * (vd[0] - y[5])
    Xy = G[1] * (vd[1] - y[6])
    Xz = G[2] * (vd[2] - y[7]) + net
    zs = P[14]
    if zs < 0.0:
        zs = z_split(Xx, Xy)
    pair_command(P, y[3], Xx, zs * Xz, u, sat, 0)
    pair_command(P, y[4], Xy, (1.0 - zs) * Xz, u, sat, 2)


@njit(cache=True)
def deriv2(P, y, u, pin, dy):
    """Planar dynamics; y = [x, z, theta, vx, vz, theta_dot]."""
    m = P[0]
    s = math.sin(P[4])
    c = math.cos(P[4])
    fxb = s * (u[0] - u[1])
    fzb = c * (u[0] + u[1])
    ct = math.cos(y[2])
    st = math.sin(y[2])
    Fx = ct * fxb - st * fzb
    Fz = st * fxb + ct * fzb
    dy[0] = y[3]
    dy[1] = y[4]
    dy[3] = (-P[7] * y[3] + Fx) / m
    dy[4] = (-P[8] * y[4] + (P[6] - m * P[12]) + Fz) / m
    if pin:
        dy[2] = 0.0
        dy[5] = 0.0
    else:
        tau = (P[3] * s - P[2] * c) * (u[0] - u[1])
        dy[2] = y[5]
        dy[5] = (-P[9] * y[5] - P[6] * P[5] * math.sin(y[2]) + tau) / P[1]


@njit(cache=True)
def deriv3(P, y, u, pin, dy):
    """Quasi-3D dynamics; y = [x, y, z, theta, phi, vx, vy, vz, theta_dot, phi_dot]."""
    m = P[0]
    s = math.sin(P[4])
    c = math.cos(P[4])
    fxb = s * (u[0] - u[1])
    fz1 = c * (u[0] + u[1])
    fyb = s * (u[2] - u[3])
    fz2 = c * (u[2] + u[3])
    ct = math.cos(y[3])
    st = math.sin(y[3])
    cp = math.cos(y[4])
    sp = math.sin(y[4])
    Fx = ct * fxb - st * fz1
    Fy = cp * fyb - sp * fz2
    Fz = (st * fxb + ct * fz1) + (sp * fyb + cp * fz2)
    dy[0] = y[5]
    dy[1] = y[6]
    dy[2] = y[7]
    dy[5] = (-P[7] * y[5] + Fx) / m
    dy[6] = (-P[7] * y[6] + Fy) / m
    dy[7] = (-P[8] * y[7] + (P[6] - m * P[12]) + Fz) / m
    if pin:
        dy[3] = 0.0
        dy[4] = 0.0
        dy[8] = 0.0
        dy[9] = 0.0
    else:
        kb = P[6] * P[5]
        tau_p = (P[3] * s - P[2] * c) * (u[0] - u[1])
        tau_r = (P[3] * s - P[13] * c) * (u[2] - u[3])
        dy[3] = y[8]
        dy[4] = y[9]
        dy[8] = (-P[9] * y[8] - kb * math.sin(y[3]) + tau_p) / P[1]
        dy[9] = (-P[9] * y[9] - kb * math.sin(y[4]) + tau_r) / P[1]


@njit(cache=True)
def field(spatial, P, G, kind, TP, t, y, hold, uh, pin, dy, ref, u, sat):
    """Closed-loop vector field; with ``hold`` the command ``uh`` is frozen."""
    if hold:
        for j in range(uh.size):
            u[j] = uh[j]
    elif spatial:
        ref3(kind, TP, t, y[0], y[1], y[2], ref)
        command3(P, G, y, ref, u, sat)
    else:
        ref2(kind, TP, t, y[0], y[1], ref)
        command2(P, G, y, ref, u, sat)
    if spatial:
        deriv3(P, y, u, pin, dy)
    else:
        deriv2(P, y, u, pin, dy)


@njit(cache=True)
def integrate(spatial, P, G, kind, TP, y0, t0, dt, n_steps, method, hold_steps,
              decimate, pin, L):
    """Run the closed loop for ``n_steps`` steps.

    Returns ``(n_records, status, T, Y, U, SAT, REF)`` with record arrays
    already trimmed. Records are taken every ``decimate`` steps, at the final
    step, and at the step where a divergence guard trips.
    """
    ns = y0.size
    nu = 4 if spatial else 2
    nr = 6 if spatial else 4
    half = nr // 2
    cap = n_steps // decimate + 2
    T = np.empty(cap)
    Y = np.empty((cap, ns))
    U = np.empty((cap, nu))
    SAT = np.zeros((cap, nu), dtype=np.bool_)
    REF = np.empty((cap, nr))

    y = y0.copy()
    yt = np.empty(ns)
    k1 = np.empty(ns)
    k2 = np.empty(ns)
    k3 = np.empty(ns)
    k4 = np.empty(ns)
    ref = np.empty(nr)
    scratch_ref = np.empty(nr)
    u = np.empty(nu)
    sat = np.zeros(nu, dtype=np.bool_)
    su = np.empty(nu)
    ssat = np.zeros(nu, dtype=np.bool_)
    uh = np.zeros(nu)
    sath = np.zeros(nu, dtype=np.bool_)
    held = hold_steps > 0
    vmax, amax, ratio, floor, track_steps = L[0], L[1], L[2], L[3], int(L[4])
    n_ang = 2 if spatial else 1
    ang0 = 3 if spatial else 2
    vel0 = 5 if spatial else 3

    n = 0
    status = OK
    lost = 0
    for i in range(n_steps + 1):
        t = t0 + i * dt
        if spatial:
            ref3(kind, TP, t, y[0], y[1], y[2], ref)
            command3(P, G, y, ref, u, sat)
        else:
            ref2(kind, TP, t, y[0], y[1], ref)
            command2(P, G, y, ref, u, sat)
        if held:
            # zero-order hold between controller updates
            if i % hold_steps == 0:
                for j in range(nu):
                    uh[j] = u[j]
                    sath[j] = sat[j]
            else:
                for j in range(nu):
                    u[j] = uh[j]
                    sat[j] = sath[j]

        speed2 = 0.0
        err2 = 0.0
        vd2 = 0.0
        for j in range(half):
            speed2 += y[vel0 + j] ** 2
            err2 += (ref[j] - y[vel0 + j]) ** 2
            vd2 += ref[j] ** 2
        if math.sqrt(speed2) > vmax:
            status = OVERSPEED
        for j in range(n_ang):
            if abs(y[ang0 + j]) > amax:
                status = OVERANGLE
        if track_steps > 0 and status == OK:
            if math.sqrt(err2) > ratio * math.sqrt(vd2) + floor:
                lost += 1
                if lost >= track_steps:
                    status = TRACKING
            else:
                lost = 0

        recorded = False
        if i % decimate == 0 or i == n_steps or status != OK:
            T[n] = t
            Y[n] = y
            U[n] = u
            SAT[n] = sat
            REF[n] = ref
            n += 1
            recorded = True
        if status != OK or i == n_steps:
            break

        hold = held
        if method == RK4:
            field(spatial, P, G, kind, TP, t, y, hold, u, pin, k1, scratch_ref, su, ssat)
            for j in range(ns):
                yt[j] = y[j] + 0.5 * dt * k1[j]
            field(spatial, P, G, kind, TP, t + 0.5 * dt, yt, hold, u, pin, k2, scratch_ref, su, ssat)
            for j in range(ns):
                yt[j] = y[j] + 0.5 * dt * k2[j]
            field(spatial, P, G, kind, TP, t + 0.5 * dt, yt, hold, u, pin, k3, scratch_ref, su, ssat)
            for j in range(ns):
                yt[j] = y[j] + dt * k3[j]
            field(spatial, P, G, kind, TP, t + dt, yt, hold, u, pin, k4, scratch_ref, su, ssat)
            for j in range(ns):
                yt[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        else:
            field(spatial, P, G, kind, TP, t, y, hold, u, pin, k1, scratch_ref, su, ssat)
            for j in range(ns):
                yt[j] = y[j] + dt * k1[j]

        finite = True
        for j in range(ns):
            if not math.isfinite(yt[j]):
                finite = False
        if not finite:
            status = NONFINITE
            if not recorded:
                T[n] = t
                Y[n] = y
                U[n] = u
                SAT[n] = sat
                REF[n] = ref
                n += 1
            break
        for j in range(ns):
            y[j] = yt[j]

    return n, status, T[:n].copy(), Y[:n].copy(), U[:n].copy(), SAT[:n].copy(), REF[:n].copy()
