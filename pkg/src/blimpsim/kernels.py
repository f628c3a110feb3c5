"""Numba-compiled twins of the dynamics used on the hot path.

The receding-horizon solvers evaluate thousands of rollouts per control
tick; these kernels implement the same equations as dynamics.py in scalar
form so a full residual stack stays out of the numpy dispatch overhead.
Agreement with the reference implementation is enforced by tests.

Parameter vectors are produced by PlantModel.pack(); the index constants
below define the layout.
"""

import math

import numpy as np
from numba import njit

# PlantModel.pack() layout
P_M = 0
P_MBAR = 1
P_BUOY = 2
P_G = 3
P_RSTAT = 4  # 4..6
P_INERTIA = 7  # 7..15 row-major
P_RHO = 16
P_AREA = 17
P_BB_LEN = 18
P_CABLE_D = 19
P_BASE_H = 20
P_CD0 = 21
P_CDA2 = 22
P_CDB2 = 23
P_CS0 = 24
P_CSB = 25
P_CL0 = 26
P_CLA = 27
P_CTXB = 28
P_CTY0 = 29
P_CTYA = 30
P_CTZ0 = 31
P_CTZB = 32
P_KX = 33
P_KY = 34
P_KZ = 35
PARAM_LEN = 36

PITCH_MARGIN = 1e-3
EPS_AIRSPEED = 1e-3
EPS_Q = 1e-6


@njit(cache=True)
def wrap_angle(a):
    w = (a + math.pi) % (2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@njit(cache=True)
def _solve6_spd(M, b, out):
    """Solve M x = b for symmetric positive definite 6x6 M via Cholesky.

    Returns False when the factorization breaks down (M not PD).
    """
    L = np.zeros((6, 6))
    for j in range(6):
        s = M[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0:
            return False
        L[j, j] = math.sqrt(s)
        for i in range(j + 1, 6):
            t = M[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    # forward then backward substitution
    y = np.empty(6)
    for i in range(6):
        t = b[i]
        for k in range(i):
            t -= L[i, k] * y[k]
        y[i] = t / L[i, i]
    for i in range(5, -1, -1):
        t = y[i]
        for k in range(i + 1, 6):
            t -= L[k, i] * out[k]
        out[i] = t / L[i, i]
    return True


@njit(cache=True)
def _mass_position(dx, dy, L, d, h):
    delta = math.hypot(dx, dy)
    if delta < EPS_Q:
        half = L / (2.0 * d)
        return half * dx, half * dy, h + L * (1.0 - delta * delta / (6.0 * d * d))
    g = delta / d
    c = L * d / (delta * delta)
    bend = c * (1.0 - math.cos(g))
    return dx * bend, dy * bend, h + c * delta * math.sin(g)


@njit(cache=True)
def rhs(x, u, vw, P, out):
    """Derivative of the 12-state vector; False on singular/invalid input."""
    th = x[4]
    if abs(th) >= math.pi / 2.0 - PITCH_MARGIN or not math.isfinite(th):
        return False
    phi = x[3]
    psi = x[5]
    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(th), math.sin(th)
    cps, sps = math.cos(psi), math.sin(psi)

    r00 = cps * cth
    r01 = cps * sth * sph - sps * cph
    r02 = cps * sth * cph + sps * sph
    r10 = sps * cth
    r11 = sps * sth * sph + cps * cph
    r12 = sps * sth * cph - cps * sph
    r20 = -sth
    r21 = cth * sph
    r22 = cth * cph

    vx, vy, vz = x[6], x[7], x[8]
    wx, wy, wz = x[9], x[10], x[11]

    out[0] = r00 * vx + r01 * vy + r02 * vz
    out[1] = r10 * vx + r11 * vy + r12 * vz
    out[2] = r20 * vx + r21 * vy + r22 * vz

    tth = sth / cth
    out[3] = wx + sph * tth * wy + cph * tth * wz
    out[4] = cph * wy - sph * wz
    out[5] = (sph * wy + cph * wz) / cth

    F = u[0]
    rbx, rby, rbz = _mass_position(u[1], u[2], P[P_BB_LEN], P[P_CABLE_D], P[P_BASE_H])

    m = P[P_M]
    mbar = P[P_MBAR]
    mt = m + mbar
    lgx = m * P[P_RSTAT] + mbar * rbx
    lgy = m * P[P_RSTAT + 1] + mbar * rby
    lgz = m * P[P_RSTAT + 2] + mbar * rbz

    # air-relative velocity in the body frame: v_b - R^T v_w
    vax = vx - (r00 * vw[0] + r10 * vw[1] + r20 * vw[2])
    vay = vy - (r01 * vw[0] + r11 * vw[1] + r21 * vw[2])
    vaz = vz - (r02 * vw[0] + r12 * vw[1] + r22 * vw[2])
    V = math.sqrt(vax * vax + vay * vay + vaz * vaz)

    fax = 0.0
    fay = 0.0
    faz = 0.0
    tax = 0.0
    tay = 0.0
    taz = 0.0
    if V > EPS_AIRSPEED:
        alpha = math.atan2(vaz, vax)
        sinb = vay / V
        if sinb > 1.0:
            sinb = 1.0
        elif sinb < -1.0:
            sinb = -1.0
        beta = math.asin(sinb)
        q_dyn = 0.5 * P[P_RHO] * V * V * P[P_AREA]
        D = q_dyn * (P[P_CD0] + P[P_CDA2] * alpha * alpha + P[P_CDB2] * beta * beta)
        S = q_dyn * (P[P_CS0] + P[P_CSB] * beta)
        LL = q_dyn * (P[P_CL0] + P[P_CLA] * alpha)
        Tx = q_dyn * P[P_CTXB] * beta
        Ty = q_dyn * (P[P_CTY0] + P[P_CTYA] * alpha)
        Tz = q_dyn * (P[P_CTZ0] + P[P_CTZB] * beta)
        ca, sa = math.cos(alpha), math.sin(alpha)
        cb, sb = math.cos(beta), math.sin(beta)
        fax = ca * cb * (-D) - ca * sb * S + sa * LL
        fay = sb * (-D) + cb * S
        faz = sa * cb * (-D) - sa * sb * S - ca * LL
        tax = ca * cb * Tx - ca * sb * Ty - sa * Tz
        tay = sb * Tx + cb * Ty
        taz = sa * cb * Tx - sa * sb * Ty + ca * Tz
    # rate damping acts in the body frame, after the flow rotation
    tax += P[P_KX] * wx
    tay += P[P_KY] * wy
    taz += P[P_KZ] * wz

    s_net = mt * P[P_G] - P[P_BUOY]
    # cross(v, w)
    cvx = vy * wz - vz * wy
    cvy = vz * wx - vx * wz
    cvz = vx * wy - vy * wx
    # cross(cross(w, lg), w)
    wlx = wy * lgz - wz * lgy
    wly = wz * lgx - wx * lgz
    wlz = wx * lgy - wy * lgx
    c2x = wly * wz - wlz * wy
    c2y = wlz * wx - wlx * wz
    c2z = wlx * wy - wly * wx

    fx = mt * cvx + c2x + s_net * r20 + fax + F
    fy = mt * cvy + c2y + s_net * r21 + fay
    fz = mt * cvz + c2z + s_net * r22 + faz

    # (I - mbar (r_bar x)^2) w  =  I w - mbar * r_bar x (r_bar x w)
    rcx = rby * wz - rbz * wy
    rcy = rbz * wx - rbx * wz
    rcz = rbx * wy - rby * wx
    rccx = rby * rcz - rbz * rcy
    rccy = rbz * rcx - rbx * rcz
    rccz = rbx * rcy - rby * rcx
    i0 = P_INERTIA
    Jwx = P[i0] * wx + P[i0 + 1] * wy + P[i0 + 2] * wz - mbar * rccx
    Jwy = P[i0 + 3] * wx + P[i0 + 4] * wy + P[i0 + 5] * wz - mbar * rccy
    Jwz = P[i0 + 6] * wx + P[i0 + 7] * wy + P[i0 + 8] * wz - mbar * rccz

    tx = (lgy * cvz - lgz * cvy) + (Jwy * wz - Jwz * wy) \
        + P[P_G] * (lgy * r22 - lgz * r21) + tax
    ty = (lgz * cvx - lgx * cvz) + (Jwz * wx - Jwx * wz) \
        + P[P_G] * (lgz * r20 - lgx * r22) + tay + F * P[P_BASE_H]
    tz = (lgx * cvy - lgy * cvx) + (Jwx * wy - Jwy * wx) \
        + P[P_G] * (lgx * r21 - lgy * r20) + taz

    # mass matrix: [[mt I, -lg x], [lg x, I - mbar (r_bar x)^2]]
    M = np.zeros((6, 6))
    M[0, 0] = mt
    M[1, 1] = mt
    M[2, 2] = mt
    M[0, 4] = lgz
    M[0, 5] = -lgy
    M[1, 3] = -lgz
    M[1, 5] = lgx
    M[2, 3] = lgy
    M[2, 4] = -lgx
    M[3, 1] = -lgz
    M[3, 2] = lgy
    M[4, 0] = lgz
    M[4, 2] = -lgx
    M[5, 0] = -lgy
    M[5, 1] = lgx
    rb2 = rbx * rbx + rby * rby + rbz * rbz
    for i in range(3):
        for j in range(3):
            M[3 + i, 3 + j] = P[i0 + 3 * i + j]
    M[3, 3] += mbar * (rb2 - rbx * rbx)
    M[3, 4] += mbar * (-rbx * rby)
    M[3, 5] += mbar * (-rbx * rbz)
    M[4, 3] += mbar * (-rby * rbx)
    M[4, 4] += mbar * (rb2 - rby * rby)
    M[4, 5] += mbar * (-rby * rbz)
    M[5, 3] += mbar * (-rbz * rbx)
    M[5, 4] += mbar * (-rbz * rby)
    M[5, 5] += mbar * (rb2 - rbz * rbz)

    b = np.empty(6)
    b[0] = fx
    b[1] = fy
    b[2] = fz
    b[3] = tx
    b[4] = ty
    b[5] = tz
    acc = np.empty(6)
    if not _solve6_spd(M, b, acc):
        return False
    for i in range(6):
        out[6 + i] = acc[i]
    return True


@njit(cache=True)
def rk4_step(x, u, vw, dt, P, out):
    """One explicit RK4 step; False on failure anywhere in the stage chain."""
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    tmp = np.empty(12)
    if not rhs(x, u, vw, P, k1):
        return False
    for i in range(12):
        tmp[i] = x[i] + 0.5 * dt * k1[i]
    if not rhs(tmp, u, vw, P, k2):
        return False
    for i in range(12):
        tmp[i] = x[i] + 0.5 * dt * k2[i]
    if not rhs(tmp, u, vw, P, k3):
        return False
    for i in range(12):
        tmp[i] = x[i] + dt * k3[i]
    if not rhs(tmp, u, vw, P, k4):
        return False
    ok = True
    for i in range(12):
        v = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        out[i] = v
        if not math.isfinite(v):
            ok = False
    return ok


@njit(cache=True)
def rollout(x0, U, vw, dt, P, X):
    """Roll n = U.shape[0] steps under constant wind; X has shape (n+1, 12).

    On failure the remaining states are NaN and False is returned.
    """
    n = U.shape[0]
    for i in range(12):
        X[0, i] = x0[i]
    for k in range(n):
        if not rk4_step(X[k], U[k], vw, dt, P, X[k + 1]):
            for r in range(k + 1, n + 1):
                for i in range(12):
                    X[r, i] = np.nan
            return False
    return True


@njit(cache=True)
def substepped_step(x, u, vw, dt, n_sub, P, out):
    """Ground-truth step: n_sub RK4 substeps with frozen input and wind."""
    cur = np.empty(12)
    nxt = np.empty(12)
    for i in range(12):
        cur[i] = x[i]
    h = dt / n_sub
    for _ in range(n_sub):
        if not rk4_step(cur, u, vw, h, P, nxt):
            return False
        for i in range(12):
            cur[i] = nxt[i]
    for i in range(12):
        out[i] = cur[i]
    return True


@njit(cache=True)
def mhe_residual_batch(Z, Y, U, x_prior, w_prior, sqx, sqw, squ,
                       pos_scale, ang_scale, dt, P, out):
    """Residual stack for the estimation problem, one row set per column of Z.

    Z is (B, 15): initial window state and wind. Y is (K+1, 6) pose
    measurements, U is (K, 3) applied inputs. Residual layout per row b:
     [ sqx*(x0 - x_prior) | sqw*(vw - w_prior) | per-sample weighted pose
    mismatch with positions scaled by pos_scale and wrapped angles by
    ang_scale ]. Rows turn NaN when the rollout fails.
    """
    B = Z.shape[0]
    K = U.shape[0]
    x = np.empty(12)
    xn = np.empty(12)
    vw = np.empty(3)
    for b in range(B):
        for i in range(12):
            x[i] = Z[b, i]
        for i in range(3):
            vw[i] = Z[b, 12 + i]
        for i in range(12):
            out[b, i] = sqx[i] * (Z[b, i] - x_prior[i])
        for i in range(3):
            out[b, 12 + i] = sqw[i] * (vw[i] - w_prior[i])
        idx = 15
        failed = False
        for k in range(K + 1):
            if failed:
                for j in range(6):
                    out[b, idx + j] = np.nan
                idx += 6
                continue
            for j in range(3):
                out[b, idx + j] = squ[j] * pos_scale * (Y[k, j] - x[j])
            for j in range(3):
                out[b, idx + 3 + j] = squ[3 + j] * ang_scale * \
                    wrap_angle(Y[k, 3 + j] - x[3 + j])
            idx += 6
            if k < K:
                if rk4_step(x, U[k], vw, dt, P, xn):
                    for i in range(12):
                        x[i] = xn[i]
                else:
                    failed = True
        if failed:
            for j in range(out.shape[1]):
                out[b, j] = np.nan


@njit(cache=True)
def mpc_residual_batch(Z, x0, vw, u_prev, x_des, sqx, squ, pen, lims,
                       dt, P, out):
    """Residual stack for the control problem, one row set per column of Z.

    Z is (B, 3M): flattened input sequences. Per step j the layout is
    [ squ*(u_j - u_{j-1}) | sqx*(x_{j+1} - x_des) (angles wrapped) | six
    hinge rows ]. lims = (att_limit, v_fwd_min, v_fwd_max, v_lat_max);
    hinge rows are sqrt-weighted by pen and vanish inside the boxes.
    """
    B = Z.shape[0]
    M = Z.shape[1] // 3
    x = np.empty(12)
    xn = np.empty(12)
    u = np.empty(3)
    att_lim = lims[0]
    v_fwd_min = lims[1]
    v_fwd_max = lims[2]
    v_lat_max = lims[3]
    for b in range(B):
        for i in range(12):
            x[i] = x0[i]
        upx, upy, upz = u_prev[0], u_prev[1], u_prev[2]
        idx = 0
        failed = False
        for j in range(M):
            u[0] = Z[b, 3 * j]
            u[1] = Z[b, 3 * j + 1]
            u[2] = Z[b, 3 * j + 2]
            out[b, idx] = squ[0] * (u[0] - upx)
            out[b, idx + 1] = squ[1] * (u[1] - upy)
            out[b, idx + 2] = squ[2] * (u[2] - upz)
            idx += 3
            upx, upy, upz = u[0], u[1], u[2]
            if not failed:
                if rk4_step(x, u, vw, dt, P, xn):
                    for i in range(12):
                        x[i] = xn[i]
                else:
                    failed = True
            if failed:
                for r in range(18):
                    out[b, idx + r] = np.nan
                idx += 18
                continue
            for c in range(12):
                d = x[c] - x_des[c]
                if 3 <= c < 6:
                    d = wrap_angle(d)
                out[b, idx] = sqx[c] * d
                idx += 1
            for c in range(3):
                over = abs(x[3 + c]) - att_lim
                out[b, idx] = pen * over if over > 0.0 else 0.0
                idx += 1
            vfx = x[6]
            over = vfx - v_fwd_max
            under = v_fwd_min - vfx
            h = over if over > 0.0 else (under if under > 0.0 else 0.0)
            out[b, idx] = pen * h
            idx += 1
            for c in range(2):
                over = abs(x[7 + c]) - v_lat_max
                out[b, idx] = pen * over if over > 0.0 else 0.0
                idx += 1
        if failed:
            for j in range(out.shape[1]):
                out[b, j] = np.nan
