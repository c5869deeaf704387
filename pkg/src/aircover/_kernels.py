"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

The backend is chosen by the ``AIRCOVER_BACKEND`` environment variable:
``numba`` (default when numba imports), ``numpy`` (force the fallback), or
``auto``.  Both backends implement identical semantics; they differ only in
floating-point summation order, so results agree to roundoff but are not
bit-identical across backends.  Each backend on its own is fully
deterministic.
"""

from __future__ import annotations

import os

import numpy as np

from . import quadcopter as qc

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


BACKEND_ENV = "AIRCOVER_BACKEND"

_G = qc.GRAVITY


def active_backend() -> str:
    """Resolve the kernel backend from the environment."""
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("AIRCOVER_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"unknown {BACKEND_ENV} value {choice!r}")


# ---------------------------------------------------------------------------
# Gaussian mixture field evaluation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _heat_eval_numba(pts, means, precs, amps):
    n_pts = pts.shape[0]
    n_comp = means.shape[0]
    out = np.zeros(n_pts)
    for p in range(n_pts):
        x = pts[p, 0]
        y = pts[p, 1]
        acc = 0.0
        for c in range(n_comp):
            dx = x - means[c, 0]
            dy = y - means[c, 1]
            q = precs[c, 0, 0] * dx * dx + 2.0 * precs[c, 0, 1] * dx * dy + precs[c, 1, 1] * dy * dy
            acc += amps[c] * np.exp(-0.5 * q)
        out[p] = acc
    return out


def _heat_eval_numpy(pts, means, precs, amps, chunk=16384):
    out = np.empty(pts.shape[0])
    pxx = precs[:, 0, 0]
    pxy = precs[:, 0, 1]
    pyy = precs[:, 1, 1]
    for lo in range(0, pts.shape[0], chunk):
        d = pts[lo : lo + chunk, None, :] - means[None, :, :]
        dx, dy = d[..., 0], d[..., 1]
        q = pxx * dx * dx + 2.0 * pxy * dx * dy + pyy * dy * dy
        out[lo : lo + chunk] = np.exp(-0.5 * q) @ amps
    return out


def heat_eval(pts, means, precs, amps):
    """Sum of weighted Gaussian kernels at each query point.

    ``amps[c] * exp(-0.5 (r-mu_c)^T P_c (r-mu_c))`` summed over components,
    with ``P_c`` the precision (inverse covariance) matrices.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if active_backend() == "numba":
        return _heat_eval_numba(pts, means, precs, amps)
    return _heat_eval_numpy(pts, means, precs, amps)


# ---------------------------------------------------------------------------
# Simulation tick loop
# ---------------------------------------------------------------------------

# status codes returned by the loop
SIM_OK = 0
SIM_DIVERGED = 1
SIM_SINGULAR = 2

_POS_LIMIT = 1.0e6


@njit(cache=True)
def _deriv14(s, u, m, out):
    sph = np.sin(s[6])
    cph = np.cos(s[6])
    sth = np.sin(s[7])
    cth = np.cos(s[7])
    sps = np.sin(s[8])
    cps = np.cos(s[8])
    fm = s[12] / m
    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    out[3] = fm * (sph * sps + cph * cps * sth)
    out[4] = fm * (cph * sps * sth - sph * cps)
    out[5] = fm * (cph * cth) - _G
    out[6] = s[9]
    out[7] = s[10]
    out[8] = s[11]
    out[9] = u[1]
    out[10] = u[2]
    out[11] = u[3]
    out[12] = s[13]
    out[13] = u[0]


@njit(cache=True)
def _rk4_14(s, u, m, dt, k1, k2, k3, k4, tmp, out):
    _deriv14(s, u, m, k1)
    for q in range(14):
        tmp[q] = s[q] + 0.5 * dt * k1[q]
    _deriv14(tmp, u, m, k2)
    for q in range(14):
        tmp[q] = s[q] + 0.5 * dt * k2[q]
    _deriv14(tmp, u, m, k3)
    for q in range(14):
        tmp[q] = s[q] + dt * k3[q]
    _deriv14(tmp, u, m, k4)
    for q in range(14):
        out[q] = s[q] + (dt / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])


@njit(cache=True)
def _solve4(a, b, x):
    """In-place partial-pivot elimination for a 4x4 system; 0 on success."""
    for col in range(4):
        piv = col
        big = abs(a[col, col])
        for r in range(col + 1, 4):
            if abs(a[r, col]) > big:
                big = abs(a[r, col])
                piv = r
        if big < 1e-12:
            return 1
        if piv != col:
            for c in range(4):
                t = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = t
            t = b[col]
            b[col] = b[piv]
            b[piv] = t
        inv = 1.0 / a[col, col]
        for r in range(col + 1, 4):
            fac = a[r, col] * inv
            if fac != 0.0:
                for c in range(col, 4):
                    a[r, c] -= fac * a[col, c]
                b[r] -= fac * b[col]
    for r in range(3, -1, -1):
        acc = b[r]
        for c in range(r + 1, 4):
            acc -= a[r, c] * x[c]
        x[r] = acc / a[r, r]
    return 0


@njit(cache=True)
def _control14(s, rd, K, m, f_min, ang_max, z, zd, M1, rhs, u):
    f = s[12]
    fd = s[13]
    phi = s[6]
    th = s[7]
    psi = s[8]
    dphi = s[9]
    dth = s[10]
    dpsi = s[11]
    if f <= f_min or abs(phi) >= ang_max or abs(th) >= ang_max:
        return SIM_SINGULAR
    sph = np.sin(phi)
    cph = np.cos(phi)
    sth = np.sin(th)
    cth = np.cos(th)
    sps = np.sin(psi)
    cps = np.cos(psi)

    ex = sph * sps + cph * cps * sth
    ey = cph * sps * sth - sph * cps
    ez = cph * cth
    ex_p = cph * sps - sph * cps * sth
    ey_p = -sph * sps * sth - cph * cps
    ez_p = -sph * cth
    ex_t = cph * cps * cth
    ey_t = cph * sps * cth
    ez_t = -cph * sth
    ex_s = sph * cps - cph * sps * sth
    ey_s = cph * cps * sth + sph * sps

    edx = ex_p * dphi + ex_t * dth + ex_s * dpsi
    edy = ey_p * dphi + ey_t * dth + ey_s * dpsi
    edz = ez_p * dphi + ez_t * dth

    curv_x = (
        -ex * (dphi * dphi + dpsi * dpsi)
        - cph * cps * sth * dth * dth
        + 2.0 * (-sph * cps * cth * dphi * dth
                 + (cph * cps + sph * sps * sth) * dphi * dpsi
                 - cph * sps * cth * dth * dpsi)
    )
    curv_y = (
        -ey * (dphi * dphi + dpsi * dpsi)
        - cph * sps * sth * dth * dth
        + 2.0 * (-sph * sps * cth * dphi * dth
                 + (cph * sps - sph * cps * sth) * dphi * dpsi
                 + cph * cps * cth * dth * dpsi)
    )
    curv_z = -ez * (dphi * dphi + dth * dth) + 2.0 * sph * sth * dphi * dth

    fm = f / m
    z[0] = s[0]
    z[1] = s[1]
    z[2] = s[2]
    z[3] = s[3]
    z[4] = s[4]
    z[5] = s[5]
    z[6] = fm * ex
    z[7] = fm * ey
    z[8] = fm * ez - _G
    z[9] = fd / m * ex + fm * edx
    z[10] = fd / m * ey + fm * edy
    z[11] = fd / m * ez + fm * edz
    z[12] = psi
    z[13] = dpsi

    zd[0] = rd[0]
    zd[1] = rd[1]
    zd[2] = rd[2]

    for r in range(4):
        acc = 0.0
        for c in range(14):
            acc += K[r, c] * (zd[c] - z[c])
        rhs[r] = acc

    M1[0, 0] = ex / m
    M1[1, 0] = ey / m
    M1[2, 0] = ez / m
    M1[0, 1] = fm * ex_p
    M1[1, 1] = fm * ey_p
    M1[2, 1] = fm * ez_p
    M1[0, 2] = fm * ex_t
    M1[1, 2] = fm * ey_t
    M1[2, 2] = fm * ez_t
    M1[0, 3] = fm * ex_s
    M1[1, 3] = fm * ey_s
    M1[2, 3] = 0.0
    M1[3, 0] = 0.0
    M1[3, 1] = 0.0
    M1[3, 2] = 0.0
    M1[3, 3] = 1.0

    rhs[0] -= 2.0 * fd / m * edx + fm * curv_x
    rhs[1] -= 2.0 * fd / m * edy + fm * curv_y
    rhs[2] -= 2.0 * fd / m * edz + fm * curv_z
    # psi row of the drift term is zero

    if _solve4(M1, rhs, u) != 0:
        return SIM_SINGULAR
    return SIM_OK


@njit(cache=True)
def _blend(t, t0, tf):
    if t >= tf:
        return 1.0
    s = (t - t0) / (tf - t0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


@njit(cache=True)
def _sim_loop_numba(s0, leader, a_pl, p_pl, alt, nbr, omega, varpi, t0, tf, dt, n_steps, K, m, f_min, ang_max):
    n = s0.shape[0]
    slog = np.empty((n_steps + 1, n, 14))
    dlog = np.empty((n_steps + 1, n, 3))
    cur = s0.copy()
    nxt = np.empty((n, 14))
    u = np.empty(4)
    z = np.empty(14)
    zd = np.zeros(14)
    M1 = np.empty((4, 4))
    rhs = np.empty(4)
    k1 = np.empty(14)
    k2 = np.empty(14)
    k3 = np.empty(14)
    k4 = np.empty(14)
    tmp = np.empty(14)

    for step in range(n_steps + 1):
        t = t0 + step * dt
        b = _blend(t, t0, tf)
        late = t >= tf
        for i in range(n):
            if leader[i] != 0:
                if late:
                    dlog[step, i, 0] = p_pl[i, 0]
                    dlog[step, i, 1] = p_pl[i, 1]
                else:
                    dlog[step, i, 0] = (1.0 - b) * a_pl[i, 0] + b * p_pl[i, 0]
                    dlog[step, i, 1] = (1.0 - b) * a_pl[i, 1] + b * p_pl[i, 1]
            else:
                px = 0.0
                py = 0.0
                for j in range(3):
                    nj = nbr[i, j]
                    if late:
                        wj = varpi[i, j]
                    else:
                        wj = (1.0 - b) * omega[i, j] + b * varpi[i, j]
                    px += wj * cur[nj, 0]
                    py += wj * cur[nj, 1]
                dlog[step, i, 0] = px
                dlog[step, i, 1] = py
            dlog[step, i, 2] = alt[i]
        slog[step] = cur
        if step == n_steps:
            break
        for i in range(n):
            code = _control14(cur[i], dlog[step, i], K, m, f_min, ang_max, z, zd, M1, rhs, u)
            if code != SIM_OK:
                return slog, dlog, SIM_SINGULAR, i, step
            _rk4_14(cur[i], u, m, dt, k1, k2, k3, k4, tmp, nxt[i])
            ok = True
            for q in range(14):
                if not np.isfinite(nxt[i, q]):
                    ok = False
                    break
            if ok and (abs(nxt[i, 0]) > _POS_LIMIT or abs(nxt[i, 1]) > _POS_LIMIT or abs(nxt[i, 2]) > _POS_LIMIT):
                ok = False
            if not ok:
                return slog, dlog, SIM_DIVERGED, i, step
        swap = cur
        cur = nxt
        nxt = swap
    return slog, dlog, SIM_OK, -1, -1


def _sim_loop_numpy(s0, leader, a_pl, p_pl, alt, nbr, omega, varpi, t0, tf, dt, n_steps, K, m, f_min, ang_max):
    n = s0.shape[0]
    slog = np.empty((n_steps + 1, n, 14))
    dlog = np.empty((n_steps + 1, n, 3))
    cur = s0.copy()
    is_leader = leader.astype(bool)
    is_follower = ~is_leader
    fol_nbr = nbr[is_follower]
    fol_omega = omega[is_follower]
    fol_varpi = varpi[is_follower]
    guard = np.pi / 2.0 - qc.ATTITUDE_MARGIN

    for step in range(n_steps + 1):
        t = t0 + step * dt
        late = t >= tf
        b = 1.0 if late else _blend_py(t, t0, tf)
        rd = np.empty((n, 3))
        rd[:, 2] = alt
        if late:
            rd[is_leader, 0:2] = p_pl[is_leader]
            w = fol_varpi
        else:
            rd[is_leader, 0:2] = (1.0 - b) * a_pl[is_leader] + b * p_pl[is_leader]
            w = (1.0 - b) * fol_omega + b * fol_varpi
        if np.any(is_follower):
            npos = cur[fol_nbr, 0:2]  # (F, 3, 2)
            rd[is_follower, 0:2] = np.einsum("fj,fjv->fv", w, npos)
        dlog[step] = rd
        slog[step] = cur
        if step == n_steps:
            break

        bad = (cur[:, 12] <= f_min) | (np.abs(cur[:, 6]) >= guard) | (np.abs(cur[:, 7]) >= guard)
        if np.any(bad):
            return slog, dlog, SIM_SINGULAR, int(np.argmax(bad)), step
        z = qc._flat_state_unchecked(cur, m)
        zd = np.zeros((n, 14))
        zd[:, 0:3] = rd
        wvec = (zd - z) @ K.T
        M1, M2 = qc._linearizing_unchecked(cur, m)
        try:
            u = np.linalg.solve(M1, (wvec - M2)[..., None])[..., 0]
        except np.linalg.LinAlgError:
            sing = np.abs(np.linalg.det(M1)) < 1e-300
            return slog, dlog, SIM_SINGULAR, int(np.argmax(sing)), step

        k1 = qc.derivative(cur, u, m)
        k2 = qc.derivative(cur + 0.5 * dt * k1, u, m)
        k3 = qc.derivative(cur + 0.5 * dt * k2, u, m)
        k4 = qc.derivative(cur + dt * k3, u, m)
        nxt = cur + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        broken = ~np.all(np.isfinite(nxt), axis=1)
        broken |= np.any(np.abs(nxt[:, 0:3]) > _POS_LIMIT, axis=1)
        if np.any(broken):
            return slog, dlog, SIM_DIVERGED, int(np.argmax(broken)), step
        cur = nxt
    return slog, dlog, SIM_OK, -1, -1


def _blend_py(t, t0, tf):
    if t >= tf:
        return 1.0
    s = (t - t0) / (tf - t0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def sim_loop(s0, leader, a_pl, p_pl, alt, nbr, omega, varpi, t0, tf, dt, n_steps, K, m, f_min=qc.F_MIN, ang_max=np.pi / 2.0 - qc.ATTITUDE_MARGIN):
    """Run the synchronous coordination loop; returns (states, desired, status, agent, step).

    Per tick: every desired input is computed from the tick-start position
    snapshot (leaders blend reference -> planned position, followers take the
    weighted combination of their in-neighbors' measured positions), then all
    vehicles apply tracking control and advance one RK4 step with the input
    held.  Logged arrays cover every tick including the initial state.
    """
    args = (
        np.ascontiguousarray(s0, dtype=np.float64),
        np.ascontiguousarray(leader, dtype=np.int8),
        np.ascontiguousarray(a_pl, dtype=np.float64),
        np.ascontiguousarray(p_pl, dtype=np.float64),
        np.ascontiguousarray(alt, dtype=np.float64),
        np.ascontiguousarray(nbr, dtype=np.int64),
        np.ascontiguousarray(omega, dtype=np.float64),
        np.ascontiguousarray(varpi, dtype=np.float64),
        float(t0),
        float(tf),
        float(dt),
        int(n_steps),
        np.ascontiguousarray(K, dtype=np.float64),
        float(m),
        float(f_min),
        float(ang_max),
    )
    if active_backend() == "numba":
        return _sim_loop_numba(*args)
    return _sim_loop_numpy(*args)
