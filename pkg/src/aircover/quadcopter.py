"""Nonlinear 14-state quadcopter model and feedback-linearization tracking control.

State layout (fixed order, SI units):

    [x, y, z, vx, vy, vz, phi, theta, psi, dphi, dtheta, dpsi, f, fdot]

with roll/pitch/yaw angles in radians and thrust magnitude ``f`` in newtons.
The control vector is ``u = [fddot, phiddot, thetaddot, psiddot]``.  Thrust
points along the body axis ``e(phi, theta, psi)``, so translational
acceleration is ``(f/m) e - g e_z``.  Differentiating twice more gives the
exact input map ``d^4 r/dt^4 = M1 u + M2`` used by the tracking controller.

All state functions broadcast over leading axes, so a batch of vehicles can be
evaluated as a ``(N, 14)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, SingularityError

GRAVITY = 9.81  # m/s^2

STATE_DIM = 14
FLAT_DIM = 14

#: Default vehicle mass, kg.
DEFAULT_MASS = 1.2

#: Thrust floor below which the input map is treated as singular, N.
F_MIN = 0.1

#: Roll/pitch guard: |angle| must stay below pi/2 minus this margin, rad.
ATTITUDE_MARGIN = 0.05

#: Largest admissible integrator step, s.
DT_MAX = 0.02

DEFAULT_POLES_TRANSLATIONAL = (-2.0, -2.5, -3.0, -3.5)
DEFAULT_POLES_YAW = (-3.0, -4.0)


def _trig(state):
    phi, th, psi = state[..., 6], state[..., 7], state[..., 8]
    return np.sin(phi), np.cos(phi), np.sin(th), np.cos(th), np.sin(psi), np.cos(psi)


def thrust_axis(state):
    """Unit body thrust direction e(phi, theta, psi), shape (..., 3)."""
    sph, cph, sth, cth, sps, cps = _trig(state)
    return np.stack(
        [sph * sps + cph * cps * sth, cph * sps * sth - sph * cps, cph * cth],
        axis=-1,
    )


def _axis_jacobian(state):
    """d e / d(phi, theta, psi) as (..., 3, 3) with one column per angle."""
    sph, cph, sth, cth, sps, cps = _trig(state)
    zeros = np.zeros_like(sph)
    e_phi = np.stack([cph * sps - sph * cps * sth, -sph * sps * sth - cph * cps, -sph * cth], axis=-1)
    e_th = np.stack([cph * cps * cth, cph * sps * cth, -cph * sth], axis=-1)
    e_psi = np.stack([sph * cps - cph * sps * sth, cph * cps * sth + sph * sps, zeros], axis=-1)
    return np.stack([e_phi, e_th, e_psi], axis=-1)


def _axis_rate(state):
    """Time derivative of the thrust axis along the current angular rates."""
    jac = _axis_jacobian(state)
    rates = state[..., 9:12]
    return np.einsum("...ij,...j->...i", jac, rates)


def _axis_curvature(state):
    """Velocity-quadratic part of the second time derivative of the thrust axis."""
    sph, cph, sth, cth, sps, cps = _trig(state)
    zeros = np.zeros_like(sph)
    ex = sph * sps + cph * cps * sth
    ey = cph * sps * sth - sph * cps
    ez = cph * cth
    h_pp = np.stack([-ex, -ey, -ez], axis=-1)                                   # phi,phi
    h_pt = np.stack([-sph * cps * cth, -sph * sps * cth, sph * sth], axis=-1)   # phi,theta
    h_ps = np.stack([cph * cps + sph * sps * sth, cph * sps - sph * cps * sth, zeros], axis=-1)
    h_tt = np.stack([-cph * cps * sth, -cph * sps * sth, -ez], axis=-1)         # theta,theta
    h_ts = np.stack([-cph * sps * cth, cph * cps * cth, zeros], axis=-1)        # theta,psi
    h_ss = np.stack([-ex, -ey, zeros], axis=-1)                                 # psi,psi
    dp = state[..., 9:10]
    dt = state[..., 10:11]
    ds = state[..., 11:12]
    return (
        h_pp * dp * dp
        + h_tt * dt * dt
        + h_ss * ds * ds
        + 2.0 * (h_pt * dp * dt + h_ps * dp * ds + h_ts * dt * ds)
    )


def derivative(state, u, mass: float = DEFAULT_MASS):
    """Right-hand side of the vehicle ODE for control input ``u``."""
    s = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(u))):
        raise ValueError("state and input must be finite")
    out = np.empty_like(s)
    out[..., 0:3] = s[..., 3:6]
    acc = (s[..., 12:13] / mass) * thrust_axis(s)
    out[..., 3:5] = acc[..., 0:2]
    out[..., 5] = acc[..., 2] - GRAVITY
    out[..., 6:9] = s[..., 9:12]
    out[..., 9:12] = u[..., 1:4]
    out[..., 12] = s[..., 13]
    out[..., 13] = u[..., 0]
    return out


def envelope_ok(state) -> np.ndarray:
    """True where roll/pitch are inside the validity envelope and f > 0."""
    s = np.asarray(state, dtype=float)
    lim = np.pi / 2.0
    return (
        (np.abs(s[..., 6]) < lim)
        & (np.abs(s[..., 7]) < lim)
        & (s[..., 12] > 0.0)
        & np.all(np.isfinite(s), axis=-1)
    )


def flat_state(state, mass: float = DEFAULT_MASS):
    """Transform the vehicle state to [r, dr, ddr, dddr, psi, dpsi]."""
    s = np.asarray(state, dtype=float)
    if not np.all(envelope_ok(s)):
        raise SingularityError("state outside the model validity envelope")
    return _flat_state_unchecked(s, mass)


def _flat_state_unchecked(s, mass):
    e = thrust_axis(s)
    fm = s[..., 12:13] / mass
    acc = fm * e
    jerk = (s[..., 13:14] / mass) * e + fm * _axis_rate(s)
    z = np.empty(s.shape[:-1] + (FLAT_DIM,))
    z[..., 0:3] = s[..., 0:3]
    z[..., 3:6] = s[..., 3:6]
    z[..., 6:8] = acc[..., 0:2]
    z[..., 8] = acc[..., 2] - GRAVITY
    z[..., 9:12] = jerk
    z[..., 12] = s[..., 8]
    z[..., 13] = s[..., 11]
    return z


def singular_mask(state) -> np.ndarray:
    """True where the input map may not be inverted (low thrust / extreme tilt)."""
    s = np.asarray(state, dtype=float)
    guard = np.pi / 2.0 - ATTITUDE_MARGIN
    return (s[..., 12] <= F_MIN) | (np.abs(s[..., 6]) >= guard) | (np.abs(s[..., 7]) >= guard)


def linearizing_matrices(state, mass: float = DEFAULT_MASS, with_condition: bool = False):
    """Exact input map of the 4th position derivative: returns (M1, M2).

    ``[x'''' y'''' z'''' psi''] = M1 @ u + M2`` along the vehicle dynamics.
    M1 is invertible away from the thrust floor and attitude guard; violating
    either raises :class:`SingularityError`.  With ``with_condition=True`` the
    2-norm condition number of M1 is appended to the return tuple.
    """
    s = np.asarray(state, dtype=float)
    bad = singular_mask(s)
    if np.any(bad):
        raise SingularityError(
            f"input map singular: thrust <= {F_MIN} N or attitude within "
            f"{ATTITUDE_MARGIN} rad of pi/2"
        )
    M1, M2 = _linearizing_unchecked(s, mass)
    if with_condition:
        return M1, M2, np.linalg.cond(M1)
    return M1, M2


def _linearizing_unchecked(s, mass):
    e = thrust_axis(s)
    jac = _axis_jacobian(s)
    fm = s[..., 12:13] / mass
    M1 = np.zeros(s.shape[:-1] + (4, 4))
    M1[..., 0:3, 0] = e / mass
    M1[..., 0:3, 1:4] = fm[..., None] * jac
    M1[..., 3, 3] = 1.0
    M2 = np.zeros(s.shape[:-1] + (4,))
    M2[..., 0:3] = (2.0 * s[..., 13:14] / mass) * _axis_rate(s) + fm * _axis_curvature(s)
    return M1, M2


def flat_target(position, yaw: float = 0.0):
    """Constant-position flat reference with zero derivative blocks."""
    zd = np.zeros(FLAT_DIM)
    zd[0:3] = np.asarray(position, dtype=float)
    zd[12] = yaw
    return zd


@dataclass(frozen=True)
class ControllerGains:
    """Feedback gain matrix on the flat state plus the vehicle mass.

    Construction rejects gains for which the closed-loop flat dynamics are
    not Hurwitz.
    """

    K: np.ndarray  # (4, 14)
    mass: float = DEFAULT_MASS

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        object.__setattr__(self, "K", K)
        if K.shape != (4, FLAT_DIM):
            raise ValueError(f"K must be (4, {FLAT_DIM}), got {K.shape}")
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        A, B = external_dynamics()
        eig = np.linalg.eigvals(A - B @ K)
        if np.any(eig.real >= 0.0):
            raise ValueError(f"closed loop is not Hurwitz: eigenvalues {np.sort(eig.real)[-3:]}")


def external_dynamics():
    """State/input matrices of the transformed (flat) dynamics."""
    A = np.zeros((FLAT_DIM, FLAT_DIM))
    A[0:9, 3:12] = np.eye(9)
    A[12, 13] = 1.0
    B = np.zeros((FLAT_DIM, 4))
    B[9:12, 0:3] = np.eye(3)
    B[13, 3] = 1.0
    return A, B


def design_gains(
    poles_translational=DEFAULT_POLES_TRANSLATIONAL,
    poles_yaw=DEFAULT_POLES_YAW,
    mass: float = DEFAULT_MASS,
) -> ControllerGains:
    """Pole placement on the per-axis integrator chains.

    The transformed dynamics decouple into three quadruple integrators
    (x, y, z) and one double integrator (yaw), so placement reduces to
    characteristic-polynomial coefficients.  Requested poles must lie
    strictly in the open left half-plane; the realized closed-loop spectrum
    is verified to match within 1e-8.
    """
    pt = np.atleast_1d(np.asarray(poles_translational, dtype=complex))
    py = np.atleast_1d(np.asarray(poles_yaw, dtype=complex))
    if pt.shape != (4,) or py.shape != (2,):
        raise ValueError("need 4 translational poles and 2 yaw poles")
    for p in np.concatenate([pt, py]):
        if p.real >= 0.0:
            raise ValueError(f"pole {p} is not strictly in the left half-plane")

    ct = np.poly(pt)  # s^4 + ct[1] s^3 + ... + ct[4]
    cy = np.poly(py)
    if np.max(np.abs(ct.imag)) > 1e-9 or np.max(np.abs(cy.imag)) > 1e-9:
        raise ValueError("poles must be real or closed under conjugation")
    ct = ct.real
    cy = cy.real

    K = np.zeros((4, FLAT_DIM))
    for axis in range(3):
        K[axis, [axis, axis + 3, axis + 6, axis + 9]] = [ct[4], ct[3], ct[2], ct[1]]
    K[3, 12] = cy[2]
    K[3, 13] = cy[1]

    A, B = external_dynamics()
    achieved = np.sort_complex(np.linalg.eigvals(A - B @ K))
    wanted = np.sort_complex(np.concatenate([np.repeat(pt, 3), py]))
    if np.max(np.abs(achieved - wanted)) > 1e-8:
        raise ValueError("realized closed-loop poles deviate from the request")
    return ControllerGains(K=K, mass=mass)


def tracking_control(state, target, gains: ControllerGains):
    """Feedback-linearizing tracking law ``u = M1^-1 (K (z_d - z) - M2)``."""
    s = np.asarray(state, dtype=float)
    zd = np.asarray(target, dtype=float)
    M1, M2 = linearizing_matrices(s, gains.mass)
    z = _flat_state_unchecked(s, gains.mass)
    w = np.einsum("ij,...j->...i", gains.K, zd - z)
    return np.linalg.solve(M1, (w - M2)[..., None])[..., 0]


def step(state, u, dt: float, mass: float = DEFAULT_MASS):
    """One classical Runge-Kutta step of the vehicle ODE (held input)."""
    if not 0.0 < dt <= DT_MAX:
        raise ValueError(f"dt must lie in (0, {DT_MAX}], got {dt}")
    s = np.asarray(state, dtype=float)
    k1 = derivative(s, u, mass)
    k2 = derivative(s + 0.5 * dt * k1, u, mass)
    k3 = derivative(s + 0.5 * dt * k2, u, mass)
    k4 = derivative(s + dt * k3, u, mass)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("integration produced a non-finite state")
    return out


def hover_state(position, mass: float = DEFAULT_MASS):
    """Hover equilibrium at ``position``: level attitude, thrust m*g."""
    s = np.zeros(STATE_DIM)
    s[0:3] = np.asarray(position, dtype=float)
    s[12] = mass * GRAVITY
    return s
