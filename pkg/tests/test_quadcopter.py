import math

import numpy as np
import pytest

from aircover import quadcopter as qc
from aircover.errors import SingularityError


def random_state(rng, mass=qc.DEFAULT_MASS):
    s = np.zeros(14)
    s[0:3] = rng.uniform(-5, 5, 3)
    s[3:6] = rng.uniform(-2, 2, 3)
    s[6:8] = rng.uniform(-0.4, 0.4, 2)  # roll/pitch well inside the envelope
    s[8] = rng.uniform(-1.0, 1.0)
    s[9:12] = rng.uniform(-0.5, 0.5, 3)
    s[12] = mass * qc.GRAVITY * rng.uniform(0.7, 1.3)
    s[13] = rng.uniform(-2, 2)
    return s


def test_hover_derivative_is_zero():
    s = qc.hover_state([1.0, -2.0, 5.0])
    d = qc.derivative(s, np.zeros(4))
    assert np.abs(d).max() == 0.0


def test_free_fall_acceleration():
    s = qc.hover_state([0, 0, 10])
    s[12] = 0.0
    d = qc.derivative(s, np.zeros(4))
    assert d[5] == pytest.approx(-9.81, abs=0.0)


def test_pitch_only_acceleration_matches_printed_field():
    # independent re-evaluation of the translational rows
    m = qc.DEFAULT_MASS
    s = qc.hover_state([0, 0, 0], m)
    s[7] = 0.1  # pitch
    d = qc.derivative(s, np.zeros(4), m)
    f = s[12]
    phi, th, psi = 0.0, 0.1, 0.0
    ax = f / m * (math.sin(phi) * math.sin(psi) + math.cos(phi) * math.cos(psi) * math.sin(th))
    ay = f / m * (math.cos(phi) * math.sin(psi) * math.sin(th) - math.sin(phi) * math.cos(psi))
    az = f / m * math.cos(phi) * math.cos(th) - 9.81
    np.testing.assert_allclose(d[3:6], [ax, ay, az], rtol=1e-15)


def test_derivative_rejects_nonfinite():
    s = qc.hover_state([0, 0, 0])
    s[3] = np.inf
    with pytest.raises(ValueError):
        qc.derivative(s, np.zeros(4))


def test_flat_state_hover():
    s = qc.hover_state([1.0, 2.0, 3.0])
    z = qc.flat_state(s)
    np.testing.assert_array_equal(z[0:3], [1.0, 2.0, 3.0])
    assert np.abs(z[3:14]).max() == 0.0


def test_flat_state_thrust_rate_gives_vertical_jerk():
    m = 1.7
    s = qc.hover_state([0, 0, 0], m)
    s[13] = 0.9
    z = qc.flat_state(s, m)
    assert z[11] == pytest.approx(0.9 / m, rel=1e-15)
    assert abs(z[9]) < 1e-15 and abs(z[10]) < 1e-15


def test_flat_state_jerk_matches_finite_difference_of_acceleration():
    # integrate a short constant-input trajectory and difference the analytic
    # acceleration; this validates the jerk rows independently
    rng = np.random.default_rng(2)
    m = qc.DEFAULT_MASS
    dt = 1e-4
    for _ in range(10):
        s = random_state(rng, m)
        u = rng.uniform(-1, 1, 4)
        s_m = qc.step(s, u, dt, m)
        s_p = qc.step(s_m, u, dt, m)
        states = [s, s_m, s_p]
        accs = [qc.flat_state(x, m)[6:9] for x in states]
        fd_jerk = (accs[2] - accs[0]) / (2 * dt)
        jerk = qc.flat_state(s_m, m)[9:12]
        np.testing.assert_allclose(jerk, fd_jerk, rtol=1e-4, atol=1e-7)


def test_acceleration_matches_finite_difference_of_position():
    rng = np.random.default_rng(3)
    m = qc.DEFAULT_MASS
    dt = 1e-4
    s = random_state(rng, m)
    u = rng.uniform(-1, 1, 4)
    s_m = qc.step(s, u, dt, m)
    s_p = qc.step(s_m, u, dt, m)
    fd_acc = (s[0:3] - 2 * s_m[0:3] + s_p[0:3]) / dt**2
    np.testing.assert_allclose(qc.flat_state(s_m, m)[6:9], fd_acc, rtol=1e-4, atol=1e-6)


def test_linearizing_singularity_guard():
    s = qc.hover_state([0, 0, 0])
    s[12] = 0.0
    with pytest.raises(SingularityError):
        qc.linearizing_matrices(s)
    s = qc.hover_state([0, 0, 0])
    s[6] = np.pi / 2 - 0.01
    with pytest.raises(SingularityError):
        qc.linearizing_matrices(s)


def test_yaw_row_structure():
    rng = np.random.default_rng(4)
    s = random_state(rng)
    M1, M2 = qc.linearizing_matrices(s)
    np.testing.assert_array_equal(M1[3], [0.0, 0.0, 0.0, 1.0])
    assert M2[3] == 0.0


def test_input_map_matches_finite_difference_probe():
    # 2nd central difference of the analytic acceleration along a frozen-input
    # RK4 trajectory equals the 4th position derivative; differencing the
    # position directly 4 times at dt=1e-4 would drown in roundoff (~1e2 abs)
    rng = np.random.default_rng(5)
    m = qc.DEFAULT_MASS
    dt = 1e-4
    for _ in range(10):
        s0 = random_state(rng, m)
        u = rng.uniform(-2, 2, 4)
        s_m = qc.step(s0, u, dt, m)
        s_p = qc.step(s_m, u, dt, m)
        acc = np.array([qc.flat_state(x, m)[6:9] for x in (s0, s_m, s_p)])
        fd_snap = (acc[0] - 2 * acc[1] + acc[2]) / dt**2
        psi = np.array([x[8] for x in (s0, s_m, s_p)])
        fd_yaw_acc = (psi[0] - 2 * psi[1] + psi[2]) / dt**2
        M1, M2 = qc.linearizing_matrices(s_m, m)
        pred = M1 @ u + M2
        np.testing.assert_allclose(fd_snap, pred[0:3], rtol=1e-3, atol=1e-4)
        assert fd_yaw_acc == pytest.approx(pred[3], rel=1e-3, abs=1e-6)


def test_hover_equilibrium_control_is_zero():
    s = qc.hover_state([2.0, 1.0, 7.0])
    gains = qc.design_gains()
    u = qc.tracking_control(s, qc.flat_target([2.0, 1.0, 7.0]), gains)
    assert np.abs(u).max() < 1e-12


def test_yaw_offset_decouples_at_hover():
    s = qc.hover_state([0.0, 0.0, 5.0])
    gains = qc.design_gains()
    zd = qc.flat_target([0.0, 0.0, 5.0], yaw=0.3)
    u = qc.tracking_control(s, zd, gains)
    assert np.abs(u[0:3]).max() < 1e-12
    assert abs(u[3]) > 1e-3


def test_design_gains_places_poles():
    gains = qc.design_gains()
    A, B = qc.external_dynamics()
    eig = np.sort_complex(np.linalg.eigvals(A - B @ gains.K))
    wanted = np.sort_complex(
        np.array([-2.0, -2.5, -3.0, -3.5] * 3 + [-3.0, -4.0], dtype=complex)
    )
    np.testing.assert_allclose(eig, wanted, atol=1e-8)


def test_design_gains_rejects_unstable_request():
    with pytest.raises(ValueError):
        qc.design_gains(poles_translational=(1.0, -2.0, -3.0, -4.0))
    with pytest.raises(ValueError):
        qc.design_gains(poles_yaw=(0.0, -1.0))


def test_zero_gain_matrix_rejected():
    with pytest.raises(ValueError):
        qc.ControllerGains(K=np.zeros((4, 14)))


def test_step_hover_fixed_point():
    s = qc.hover_state([1, 1, 10])
    out = qc.step(s, np.zeros(4), 0.02)
    np.testing.assert_allclose(out, s, atol=1e-12)


def test_step_free_fall_closed_form():
    s = qc.hover_state([0, 0, 100])
    s[12] = 0.0
    for _ in range(1000):
        s = qc.step(s, np.zeros(4), 1e-3)
    assert s[2] == pytest.approx(100.0 - 4.905, abs=1e-9)


def test_step_dt_validation():
    s = qc.hover_state([0, 0, 0])
    with pytest.raises(ValueError):
        qc.step(s, np.zeros(4), 0.05)
    with pytest.raises(ValueError):
        qc.step(s, np.zeros(4), 0.0)


def test_rk4_fourth_order_convergence():
    # Richardson: halving dt shrinks global error ~16x against a fine reference.
    # The maneuver must be aggressive enough that truncation stays above the
    # ~1e-12 roundoff floor at both step sizes.
    rng = np.random.default_rng(6)
    m = qc.DEFAULT_MASS
    s0 = random_state(rng, m)
    s0[9:12] = rng.uniform(-3.0, 3.0, 3)
    u = rng.uniform(-20, 20, 4)

    def integrate(dt, t_total=0.4):
        s = s0.copy()
        for _ in range(int(round(t_total / dt))):
            s = qc.step(s, u, dt, m)
        return s

    ref = integrate(1e-5)
    err_coarse = np.abs(integrate(2e-2) - ref).max()
    err_fine = np.abs(integrate(1e-2) - ref).max()
    assert err_fine > 1e-11, "fine-step error fell to the roundoff floor"
    ratio = err_coarse / err_fine
    assert 10.0 < ratio < 22.0


def simulate_step_response(t_total=8.0, dt=1e-3, axis=0, amplitude=1.0):
    gains = qc.design_gains()
    s = qc.hover_state([0.0, 0.0, 5.0])
    target = np.array([0.0, 0.0, 5.0])
    target[axis] += amplitude
    zd = qc.flat_target(target)
    ts, xs = [], []
    n = int(round(t_total / dt))
    for k in range(n + 1):
        ts.append(k * dt)
        xs.append(s[axis])
        u = qc.tracking_control(s, zd, gains)
        s = qc.step(s, u, dt, gains.mass)
    return np.array(ts), np.array(xs), target[axis]


def test_step_response_settles_without_steady_state_error():
    ts, xs, goal = simulate_step_response()
    err = np.abs(xs - goal)
    settled = err <= 0.01
    # settled for good before 6 s and no steady-state error afterwards
    first_hold = np.nonzero(~settled)[0][-1] + 1
    assert ts[first_hold] < 6.0
    assert err[-1] < 1e-4


def test_step_response_decay_rate_matches_slowest_pole():
    ts, xs, goal = simulate_step_response(t_total=8.0)
    err = np.abs(xs - goal)
    mask = (ts >= 3.5) & (ts <= 6.5) & (err > 1e-12)
    slope = np.polyfit(ts[mask], np.log(err[mask]), 1)[0]
    assert slope == pytest.approx(-2.0, rel=0.1)


def test_hover_invariance_of_closed_loop():
    gains = qc.design_gains()
    s = qc.hover_state([3.0, -1.0, 12.0])
    zd = qc.flat_target([3.0, -1.0, 12.0])
    for _ in range(200):
        u = qc.tracking_control(s, zd, gains)
        s = qc.step(s, u, 0.01, gains.mass)
    np.testing.assert_allclose(s, qc.hover_state([3.0, -1.0, 12.0]), atol=1e-10)
