import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sblimp import ControllerGains, DesignParams
from sblimp.controller import (auxiliary_input, clamp, closed_form_velocity,
                               closed_loop_pitch_dynamics, feedback_linearize,
                               linearized_pitch_dynamics, steady_state_ratio, velocity_control)
from sblimp.model import allocation_force_matrix, rot


def test_auxiliary_zero_error(gains):
    np.testing.assert_array_equal(auxiliary_input(gains, [0.3, -0.1], [0.3, -0.1]), [0, 0])


def test_auxiliary_direct_product(gains):
    np.testing.assert_allclose(auxiliary_input(gains, [0.1, 0.0], [0.0, 0.0]), [0.05, 0.0])


def test_auxiliary_linear_in_gains(gains):
    w = auxiliary_input(gains, [0.1, 0.2], [0.05, -0.1])
    np.testing.assert_allclose(auxiliary_input(gains.scaled(2.0), [0.1, 0.2], [0.05, -0.1]), 2 * w)


def test_hover_command(params):
    u = feedback_linearize(params, 0.0, [0.0, 0.0])
    np.testing.assert_allclose(u, [0.02229, 0.02229], atol=5e-6)
    # oracle: the pair must hold up exactly the net weight
    np.testing.assert_allclose(allocation_force_matrix(params) @ u,
                               [0.0, params.m * params.g - params.f_b], atol=1e-15)


@pytest.mark.parametrize("theta", [-1.0, 0.0, 0.4, 2.5])
def test_neutral_buoyancy_needs_no_thrust(theta):
    p = DesignParams(f_b=0.06 * 9.81)
    np.testing.assert_allclose(feedback_linearize(p, theta, [0, 0]), [0, 0], atol=1e-16)


@given(st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_linearization_roundtrip(theta, wx, wz):
    p = DesignParams()
    u = feedback_linearize(p, theta, [wx, wz])
    back = rot(theta) @ allocation_force_matrix(p) @ u / p.m - np.array([0.0, p.g - p.f_b / p.m])
    np.testing.assert_allclose(back, [wx, wz], atol=1e-12)


def test_linearize_degenerate_design():
    with pytest.raises(ValueError):
        feedback_linearize(DesignParams(eta=0.0), 0.0, [0, 0])


class TestClamp:
    def test_upper(self, params):
        c = clamp(params, [0.2, 0.1])
        np.testing.assert_array_equal(c.u, [0.15, 0.1])
        assert c.saturated == (True, False)

    def test_lower(self, params):
        c = clamp(params, [-0.01, 0.05])
        np.testing.assert_array_equal(c.u, [0.0, 0.05])
        assert c.saturated == (True, False)

    def test_in_range(self, params):
        c = clamp(params, [0.02, 0.13])
        np.testing.assert_array_equal(c.u, [0.02, 0.13])
        assert c.saturated == (False, False) and not c.any_saturated

    @given(st.floats(-1, 1), st.floats(-1, 1))
    def test_bounds(self, a, b):
        p = DesignParams()
        c = clamp(p, [a, b])
        assert np.all((c.u >= p.f_min) & (c.u <= p.f_max))
        for raw, out, flag in zip([a, b], c.u, c.saturated):
            assert flag == (raw != out)

    def test_rejects_nan(self, params):
        with pytest.raises(ValueError):
            clamp(params, [np.nan, 0.0])


def test_velocity_control_ignores_position(params, gains):
    a = velocity_control(params, gains, 0.1, [0.05, 0.0], [0.1, 0.0])
    assert a.u.shape == (2,)
    b = velocity_control(params, gains, 0.1, [0.05, 0.0], [0.1, 0.0])
    np.testing.assert_array_equal(a.u, b.u)


def euler_oracle(m, k, d, v_d, v0, t_end, dt=1e-5):
    v = v0
    for _ in range(int(round(t_end / dt))):
        v += dt * (k * (v_d - v) - d * v) / m
    return v


class TestClosedForm:
    def test_initial_condition(self, params, gains):
        np.testing.assert_allclose(closed_form_velocity(params, gains, [0.1, 0.2], [0.3, -0.1], 0.0),
                               [0.3, -0.1], rtol=0, atol=1e-15)

    def test_long_time_limit(self, params, gains):
        v = closed_form_velocity(params, gains, [0.1, 0.2], [0, 0], 1e3)
        np.testing.assert_allclose(v, steady_state_ratio(params, gains) * [0.1, 0.2], rtol=1e-12)
        np.testing.assert_allclose(steady_state_ratio(params, gains), [0.5 / 0.55] * 2)

    def test_worked_value(self, params, gains):
        v = closed_form_velocity(params, gains, [0.1, 0.0], [0.0, 0.0], 0.3)
        assert v[0] == pytest.approx(0.08509, abs=1e-5)  # quoted value is truncated
        assert v[0] == pytest.approx(euler_oracle(0.06, 0.5, 0.05, 0.1, 0.0, 0.3), abs=1e-6)

    def test_vectorized(self, params, gains):
        t = np.linspace(0, 1, 11)
        v = closed_form_velocity(params, gains, [0.1, 0.0], [0.0, 0.0], t)
        assert v.shape == (11, 2)
        np.testing.assert_array_equal(v[3], closed_form_velocity(params, gains, [0.1, 0.0], [0, 0], t[3]))

    def test_negative_time(self, params, gains):
        with pytest.raises(ValueError):
            closed_form_velocity(params, gains, [0.1, 0.0], [0, 0], -1.0)


class TestPitch:
    def test_equilibrium(self, params, gains):
        # zero error keeps theta at zero only when net weight adds no torque at theta = 0
        t, y = closed_loop_pitch_dynamics(params, gains, [0.0, 0.0], 0.0, duration=2.0)
        np.testing.assert_array_equal(y, 0.0)

    def test_decays(self, params, gains):
        t, y = closed_loop_pitch_dynamics(params, gains, [0.0, 0.0], 0.05, duration=30.0)
        th = y[:, 0]
        assert abs(th[-1]) < 0.05 * 0.05
        first, last = np.abs(th[: len(th) // 3]).max(), np.abs(th[-len(th) // 3:]).max()
        assert last < first

    @pytest.mark.parametrize("theta0", [-0.05, -0.02, 0.01, 0.05])
    def test_linearization_within_five_percent(self, params, gains, theta0):
        t, full = closed_loop_pitch_dynamics(params, gains, [0.0, 0.0], theta0, duration=5.0)
        _, lin = linearized_pitch_dynamics(params, gains, [0.0, 0.0], theta0, duration=5.0)
        dev = np.abs(full[:, 0] - lin[:, 0]).max()
        assert dev <= 0.05 * np.abs(full[:, 0]).max()

    def test_velocity_error_drives_pitch(self, params, gains):
        # sustained body-x demand tilts the vehicle by c k e / (f_b L_b - c (m g - f_b)) at rest
        e = np.array([0.02, 0.0])
        t, y = closed_loop_pitch_dynamics(params, gains, e, 0.0, duration=60.0)
        from sblimp.model import coupling_coefficient
        c = coupling_coefficient(params)
        expected = c * gains.k_vx * e[0] / (params.f_b * params.L_b - c * params.net_weight)
        assert y[-1, 0] == pytest.approx(expected, rel=1e-3)

    def test_callable_error(self, params, gains):
        t, a = linearized_pitch_dynamics(params, gains, lambda t: np.array([0.01, 0.0]), 0.0,
                                         duration=1.0)
        _, b = linearized_pitch_dynamics(params, gains, [0.01, 0.0], 0.0, duration=1.0)
        np.testing.assert_array_equal(a, b)
