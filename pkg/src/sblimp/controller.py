"""Attitude-free velocity controller and its analytic references.

The command law cancels net weight and the body rotation so that the
translational dynamics reduce to first-order velocity tracking. Pitch is
never fed back; the buoyancy pendulum keeps it bounded on its own.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .model import RotorCommand, allocation_force_matrix, coupling_coefficient, rot
from .params import ControllerGains, DesignParams


def auxiliary_input(gains: ControllerGains, v_d, v) -> np.ndarray:
    """Proportional velocity feedback ``K_v (v_d - v)``.

    The result is a force-level demand [N]; :func:`velocity_control` divides
    it by the mass before handing it to :func:`feedback_linearize`, so the
    closed loop obeys ``m v' = K_v (v_d - v) - D v``.
    """
    e = np.asarray(v_d, dtype=np.float64) - np.asarray(v, dtype=np.float64)
    return np.array([gains.k_vx * e[0], gains.k_vz * e[1]])


def feedback_linearize(params: DesignParams, theta: float, w) -> np.ndarray:
    """Raw (unclamped) thrusts that make the drag-free plant accelerate at ``w``.

    Parameters
    ----------
    params : DesignParams
    theta : float
        Current pitch [rad].
    w : array_like, shape (2,)
        Desired world-frame acceleration [m/s^2].

    Returns
    -------
    ndarray, shape (2,)
        ``m A_f^-1 Rot(theta)^T ((g - f_b/m) z_hat + w)``.
    """
    params.require_controllable()
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    w = np.asarray(w, dtype=np.float64)
    demand = params.m * w + np.array([0.0, params.net_weight])
    body = rot(theta).T @ demand
    return np.linalg.solve(allocation_force_matrix(params), body)


def clamp(params: DesignParams, u_raw) -> RotorCommand:
    u_raw = np.asarray(u_raw, dtype=np.float64)
    if not np.all(np.isfinite(u_raw)):
        raise ValueError("raw thrusts must be finite")
    u = np.clip(u_raw, params.f_min, params.f_max)
    saturated = tuple(bool(x) for x in (u_raw < params.f_min) | (u_raw > params.f_max))
    return RotorCommand(u, saturated)


def velocity_control(params: DesignParams, gains: ControllerGains, theta, v, v_d) -> RotorCommand:
    """Full command path: velocity feedback, linearization, then clamping.

    Depends only on pitch, velocity and the setpoint; position and pitch
    rate never enter.
    """
    w = auxiliary_input(gains, v_d, v) / params.m
    return clamp(params, feedback_linearize(params, theta, w))


def closed_form_velocity(params: DesignParams, gains: ControllerGains, v_d, v0, t):
    """Exact solution of ``m v' = K_v (v_d - v) - D v`` for constant ``v_d``.

    ``t`` may be a scalar or an array; an array returns shape ``(len(t), 2)``.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    k = np.array([gains.k_vx, gains.k_vz])
    d = np.array([params.d_x, params.d_z])
    v_inf = k / (k + d) * np.asarray(v_d, dtype=np.float64)
    decay = np.exp(-np.multiply.outer(t, (k + d) / params.m))
    return v_inf + (np.asarray(v0, dtype=np.float64) - v_inf) * decay


def steady_state_ratio(params: DesignParams, gains: ControllerGains) -> np.ndarray:
    return np.array([gains.k_vx / (gains.k_vx + params.d_x),
                     gains.k_vz / (gains.k_vz + params.d_z)])


def _pitch_rk4(accel, theta0, theta_dot0, duration, dt):
    n = int(round(duration / dt))
    t = np.arange(n + 1) * dt
    out = np.empty((n + 1, 2))
    y = np.array([theta0, theta_dot0], dtype=np.float64)
    out[0] = y

    def f(ti, yi):
        return np.array([yi[1], accel(ti, yi[0], yi[1])])

    for i in range(n):
        ti = t[i]
        k1 = f(ti, y)
        k2 = f(ti + dt / 2, y + dt / 2 * k1)
        k3 = f(ti + dt / 2, y + dt / 2 * k2)
        k4 = f(ti + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return t, out


def _error_fn(velocity_error):
    if callable(velocity_error):
        return velocity_error
    e = np.asarray(velocity_error, dtype=np.float64)
    return lambda t: e


def closed_loop_pitch_dynamics(
    params: DesignParams,
    gains: ControllerGains,
    velocity_error: Callable[[float], np.ndarray] | np.ndarray,
    theta0: float,
    theta_dot0: float = 0.0,
    duration: float = 5.0,
    dt: float = 1e-3,
):
    """Integrate the nonlinear pitch dynamics under the velocity controller.

    With the command law substituted, rotor torque becomes
    ``c [cos th, sin th] . ((m g - f_b) z_hat + K_v e)`` where ``e(t)`` is the
    velocity tracking error. Valid while the rotors are unsaturated.

    Returns
    -------
    t : ndarray, shape (n + 1,)
    y : ndarray, shape (n + 1, 2)
        Columns are ``theta`` and ``theta_dot``.
    """
    c = coupling_coefficient(params)
    err = _error_fn(velocity_error)
    K = np.array([gains.k_vx, gains.k_vz])
    kb = params.f_b * params.L_b

    def accel(t, th, om):
        demand = K * err(t) + np.array([0.0, params.net_weight])
        torque = c * (math.cos(th) * demand[0] + math.sin(th) * demand[1])
        return (torque - params.d_tau * om - kb * math.sin(th)) / params.J_theta

    return _pitch_rk4(accel, theta0, theta_dot0, duration, dt)


def linearized_pitch_dynamics(
    params: DesignParams,
    gains: ControllerGains,
    velocity_error: Callable[[float], np.ndarray] | np.ndarray,
    theta0: float,
    theta_dot0: float = 0.0,
    duration: float = 5.0,
    dt: float = 1e-3,
):
    """Small-angle counterpart of :func:`closed_loop_pitch_dynamics`.

    ``J th'' = c [1, th] . ((m g - f_b) z_hat + K_v e) - d_tau th' - f_b L_b th``.
    Intended as a verification reference for ``|theta| <= 0.05`` rad.
    """
    c = coupling_coefficient(params)
    err = _error_fn(velocity_error)
    K = np.array([gains.k_vx, gains.k_vz])
    kb = params.f_b * params.L_b

    def accel(t, th, om):
        demand = K * err(t) + np.array([0.0, params.net_weight])
        torque = c * (demand[0] + th * demand[1])
        return (torque - params.d_tau * om - kb * th) / params.J_theta

    return _pitch_rk4(accel, theta0, theta_dot0, duration, dt)
