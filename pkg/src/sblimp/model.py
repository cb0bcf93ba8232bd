"""Planar rigid-body model: thrust allocation, buoyancy torque and dynamics.

The world frame has z pointing up. Pitch ``theta`` rotates the body frame
relative to the world, ``Rot(theta) = [[cos, -sin], [sin, cos]]`` acting on
``[x, z]`` vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DesignParams


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PlanarState:
    """Pose and twist in the vertical plane.

    ``theta`` is kept unwrapped so a tumbling vehicle is detectable.
    """

    r: np.ndarray
    v: np.ndarray
    theta: float = 0.0
    theta_dot: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen(self.r))
        object.__setattr__(self, "v", _frozen(self.v))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "theta_dot", float(self.theta_dot))
        if self.r.shape != (2,) or self.v.shape != (2,):
            raise ValueError("r and v must have two components")
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("state entries must be finite")

    @classmethod
    def at_rest(cls, x=0.0, z=0.0, theta=0.0) -> "PlanarState":
        return cls([x, z], [0.0, 0.0], theta, 0.0)

    @classmethod
    def from_array(cls, a) -> "PlanarState":
        """Inverse of :meth:`as_array` (``[x, z, theta, vx, vz, theta_dot]``)."""
        a = np.asarray(a, dtype=np.float64)
        return cls(a[0:2], a[3:5], a[2], a[5])

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.r[0], self.r[1], self.theta, self.v[0], self.v[1], self.theta_dot]
        )


@dataclass(frozen=True)
class RotorCommand:
    """Thrust pair ``[f1, f2]`` [N] and per-rotor clamp flags."""

    u: np.ndarray
    saturated: tuple = (False, False)

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "saturated", tuple(bool(s) for s in self.saturated))
        if len(self.saturated) != self.u.size:
            raise ValueError("one saturation flag per rotor")

    @property
    def any_saturated(self) -> bool:
        return any(self.saturated)


@dataclass(frozen=True)
class BodyWrench:
    """Planar force [N] and pitch torque [N m] in the body frame."""

    f: np.ndarray
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "f", _frozen(self.f))
        object.__setattr__(self, "tau", float(self.tau))


def rot(theta: float) -> np.ndarray:
    """2-D rotation from the body frame to the world frame."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def allocation_force_matrix(params: DesignParams) -> np.ndarray:
    s, c = math.sin(params.eta), math.cos(params.eta)
    return np.array([[s, -s], [c, c]])


def allocation_torque_matrix(params: DesignParams) -> np.ndarray:
    """Row vector mapping ``[f1, f2]`` to pitch torque.

    The two entries are exact negatives: equal thrusts produce no torque.
    """
    s, c = math.sin(params.eta), math.cos(params.eta)
    a = params.a_z * s - params.a_x * c
    return np.array([[a, -a]])


def coupling_coefficient(params: DesignParams) -> float:
    """Scalar ``c`` with ``A_tau == [c, 0] @ A_f``.

    Because the torque row is a multiple of the first force row, rotor torque
    is fully determined by the body-x force the rotors produce.
    """
    params.require_controllable()
    return params.a_z - params.a_x / math.tan(params.eta)


def _thrust(u) -> np.ndarray:
    u = np.asarray(u.u if isinstance(u, RotorCommand) else u, dtype=np.float64)
    if u.shape != (2,):
        raise ValueError("expected a thrust pair")
    if not np.all(np.isfinite(u)):
        raise ValueError("thrusts must be finite")
    return u


def body_wrench(params: DesignParams, u) -> BodyWrench:
    u = _thrust(u)
    f = allocation_force_matrix(params) @ u
    tau = (allocation_torque_matrix(params) @ u)[0]
    return BodyWrench(f, tau)


def buoyancy_torque(params: DesignParams, theta: float) -> float:
    """Restoring torque of buoyancy acting ``L_b`` above the center of mass."""
    return -params.f_b * params.L_b * math.sin(theta)


def state_derivative(params: DesignParams, s: PlanarState, u) -> np.ndarray:
    """Time derivative ``[x', z', theta', vx', vz', theta_dot']`` of the state.

    Translational damping ``diag(d_x, d_z)`` opposes world-frame velocity;
    thrust is rotated from the body into the world frame.
    """
    u = _thrust(u)
    wrench = body_wrench(params, u)
    D = np.array([params.d_x, params.d_z])
    accel = (-D * s.v + np.array([0.0, params.f_b - params.m * params.g])
             + rot(s.theta) @ wrench.f) / params.m
    alpha = (-params.d_tau * s.theta_dot + buoyancy_torque(params, s.theta)
             + wrench.tau) / params.J_theta
    return np.array([s.v[0], s.v[1], s.theta_dot, accel[0], accel[1], alpha])


def pendulum_energy(params: DesignParams, theta, theta_dot):
    """Mechanical energy of the buoyancy pendulum (zero at the upright rest)."""
    theta = np.asarray(theta)
    theta_dot = np.asarray(theta_dot)
    return (0.5 * params.J_theta * theta_dot**2
            + params.f_b * params.L_b * (1.0 - np.cos(theta)))
