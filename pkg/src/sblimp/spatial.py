"""Quasi-3D vehicle: two planar attitude subsystems sharing the vertical axis.

Four rotors sit in a plus layout. Rotors 1 and 2 lie in the xz plane at
``(+a_x, 0, a_z)`` and ``(-a_x, 0, a_z)`` and tilt within that plane, exactly
like the planar pair, so they act on pitch. Rotors 3 and 4 mirror them in the
yz plane at ``(0, +a_y, a_z)`` and ``(0, -a_y, a_z)`` and act on roll. Yaw is
held at zero and cross-coupling between pitch and roll is neglected.

The vertical force demand is split between the pairs. By default the pitch
pair takes the fraction ``|F_x| / (|F_x| + |F_y|)`` of it (half each when
both lateral demands vanish); a fixed ``z_share`` overrides this.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .model import _frozen
from .params import ControllerGains, DesignParams
from .simulator import STATUS_NAMES, IntegrationDivergedError, SimConfig, SimLog
from .trajectories import TrajectoryRef

SPATIAL_COLUMNS = ("t,x,y,z,theta,phi,vx,vy,vz,theta_dot,phi_dot,f1,f2,f3,f4,"
                   "sat1,sat2,sat3,sat4,vdx,vdy,vdz,ex,ey,ez,etheta,ephi").split(",")


@dataclass(frozen=True)
class SpatialState:
    position: np.ndarray
    velocity: np.ndarray
    theta: float = 0.0
    phi: float = 0.0
    theta_dot: float = 0.0
    phi_dot: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen(self.position))
        object.__setattr__(self, "velocity", _frozen(self.velocity))
        for name in ("theta", "phi", "theta_dot", "phi_dot"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.position.shape != (3,) or self.velocity.shape != (3,):
            raise ValueError("position and velocity need three components")
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("state entries must be finite")

    @property
    def psi(self) -> float:
        return 0.0

    @classmethod
    def from_array(cls, a) -> "SpatialState":
        a = np.asarray(a, dtype=np.float64)
        return cls(a[0:3], a[5:8], a[3], a[4], a[8], a[9])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, [self.theta, self.phi], self.velocity,
                               [self.theta_dot, self.phi_dot]])


@dataclass(frozen=True)
class QuadCommand:
    u: np.ndarray
    saturated: tuple = (False,) * 4

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "saturated", tuple(bool(s) for s in self.saturated))
        if self.u.shape != (4,) or len(self.saturated) != 4:
            raise ValueError("four rotors expected")


def spatial_allocation(params: DesignParams, a_y: float | None = None) -> np.ndarray:
    """Map four thrusts to ``(f_x, f_y, f_z, tau_pitch, tau_roll)`` at level attitude."""
    params.require_controllable()
    a_y = params.a_x if a_y is None else a_y
    s, c = math.sin(params.eta), math.cos(params.eta)
    tp = params.a_z * s - params.a_x * c
    tr = params.a_z * s - a_y * c
    return np.array([
        [s, -s, 0.0, 0.0],
        [0.0, 0.0, s, -s],
        [c, c, c, c],
        [tp, -tp, 0.0, 0.0],
        [0.0, 0.0, tr, -tr],
    ])


def _pack(params, gains, a_y, z_share):
    if z_share is None:
        z_share = -1.0
    elif not 0.0 <= z_share <= 1.0:
        raise ValueError("z_share must lie in [0, 1] or be None")
    a_y = params.a_x if a_y is None else float(a_y)
    if a_y <= 0:
        raise ValueError("a_y must be > 0")
    params.require_controllable()
    P = np.concatenate([params.as_array(), [a_y, z_share]])
    G = np.array([gains.k_vx, gains.ky, gains.k_vz])
    return P, G


def _initial_spatial(trajectory: TrajectoryRef, config: SimConfig) -> np.ndarray:
    s = config.initial_state
    if s is None:
        if trajectory.kind == "hover":
            v, p = np.zeros(3), np.array(trajectory.target)
        else:
            v, p = trajectory.spatial(0.0)
        s = SpatialState(p, v)
    if not isinstance(s, SpatialState):
        raise TypeError("initial_state must be a SpatialState")
    return s.as_array()


def _log(n, status, T, Y, U, SAT, REF, config):
    return SimLog(T, Y, U, SAT, REF[:, :3], REF[:, 3:], STATUS_NAMES[status], spatial=True,
                  meta={"dt": config.dt, "transient": config.transient,
                        "decimate": config.decimate})


def spatial_step(params: DesignParams, gains: ControllerGains, config: SimConfig,
                 s: SpatialState, v_d, a_y=None, z_share: float | None = None) -> SpatialState:
    P, G = _pack(params, gains, a_y, z_share)
    kind, tp = TrajectoryRef.constant(tuple(np.asarray(v_d, dtype=float))).kernel_args()
    no_guard = np.array([np.inf, np.inf, 0.0, 0.0, 0.0])
    out = _kernel.integrate(True, P, G, kind, tp, s.as_array(), 0.0, config.dt, 1,
                            config.method_code(), config.hold_steps, 1,
                            config.pin_attitude, no_guard)
    if out[1] == _kernel.NONFINITE:
        raise IntegrationDivergedError("state became non-finite", _log(*out, config))
    return SpatialState.from_array(out[3][-1])


def spatial_run(params: DesignParams, gains: ControllerGains, config: SimConfig,
                trajectory: TrajectoryRef, a_y=None, z_share: float | None = None) -> SimLog:
    """Spatial counterpart of :func:`sblimp.simulator.run`."""
    P, G = _pack(params, gains, a_y, z_share)
    kind, tp = trajectory.kernel_args()
    y0 = _initial_spatial(trajectory, config)
    out = _kernel.integrate(True, P, G, kind, tp, y0, 0.0, config.dt, config.n_steps,
                            config.method_code(), config.hold_steps, int(config.decimate),
                            config.pin_attitude, config.limits())
    return _log(*out, config)
