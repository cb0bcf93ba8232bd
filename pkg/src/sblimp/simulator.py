"""Fixed-step closed-loop simulation of the planar vehicle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernel
from .model import PlanarState, RotorCommand
from .params import ControllerGains, DesignParams
from .trajectories import TrajectoryRef

STATUS_NAMES = {
    _kernel.OK: "ok",
    _kernel.NONFINITE: "non-finite",
    _kernel.OVERSPEED: "overspeed",
    _kernel.OVERANGLE: "overangle",
    _kernel.TRACKING: "tracking-loss",
}

PLANAR_COLUMNS = ("t,x,z,theta,vx,vz,theta_dot,f1,f2,sat1,sat2,"
                  "vdx,vdz,ex,ez,etheta").split(",")


class IntegrationDivergedError(RuntimeError):
    """The state became non-finite; ``record`` holds the last finite sample."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class SimConfig:
    """Integration and logging settings.

    ``controller_rate_hz=None`` evaluates the control law inside every
    integrator stage (continuous control); a rate holds the command between
    updates. ``initial_state=None`` starts at rest in pitch on the reference
    position and velocity. The divergence guards stop a run when speed or an
    attitude angle blow up, or when the velocity error stays above
    ``tracking_ratio * |v_d| + tracking_floor`` for ``tracking_window``
    seconds.
    """

    dt: float = 1e-3
    duration: float = 100.0
    integrator: str = "rk4"
    controller_rate_hz: float | None = None
    initial_state: object = None
    seed: int = 0
    decimate: int = 1
    pin_attitude: bool = False
    transient: float = 10.0
    max_speed: float = 100.0
    max_angle: float = 10.0
    tracking_loss: bool = True
    tracking_ratio: float = 1.0
    tracking_floor: float = 0.05
    tracking_window: float = 1.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be > 0")
        if not self.duration >= self.dt:
            raise ValueError("duration must be >= dt")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError("integrator must be 'rk4' or 'euler'")
        if self.controller_rate_hz is not None:
            if not 0 < self.controller_rate_hz <= 1.0 / self.dt * (1 + 1e-9):
                raise ValueError("controller_rate_hz must lie in (0, 1/dt]")
            ratio = 1.0 / (self.controller_rate_hz * self.dt)
            if abs(ratio - round(ratio)) > 1e-6 * ratio:
                raise ValueError("1 / (controller_rate_hz * dt) must be an integer step count")
        if int(self.decimate) != self.decimate or self.decimate < 1:
            raise ValueError("decimate must be a positive integer")
        if self.transient < 0:
            raise ValueError("transient must be >= 0")
        if self.tracking_window < 0 or self.tracking_floor < 0 or self.tracking_ratio < 0:
            raise ValueError("tracking guard settings must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def hold_steps(self) -> int:
        if self.controller_rate_hz is None:
            return 0
        return max(1, int(round(1.0 / (self.controller_rate_hz * self.dt))))

    def limits(self) -> np.ndarray:
        window = int(round(self.tracking_window / self.dt)) if self.tracking_loss else 0
        if self.tracking_loss:
            window = max(window, 1)
        return np.array([self.max_speed, self.max_angle, self.tracking_ratio,
                         self.tracking_floor, float(window)])

    def method_code(self) -> int:
        return _kernel.RK4 if self.integrator == "rk4" else _kernel.EULER


@dataclass(frozen=True)
class SimRecord:
    t: float
    state: PlanarState
    command: RotorCommand
    v_ref: np.ndarray
    p_ref: np.ndarray
    velocity_error: np.ndarray
    angular_error: float
    position_error: float


@dataclass
class SimLog:
    """Time-stamped samples of one run, stored column-wise.

    ``states`` rows follow ``[x, z, theta, vx, vz, theta_dot]`` for the planar
    model and ``[x, y, z, theta, phi, vx, vy, vz, theta_dot, phi_dot]`` for
    the spatial one.
    """

    t: np.ndarray
    states: np.ndarray
    commands: np.ndarray
    saturated: np.ndarray
    v_ref: np.ndarray
    p_ref: np.ndarray
    status: str = "ok"
    spatial: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return self.status != "ok"

    def __len__(self):
        return self.t.size

    @property
    def dim(self) -> int:
        return 3 if self.spatial else 2

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def angles(self) -> np.ndarray:
        return self.states[:, self.dim : self.dim + self.dim - 1]

    @property
    def velocities(self) -> np.ndarray:
        k = 2 * self.dim - 1
        return self.states[:, k : k + self.dim]

    @property
    def rates(self) -> np.ndarray:
        return self.states[:, 3 * self.dim - 1 :]

    @property
    def velocity_error(self) -> np.ndarray:
        return self.v_ref - self.velocities

    @property
    def velocity_error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.velocity_error, axis=1)

    @property
    def angular_error(self) -> np.ndarray:
        """Attitude magnitude; the controller's only attitude target is level."""
        return np.linalg.norm(self.angles, axis=1)

    @property
    def position_error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.p_ref - self.positions, axis=1)

    @property
    def any_saturated(self) -> np.ndarray:
        return self.saturated.any(axis=1)

    def records(self):
        if self.spatial:
            raise TypeError("records() yields planar records; index the arrays instead")
        ve = self.velocity_error
        ae = self.angular_error
        pe = self.position_error_norm
        for i in range(len(self)):
            yield SimRecord(
                float(self.t[i]),
                PlanarState.from_array(self.states[i]),
                RotorCommand(self.commands[i], self.saturated[i]),
                self.v_ref[i].copy(),
                self.p_ref[i].copy(),
                ve[i].copy(),
                float(ae[i]),
                float(pe[i]),
            )

    def table(self) -> tuple[list[str], np.ndarray]:
        """Column names and the float matrix written by :meth:`to_csv`."""
        if self.spatial:
            from .spatial import SPATIAL_COLUMNS
            cols = SPATIAL_COLUMNS
        else:
            cols = PLANAR_COLUMNS
        d = self.dim
        body = np.column_stack([
            self.t,
            self.positions,
            self.angles,
            self.velocities,
            self.rates,
            self.commands,
            self.saturated.astype(np.float64),
            self.v_ref,
            self.velocity_error,
            self.angles,
        ])
        assert body.shape[1] == len(cols), (body.shape, d)
        return list(cols), body

    def to_csv(self, path) -> Path:
        cols, body = self.table()
        path = Path(path)
        np.savetxt(path, body, fmt="%.9g", delimiter=",", header=",".join(cols), comments="")
        return path


def _initial_planar(trajectory: TrajectoryRef, config: SimConfig) -> np.ndarray:
    s = config.initial_state
    if s is None:
        if trajectory.kind == "hover":
            v, p = np.zeros(2), np.array([trajectory.target[0], trajectory.target[2]])
        else:
            v, p = trajectory.planar(0.0)
        s = PlanarState(p, v)
    if not isinstance(s, PlanarState):
        raise TypeError("initial_state must be a PlanarState")
    return s.as_array()


def _integrate_planar(params, gains, config, trajectory, y0, t0=0.0, n_steps=None,
                      limits=None):
    params.require_controllable()
    if trajectory.kind == "helix":
        raise ValueError("the planar model cannot fly a helix")
    kind, tp = trajectory.kernel_args()
    P = params.as_array()
    G = np.array([gains.k_vx, gains.k_vz])
    return _kernel.integrate(
        False, P, G, kind, tp, np.asarray(y0, dtype=np.float64), float(t0), config.dt,
        config.n_steps if n_steps is None else n_steps, config.method_code(),
        config.hold_steps, int(config.decimate), config.pin_attitude,
        config.limits() if limits is None else limits,
    )


def step(params: DesignParams, gains: ControllerGains, config: SimConfig,
         s: PlanarState, v_d) -> PlanarState:
    """Advance ``s`` by one ``config.dt`` while tracking a fixed ``v_d``."""
    v_d = np.asarray(v_d, dtype=np.float64)
    traj = TrajectoryRef.constant((v_d[0], 0.0, v_d[1]))
    no_guard = np.array([np.inf, np.inf, 0.0, 0.0, 0.0])
    n, status, T, Y, U, SAT, REF = _integrate_planar(
        params, gains, config, traj, s.as_array(), 0.0, 1, no_guard)
    if status == _kernel.NONFINITE:
        last = SimLog(T, Y, U, SAT, REF[:, :2], REF[:, 2:], "non-finite")
        raise IntegrationDivergedError("state became non-finite", next(last.records()))
    return PlanarState.from_array(Y[-1])


def run(params: DesignParams, gains: ControllerGains, config: SimConfig,
        trajectory: TrajectoryRef) -> SimLog:
    """Simulate ``config.duration`` seconds of closed-loop tracking.

    Divergence never raises: the log ends at the tripping sample and
    ``log.status`` names the guard that fired.
    """
    y0 = _initial_planar(trajectory, config)
    n, status, T, Y, U, SAT, REF = _integrate_planar(params, gains, config, trajectory, y0)
    return SimLog(T, Y, U, SAT, REF[:, :2], REF[:, 2:], STATUS_NAMES[status],
                  meta={"dt": config.dt, "transient": config.transient,
                        "decimate": config.decimate})


def unactuated_run(params: DesignParams, config: SimConfig, initial_state: PlanarState) -> SimLog:
    """Free response with both rotors off.

    Pitch then obeys the damped buoyancy pendulum alone. Implemented by
    collapsing the thrust range to ``[0, 0]`` so every command clamps to zero;
    the saturation columns of the returned log are therefore all true.
    """
    P = params.as_array().copy()
    P[10] = P[11] = 0.0
    params.require_controllable()
    traj = TrajectoryRef.constant((0.0, 0.0, 0.0))
    kind, tp = traj.kernel_args()
    no_guard = np.array([np.inf, np.inf, 0.0, 0.0, 0.0])
    n, status, T, Y, U, SAT, REF = _kernel.integrate(
        False, P, np.zeros(2), kind, tp, initial_state.as_array(), 0.0, config.dt,
        config.n_steps, config.method_code(), config.hold_steps, int(config.decimate),
        False, no_guard)
    return SimLog(T, Y, U, SAT, REF[:, :2], REF[:, 2:], STATUS_NAMES[status],
                  meta={"dt": config.dt, "transient": config.transient,
                        "decimate": config.decimate})
